//! Dirichlet backdoor posteriors over intervention probability tables.
//!
//! For a non-sentinel adjustment set `Z` the posterior of the IPT row for
//! cause level `x` is the random linear combination
//! `sum_z theta_{Y|x,z} * theta_z` of independent Dirichlet vectors. The
//! prior puts `ess / (r_y r_x r_z)` on every conditional cell and `ess / r_z`
//! on every marginal cell, so `a_z = sum_{x,y} a_{y|x,z}` holds before and
//! after adding counts. A sentinel set collapses every row to the marginal
//! Dirichlet posterior of the effect.

use rand::Rng as _;
use rand_distr::{Distribution, Gamma, Open01};

use crate::catbn::Ipt;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::AdjustmentSet;
use crate::rng::{self, Rng};
use crate::structlearn::AdjustmentPosterior;

/// Default cap on `r_x * r_y * r_z` for one backdoor table.
pub const DEFAULT_CELL_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BackdoorParams {
    pub cause: usize,
    pub effect: usize,
    pub adjustment: Vec<usize>,
    pub r_cause: usize,
    pub r_effect: usize,
    pub r_adj: usize,
    /// Conditional hyperparameters `a_{y|x,z}` at `(z * r_cause + x) * r_effect + y`.
    pub cond: Vec<f64>,
    /// Marginal hyperparameters `a_z`.
    pub marg: Vec<f64>,
}

impl BackdoorParams {
    fn cond_row(&self, x: usize, z: usize) -> &[f64] {
        let off = (z * self.r_cause + x) * self.r_effect;
        &self.cond[off..off + self.r_effect]
    }

    fn marg_total(&self) -> f64 {
        self.marg.iter().sum()
    }

    /// Elementwise posterior mean of the IPT.
    pub fn mean(&self) -> Ipt {
        let total = self.marg_total();
        let mut rows = vec![0.0; self.r_cause * self.r_effect];
        for z in 0..self.r_adj {
            let wz = self.marg[z] / total;
            for x in 0..self.r_cause {
                let row = self.cond_row(x, z);
                let s: f64 = row.iter().sum();
                for (y, a) in row.iter().enumerate() {
                    rows[x * self.r_effect + y] += a / s * wz;
                }
            }
        }
        Ipt::new_unchecked(self.r_cause, self.r_effect, rows)
    }

    /// Posterior covariance of the IPT entries `(x, y)` and `(x2, y2)`.
    pub fn cov(&self, x: usize, y: usize, x2: usize, y2: usize) -> f64 {
        let alpha = self.marg_total();
        let mean = self.mean();
        let (m1, m2) = (mean.get(x, y), mean.get(x2, y2));
        let mut acc = 0.0;
        for z in 0..self.r_adj {
            let az = self.marg[z];
            let wz = az / alpha;
            let row = self.cond_row(x, z);
            let axz: f64 = row.iter().sum();
            let p = row[y] / axz;
            if x == x2 {
                let p2 = row[y2] / axz;
                let delta = if y == y2 { 1.0 + az } else { 0.0 };
                acc += p * wz / (axz + 1.0) * (delta + p2 * (axz - az));
            } else {
                let row2 = self.cond_row(x2, z);
                let p2 = row2[y2] / row2.iter().sum::<f64>();
                acc += p * p2 * wz;
            }
        }
        (acc - m1 * m2) / (alpha + 1.0)
    }

    /// One posterior draw of the IPT.
    pub fn sample(&self, rng: &mut Rng) -> Ipt {
        let mut theta_z = vec![0.0; self.r_adj];
        sample_dirichlet(&self.marg, rng, &mut theta_z);
        let mut rows = vec![0.0; self.r_cause * self.r_effect];
        let mut buf = vec![0.0; self.r_effect];
        for (z, &wz) in theta_z.iter().enumerate() {
            for x in 0..self.r_cause {
                sample_dirichlet(self.cond_row(x, z), rng, &mut buf);
                for (y, b) in buf.iter().enumerate() {
                    rows[x * self.r_effect + y] += b * wz;
                }
            }
        }
        for row in rows.chunks_mut(self.r_effect) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
        }
        Ipt::new_unchecked(self.r_cause, self.r_effect, rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalParams {
    pub cause: usize,
    pub effect: usize,
    pub r_cause: usize,
    /// `ess / r_effect + N_y` for every effect state.
    pub alpha: Vec<f64>,
}

impl MarginalParams {
    pub fn mean(&self) -> Ipt {
        let s: f64 = self.alpha.iter().sum();
        let row: Vec<f64> = self.alpha.iter().map(|a| a / s).collect();
        Ipt::new_unchecked(self.r_cause, self.alpha.len(), row.repeat(self.r_cause))
    }

    /// One Dirichlet draw shared by every row.
    pub fn sample(&self, rng: &mut Rng) -> Ipt {
        let mut row = vec![0.0; self.alpha.len()];
        sample_dirichlet(&self.alpha, rng, &mut row);
        Ipt::new_unchecked(self.r_cause, self.alpha.len(), row.repeat(self.r_cause))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentParams {
    Backdoor(BackdoorParams),
    Marginal(MarginalParams),
}

impl ComponentParams {
    pub fn mean(&self) -> Ipt {
        match self {
            ComponentParams::Backdoor(p) => p.mean(),
            ComponentParams::Marginal(p) => p.mean(),
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Ipt {
        match self {
            ComponentParams::Backdoor(p) => p.sample(rng),
            ComponentParams::Marginal(p) => p.sample(rng),
        }
    }

    pub fn is_zero_effect(&self) -> bool {
        matches!(self, ComponentParams::Marginal(_))
    }
}

/// Posterior hyperparameters for the pair `(cause, effect)` under one
/// adjustment set.
pub fn backdoor_posterior_params(
    data: &Dataset,
    cause: usize,
    effect: usize,
    adj: &AdjustmentSet,
    ess: f64,
    cell_cap: usize,
) -> Result<ComponentParams> {
    let n = data.n_vars();
    for v in [cause, effect].iter().chain(&adj.nodes) {
        if *v >= n {
            return Err(Error::NodeOutOfRange { node: *v, n });
        }
    }
    if cause == effect {
        return Err(Error::SamePair(cause));
    }
    if !(ess > 0.0 && ess.is_finite()) {
        return Err(Error::InvalidArgument(format!("equivalent sample size {ess} must be positive")));
    }
    if adj.nodes.contains(&cause) {
        return Err(Error::Overlap(format!("adjustment set contains cause {cause}")));
    }
    let r_x = data.card(cause);
    let r_y = data.card(effect);

    if adj.contains_effect {
        let mut alpha = vec![ess / r_y as f64; r_y];
        for &y in data.column(effect) {
            alpha[y] += 1.0;
        }
        return Ok(ComponentParams::Marginal(MarginalParams {
            cause,
            effect,
            r_cause: r_x,
            alpha,
        }));
    }
    if adj.nodes.contains(&effect) {
        return Err(Error::Overlap(format!("adjustment set contains effect {effect}")));
    }

    let r_z_f: f64 = adj.nodes.iter().map(|&v| data.card(v) as f64).product();
    let cells = r_z_f * (r_x * r_y) as f64;
    if cells > cell_cap as f64 {
        return Err(Error::TableTooLarge { cells, cap: cell_cap });
    }
    let r_z = r_z_f as usize;
    let prior_cond = ess / cells;
    let prior_marg = ess / r_z_f;
    let mut cond = vec![prior_cond; r_z * r_x * r_y];
    let mut marg = vec![prior_marg; r_z];
    let zs = data.config_indices(&adj.nodes);
    for ((&z, &x), &y) in zs.iter().zip(data.column(cause)).zip(data.column(effect)) {
        cond[(z * r_x + x) * r_y + y] += 1.0;
        marg[z] += 1.0;
    }
    Ok(ComponentParams::Backdoor(BackdoorParams {
        cause,
        effect,
        adjustment: adj.nodes.clone(),
        r_cause: r_x,
        r_effect: r_y,
        r_adj: r_z,
        cond,
        marg,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub set: AdjustmentSet,
    pub params: ComponentParams,
}

/// Posterior over one pair's IPT: a mixture over adjustment sets.
#[derive(Debug, Clone, PartialEq)]
pub struct BidaMixture {
    pub cause: usize,
    pub effect: usize,
    pub r_cause: usize,
    pub r_effect: usize,
    pub components: Vec<MixtureComponent>,
}

impl BidaMixture {
    /// Elementwise posterior mean: the weighted average of component means.
    pub fn ipt_mean(&self) -> Ipt {
        let mut rows = vec![0.0; self.r_cause * self.r_effect];
        for c in &self.components {
            for (acc, m) in rows.iter_mut().zip(c.params.mean().as_slice()) {
                *acc += c.weight * m;
            }
        }
        Ipt::new_unchecked(self.r_cause, self.r_effect, rows)
    }

    /// Total weight of components that fix the effect at zero.
    pub fn zero_effect_weight(&self) -> f64 {
        self.components
            .iter()
            .filter(|c| c.params.is_zero_effect())
            .map(|c| c.weight)
            .sum()
    }

    /// Picks a component by weight, then draws from it.
    pub fn sample(&self, rng: &mut Rng) -> Ipt {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let last = self.components.len() - 1;
        let chosen = self
            .components
            .iter()
            .position(|c| {
                acc += c.weight;
                u < acc
            })
            .unwrap_or(last);
        self.components[chosen].params.sample(rng)
    }

    pub fn sample_many(&self, draws: usize, seed: u64) -> Vec<Ipt> {
        let mut rng = rng::seeded(seed);
        (0..draws).map(|_| self.sample(&mut rng)).collect()
    }
}

/// Maps every adjustment-set component through [`backdoor_posterior_params`].
pub fn bida_mixture(data: &Dataset, adjp: &AdjustmentPosterior, ess: f64, cell_cap: usize) -> Result<BidaMixture> {
    let components = adjp
        .components
        .iter()
        .map(|(set, weight)| {
            Ok(MixtureComponent {
                weight: *weight,
                set: set.clone(),
                params: backdoor_posterior_params(data, adjp.cause, adjp.effect, set, ess, cell_cap)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BidaMixture {
        cause: adjp.cause,
        effect: adjp.effect,
        r_cause: data.card(adjp.cause),
        r_effect: data.card(adjp.effect),
        components,
    })
}

/// Draws `draws` IPTs from one component's posterior.
pub fn sample_ipt(params: &ComponentParams, draws: usize, seed: u64) -> Vec<Ipt> {
    let mut rng = rng::seeded(seed);
    (0..draws).map(|_| params.sample(&mut rng)).collect()
}

/// Dirichlet draw via independent Gamma variates. Shapes below one use
/// `Gamma(a + 1) * U^(1/a)` in log space so tiny concentrations do not
/// underflow to an all-zero vector.
pub fn sample_dirichlet(alpha: &[f64], rng: &mut Rng, out: &mut [f64]) {
    debug_assert_eq!(alpha.len(), out.len());
    let mut max = f64::NEG_INFINITY;
    for (o, &a) in out.iter_mut().zip(alpha) {
        let lg = if a >= 1.0 {
            Gamma::new(a, 1.0).expect("positive shape").sample(rng).ln()
        } else {
            let g = Gamma::new(a + 1.0, 1.0).expect("positive shape").sample(rng);
            let u: f64 = Open01.sample(rng);
            g.ln() + u.ln() / a
        };
        *o = lg;
        max = max.max(lg);
    }
    let mut s = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        s += *o;
    }
    for o in out.iter_mut() {
        *o /= s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AdjustmentKind;
    use approx::assert_abs_diff_eq;

    fn set(nodes: Vec<usize>) -> AdjustmentSet {
        AdjustmentSet::new(AdjustmentKind::Parent, nodes)
    }

    fn backdoor(p: ComponentParams) -> BackdoorParams {
        match p {
            ComponentParams::Backdoor(b) => b,
            _ => panic!("expected backdoor params"),
        }
    }

    #[test]
    fn empty_set_prior_cells() {
        let d = Dataset::new(vec![2, 2], vec![vec![], vec![]]).unwrap();
        let p = backdoor(backdoor_posterior_params(&d, 0, 1, &set(vec![]), 1.0, DEFAULT_CELL_CAP).unwrap());
        assert_eq!(p.cond, vec![0.25; 4]);
        assert_eq!(p.marg, vec![1.0]);
    }

    #[test]
    fn sentinel_gives_marginal_params() {
        let y = [vec![0; 7], vec![1; 3]].concat();
        let d = Dataset::new(vec![2, 2], vec![vec![0; 10], y]).unwrap();
        let p = backdoor_posterior_params(&d, 0, 1, &AdjustmentSet::sentinel(AdjustmentKind::OSet, 1), 1.0, 100)
            .unwrap();
        match p {
            ComponentParams::Marginal(m) => assert_eq!(m.alpha, vec![7.5, 3.5]),
            _ => panic!(),
        }
    }

    #[test]
    fn single_binary_adjustment_prior_and_constraint() {
        let d = Dataset::from_rows(
            vec![2, 2, 2],
            &[vec![0, 1, 1], vec![1, 1, 0], vec![1, 0, 0], vec![0, 0, 1], vec![1, 1, 1]],
        )
        .unwrap();
        let empty = Dataset::new(vec![2, 2, 2], vec![vec![], vec![], vec![]]).unwrap();
        let prior = backdoor(backdoor_posterior_params(&empty, 0, 1, &set(vec![2]), 1.0, 100).unwrap());
        assert_eq!(prior.cond, vec![0.125; 8]);
        assert_eq!(prior.marg, vec![0.5; 2]);
        let post = backdoor(backdoor_posterior_params(&d, 0, 1, &set(vec![2]), 1.0, 100).unwrap());
        for z in 0..2 {
            let s: f64 = post.cond[z * 4..z * 4 + 4].iter().sum();
            assert_abs_diff_eq!(s, post.marg[z], epsilon = 1e-12);
        }
    }

    #[test]
    fn overlapping_and_oversized_sets_are_rejected() {
        let d = Dataset::new(vec![2, 2, 3], vec![vec![], vec![], vec![]]).unwrap();
        assert!(backdoor_posterior_params(&d, 0, 1, &set(vec![0]), 1.0, 100).is_err());
        assert!(backdoor_posterior_params(&d, 0, 1, &set(vec![1]), 1.0, 100).is_err());
        assert!(matches!(
            backdoor_posterior_params(&d, 0, 1, &set(vec![2]), 1.0, 11),
            Err(Error::TableTooLarge { .. })
        ));
        assert!(backdoor_posterior_params(&d, 0, 1, &set(vec![]), 0.0, 100).is_err());
    }

    #[test]
    fn dirichlet_mean_for_empty_set() {
        let p = BackdoorParams {
            cause: 0,
            effect: 1,
            adjustment: vec![],
            r_cause: 2,
            r_effect: 2,
            r_adj: 1,
            cond: vec![0.25 + 5.0, 0.25 + 2.0, 0.25 + 1.0, 0.25 + 3.0],
            marg: vec![12.0],
        };
        // Row x = 1 with cells (1.25, 3.25): mean of the second entry is 3.25 / 4.5.
        assert_abs_diff_eq!(p.mean().get(1, 1), 3.25 / 4.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.mean().get(1, 1), 0.722_222_222_222, epsilon = 1e-9);
    }

    #[test]
    fn row_covariances_sum_to_zero() {
        let p = BackdoorParams {
            cause: 0,
            effect: 1,
            adjustment: vec![2],
            r_cause: 2,
            r_effect: 3,
            r_adj: 2,
            cond: vec![1.0, 2.0, 0.5, 3.0, 1.5, 2.5, 0.7, 0.2, 4.0, 1.1, 2.2, 3.3],
            marg: vec![9.0, 11.5],
        };
        for x in 0..2 {
            for y in 0..3 {
                let s: f64 = (0..3).map(|y2| p.cov(x, y, x, y2)).sum();
                assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
            }
        }
        // Scaling every hyperparameter by ten shrinks the variance.
        let mut big = p.clone();
        big.cond.iter_mut().for_each(|a| *a *= 10.0);
        big.marg.iter_mut().for_each(|a| *a *= 10.0);
        for x in 0..2 {
            for y in 0..3 {
                assert!(big.cov(x, y, x, y) < p.cov(x, y, x, y));
            }
        }
    }

    #[test]
    fn marginal_draws_have_identical_rows() {
        let m = ComponentParams::Marginal(MarginalParams {
            cause: 0,
            effect: 1,
            r_cause: 3,
            alpha: vec![0.5, 1.5],
        });
        for ipt in sample_ipt(&m, 20, 4) {
            assert_eq!(ipt.row(0), ipt.row(1));
            assert_eq!(ipt.row(0), ipt.row(2));
        }
    }

    #[test]
    fn tiny_concentrations_still_normalize() {
        let mut rng = rng::seeded(1);
        let mut out = vec![0.0; 4];
        for _ in 0..1000 {
            sample_dirichlet(&[1e-6, 1e-6, 1e-7, 1e-6], &mut rng, &mut out);
            assert!(out.iter().all(|p| p.is_finite() && *p >= 0.0));
            assert_abs_diff_eq!(out.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }
}
