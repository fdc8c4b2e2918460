//! Ground-truth categorical Bayesian networks: random generation, forward
//! sampling and exact intervention distributions by enumeration.
//!
//! A conditional probability table for node `i` is stored row-major with one
//! row of length `r_i` per parent configuration. Parent configurations are
//! indexed mixed-radix over the sorted parent list, lowest-indexed parent
//! varying fastest.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::effects::{effect_of_ipt, EffectKind};
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::rng;

/// IPTs indexed `[cause][effect]`, `None` on the diagonal.
pub type IptMatrix = Vec<Vec<Option<Ipt>>>;

/// Default cap on the number of joint states enumerated exactly.
pub const DEFAULT_STATE_CAP: usize = 1 << 24;

const ROW_TOL: f64 = 1e-12;
const LOAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkRepr", into = "NetworkRepr")]
pub struct CptNetwork {
    dag: Dag,
    cards: Vec<usize>,
    cpts: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct NetworkRepr {
    cards: Vec<usize>,
    parents: Vec<Vec<usize>>,
    cpts: Vec<Vec<f64>>,
}

impl TryFrom<NetworkRepr> for CptNetwork {
    type Error = Error;

    /// Rows are accepted within a loose tolerance and renormalized, so
    /// tables exported with rounded probabilities still load.
    fn try_from(repr: NetworkRepr) -> Result<Self> {
        if repr.parents.len() != repr.cards.len() {
            return Err(Error::InvalidNetwork(format!(
                "{} parent lists for {} variables",
                repr.parents.len(),
                repr.cards.len()
            )));
        }
        let dag = Dag::new(repr.parents).map_err(|e| Error::InvalidNetwork(e.to_string()))?;
        let mut cpts = repr.cpts;
        for (i, cpt) in cpts.iter_mut().enumerate() {
            let r = repr.cards.get(i).copied().unwrap_or(0);
            if r == 0 {
                continue;
            }
            for row in cpt.chunks_mut(r) {
                let s: f64 = row.iter().sum();
                if row.iter().all(|p| p.is_finite() && *p >= 0.0) && (s - 1.0).abs() <= LOAD_TOL {
                    row.iter_mut().for_each(|p| *p /= s);
                }
            }
        }
        CptNetwork::new(dag, repr.cards, cpts)
    }
}

impl From<CptNetwork> for NetworkRepr {
    fn from(bn: CptNetwork) -> Self {
        NetworkRepr {
            cards: bn.cards,
            parents: bn.dag.parent_lists().to_vec(),
            cpts: bn.cpts,
        }
    }
}

impl CptNetwork {
    pub fn new(dag: Dag, cards: Vec<usize>, cpts: Vec<Vec<f64>>) -> Result<Self> {
        let n = dag.n();
        if cards.len() != n || cpts.len() != n {
            return Err(Error::InvalidNetwork(format!(
                "{n} nodes, {} cardinalities, {} tables",
                cards.len(),
                cpts.len()
            )));
        }
        if let Some(v) = cards.iter().position(|&r| r < 2) {
            return Err(Error::InvalidNetwork(format!("variable {v} has fewer than 2 states")));
        }
        for (i, cpt) in cpts.iter().enumerate() {
            let rows: usize = dag.parents(i).iter().map(|&p| cards[p]).product();
            if cpt.len() != rows * cards[i] {
                return Err(Error::InvalidNetwork(format!(
                    "table of node {i} has {} entries, expected {}",
                    cpt.len(),
                    rows * cards[i]
                )));
            }
            for (k, row) in cpt.chunks(cards[i]).enumerate() {
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::InvalidNetwork(format!("node {i} row {k} has a negative entry")));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > ROW_TOL {
                    return Err(Error::InvalidNetwork(format!("node {i} row {k} sums to {s}")));
                }
            }
        }
        Ok(CptNetwork { dag, cards, cpts })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serialization is infallible")
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn n(&self) -> usize {
        self.dag.n()
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn cpt(&self, v: usize) -> &[f64] {
        &self.cpts[v]
    }

    fn parent_config(&self, v: usize, state: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for &p in self.dag.parents(v) {
            idx += state[p] * stride;
            stride *= self.cards[p];
        }
        idx
    }

    fn cond_prob(&self, v: usize, state: &[usize]) -> f64 {
        self.cpts[v][self.parent_config(v, state) * self.cards[v] + state[v]]
    }

    fn state_count(&self) -> f64 {
        self.cards.iter().map(|&r| r as f64).product()
    }

    fn check_cap(&self, cap: usize) -> Result<()> {
        let states = self.state_count();
        if states > cap as f64 {
            Err(Error::StateSpaceTooLarge { states, cap })
        } else {
            Ok(())
        }
    }

    /// Full joint distribution, mixed-radix over all variables with variable
    /// 0 varying fastest.
    pub fn joint_table(&self, cap: usize) -> Result<Vec<f64>> {
        self.check_cap(cap)?;
        let mut out = Vec::with_capacity(self.state_count() as usize);
        for_each_state(&self.cards, None, |state| {
            out.push((0..self.n()).map(|v| self.cond_prob(v, state)).product());
        });
        Ok(out)
    }

    /// Marginals of every variable under `do(X_cause = x)` for each level `x`.
    /// Returned as `[x][variable][state]`.
    pub fn intervention_marginals(&self, cause: usize, cap: usize) -> Result<Vec<Vec<Vec<f64>>>> {
        if cause >= self.n() {
            return Err(Error::NodeOutOfRange { node: cause, n: self.n() });
        }
        self.check_cap(cap)?;
        let n = self.n();
        let mut out = Vec::with_capacity(self.cards[cause]);
        for x in 0..self.cards[cause] {
            let mut marg: Vec<Vec<f64>> = self.cards.iter().map(|&r| vec![0.0; r]).collect();
            for_each_state(&self.cards, Some((cause, x)), |state| {
                let w: f64 = (0..n)
                    .filter(|&v| v != cause)
                    .map(|v| self.cond_prob(v, state))
                    .product();
                if w > 0.0 {
                    for v in 0..n {
                        marg[v][state[v]] += w;
                    }
                }
            });
            out.push(marg);
        }
        Ok(out)
    }

    /// Intervention probability table of `(cause, effect)` by summing the
    /// truncated factorization over all joint configurations.
    pub fn exact_intervention(&self, cause: usize, effect: usize) -> Result<Ipt> {
        self.exact_intervention_capped(cause, effect, DEFAULT_STATE_CAP)
    }

    pub fn exact_intervention_capped(&self, cause: usize, effect: usize, cap: usize) -> Result<Ipt> {
        if effect >= self.n() {
            return Err(Error::NodeOutOfRange { node: effect, n: self.n() });
        }
        if cause == effect {
            return Err(Error::SamePair(cause));
        }
        let marg = self.intervention_marginals(cause, cap)?;
        let rows = marg.into_iter().flat_map(|m| m[effect].clone()).collect();
        Ok(Ipt::new_unchecked(self.cards[cause], self.cards[effect], rows))
    }

    /// Exact IPTs for every ordered pair, indexed `[cause][effect]`; the
    /// diagonal holds `None`.
    pub fn all_interventions(&self, cap: usize) -> Result<IptMatrix> {
        (0..self.n())
            .into_par_iter()
            .map(|i| {
                let marg = self.intervention_marginals(i, cap)?;
                Ok((0..self.n())
                    .map(|j| {
                        (j != i).then(|| {
                            let rows = marg.iter().flat_map(|m| m[j].iter().copied()).collect();
                            Ipt::new_unchecked(self.cards[i], self.cards[j], rows)
                        })
                    })
                    .collect())
            })
            .collect()
    }

    /// True causal effects for all ordered pairs.
    pub fn true_effects(&self, kind: EffectKind) -> Result<EffectMatrix> {
        if kind == EffectKind::Ate && self.cards.iter().any(|&r| r != 2) {
            return Err(Error::NotBinary);
        }
        let ipts = self.all_interventions(DEFAULT_STATE_CAP)?;
        let mut m = EffectMatrix::zeros(self.n());
        for (i, row) in ipts.iter().enumerate() {
            for (j, ipt) in row.iter().enumerate() {
                if let Some(ipt) = ipt {
                    m.set(i, j, effect_of_ipt(ipt, kind)?);
                }
            }
        }
        Ok(m)
    }

    /// Ancestral sampling of `n_samples` joint draws.
    pub fn forward_sample(&self, n_samples: usize, seed: u64) -> Dataset {
        let mut rng = rng::seeded(seed);
        let order = self.dag.topological_order().expect("network DAG is acyclic");
        let mut columns = vec![Vec::with_capacity(n_samples); self.n()];
        let mut state = vec![0usize; self.n()];
        for _ in 0..n_samples {
            for &v in &order {
                let r = self.cards[v];
                let off = self.parent_config(v, &state) * r;
                state[v] = sample_categorical(&self.cpts[v][off..off + r], rng.random::<f64>());
            }
            for (col, &x) in columns.iter_mut().zip(&state) {
                col.push(x);
            }
        }
        Dataset::new(self.cards.clone(), columns).expect("sampled codes are within cardinalities")
    }

    /// Random network: uniform random topological order, each forward pair an
    /// edge with probability `expected_neighbors / (n - 1)`, and every CPT row
    /// drawn from a flat Dirichlet.
    pub fn random(n: usize, expected_neighbors: f64, cards: &[usize], seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("network needs at least one node".into()));
        }
        if cards.len() != n {
            return Err(Error::InvalidArgument(format!("{} cardinalities for {n} nodes", cards.len())));
        }
        let p = if n == 1 { 0.0 } else { expected_neighbors / (n - 1) as f64 };
        if !(expected_neighbors >= 0.0 && expected_neighbors < n as f64) || p > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "expected neighbour count {expected_neighbors} gives edge probability {p}"
            )));
        }
        let mut rng = rng::seeded(seed);
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut parents = vec![Vec::new(); n];
        for a in 0..n {
            for b in a + 1..n {
                if rng.random::<f64>() < p {
                    parents[order[b]].push(order[a]);
                }
            }
        }
        let dag = Dag::new(parents)?;
        let mut cpts = Vec::with_capacity(n);
        for v in 0..n {
            let rows: usize = dag.parents(v).iter().map(|&p| cards[p]).product();
            let mut cpt = Vec::with_capacity(rows * cards[v]);
            for _ in 0..rows {
                let draws: Vec<f64> = (0..cards[v]).map(|_| Exp1.sample(&mut rng)).collect();
                let s: f64 = draws.iter().sum();
                cpt.extend(draws.iter().map(|d| d / s));
            }
            cpts.push(cpt);
        }
        CptNetwork::new(dag, cards.to_vec(), cpts)
    }
}

fn sample_categorical(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        acc += pk;
        if u < acc {
            return k;
        }
    }
    // Rounding left `u` above the cumulative sum; take the last state with mass.
    p.iter().rposition(|&pk| pk > 0.0).unwrap_or(p.len() - 1)
}

/// Visits every joint state (variable 0 fastest), optionally holding one
/// variable fixed.
fn for_each_state(cards: &[usize], fixed: Option<(usize, usize)>, mut f: impl FnMut(&[usize])) {
    let n = cards.len();
    let mut state = vec![0usize; n];
    if let Some((v, x)) = fixed {
        state[v] = x;
    }
    loop {
        f(&state);
        let mut k = 0;
        loop {
            if k == n {
                return;
            }
            if fixed.is_some_and(|(v, _)| v == k) {
                k += 1;
                continue;
            }
            state[k] += 1;
            if state[k] < cards[k] {
                break;
            }
            state[k] = 0;
            k += 1;
        }
    }
}

/// Intervention probability table: one distribution over the effect per
/// level of the cause.
#[derive(Debug, Clone, PartialEq)]
pub struct Ipt {
    r_cause: usize,
    r_effect: usize,
    rows: Vec<f64>,
}

impl Ipt {
    pub fn new(r_cause: usize, r_effect: usize, rows: Vec<f64>) -> Result<Self> {
        if rows.len() != r_cause * r_effect {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {r_cause}x{r_effect} table",
                rows.len()
            )));
        }
        for row in rows.chunks(r_effect.max(1)) {
            let s: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (s - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidArgument(format!("IPT row {row:?} is not a distribution")));
            }
        }
        Ok(Ipt::new_unchecked(r_cause, r_effect, rows))
    }

    pub(crate) fn new_unchecked(r_cause: usize, r_effect: usize, rows: Vec<f64>) -> Self {
        Ipt {
            r_cause,
            r_effect,
            rows,
        }
    }

    pub fn r_cause(&self) -> usize {
        self.r_cause
    }

    pub fn r_effect(&self) -> usize {
        self.r_effect
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.r_effect..(x + 1) * self.r_effect]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.r_effect + y]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rows
    }
}

/// Square matrix of pairwise effects; diagonal entries are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectMatrix {
    n: usize,
    values: Vec<f64>,
}

impl EffectMatrix {
    pub fn zeros(n: usize) -> Self {
        EffectMatrix {
            n,
            values: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
    }

    /// Off-diagonal pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
    }

    pub fn off_diagonal(&self) -> Vec<f64> {
        self.pairs().map(|(i, j)| self.get(i, j)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn confounder() -> CptNetwork {
        // Z = 0, X = 1, Y = 2 with Z -> X, Z -> Y, X -> Y.
        let dag = Dag::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let pz = vec![0.5, 0.5];
        let px = vec![0.8, 0.2, 0.2, 0.8];
        // Parents of Y are [Z, X]; Z varies fastest.
        let py = vec![0.9, 0.1, 0.6, 0.4, 0.5, 0.5, 0.1, 0.9];
        CptNetwork::new(dag, vec![2, 2, 2], vec![pz, px, py]).unwrap()
    }

    #[test]
    fn confounder_intervention_by_enumeration() {
        let ipt = confounder().exact_intervention(1, 2).unwrap();
        assert_abs_diff_eq!(ipt.get(1, 1), 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(ipt.get(0, 1), 0.25, epsilon = 1e-12);
        let ate = confounder().true_effects(EffectKind::Ate).unwrap();
        assert_abs_diff_eq!(ate.get(1, 2), 0.45, epsilon = 1e-12);
    }

    #[test]
    fn chain_intervention_equals_cpt_rows() {
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let bn = CptNetwork::new(dag, vec![2, 3], vec![vec![0.3, 0.7], vec![0.1, 0.2, 0.7, 0.5, 0.25, 0.25]]).unwrap();
        let ipt = bn.exact_intervention(0, 1).unwrap();
        for (a, b) in ipt.as_slice().iter().zip(bn.cpt(1)) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        // Reverse direction: no path, rows equal the marginal of X0.
        let back = bn.exact_intervention(1, 0).unwrap();
        for x in 0..3 {
            assert_abs_diff_eq!(back.get(x, 0), 0.3, epsilon = 1e-15);
        }
    }

    #[test]
    fn disconnected_rows_equal_marginal() {
        let bn = CptNetwork::new(Dag::empty(2), vec![2, 2], vec![vec![0.4, 0.6], vec![0.1, 0.9]]).unwrap();
        let ipt = bn.exact_intervention(0, 1).unwrap();
        assert_eq!(ipt.row(0), ipt.row(1));
        assert_abs_diff_eq!(ipt.get(0, 1), 0.9);
    }

    #[test]
    fn forward_sampling_deterministic_and_empty() {
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let bn = CptNetwork::new(dag, vec![2, 2], vec![vec![0.0, 1.0], vec![1.0, 0.0, 0.0, 1.0]]).unwrap();
        let d = bn.forward_sample(50, 1);
        assert!(d.column(0).iter().all(|&x| x == 1));
        assert!(d.column(1).iter().all(|&x| x == 1));
        let empty = bn.forward_sample(0, 1);
        assert_eq!(empty.n_samples(), 0);
        assert_eq!(empty.cards(), &[2, 2]);
        assert_eq!(bn.forward_sample(20, 9), bn.forward_sample(20, 9));
    }

    #[test]
    fn forward_sampling_matches_cpt() {
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let bn = CptNetwork::new(dag, vec![2, 2], vec![vec![0.4, 0.6], vec![0.7, 0.3, 0.2, 0.8]]).unwrap();
        let d = bn.forward_sample(100_000, 3);
        for x in 0..2 {
            let rows: Vec<usize> = (0..d.n_samples()).filter(|&s| d.column(0)[s] == x).collect();
            let ones = rows.iter().filter(|&&s| d.column(1)[s] == 1).count();
            let p = ones as f64 / rows.len() as f64;
            assert!((p - bn.cpt(1)[x * 2 + 1]).abs() < 0.01, "x={x} p={p}");
        }
    }

    #[test]
    fn random_network_single_node_and_invariants() {
        let bn = CptNetwork::random(1, 0.0, &[3], 5).unwrap();
        assert_eq!(bn.dag().edge_count(), 0);
        assert_abs_diff_eq!(bn.cpt(0).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        for seed in 0..20 {
            let bn = CptNetwork::random(8, 3.0, &[2, 3, 2, 4, 2, 2, 3, 2], seed).unwrap();
            assert!(bn.dag().topological_order().is_some());
            // Constructor revalidates all invariants.
            CptNetwork::new(bn.dag().clone(), bn.cards().to_vec(), bn.cpts.clone()).unwrap();
        }
        assert!(CptNetwork::random(5, 5.0, &[2; 5], 0).is_err());
        assert!(CptNetwork::random(5, -1.0, &[2; 5], 0).is_err());
    }

    #[test]
    fn random_network_mean_degree() {
        let mut total = 0.0;
        for seed in 0..500 {
            let bn = CptNetwork::random(10, 4.0, &[2; 10], seed).unwrap();
            total += 2.0 * bn.dag().edge_count() as f64 / 10.0;
        }
        let mean = total / 500.0;
        assert!((mean - 4.0).abs() < 0.3, "mean degree {mean}");
    }

    #[test]
    fn network_json_round_trip_and_validation() {
        let bn = confounder();
        let back = CptNetwork::from_json(&bn.to_json()).unwrap();
        assert_eq!(back, bn);
        assert!(CptNetwork::from_json(r#"{"cards":[2],"parents":[[]],"cpts":[[0.5,0.6]]}"#).is_err());
        assert!(CptNetwork::from_json(r#"{"cards":[2],"parents":[[]],"cpts":[[1.0]]}"#).is_err());
        assert!(CptNetwork::from_json(r#"{"cards":[1],"parents":[[]],"cpts":[[1.0]]}"#).is_err());
        let rounded = CptNetwork::from_json(r#"{"cards":[3],"parents":[[]],"cpts":[[0.333,0.333,0.3335]]}"#);
        assert!(rounded.is_err());
        let ok = CptNetwork::from_json(r#"{"cards":[3],"parents":[[]],"cpts":[[0.3333333,0.3333333,0.3333333]]}"#)
            .unwrap();
        assert_abs_diff_eq!(ok.cpt(0).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn state_cap_is_enforced() {
        let bn = CptNetwork::random(10, 2.0, &[4; 10], 1).unwrap();
        assert!(matches!(
            bn.exact_intervention_capped(0, 1, 1000),
            Err(Error::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn ate_requires_binary() {
        let bn = CptNetwork::random(3, 1.0, &[2, 3, 2], 1).unwrap();
        assert!(matches!(bn.true_effects(EffectKind::Ate), Err(Error::NotBinary)));
    }
}
