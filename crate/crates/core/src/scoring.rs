//! Sufficient statistics, the BDeu marginal likelihood and the G² test.

use std::collections::HashMap;
use std::sync::RwLock;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::Dag;

/// Contingency table of a child given a parent set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyCounts {
    pub child: usize,
    pub parents: Vec<usize>,
    pub r_child: usize,
    pub r_parents: usize,
    /// `N[x | pa]` at `pa * r_child + x`, parent configuration mixed-radix
    /// with the first parent fastest.
    pub counts: Vec<u64>,
}

impl FamilyCounts {
    pub fn get(&self, pa: usize, x: usize) -> u64 {
        self.counts[pa * self.r_child + x]
    }

    /// Counts per parent configuration, summed over the child.
    pub fn parent_counts(&self) -> Vec<u64> {
        self.counts.chunks(self.r_child).map(|row| row.iter().sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn check_vars(data: &Dataset, vars: &[usize]) -> Result<()> {
    let n = data.n_vars();
    match vars.iter().find(|&&v| v >= n) {
        Some(&v) => Err(Error::NodeOutOfRange { node: v, n }),
        None => Ok(()),
    }
}

pub fn family_counts(data: &Dataset, child: usize, parents: &[usize]) -> Result<FamilyCounts> {
    check_vars(data, &[child])?;
    check_vars(data, parents)?;
    if parents.contains(&child) {
        return Err(Error::Overlap(format!("node {child} listed as its own parent")));
    }
    let r_child = data.card(child);
    let r_parents = data.joint_card(parents);
    let mut counts = vec![0u64; r_parents * r_child];
    let pa = data.config_indices(parents);
    for (&p, &x) in pa.iter().zip(data.column(child)) {
        counts[p * r_child + x] += 1;
    }
    Ok(FamilyCounts {
        child,
        parents: parents.to_vec(),
        r_child,
        r_parents,
        counts,
    })
}

/// Log BDeu factor of one node given its parents, with cell hyperparameters
/// `ess / (r_child * r_parents)`.
pub fn bdeu_log_score(data: &Dataset, child: usize, parents: &[usize], ess: f64) -> Result<f64> {
    if !(ess > 0.0 && ess.is_finite()) {
        return Err(Error::InvalidArgument(format!("equivalent sample size {ess} must be positive")));
    }
    let fc = family_counts(data, child, parents)?;
    Ok(bdeu_from_counts(&fc, ess))
}

pub fn bdeu_from_counts(fc: &FamilyCounts, ess: f64) -> f64 {
    let a_row = ess / fc.r_parents as f64;
    let a_cell = a_row / fc.r_child as f64;
    let lg_row = ln_gamma(a_row);
    let lg_cell = ln_gamma(a_cell);
    let mut score = 0.0;
    for row in fc.counts.chunks(fc.r_child) {
        let n_row: u64 = row.iter().sum();
        if n_row == 0 {
            continue;
        }
        score += lg_row - ln_gamma(a_row + n_row as f64);
        for &c in row {
            if c > 0 {
                score += ln_gamma(a_cell + c as f64) - lg_cell;
            }
        }
    }
    score
}

/// Log marginal likelihood of the data under a DAG.
pub fn log_marginal_likelihood(data: &Dataset, dag: &Dag, ess: f64) -> Result<f64> {
    if dag.n() != data.n_vars() {
        return Err(Error::ShapeMismatch(format!(
            "DAG over {} nodes, data over {} variables",
            dag.n(),
            data.n_vars()
        )));
    }
    (0..dag.n())
        .map(|v| bdeu_log_score(data, v, dag.parents(v), ess))
        .sum()
}

/// Thread-safe memo of family scores keyed by `(child, parent bitmask)`.
/// Limited to 64 variables.
#[derive(Debug)]
pub struct ScoreCache<'a> {
    data: &'a Dataset,
    ess: f64,
    map: RwLock<HashMap<(usize, u64), f64>>,
}

impl<'a> ScoreCache<'a> {
    pub fn new(data: &'a Dataset, ess: f64) -> Result<Self> {
        if data.n_vars() > 64 {
            return Err(Error::InvalidArgument("score cache supports at most 64 variables".into()));
        }
        if !(ess > 0.0 && ess.is_finite()) {
            return Err(Error::InvalidArgument(format!("equivalent sample size {ess} must be positive")));
        }
        Ok(ScoreCache {
            data,
            ess,
            map: RwLock::new(HashMap::new()),
        })
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn family(&self, child: usize, parents: u64) -> f64 {
        if let Some(&s) = self.map.read().expect("score cache poisoned").get(&(child, parents)) {
            return s;
        }
        let pa = mask_nodes(parents);
        let fc = family_counts(self.data, child, &pa).expect("cached families are in range");
        let s = bdeu_from_counts(&fc, self.ess);
        *self
            .map
            .write()
            .expect("score cache poisoned")
            .entry((child, parents))
            .or_insert(s)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("score cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub(crate) fn mask_nodes(mut mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        out.push(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiTest {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
    pub independent: bool,
}

const DENSE_CELL_LIMIT: f64 = (1u64 << 22) as f64;

/// G² test of `x ⟂ y | z`. Cells with zero count contribute nothing; the
/// degrees of freedom are `(r_x - 1)(r_y - 1) prod r_z` without adjustment
/// for structural zeros.
pub fn g2_ci_test(data: &Dataset, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<CiTest> {
    check_vars(data, &[x, y])?;
    check_vars(data, z)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("significance level {alpha} outside (0, 1)")));
    }
    if x == y || z.contains(&x) || z.contains(&y) {
        return Err(Error::Overlap("x, y and z must be disjoint".into()));
    }
    let (rx, ry) = (data.card(x), data.card(y));
    let rz: f64 = z.iter().map(|&v| data.card(v) as f64).product();
    let dof = ((rx - 1) * (ry - 1)) as f64 * rz;
    let independent_result = CiTest {
        statistic: 0.0,
        dof,
        p_value: 1.0,
        independent: true,
    };
    if dof == 0.0 {
        return Ok(independent_result);
    }
    let cells = rx as f64 * ry as f64 * rz;
    let stat = if cells <= DENSE_CELL_LIMIT {
        g2_dense(data, x, y, z, rz as usize)
    } else if cells < u64::MAX as f64 / 2.0 {
        g2_sparse(data, x, y, z)
    } else {
        // Far more cells than any sample can populate; the test has no power.
        return Ok(independent_result);
    };
    let p_value = ChiSquared::new(dof).map(|d| d.sf(stat)).unwrap_or(1.0);
    Ok(CiTest {
        statistic: stat,
        dof,
        p_value,
        independent: p_value > alpha,
    })
}

fn g2_dense(data: &Dataset, x: usize, y: usize, z: &[usize], rz: usize) -> f64 {
    let (rx, ry) = (data.card(x), data.card(y));
    let zs = data.config_indices(z);
    let mut nxyz = vec![0u64; rx * ry * rz];
    for ((&zi, &xi), &yi) in zs.iter().zip(data.column(x)).zip(data.column(y)) {
        nxyz[(zi * ry + yi) * rx + xi] += 1;
    }
    let mut stat = 0.0;
    let mut nxz = vec![0u64; rx];
    let mut nyz = vec![0u64; ry];
    for block in nxyz.chunks(rx * ry) {
        nxz.iter_mut().for_each(|c| *c = 0);
        nyz.iter_mut().for_each(|c| *c = 0);
        let mut nz = 0u64;
        for (k, &c) in block.iter().enumerate() {
            nxz[k % rx] += c;
            nyz[k / rx] += c;
            nz += c;
        }
        for (k, &c) in block.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                stat += c * (c * nz as f64 / (nxz[k % rx] as f64 * nyz[k / rx] as f64)).ln();
            }
        }
    }
    2.0 * stat
}

fn g2_sparse(data: &Dataset, x: usize, y: usize, z: &[usize]) -> f64 {
    let n = data.n_samples();
    let mut zkey = vec![0u64; n];
    let mut stride = 1u64;
    for &v in z {
        for (k, &c) in zkey.iter_mut().zip(data.column(v)) {
            *k += c as u64 * stride;
        }
        stride *= data.card(v) as u64;
    }
    let mut nxyz: HashMap<(u64, usize, usize), u64> = HashMap::new();
    let mut nxz: HashMap<(u64, usize), u64> = HashMap::new();
    let mut nyz: HashMap<(u64, usize), u64> = HashMap::new();
    let mut nz: HashMap<u64, u64> = HashMap::new();
    for s in 0..n {
        let (zk, xi, yi) = (zkey[s], data.column(x)[s], data.column(y)[s]);
        *nxyz.entry((zk, xi, yi)).or_default() += 1;
        *nxz.entry((zk, xi)).or_default() += 1;
        *nyz.entry((zk, yi)).or_default() += 1;
        *nz.entry(zk).or_default() += 1;
    }
    let mut keys: Vec<_> = nxyz.keys().copied().collect();
    keys.sort_unstable();
    let stat: f64 = keys
        .into_iter()
        .map(|k @ (zk, xi, yi)| {
            let c = nxyz[&k] as f64;
            c * (c * nz[&zk] as f64 / (nxz[&(zk, xi)] as f64 * nyz[&(zk, yi)] as f64)).ln()
        })
        .sum();
    2.0 * stat
}
