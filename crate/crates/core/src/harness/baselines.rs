//! Point-estimate baselines: IDA over a PDAG and naive plug-in references.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catbn::{EffectMatrix, Ipt, IptMatrix};
use crate::data::Dataset;
use crate::effects::{effect_of_ipt, EffectKind};
use crate::error::{Error, Result};
use crate::graph::{AdjustmentKind, AdjustmentSet, Pdag};
use crate::posterior::backdoor_posterior_params;

/// Default cap on DAG extensions enumerated by optimal IDA.
pub const DEFAULT_EXTENSION_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NaiveKind {
    /// `P(x_j | x_i)`, ignoring confounding.
    Conditional,
    /// `P(x_j)` in every row, i.e. no effect anywhere.
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdaVariant {
    /// Locally valid parent sets.
    Parent,
    /// O-sets of every consistent DAG extension.
    Optimal,
}

impl fmt::Display for IdaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdaVariant::Parent => "pa",
            IdaVariant::Optimal => "o",
        })
    }
}

impl FromStr for IdaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pa" | "parent" => Ok(IdaVariant::Parent),
            "o" | "optimal" => Ok(IdaVariant::Optimal),
            _ => Err(Error::InvalidArgument(format!("unknown IDA variant `{s}`"))),
        }
    }
}

/// Smoothed plug-in IPT for one adjustment set. Equal to the BIDA posterior
/// mean under a point mass on `set`.
pub fn plug_in_ipt(data: &Dataset, cause: usize, effect: usize, set: &AdjustmentSet, ess: f64, cell_cap: usize) -> Result<Ipt> {
    Ok(backdoor_posterior_params(data, cause, effect, set, ess, cell_cap)?.mean())
}

/// Naive reference IPTs for every ordered pair.
pub fn naive_estimate(data: &Dataset, kind: NaiveKind, ess: f64) -> Result<IptMatrix> {
    let n = data.n_vars();
    let mut out = vec![vec![None; n]; n];
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let set = match kind {
                NaiveKind::Conditional => AdjustmentSet::new(AdjustmentKind::Parent, Vec::new()),
                NaiveKind::Marginal => AdjustmentSet::sentinel(AdjustmentKind::Parent, j),
            };
            let params = backdoor_posterior_params(data, i, j, &set, ess, usize::MAX)?;
            out[i][j] = Some(params.mean());
        }
    }
    Ok(out)
}

/// Subsets of `sib` that can be oriented into `v` without creating a new
/// v-structure at `v`: the subset must be a clique, and each member must be
/// adjacent to every directed parent of `v`.
pub fn local_parent_sets(pdag: &Pdag, v: usize) -> Vec<Vec<usize>> {
    let pa = pdag.parents(v);
    let sib = pdag.siblings(v);
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << sib.len()) {
        let s: Vec<usize> = (0..sib.len()).filter(|&k| mask >> k & 1 == 1).map(|k| sib[k]).collect();
        let clique = s.iter().enumerate().all(|(k, &a)| s[k + 1..].iter().all(|&b| pdag.adjacent(a, b)));
        let shielded = s.iter().all(|&a| pa.iter().all(|&p| pdag.adjacent(a, p)));
        if clique && shielded {
            let mut set = pa.clone();
            set.extend(s);
            set.sort_unstable();
            out.push(set);
        }
    }
    out
}

/// Averages estimates over a list of adjustment sets: IPTs cellwise and
/// effects per set.
fn average(
    data: &Dataset,
    i: usize,
    j: usize,
    sets: &[AdjustmentSet],
    kind: EffectKind,
    ess: f64,
    cell_cap: usize,
) -> Result<(f64, Ipt)> {
    let (rx, ry) = (data.card(i), data.card(j));
    let mut cells = vec![0.0; rx * ry];
    let mut effect = 0.0;
    for set in sets {
        let ipt = plug_in_ipt(data, i, j, set, ess, cell_cap)?;
        effect += effect_of_ipt(&ipt, kind)?;
        for (c, v) in cells.iter_mut().zip(ipt.as_slice()) {
            *c += v;
        }
    }
    let k = sets.len() as f64;
    cells.iter_mut().for_each(|c| *c /= k);
    Ok((effect / k, Ipt::new_unchecked(rx, ry, cells)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdaOptions {
    pub ess: f64,
    pub kind: EffectKind,
    pub extension_cap: usize,
    pub cell_cap: usize,
}

impl Default for IdaOptions {
    fn default() -> Self {
        IdaOptions {
            ess: 1.0,
            kind: EffectKind::Jsd,
            extension_cap: DEFAULT_EXTENSION_CAP,
            cell_cap: crate::posterior::DEFAULT_CELL_CAP,
        }
    }
}

/// IDA: for each ordered pair, the average effect and average IPT over the
/// adjustment sets the PDAG leaves possible. A set holding `j` stands for
/// "`j` is a parent of `i`" and gives the marginal of `j`.
pub fn ida_estimate(data: &Dataset, pdag: &Pdag, variant: IdaVariant, opts: &IdaOptions) -> Result<(EffectMatrix, IptMatrix)> {
    let n = data.n_vars();
    if pdag.n() != n {
        return Err(Error::ShapeMismatch(format!("PDAG over {} nodes, data over {n}", pdag.n())));
    }
    // Parent variant: one entry per locally valid parent set, so equal
    // estimates from different sets keep their multiplicity. Optimal variant:
    // distinct o-sets over the extensions.
    let mut sets: Vec<Vec<Vec<AdjustmentSet>>> = vec![vec![Vec::new(); n]; n];
    match variant {
        IdaVariant::Parent => {
            for i in 0..n {
                for p in local_parent_sets(pdag, i) {
                    for j in (0..n).filter(|&j| j != i) {
                        sets[i][j].push(if p.contains(&j) {
                            AdjustmentSet::sentinel(AdjustmentKind::Parent, j)
                        } else {
                            AdjustmentSet::new(AdjustmentKind::Parent, p.clone())
                        });
                    }
                }
            }
        }
        IdaVariant::Optimal => {
            let mut distinct: Vec<Vec<BTreeSet<AdjustmentSet>>> = vec![vec![BTreeSet::new(); n]; n];
            for dag in pdag.consistent_extensions(opts.extension_cap)? {
                for i in 0..n {
                    for j in (0..n).filter(|&j| j != i) {
                        distinct[i][j].insert(dag.adjustment_set(i, j, AdjustmentKind::OSet)?);
                    }
                }
            }
            for (row, drow) in sets.iter_mut().zip(distinct) {
                for (cell, d) in row.iter_mut().zip(drow) {
                    *cell = d.into_iter().collect();
                }
            }
        }
    }
    let mut effects = EffectMatrix::zeros(n);
    let mut ipts = vec![vec![None; n]; n];
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let (e, t) = average(data, i, j, &sets[i][j], opts.kind, opts.ess, opts.cell_cap)?;
            effects.set(i, j, e);
            ipts[i][j] = Some(t);
        }
    }
    Ok((effects, ipts))
}
