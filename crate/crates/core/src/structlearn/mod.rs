//! Posterior over DAGs and the per-pair posterior over adjustment sets.

mod exact;
mod mcmc;
mod pc;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

pub use exact::{enumerate_dags, exact_dag_posterior, MAX_EXACT_NODES};
pub use mcmc::{structure_mcmc, EdgeMove, EdgeMoveChain, McmcConfig};
pub use pc::{pc_cpdag, pc_skeleton, Skeleton};

use crate::error::{Error, Result};
use crate::graph::{AdjustmentKind, AdjustmentSet, Dag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Every admissible DAG, weighted by its normalized posterior probability.
    ExactWeighted,
    /// Equally weighted draws from a Markov chain.
    Mcmc,
}

/// A sample of DAGs, either exactly weighted or equally weighted draws.
#[derive(Debug, Clone, PartialEq)]
pub struct DagSample {
    dags: Vec<Dag>,
    weights: Vec<f64>,
    provenance: Provenance,
}

impl DagSample {
    /// Equally weighted draws.
    pub fn from_draws(dags: Vec<Dag>) -> Result<Self> {
        if dags.is_empty() {
            return Err(Error::InvalidArgument("empty DAG sample".into()));
        }
        check_same_size(&dags)?;
        let w = 1.0 / dags.len() as f64;
        Ok(DagSample {
            weights: vec![w; dags.len()],
            dags,
            provenance: Provenance::Mcmc,
        })
    }

    /// Weighted DAGs; weights are normalized to sum to one.
    pub fn weighted(dags: Vec<Dag>, weights: Vec<f64>) -> Result<Self> {
        if dags.is_empty() || dags.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} DAGs with {} weights",
                dags.len(),
                weights.len()
            )));
        }
        check_same_size(&dags)?;
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        let s: f64 = weights.iter().sum();
        if s <= 0.0 {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
        Ok(DagSample {
            dags,
            weights: weights.into_iter().map(|w| w / s).collect(),
            provenance: Provenance::ExactWeighted,
        })
    }

    pub fn dags(&self) -> &[Dag] {
        &self.dags
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.dags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dags.is_empty()
    }

    pub fn n(&self) -> usize {
        self.dags[0].n()
    }

    /// Distinct DAGs with their total weight, in first-seen order.
    pub fn distinct(&self) -> Vec<(&Dag, f64)> {
        let mut index: HashMap<&Dag, usize> = HashMap::new();
        let mut out: Vec<(&Dag, f64)> = Vec::new();
        for (d, &w) in self.dags.iter().zip(&self.weights) {
            match index.get(d) {
                Some(&k) => out[k].1 += w,
                None => {
                    index.insert(d, out.len());
                    out.push((d, w));
                }
            }
        }
        out
    }

    /// One JSON DAG per line.
    pub fn write_dags<W: Write>(&self, mut w: W) -> Result<()> {
        for d in &self.dags {
            writeln!(w, "{}", d.to_json())?;
        }
        Ok(())
    }

    /// One weight per line, aligned with [`DagSample::write_dags`].
    pub fn write_weights<W: Write>(&self, mut w: W) -> Result<()> {
        for x in &self.weights {
            writeln!(w, "{x}")?;
        }
        Ok(())
    }

    /// Reads a DAG-per-line file and an optional weight-per-line file.
    pub fn read<R: BufRead, S: BufRead>(dags: R, weights: Option<S>) -> Result<Self> {
        let dags = dags
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|l| Dag::from_json(&l?))
            .collect::<Result<Vec<_>>>()?;
        match weights {
            None => DagSample::from_draws(dags),
            Some(w) => {
                let weights = w
                    .lines()
                    .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
                    .map(|l| {
                        let l = l?;
                        l.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidArgument(format!("bad weight `{l}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                DagSample::weighted(dags, weights)
            }
        }
    }
}

fn check_same_size(dags: &[Dag]) -> Result<()> {
    let n = dags[0].n();
    if dags.iter().any(|d| d.n() != n) {
        return Err(Error::InvalidArgument("DAGs in a sample differ in size".into()));
    }
    Ok(())
}

/// Posterior over adjustment sets of one class for one ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentPosterior {
    pub cause: usize,
    pub effect: usize,
    pub kind: AdjustmentKind,
    /// Distinct sets in sorted order with their probabilities.
    pub components: Vec<(AdjustmentSet, f64)>,
}

impl AdjustmentPosterior {
    /// Point mass on one set.
    pub fn point(cause: usize, effect: usize, set: AdjustmentSet) -> Self {
        AdjustmentPosterior {
            cause,
            effect,
            kind: set.kind,
            components: vec![(set, 1.0)],
        }
    }

    pub fn probability_of(&self, set: &AdjustmentSet) -> f64 {
        self.components
            .iter()
            .find(|(s, _)| s == set)
            .map_or(0.0, |(_, p)| *p)
    }
}

/// Tallies the adjustment set of `kind` for `(cause, effect)` over the sample.
pub fn adjustment_posterior(
    sample: &DagSample,
    cause: usize,
    effect: usize,
    kind: AdjustmentKind,
) -> Result<AdjustmentPosterior> {
    let mut tally: BTreeMap<AdjustmentSet, f64> = BTreeMap::new();
    for (dag, w) in sample.distinct() {
        *tally.entry(dag.adjustment_set(cause, effect, kind)?).or_default() += w;
    }
    Ok(finish(cause, effect, kind, tally))
}

fn finish(cause: usize, effect: usize, kind: AdjustmentKind, tally: BTreeMap<AdjustmentSet, f64>) -> AdjustmentPosterior {
    let total: f64 = tally.values().sum();
    AdjustmentPosterior {
        cause,
        effect,
        kind,
        components: tally
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(s, w)| (s, w / total))
            .collect(),
    }
}

/// Adjustment posteriors for every ordered pair, row-major over `(i, j)`
/// with `i != j`. Each distinct DAG is processed once.
pub fn all_adjustment_posteriors(sample: &DagSample, kind: AdjustmentKind) -> Result<Vec<AdjustmentPosterior>> {
    use rayon::prelude::*;

    let n = sample.n();
    let distinct = sample.distinct();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut tally: BTreeMap<AdjustmentSet, f64> = BTreeMap::new();
            for (dag, w) in &distinct {
                *tally.entry(dag.adjustment_set(i, j, kind)?).or_default() += *w;
            }
            Ok(finish(i, j, kind, tally))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_dags_give_point_mass() {
        let g = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let s = DagSample::from_draws(vec![g.clone(); 5]).unwrap();
        let p = adjustment_posterior(&s, 1, 2, AdjustmentKind::Parent).unwrap();
        assert_eq!(p.components.len(), 1);
        assert_eq!(p.components[0].1, 1.0);
    }

    #[test]
    fn two_dags_split_evenly() {
        let a = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let b = Dag::from_edges(3, &[(1, 2)]).unwrap();
        let s = DagSample::from_draws(vec![a.clone(), b.clone(), a, b]).unwrap();
        let p = adjustment_posterior(&s, 1, 2, AdjustmentKind::Parent).unwrap();
        assert_eq!(p.components.len(), 2);
        for (_, w) in &p.components {
            assert!((w - 0.5).abs() < 1e-12);
        }
        let all = all_adjustment_posteriors(&s, AdjustmentKind::Parent).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(all[3], p); // row-major: (0,1) (0,2) (1,0) (1,2)
    }

    #[test]
    fn sample_file_round_trip() {
        let a = Dag::from_edges(3, &[(0, 1)]).unwrap();
        let b = Dag::from_edges(3, &[(2, 1)]).unwrap();
        let s = DagSample::weighted(vec![a, b], vec![3.0, 1.0]).unwrap();
        let (mut dags, mut ws) = (Vec::new(), Vec::new());
        s.write_dags(&mut dags).unwrap();
        s.write_weights(&mut ws).unwrap();
        let back = DagSample::read(dags.as_slice(), Some(ws.as_slice())).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.weights(), &[0.75, 0.25]);
        let unweighted = DagSample::read(dags.as_slice(), None::<&[u8]>).unwrap();
        assert_eq!(unweighted.weights(), &[0.5, 0.5]);
        assert!(DagSample::read(&b"not json\n"[..], None::<&[u8]>).is_err());
    }
}
