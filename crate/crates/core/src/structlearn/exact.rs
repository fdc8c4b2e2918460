//! Exhaustive enumeration of labeled DAGs for very small graphs.

use super::DagSample;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::scoring::{mask_nodes, ScoreCache};

/// Largest graph handled by exhaustive enumeration (29281 DAGs on 5 nodes).
pub const MAX_EXACT_NODES: usize = 5;

/// Every DAG on `n` labeled nodes with in-degree at most `max_parents`, as
/// per-node parent bitmasks.
fn enumerate_masks(n: usize, max_parents: usize) -> Vec<Vec<u64>> {
    let options: Vec<Vec<u64>> = (0..n)
        .map(|v| {
            (0u64..1 << n)
                .filter(|m| m & (1 << v) == 0 && m.count_ones() as usize <= max_parents)
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut current = vec![0u64; n];
    fill(0, &options, &mut current, &mut out);
    out
}

fn fill(v: usize, options: &[Vec<u64>], current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if v == options.len() {
        if is_acyclic(current) {
            out.push(current.clone());
        }
        return;
    }
    for &m in &options[v] {
        current[v] = m;
        fill(v + 1, options, current, out);
    }
}

/// Peels off nodes whose parents are all removed; acyclic iff all peel.
pub(crate) fn is_acyclic(parents: &[u64]) -> bool {
    let n = parents.len();
    let mut removed = 0u64;
    loop {
        let mut progress = false;
        for (v, &pa) in parents.iter().enumerate() {
            if removed & (1 << v) == 0 && pa & !removed == 0 {
                removed |= 1 << v;
                progress = true;
            }
        }
        if removed.count_ones() as usize == n {
            return true;
        }
        if !progress {
            return false;
        }
    }
}

pub(crate) fn masks_to_dag(parents: &[u64]) -> Dag {
    Dag::new(parents.iter().map(|&m| mask_nodes(m)).collect()).expect("masks describe a DAG")
}

/// All labeled DAGs on `n` nodes with in-degree at most `max_parents`.
pub fn enumerate_dags(n: usize, max_parents: usize) -> Result<Vec<Dag>> {
    if n > MAX_EXACT_NODES {
        return Err(Error::InvalidArgument(format!(
            "exhaustive enumeration supports at most {MAX_EXACT_NODES} nodes, got {n}"
        )));
    }
    Ok(enumerate_masks(n, max_parents).iter().map(|m| masks_to_dag(m)).collect())
}

/// Exact posterior over all admissible DAGs under a uniform structure prior
/// and the BDeu marginal likelihood.
pub fn exact_dag_posterior(data: &Dataset, ess: f64, max_parents: usize) -> Result<DagSample> {
    let n = data.n_vars();
    if n > MAX_EXACT_NODES {
        return Err(Error::InvalidArgument(format!(
            "exact posterior supports at most {MAX_EXACT_NODES} variables, got {n}"
        )));
    }
    let cache = ScoreCache::new(data, ess)?;
    let masks = enumerate_masks(n, max_parents);
    let scores: Vec<f64> = masks
        .iter()
        .map(|m| m.iter().enumerate().map(|(v, &pa)| cache.family(v, pa)).sum())
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    DagSample::weighted(masks.iter().map(|m| masks_to_dag(m)).collect(), weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_dag_counts() {
        let counts: Vec<usize> = (0..=4).map(|n| enumerate_dags(n, n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 1, 3, 25, 543]);
        // Empty, six single edges, six chains and three forks.
        assert_eq!(enumerate_dags(3, 1).unwrap().len(), 16);
        assert!(enumerate_dags(6, 2).is_err());
    }

    #[test]
    fn weights_are_normalized() {
        let d = Dataset::from_rows(vec![2, 2, 2], &[vec![0, 1, 1], vec![1, 1, 0], vec![0, 0, 0]]).unwrap();
        let post = exact_dag_posterior(&d, 1.0, 2).unwrap();
        assert_eq!(post.len(), 25);
        assert!((post.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn copy_relation_crushes_empty_graph() {
        let x: Vec<usize> = (0..5000).map(|k| (k * 7919 % 13) % 2).collect();
        let d = Dataset::new(vec![2, 2], vec![x.clone(), x]).unwrap();
        let post = exact_dag_posterior(&d, 1.0, 1).unwrap();
        let empty = post
            .dags()
            .iter()
            .zip(post.weights())
            .find(|(g, _)| g.edge_count() == 0)
            .unwrap()
            .1;
        assert!(*empty < 0.01);
    }
}
