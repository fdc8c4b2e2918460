//! Metropolis-Hastings over DAGs with single-edge moves.
//!
//! Proposals are uniform over the currently valid additions, deletions and
//! reversals. The acceptance ratio multiplies the posterior ratio by
//! `|moves(G)| / |moves(G')|`, which keeps the chain reversible with respect
//! to the posterior under a uniform prior on DAGs with bounded in-degree.

use rand::Rng as _;
use rayon::prelude::*;

use super::exact::masks_to_dag;
use super::DagSample;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Dag, Pdag};
use crate::rng::{self, Rng};
use crate::scoring::ScoreCache;

#[derive(Debug, Clone)]
pub struct McmcConfig {
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub max_parents: usize,
    pub chains: usize,
    pub seed: u64,
    /// Restricts additions to pairs adjacent in this graph.
    pub skeleton: Option<Pdag>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iters: 100_000,
            burnin: 10_000,
            thin: 100,
            max_parents: 5,
            chains: 1,
            seed: 1,
            skeleton: None,
        }
    }
}

impl McmcConfig {
    fn validate(&self, n: usize) -> Result<()> {
        if self.iters <= self.burnin {
            return Err(Error::InvalidArgument(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iters, self.burnin
            )));
        }
        if self.thin == 0 || self.chains == 0 {
            return Err(Error::InvalidArgument("thin and chains must be at least 1".into()));
        }
        if n > 64 {
            return Err(Error::InvalidArgument("structure MCMC supports at most 64 variables".into()));
        }
        if let Some(s) = &self.skeleton {
            if s.n() != n {
                return Err(Error::ShapeMismatch(format!("skeleton over {} nodes, data over {n}", s.n())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMove {
    Add(usize, usize),
    Delete(usize, usize),
    Reverse(usize, usize),
}

impl EdgeMove {
    /// The move that undoes this one.
    pub fn inverse(self) -> EdgeMove {
        match self {
            EdgeMove::Add(a, b) => EdgeMove::Delete(a, b),
            EdgeMove::Delete(a, b) => EdgeMove::Add(a, b),
            EdgeMove::Reverse(a, b) => EdgeMove::Reverse(b, a),
        }
    }
}

/// Chain state: parent bitmasks plus cached family scores.
#[derive(Debug, Clone)]
pub struct EdgeMoveChain<'c, 'd> {
    cache: &'c ScoreCache<'d>,
    parents: Vec<u64>,
    family: Vec<f64>,
    allowed: Vec<u64>,
    max_parents: usize,
}

impl<'c, 'd> EdgeMoveChain<'c, 'd> {
    /// Starts at the empty graph.
    pub fn new(cache: &'c ScoreCache<'d>, max_parents: usize, skeleton: Option<&Pdag>) -> Self {
        let n = cache.data().n_vars();
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let allowed = (0..n)
            .map(|v| match skeleton {
                Some(s) => s.neighbors(v).iter().fold(0u64, |m, &w| m | 1 << w),
                None => full & !(1 << v),
            })
            .collect();
        let family = (0..n).map(|v| cache.family(v, 0)).collect();
        EdgeMoveChain {
            cache,
            parents: vec![0; n],
            family,
            allowed,
            max_parents,
        }
    }

    /// Replaces the state; the DAG must respect the chain's constraints.
    pub fn set_state(&mut self, dag: &Dag) {
        for v in 0..dag.n() {
            self.parents[v] = dag.parents(v).iter().fold(0u64, |m, &p| m | 1 << p);
            self.family[v] = self.cache.family(v, self.parents[v]);
        }
    }

    pub fn dag(&self) -> Dag {
        masks_to_dag(&self.parents)
    }

    /// Unnormalized log posterior of the current state.
    pub fn log_score(&self) -> f64 {
        self.family.iter().sum()
    }

    fn ancestors(parents: &[u64]) -> Vec<u64> {
        let n = parents.len();
        let mut anc = parents.to_vec();
        loop {
            let mut changed = false;
            for v in 0..n {
                let mut m = anc[v];
                let mut rest = anc[v];
                while rest != 0 {
                    let p = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    m |= anc[p];
                }
                if m != anc[v] {
                    anc[v] = m;
                    changed = true;
                }
            }
            if !changed {
                return anc;
            }
        }
    }

    fn moves_of(&self, parents: &[u64]) -> Vec<EdgeMove> {
        let n = parents.len();
        let anc = Self::ancestors(parents);
        let mut out = Vec::new();
        for v in 0..n {
            let indeg = parents[v].count_ones() as usize;
            for u in 0..n {
                if u == v {
                    continue;
                }
                let bit_u = 1u64 << u;
                if parents[v] & bit_u != 0 {
                    out.push(EdgeMove::Delete(u, v));
                    // Reversal closes a cycle iff another parent of v descends from u.
                    let others = parents[v] & !bit_u;
                    let mut rest = others;
                    let mut blocked = false;
                    while rest != 0 {
                        let p = rest.trailing_zeros() as usize;
                        rest &= rest - 1;
                        if anc[p] & bit_u != 0 {
                            blocked = true;
                            break;
                        }
                    }
                    if !blocked && (parents[u].count_ones() as usize) < self.max_parents {
                        out.push(EdgeMove::Reverse(u, v));
                    }
                } else if parents[u] & (1 << v) == 0
                    && self.allowed[v] & bit_u != 0
                    && indeg < self.max_parents
                    && anc[u] & (1 << v) == 0
                {
                    out.push(EdgeMove::Add(u, v));
                }
            }
        }
        out
    }

    /// Valid moves from the current state.
    pub fn moves(&self) -> Vec<EdgeMove> {
        self.moves_of(&self.parents)
    }

    fn applied(&self, mv: EdgeMove) -> Vec<u64> {
        let mut p = self.parents.clone();
        match mv {
            EdgeMove::Add(a, b) => p[b] |= 1 << a,
            EdgeMove::Delete(a, b) => p[b] &= !(1 << a),
            EdgeMove::Reverse(a, b) => {
                p[b] &= !(1 << a);
                p[a] |= 1 << b;
            }
        }
        p
    }

    fn score_delta(&self, mv: EdgeMove, next: &[u64]) -> f64 {
        let touched: &[usize] = match mv {
            EdgeMove::Add(_, b) | EdgeMove::Delete(_, b) => &[b],
            EdgeMove::Reverse(a, b) => &[a, b],
        };
        touched
            .iter()
            .map(|&v| self.cache.family(v, next[v]) - self.family[v])
            .sum()
    }

    /// Log Metropolis-Hastings ratio for `mv` (before truncation at zero),
    /// together with the resulting parent masks.
    fn log_ratio(&self, mv: EdgeMove, current_moves: usize) -> (f64, Vec<u64>) {
        let next = self.applied(mv);
        let next_moves = self.moves_of(&next).len();
        let r = self.score_delta(mv, &next) + (current_moves as f64).ln() - (next_moves as f64).ln();
        (r, next)
    }

    /// Log acceptance probability of `mv` from the current state.
    pub fn log_acceptance(&self, mv: EdgeMove) -> f64 {
        self.log_ratio(mv, self.moves().len()).0.min(0.0)
    }

    /// Applies `mv` unconditionally.
    pub fn apply(&mut self, mv: EdgeMove) {
        let next = self.applied(mv);
        for v in 0..next.len() {
            if next[v] != self.parents[v] {
                self.family[v] = self.cache.family(v, next[v]);
            }
        }
        self.parents = next;
    }

    /// One proposal and accept/reject step. Returns whether the move was taken.
    pub fn step(&mut self, rng: &mut Rng) -> bool {
        let moves = self.moves();
        if moves.is_empty() {
            return false;
        }
        let mv = moves[rng.random_range(0..moves.len())];
        let (r, next) = self.log_ratio(mv, moves.len());
        if r >= 0.0 || rng.random::<f64>().ln() < r {
            for v in 0..next.len() {
                if next[v] != self.parents[v] {
                    self.family[v] = self.cache.family(v, next[v]);
                }
            }
            self.parents = next;
            true
        } else {
            false
        }
    }
}

/// Runs `config.chains` independent chains from the empty graph and returns
/// their thinned post-burn-in states, concatenated in chain order.
pub fn structure_mcmc(data: &Dataset, ess: f64, config: &McmcConfig) -> Result<DagSample> {
    let n = data.n_vars();
    config.validate(n)?;
    let cache = ScoreCache::new(data, ess)?;
    let per_chain: Vec<Vec<Dag>> = (0..config.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(config.seed, c as u64);
            let mut chain = EdgeMoveChain::new(&cache, config.max_parents, config.skeleton.as_ref());
            let mut out = Vec::with_capacity((config.iters - config.burnin) / config.thin + 1);
            for it in 0..config.iters {
                chain.step(&mut rng);
                if it >= config.burnin && (it - config.burnin).is_multiple_of(config.thin) {
                    out.push(chain.dag());
                }
            }
            out
        })
        .collect();
    DagSample::from_draws(per_chain.into_iter().flatten().collect())
}
