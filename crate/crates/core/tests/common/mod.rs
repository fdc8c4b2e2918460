//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's graph algorithms; everything is brute force.

#![allow(dead_code)]

use std::collections::BTreeSet;

use bida::rng::{self, Rng};
use bida::{CptNetwork, Dag, Dataset, Ipt};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma};

/// Random DAG: shuffled order, each forward pair an edge with probability `p`.
pub fn random_dag(n: usize, p: f64, rng: &mut Rng) -> Dag {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p {
                edges.push((order[a], order[b]));
            }
        }
    }
    Dag::from_edges(n, &edges).unwrap()
}

fn children(dag: &Dag) -> Vec<Vec<usize>> {
    let mut ch = vec![Vec::new(); dag.n()];
    for v in 0..dag.n() {
        for &p in dag.parents(v) {
            ch[p].push(v);
        }
    }
    ch
}

/// `out[v]` is true when `v` is reachable from `from` by a directed path of
/// length zero or more.
pub fn reachable(dag: &Dag, from: usize) -> Vec<bool> {
    let ch = children(dag);
    let mut seen = vec![false; dag.n()];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if !seen[v] {
            seen[v] = true;
            stack.extend(&ch[v]);
        }
    }
    seen
}

pub fn directed_path(dag: &Dag, from: usize, to: usize) -> bool {
    from != to && reachable(dag, from)[to]
}

/// Every simple path between `a` and `b` in the skeleton.
pub fn simple_paths(dag: &Dag, a: usize, b: usize) -> Vec<Vec<usize>> {
    let n = dag.n();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|v| (0..n).filter(|&w| dag.has_edge(v, w) || dag.has_edge(w, v)).collect())
        .collect();
    let mut out = Vec::new();
    let mut path = vec![a];
    let mut on = vec![false; n];
    on[a] = true;
    fn go(adj: &[Vec<usize>], b: usize, path: &mut Vec<usize>, on: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == b {
            out.push(path.clone());
            return;
        }
        for &w in &adj[v] {
            if !on[w] {
                on[w] = true;
                path.push(w);
                go(adj, b, path, on, out);
                path.pop();
                on[w] = false;
            }
        }
    }
    go(&adj, b, &mut path, &mut on, &mut out);
    out
}

/// Path blocking by `z`: a non-collider in `z`, or a collider with neither it
/// nor a descendant in `z`.
pub fn path_blocked(dag: &Dag, path: &[usize], z: &[usize]) -> bool {
    for k in 1..path.len() - 1 {
        let (u, v, w) = (path[k - 1], path[k], path[k + 1]);
        let collider = dag.has_edge(u, v) && dag.has_edge(w, v);
        if collider {
            let de = reachable(dag, v);
            if !z.iter().any(|&s| de[s]) {
                return true;
            }
        } else if z.contains(&v) {
            return true;
        }
    }
    false
}

pub fn d_separated(dag: &Dag, x: usize, y: usize, z: &[usize]) -> bool {
    simple_paths(dag, x, y).iter().all(|p| path_blocked(dag, p, z))
}

/// Backdoor criterion for `z` relative to `(i, j)`: no descendant of `i` in
/// `z` and every path from `i` to `j` that starts with an edge into `i`
/// blocked.
pub fn backdoor_valid(dag: &Dag, i: usize, j: usize, z: &[usize]) -> bool {
    let de = reachable(dag, i);
    if z.iter().any(|&s| s == i || s == j || de[s]) {
        return false;
    }
    simple_paths(dag, i, j)
        .iter()
        .filter(|p| dag.has_edge(p[1], i))
        .all(|p| path_blocked(dag, p, z))
}

/// Skeleton plus unshielded colliders.
pub type EquivalenceKey = (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize, usize)>);

/// Two DAGs are Markov equivalent iff their keys are equal.
pub fn equivalence_key(dag: &Dag) -> EquivalenceKey {
    let n = dag.n();
    let adj = |a: usize, b: usize| dag.has_edge(a, b) || dag.has_edge(b, a);
    let skeleton = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| adj(a, b))
        .collect();
    let mut colliders = BTreeSet::new();
    for v in 0..n {
        for &a in dag.parents(v) {
            for &b in dag.parents(v) {
                if a < b && !adj(a, b) {
                    colliders.insert((a, v, b));
                }
            }
        }
    }
    (skeleton, colliders)
}

/// Mutual information between cause and effect when the cause is set
/// uniformly at random and the effect follows the IPT rows.
pub fn uniform_intervention_mi(ipt: &Ipt) -> f64 {
    let (rx, ry) = (ipt.r_cause(), ipt.r_effect());
    let w = 1.0 / rx as f64;
    let py: Vec<f64> = (0..ry).map(|y| (0..rx).map(|x| w * ipt.get(x, y)).sum()).collect();
    let mut mi = 0.0;
    for x in 0..rx {
        for y in 0..ry {
            let p = ipt.get(x, y);
            if p > 0.0 {
                mi += w * p * (p / py[y]).ln();
            }
        }
    }
    mi
}

/// Dirichlet draw by normalizing Gamma variates.
pub fn dirichlet(alpha: &[f64], rng: &mut Rng) -> Vec<f64> {
    let g: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).unwrap().sample(rng))
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Exact IPT by marginalizing the joint table of the mutilated network.
pub fn joint_intervention(net: &CptNetwork, cause: usize, effect: usize) -> Ipt {
    let cards = net.cards();
    let n = net.n();
    let (rx, ry) = (cards[cause], cards[effect]);
    let total: usize = cards.iter().product();
    let mut rows = vec![0.0; rx * ry];
    for x in 0..rx {
        for idx in 0..total {
            let mut rest = idx;
            let state: Vec<usize> = cards
                .iter()
                .map(|&r| {
                    let s = rest % r;
                    rest /= r;
                    s
                })
                .collect();
            if state[cause] != x {
                continue;
            }
            let mut p = 1.0;
            for v in (0..n).filter(|&v| v != cause) {
                let mut row = 0;
                let mut stride = 1;
                for &q in net.dag().parents(v) {
                    row += state[q] * stride;
                    stride *= cards[q];
                }
                p *= net.cpt(v)[row * cards[v] + state[v]];
            }
            rows[x * ry + state[effect]] += p;
        }
    }
    Ipt::new(rx, ry, rows).unwrap()
}

pub fn empty_dataset(cards: Vec<usize>) -> Dataset {
    let n = cards.len();
    Dataset::new(cards, vec![Vec::new(); n]).unwrap()
}

pub fn rng(seed: u64) -> Rng {
    rng::seeded(seed)
}
