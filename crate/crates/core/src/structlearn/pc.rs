//! Order-independent ("stable") PC algorithm with G² tests.

use std::collections::{BTreeSet, HashMap};

use crate::data::Dataset;
use crate::error::Result;
use crate::graph::Pdag;
use crate::scoring::g2_ci_test;

/// Skeleton found by the adjacency phase, with the separating set recorded
/// for every removed pair `(a, b)`, `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub graph: Pdag,
    pub sepsets: HashMap<(usize, usize), Vec<usize>>,
}

fn combinations(items: &[usize], k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    let n = items.len();
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![0; k];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = items[i];
        }
        if f(&buf) {
            return;
        }
        // Advance to the next index combination.
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if idx[pos] < n - k + pos {
                break;
            }
            if pos == 0 {
                return;
            }
        }
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Adjacency phase. Conditioning sets at level `l` are drawn from the
/// neighbourhoods frozen at the start of that level.
pub fn pc_skeleton(data: &Dataset, alpha: f64, max_cond_size: usize) -> Result<Skeleton> {
    let n = data.n_vars();
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| (0..n).filter(|&w| w != v).collect()).collect();
    let mut sepsets = HashMap::new();
    for level in 0..=max_cond_size {
        let frozen = adj.clone();
        let mut tested = false;
        for x in 0..n {
            for &y in &frozen[x] {
                if !adj[x].contains(&y) {
                    continue;
                }
                let cand: Vec<usize> = frozen[x].iter().copied().filter(|&v| v != y).collect();
                if cand.len() < level {
                    continue;
                }
                tested = true;
                let mut found: Option<Vec<usize>> = None;
                let mut err = None;
                combinations(&cand, level, |s| match g2_ci_test(data, x, y, s, alpha) {
                    Ok(t) if t.independent => {
                        found = Some(s.to_vec());
                        true
                    }
                    Ok(_) => false,
                    Err(e) => {
                        err = Some(e);
                        true
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
                if let Some(s) = found {
                    adj[x].remove(&y);
                    adj[y].remove(&x);
                    sepsets.insert((x.min(y), x.max(y)), s);
                }
            }
        }
        if !tested {
            break;
        }
    }
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| adj[a].iter().copied().filter(move |&b| a < b).map(move |b| (a, b)))
        .collect();
    Ok(Skeleton {
        graph: Pdag::new(n, &[], &edges)?,
        sepsets,
    })
}

/// Stable PC: skeleton, v-structures from separating sets, then Meek's
/// rules. Conflicting collider orientations keep the first orientation in
/// node order; the result may not be a valid CPDAG on finite data.
pub fn pc_cpdag(data: &Dataset, alpha: f64, max_cond_size: usize) -> Result<Pdag> {
    let Skeleton { graph, sepsets } = pc_skeleton(data, alpha, max_cond_size)?;
    let n = graph.n();
    let skeleton = graph.clone();
    let mut pdag = graph;
    for z in 0..n {
        let nb = skeleton.neighbors(z);
        for (k, &x) in nb.iter().enumerate() {
            for &y in &nb[k + 1..] {
                if skeleton.adjacent(x, y) {
                    continue;
                }
                let in_sep = sepsets.get(&(x, y)).is_some_and(|s| s.contains(&z));
                if !in_sep {
                    pdag.orient(x, z);
                    pdag.orient(y, z);
                }
            }
        }
    }
    pdag.apply_meek_rules();
    Ok(pdag)
}
