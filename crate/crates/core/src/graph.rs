//! Directed and partially directed graphs over variable indices, together with
//! the graph algorithms used to identify backdoor adjustment sets.
//!
//! Nodes are `0..n`. A [`Dag`] stores a sorted parent list per node; a [`Pdag`]
//! stores directed edges as ordered pairs and undirected edges as pairs `(a, b)`
//! with `a < b`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DagRepr", into = "DagRepr")]
pub struct Dag {
    n: usize,
    parents: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct DagRepr {
    n: usize,
    parents: Vec<Vec<usize>>,
}

impl TryFrom<DagRepr> for Dag {
    type Error = Error;

    fn try_from(repr: DagRepr) -> Result<Self> {
        if repr.parents.len() != repr.n {
            return Err(Error::InvalidGraph(format!(
                "expected {} parent lists, found {}",
                repr.n,
                repr.parents.len()
            )));
        }
        Dag::new(repr.parents)
    }
}

impl From<Dag> for DagRepr {
    fn from(dag: Dag) -> Self {
        DagRepr {
            n: dag.n,
            parents: dag.parents,
        }
    }
}

impl Dag {
    /// Builds a DAG from per-node parent lists. Lists are sorted and must be
    /// duplicate-free, in range, free of self-loops and acyclic.
    pub fn new(mut parents: Vec<Vec<usize>>) -> Result<Self> {
        let n = parents.len();
        for (v, pa) in parents.iter_mut().enumerate() {
            pa.sort_unstable();
            for w in pa.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::InvalidGraph(format!("duplicate parent {} of {v}", w[0])));
                }
            }
            for &p in pa.iter() {
                if p >= n {
                    return Err(Error::NodeOutOfRange { node: p, n });
                }
                if p == v {
                    return Err(Error::InvalidGraph(format!("self-loop at {v}")));
                }
            }
        }
        let dag = Dag { n, parents };
        if dag.topological_order().is_none() {
            return Err(Error::InvalidGraph("graph contains a directed cycle".into()));
        }
        Ok(dag)
    }

    pub fn empty(n: usize) -> Self {
        Dag {
            n,
            parents: vec![Vec::new(); n],
        }
    }

    /// Builds a DAG from a list of directed edges `(from, to)`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![Vec::new(); n];
        for &(a, b) in edges {
            if b >= n {
                return Err(Error::NodeOutOfRange { node: b, n });
            }
            parents[b].push(a);
        }
        Dag::new(parents)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dag serialization is infallible")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn parent_lists(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].binary_search(&from).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(v, pa)| pa.iter().map(move |&p| (p, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.n];
        for (p, v) in self.edges() {
            ch[p].push(v);
        }
        for c in &mut ch {
            c.sort_unstable();
        }
        ch
    }

    /// Kahn's algorithm; `None` if the parent lists contain a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let children = self.children();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..self.n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.n {
            Err(Error::NodeOutOfRange { node: v, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Nodes reachable from `starts` along parent links, or along child links
    /// when `children` is given. Start nodes are only marked if re-reached.
    fn reach(&self, starts: &[usize], children: Option<&[Vec<usize>]>) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack: Vec<usize> = starts.to_vec();
        while let Some(v) = stack.pop() {
            let next: &[usize] = match children {
                Some(ch) => &ch[v],
                None => &self.parents[v],
            };
            for &w in next {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    fn ancestor_mask(&self, v: usize) -> Vec<bool> {
        self.reach(&[v], None)
    }

    fn descendant_mask(&self, v: usize) -> Vec<bool> {
        let ch = self.children();
        self.reach(&[v], Some(&ch))
    }

    /// Strict ancestors and strict descendants of `v`.
    pub fn ancestors_and_descendants(&self, v: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        self.check_node(v)?;
        Ok((mask_to_vec(&self.ancestor_mask(v)), mask_to_vec(&self.descendant_mask(v))))
    }

    pub fn has_directed_path(&self, from: usize, to: usize) -> bool {
        from != to && self.descendant_mask(from)[to]
    }

    /// The graph with every edge out of `v` removed.
    pub fn backdoor_graph(&self, v: usize) -> Dag {
        let parents = self
            .parents
            .iter()
            .map(|pa| pa.iter().copied().filter(|&p| p != v).collect())
            .collect();
        Dag { n: self.n, parents }
    }

    /// Whether `z` d-separates `x` and `y`, decided by reachability in the
    /// moralized graph of the ancestral set of `{x, y} ∪ z`.
    pub fn d_separated(&self, x: usize, y: usize, z: &[usize]) -> Result<bool> {
        self.check_node(x)?;
        self.check_node(y)?;
        for &v in z {
            self.check_node(v)?;
        }
        if x == y {
            return Err(Error::Overlap(format!("x and y are both {x}")));
        }
        if z.contains(&x) || z.contains(&y) {
            return Err(Error::Overlap("conditioning set contains x or y".into()));
        }
        Ok(self.d_separated_unchecked(x, y, z))
    }

    fn d_separated_unchecked(&self, x: usize, y: usize, z: &[usize]) -> bool {
        let mut starts = vec![x, y];
        starts.extend_from_slice(z);
        let mut in_anc = self.reach(&starts, None);
        for &s in &starts {
            in_anc[s] = true;
        }

        let mut adj = vec![Vec::new(); self.n];
        for v in (0..self.n).filter(|&v| in_anc[v]) {
            let pa = &self.parents[v];
            for (k, &p) in pa.iter().enumerate() {
                adj[v].push(p);
                adj[p].push(v);
                for &q in &pa[k + 1..] {
                    adj[p].push(q);
                    adj[q].push(p);
                }
            }
        }

        let mut blocked = vec![false; self.n];
        for &v in z {
            blocked[v] = true;
        }
        let mut seen = vec![false; self.n];
        seen[x] = true;
        let mut stack = vec![x];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if w == y {
                    return false;
                }
                if !seen[w] && !blocked[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        true
    }

    /// Pearl's backdoor criterion for the effect of `i` on `j`. A set that
    /// contains `j` encodes "no effect" and is valid exactly when there is no
    /// directed path from `i` to `j`.
    pub fn is_valid_adjustment(&self, i: usize, j: usize, z: &[usize]) -> Result<bool> {
        self.check_node(i)?;
        self.check_node(j)?;
        for &v in z {
            self.check_node(v)?;
        }
        if i == j {
            return Err(Error::SamePair(i));
        }
        if z.contains(&i) {
            return Err(Error::Overlap(format!("adjustment set contains cause {i}")));
        }
        let desc = self.descendant_mask(i);
        if z.contains(&j) {
            return Ok(!desc[j]);
        }
        if z.iter().any(|&v| desc[v]) {
            return Ok(false);
        }
        Ok(self.backdoor_graph(i).d_separated_unchecked(i, j, z))
    }

    /// The adjustment set of the requested class for the pair `(i, j)`.
    pub fn adjustment_set(&self, i: usize, j: usize, kind: AdjustmentKind) -> Result<AdjustmentSet> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(Error::SamePair(i));
        }
        if kind == AdjustmentKind::Parent {
            return Ok(if self.has_edge(j, i) {
                AdjustmentSet::sentinel(kind, j)
            } else {
                AdjustmentSet::new(kind, self.parents[i].clone())
            });
        }

        let desc_i = self.descendant_mask(i);
        if !desc_i[j] {
            return Ok(AdjustmentSet::sentinel(kind, j));
        }
        let full = match kind {
            AdjustmentKind::MinimalParent => self.parents[i].clone(),
            _ => self.o_set(i, j, &desc_i),
        };
        let nodes = match kind {
            AdjustmentKind::MinimalParent | AdjustmentKind::MinimalOSet => {
                self.backdoor_graph(i).prune_separator(i, j, full)
            }
            _ => full,
        };
        Ok(AdjustmentSet::new(kind, nodes))
    }

    /// Parents of the nodes on causal paths from `i` to `j`, minus `i` and
    /// the descendants of those nodes.
    fn o_set(&self, i: usize, j: usize, desc_i: &[bool]) -> Vec<usize> {
        let mut anc_j = self.ancestor_mask(j);
        anc_j[j] = true;
        let causal: Vec<usize> = (0..self.n).filter(|&v| desc_i[v] && anc_j[v]).collect();
        let ch = self.children();
        let mut forbidden = self.reach(&causal, Some(&ch));
        for &c in &causal {
            forbidden[c] = true;
        }
        forbidden[i] = true;
        let mut pa = vec![false; self.n];
        for &c in &causal {
            for &p in &self.parents[c] {
                pa[p] = true;
            }
        }
        (0..self.n).filter(|&v| pa[v] && !forbidden[v]).collect()
    }

    /// Shrinks a separator of `x` and `y` by repeatedly dropping the
    /// highest-indexed node whose removal keeps the set separating.
    fn prune_separator(&self, x: usize, y: usize, mut set: Vec<usize>) -> Vec<usize> {
        loop {
            let removable = (0..set.len()).rev().find(|&k| {
                let mut trial = set.clone();
                trial.remove(k);
                self.d_separated_unchecked(x, y, &trial)
            });
            match removable {
                Some(k) => {
                    set.remove(k);
                }
                None => return set,
            }
        }
    }

    /// The completed partially directed graph of this DAG's Markov
    /// equivalence class.
    pub fn cpdag(&self) -> Pdag {
        let mut pdag = Pdag::empty(self.n);
        for (a, b) in self.edges() {
            pdag.undirected.insert(ordered(a, b));
        }
        for v in 0..self.n {
            let pa = &self.parents[v];
            for (k, &a) in pa.iter().enumerate() {
                for &b in &pa[k + 1..] {
                    if !self.has_edge(a, b) && !self.has_edge(b, a) {
                        pdag.orient(a, v);
                        pdag.orient(b, v);
                    }
                }
            }
        }
        pdag.apply_meek_rules();
        pdag
    }
}

fn mask_to_vec(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(v, &m)| m.then_some(v))
        .collect()
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AdjustmentKind {
    #[serde(rename = "pa")]
    Parent,
    #[serde(rename = "pa-min")]
    MinimalParent,
    #[serde(rename = "o")]
    OSet,
    #[serde(rename = "o-min")]
    MinimalOSet,
}

impl AdjustmentKind {
    pub const ALL: [AdjustmentKind; 4] = [
        AdjustmentKind::Parent,
        AdjustmentKind::MinimalParent,
        AdjustmentKind::OSet,
        AdjustmentKind::MinimalOSet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AdjustmentKind::Parent => "pa",
            AdjustmentKind::MinimalParent => "pa-min",
            AdjustmentKind::OSet => "o",
            AdjustmentKind::MinimalOSet => "o-min",
        }
    }

    pub fn is_minimal(self) -> bool {
        matches!(self, AdjustmentKind::MinimalParent | AdjustmentKind::MinimalOSet)
    }
}

impl fmt::Display for AdjustmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdjustmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AdjustmentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown adjustment kind `{s}`")))
    }
}

/// A backdoor adjustment set. When `contains_effect` is set the set is the
/// sentinel `{j}`, meaning interventions on the cause leave the effect at
/// its marginal distribution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdjustmentSet {
    pub kind: AdjustmentKind,
    pub nodes: Vec<usize>,
    pub contains_effect: bool,
}

impl AdjustmentSet {
    pub fn new(kind: AdjustmentKind, mut nodes: Vec<usize>) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        AdjustmentSet {
            kind,
            nodes,
            contains_effect: false,
        }
    }

    pub fn sentinel(kind: AdjustmentKind, effect: usize) -> Self {
        AdjustmentSet {
            kind,
            nodes: vec![effect],
            contains_effect: true,
        }
    }
}

impl fmt::Display for AdjustmentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.contains_effect {
            return write!(f, "{{{}}}*", self.nodes[0]);
        }
        let items: Vec<String> = self.nodes.iter().map(usize::to_string).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// Partially directed graph, as produced by constraint-based learning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PdagRepr", into = "PdagRepr")]
pub struct Pdag {
    n: usize,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct PdagRepr {
    n: usize,
    #[serde(default)]
    directed: Vec<(usize, usize)>,
    #[serde(default)]
    undirected: Vec<(usize, usize)>,
}

impl TryFrom<PdagRepr> for Pdag {
    type Error = Error;

    fn try_from(repr: PdagRepr) -> Result<Self> {
        Pdag::new(repr.n, &repr.directed, &repr.undirected)
    }
}

impl From<Pdag> for PdagRepr {
    fn from(p: Pdag) -> Self {
        PdagRepr {
            n: p.n,
            directed: p.directed.into_iter().collect(),
            undirected: p.undirected.into_iter().collect(),
        }
    }
}

impl From<&Dag> for Pdag {
    fn from(dag: &Dag) -> Self {
        Pdag {
            n: dag.n,
            directed: dag.edges().collect(),
            undirected: BTreeSet::new(),
        }
    }
}

impl Pdag {
    pub fn new(n: usize, directed: &[(usize, usize)], undirected: &[(usize, usize)]) -> Result<Self> {
        let mut pdag = Pdag::empty(n);
        for &(a, b) in directed.iter().chain(undirected) {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::NodeOutOfRange { node: v, n });
                }
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at {a}")));
            }
        }
        for &(a, b) in directed {
            if pdag.directed.contains(&(b, a)) {
                return Err(Error::InvalidGraph(format!("edge {a}-{b} directed both ways")));
            }
            pdag.directed.insert((a, b));
        }
        for &(a, b) in undirected {
            if pdag.directed.contains(&(a, b)) || pdag.directed.contains(&(b, a)) {
                return Err(Error::InvalidGraph(format!("edge {a}-{b} both directed and undirected")));
            }
            pdag.undirected.insert(ordered(a, b));
        }
        Ok(pdag)
    }

    pub fn empty(n: usize) -> Self {
        Pdag {
            n,
            directed: BTreeSet::new(),
            undirected: BTreeSet::new(),
        }
    }

    /// Complete undirected graph.
    pub fn complete(n: usize) -> Self {
        let mut p = Pdag::empty(n);
        for a in 0..n {
            for b in a + 1..n {
                p.undirected.insert((a, b));
            }
        }
        p
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pdag serialization is infallible")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.directed.iter().copied()
    }

    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.undirected.iter().copied()
    }

    pub fn is_directed(&self, a: usize, b: usize) -> bool {
        self.directed.contains(&(a, b))
    }

    pub fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&ordered(a, b))
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.is_undirected(a, b) || self.is_directed(a, b) || self.is_directed(b, a)
    }

    /// Unordered adjacency pairs `(a, b)` with `a < b`.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.directed
            .iter()
            .map(|&(a, b)| ordered(a, b))
            .chain(self.undirected.iter().copied())
            .collect()
    }

    /// Nodes with a directed edge into `v`.
    pub fn parents(&self, v: usize) -> Vec<usize> {
        self.directed.iter().filter(|e| e.1 == v).map(|e| e.0).collect()
    }

    /// Nodes joined to `v` by an undirected edge.
    pub fn siblings(&self, v: usize) -> Vec<usize> {
        self.undirected
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.n).filter(|&w| w != v && self.adjacent(v, w)).collect()
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.undirected.remove(&ordered(a, b));
        self.directed.remove(&(a, b));
        self.directed.remove(&(b, a));
    }

    /// Turns the undirected edge `a - b` into `a -> b`. Returns false when the
    /// edge is missing or already directed.
    pub fn orient(&mut self, a: usize, b: usize) -> bool {
        if self.undirected.remove(&ordered(a, b)) {
            self.directed.insert((a, b));
            true
        } else {
            false
        }
    }

    /// Applies Meek's orientation rules 1-4 until no rule fires.
    pub fn apply_meek_rules(&mut self) {
        loop {
            let mut changed = false;
            let undirected: Vec<(usize, usize)> = self.undirected.iter().copied().collect();
            for (u, v) in undirected {
                for (a, b) in [(u, v), (v, u)] {
                    if self.is_undirected(a, b) && self.meek_orients(a, b) {
                        self.orient(a, b);
                        changed = true;
                    }
                }
            }
            if !changed {
                return;
            }
        }
    }

    /// Whether one of Meek's rules forces the undirected edge `a - b` to `a -> b`.
    fn meek_orients(&self, a: usize, b: usize) -> bool {
        let n = self.n;
        // R1: c -> a - b, c and b nonadjacent.
        if (0..n).any(|c| self.is_directed(c, a) && c != b && !self.adjacent(c, b)) {
            return true;
        }
        // R2: a -> c -> b.
        if (0..n).any(|c| self.is_directed(a, c) && self.is_directed(c, b)) {
            return true;
        }
        // R3: a - c -> b, a - d -> b, c and d nonadjacent.
        let mids: Vec<usize> = (0..n)
            .filter(|&c| self.is_undirected(a, c) && self.is_directed(c, b))
            .collect();
        for (k, &c) in mids.iter().enumerate() {
            if mids[k + 1..].iter().any(|&d| !self.adjacent(c, d)) {
                return true;
            }
        }
        // R4: a - c -> d -> b with a adjacent to d, c and b nonadjacent.
        for c in (0..n).filter(|&c| c != b && self.is_undirected(a, c) && !self.adjacent(c, b)) {
            if (0..n).any(|d| self.is_directed(c, d) && self.is_directed(d, b) && self.adjacent(a, d)) {
                return true;
            }
        }
        false
    }

    /// Unshielded colliders `(a, c, b)` with `a < b` formed by directed edges.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for c in 0..self.n {
            let pa = self.parents(c);
            for (k, &a) in pa.iter().enumerate() {
                for &b in &pa[k + 1..] {
                    if !self.adjacent(a, b) {
                        out.insert((a.min(b), c, a.max(b)));
                    }
                }
            }
        }
        out
    }

    /// Enumerates every DAG that keeps the directed edges, orients each
    /// undirected edge, and has exactly the v-structures of this graph.
    pub fn consistent_extensions(&self, cap: usize) -> Result<Vec<Dag>> {
        let undirected: Vec<(usize, usize)> = self.undirected.iter().copied().collect();
        let mut parents = vec![Vec::new(); self.n];
        for &(a, b) in &self.directed {
            parents[b].push(a);
        }
        if Dag::new(parents.clone()).is_err() {
            return Err(Error::NotExtendable);
        }
        let target = self.v_structures();
        let mut out = Vec::new();
        let mut ext = ExtensionSearch {
            pdag: self,
            undirected: &undirected,
            target: &target,
            cap,
            out: &mut out,
        };
        ext.search(0, &mut parents)?;
        if out.is_empty() {
            return Err(Error::NotExtendable);
        }
        Ok(out)
    }
}

struct ExtensionSearch<'a> {
    pdag: &'a Pdag,
    undirected: &'a [(usize, usize)],
    target: &'a BTreeSet<(usize, usize, usize)>,
    cap: usize,
    out: &'a mut Vec<Dag>,
}

impl ExtensionSearch<'_> {
    fn search(&mut self, k: usize, parents: &mut Vec<Vec<usize>>) -> Result<()> {
        if k == self.undirected.len() {
            if let Ok(dag) = Dag::new(parents.clone()) {
                if (0..dag.n()).all(|c| self.partial_ok(dag.parent_lists(), c)) {
                    if self.out.len() == self.cap {
                        return Err(Error::TooManyExtensions { cap: self.cap });
                    }
                    self.out.push(dag);
                }
            }
            return Ok(());
        }
        let (u, v) = self.undirected[k];
        for (a, b) in [(u, v), (v, u)] {
            parents[b].push(a);
            if !creates_cycle(parents, a, b) && self.partial_ok(parents, b) {
                self.search(k + 1, parents)?;
            }
            parents[b].pop();
        }
        Ok(())
    }

    /// No unshielded collider at `c` among current parents that is absent
    /// from the target set.
    fn partial_ok(&self, parents: &[Vec<usize>], c: usize) -> bool {
        let pa = &parents[c];
        for (k, &a) in pa.iter().enumerate() {
            for &b in &pa[k + 1..] {
                if !self.pdag.adjacent(a, b) && !self.target.contains(&(a.min(b), c, a.max(b))) {
                    return false;
                }
            }
        }
        true
    }
}

/// Whether the edge `a -> b`, already present in `parents`, closes a cycle.
fn creates_cycle(parents: &[Vec<usize>], a: usize, b: usize) -> bool {
    // Cycle iff `b` is an ancestor of `a`.
    let mut seen = vec![false; parents.len()];
    let mut stack = vec![a];
    while let Some(v) = stack.pop() {
        for &p in &parents[v] {
            if p == b {
                return true;
            }
            if !seen[p] {
                seen[p] = true;
                stack.push(p);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Toy DAG with edges 0->1, 1->2, 0->2, 3->2.
    fn toy() -> Dag {
        Dag::from_edges(4, &[(0, 1), (1, 2), (0, 2), (3, 2)]).unwrap()
    }

    #[test]
    fn rejects_cycles_and_self_loops() {
        assert!(Dag::from_edges(2, &[(0, 1), (1, 0)]).is_err());
        assert!(Dag::from_edges(2, &[(1, 1)]).is_err());
        assert!(Dag::new(vec![vec![1, 1], vec![]]).is_err());
        assert!(Dag::new(vec![vec![5]]).is_err());
    }

    #[test]
    fn ancestors_and_descendants_examples() {
        let chain = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(chain.ancestors_and_descendants(1).unwrap(), (vec![0], vec![2]));
        let empty = Dag::empty(3);
        assert_eq!(empty.ancestors_and_descendants(2).unwrap(), (vec![], vec![]));
        assert_eq!(toy().ancestors_and_descendants(0).unwrap(), (vec![], vec![1, 2]));
        assert!(toy().ancestors_and_descendants(4).is_err());
    }

    #[test]
    fn d_separation_examples() {
        let collider = Dag::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        assert!(collider.d_separated(0, 1, &[]).unwrap());
        assert!(!collider.d_separated(0, 1, &[2]).unwrap());
        let chain = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(chain.d_separated(0, 2, &[1]).unwrap());
        assert!(!chain.d_separated(0, 2, &[]).unwrap());
        assert!(chain.d_separated(0, 0, &[]).is_err());
        assert!(chain.d_separated(0, 2, &[0]).is_err());
    }

    #[test]
    fn collider_descendant_opens_path() {
        let g = Dag::from_edges(4, &[(0, 2), (1, 2), (2, 3)]).unwrap();
        assert!(!g.d_separated(0, 1, &[3]).unwrap());
    }

    #[test]
    fn valid_adjustment_examples() {
        let g = toy();
        assert!(g.is_valid_adjustment(0, 2, &[]).unwrap());
        assert!(!g.is_valid_adjustment(0, 2, &[1]).unwrap());
        assert!(g.is_valid_adjustment(1, 2, &[0]).unwrap());
        assert!(!g.is_valid_adjustment(1, 2, &[]).unwrap());
        assert!(g.is_valid_adjustment(2, 0, &[0]).unwrap());
        assert!(g.is_valid_adjustment(0, 1, &[1]).is_ok_and(|v| !v));
        assert!(g.is_valid_adjustment(0, 0, &[]).is_err());
        assert!(g.is_valid_adjustment(0, 2, &[0]).is_err());
    }

    #[test]
    fn adjustment_set_examples() {
        use AdjustmentKind::*;
        let g = toy();
        let get = |i, j, k| g.adjustment_set(i, j, k).unwrap();
        assert_eq!(get(0, 2, Parent).nodes, Vec::<usize>::new());
        assert_eq!(get(0, 2, OSet).nodes, vec![3]);
        assert_eq!(get(0, 2, MinimalOSet).nodes, Vec::<usize>::new());
        assert_eq!(get(0, 2, MinimalParent).nodes, Vec::<usize>::new());

        assert_eq!(get(1, 2, Parent).nodes, vec![0]);
        assert_eq!(get(1, 2, OSet).nodes, vec![0, 3]);
        assert_eq!(get(1, 2, MinimalOSet).nodes, vec![0]);
        assert_eq!(get(1, 2, MinimalParent).nodes, vec![0]);

        for kind in [MinimalParent, OSet, MinimalOSet] {
            let s = get(2, 0, kind);
            assert!(s.contains_effect);
            assert_eq!(s.nodes, vec![0]);
        }
        // Parent class keeps pa(i) when j is not a parent.
        assert_eq!(get(1, 3, Parent).nodes, vec![0]);
        assert_eq!(get(2, 0, Parent).nodes, vec![0]);
        let s = get(1, 0, Parent);
        assert!(s.contains_effect);
        assert!(g.adjustment_set(1, 1, Parent).is_err());
    }

    #[test]
    fn kind_round_trips_through_str() {
        for k in AdjustmentKind::ALL {
            assert_eq!(k.as_str().parse::<AdjustmentKind>().unwrap(), k);
        }
        assert!("x".parse::<AdjustmentKind>().is_err());
    }

    #[test]
    fn json_formats() {
        let g = toy();
        let s = g.to_json();
        assert_eq!(s, r#"{"n":4,"parents":[[],[0],[0,1,3],[]]}"#);
        assert_eq!(Dag::from_json(&s).unwrap(), g);
        assert!(Dag::from_json(r#"{"n":2,"parents":[[1],[0]]}"#).is_err());
        assert!(Dag::from_json(r#"{"n":3,"parents":[[]]}"#).is_err());

        let p = g.cpdag();
        assert_eq!(Pdag::from_json(&p.to_json()).unwrap(), p);
        assert!(Pdag::from_json(r#"{"n":2,"directed":[[0,1]],"undirected":[[0,1]]}"#).is_err());
    }

    #[test]
    fn cpdag_of_toy_leaves_first_edge_undirected() {
        let p = toy().cpdag();
        assert!(p.is_undirected(0, 1));
        assert!(p.is_directed(0, 2));
        assert!(p.is_directed(1, 2));
        assert!(p.is_directed(3, 2));
        let chain = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap().cpdag();
        assert_eq!(chain.directed_edges().count(), 0);
        assert_eq!(chain.undirected_edges().count(), 2);
    }

    #[test]
    fn extensions_of_toy_cpdag() {
        let ext = toy().cpdag().consistent_extensions(100).unwrap();
        assert_eq!(ext.len(), 2);
        assert!(ext.contains(&toy()));
        let chain = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap().cpdag();
        // 0->1->2, 0<-1<-2, 0<-1->2
        assert_eq!(chain.consistent_extensions(100).unwrap().len(), 3);
        assert!(matches!(
            chain.consistent_extensions(2),
            Err(Error::TooManyExtensions { cap: 2 })
        ));
    }

    #[test]
    fn non_extendable_pdag_is_reported() {
        // Directed cycle among directed edges.
        let p = Pdag::new(3, &[(0, 1), (1, 2), (2, 0)], &[]).unwrap();
        assert!(matches!(p.consistent_extensions(10), Err(Error::NotExtendable)));
        // 2 -> 1 would create the new collider 0 -> 1 <- 2.
        let p = Pdag::new(3, &[(0, 1)], &[(1, 2)]).unwrap();
        assert_eq!(p.consistent_extensions(10).unwrap().len(), 1);
    }
}
