//! Simple undirected graphs on dense vertex ids `0..n`, bipartite pairs, the
//! graph algebra used throughout the pipeline, and seeded `G(n,p)` sampling.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

pub type Vertex = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("graphs live on different vertex sets ({0} vs {1} vertices)")]
    VertexCountMismatch(usize, usize),
    #[error("vertex {0} is out of range for a graph on {1} vertices")]
    VertexOutOfRange(Vertex, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(Vertex, Vertex),
    #[error("vertex sets overlap in vertex {0}")]
    OverlappingSets(Vertex),
    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An undirected edge stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub u: Vertex,
    pub v: Vertex,
}

impl Edge {
    pub fn new(a: Vertex, b: Vertex) -> Result<Self, GraphError> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Edge { u: a, v: b }),
            std::cmp::Ordering::Greater => Ok(Edge { u: b, v: a }),
            std::cmp::Ordering::Equal => Err(GraphError::SelfLoop(a)),
        }
    }

    /// Canonical edge for two vertices already known to be distinct.
    #[inline]
    pub fn of(a: Vertex, b: Vertex) -> Self {
        debug_assert_ne!(a, b);
        if a < b {
            Edge { u: a, v: b }
        } else {
            Edge { u: b, v: a }
        }
    }

    #[inline]
    pub fn other(&self, x: Vertex) -> Vertex {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }

    #[inline]
    pub fn touches(&self, x: Vertex) -> bool {
        self.u == x || self.v == x
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.u, self.v)
    }
}

/// Read access to an undirected adjacency structure.
///
/// Implemented by the immutable [`Graph`] and by the mutable working graphs
/// used during path merging.
pub trait Adjacency {
    fn vertex_count(&self) -> usize;
    fn neighbors(&self, v: Vertex) -> &[Vertex];
    fn has_edge(&self, u: Vertex, v: Vertex) -> bool;

    fn degree(&self, v: Vertex) -> usize {
        self.neighbors(v).len()
    }
}

/// Immutable simple graph with sorted adjacency lists.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<Vertex>>,
    edge_count: usize,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, m={})", self.n, self.edge_count)
    }
}

impl Adjacency for Graph {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            adj: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n)
            .map(|v| (0..n).filter(|&w| w != v).collect())
            .collect();
        Graph {
            n,
            adj,
            edge_count: n * n.saturating_sub(1) / 2,
        }
    }

    /// Builds a graph from an edge list, rejecting loops and repeated edges.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (a, b) in edges {
            let e = Edge::new(a, b)?;
            if e.v >= n {
                return Err(GraphError::VertexOutOfRange(e.v, n));
            }
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        let mut edge_count = 0;
        for (v, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge(v.min(w[0]), v.max(w[0])));
            }
            edge_count += list.len();
        }
        Ok(Graph {
            n,
            adj,
            edge_count: edge_count / 2,
        })
    }

    /// Builds a graph from canonical edges, silently merging repeats.
    pub fn from_edge_set<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = Edge>,
    {
        let mut adj = vec![Vec::new(); n];
        for e in edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        let mut edge_count = 0;
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
        }
        Graph {
            n,
            adj,
            edge_count: edge_count / 2,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// All edges in increasing `(u, v)` order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .filter(move |&&v| v > u)
                .map(move |&v| Edge { u, v })
        })
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        self.has_edge(e.u, e.v)
    }

    fn check_universe(&self, other: &Graph) -> Result<(), GraphError> {
        if self.n != other.n {
            return Err(GraphError::VertexCountMismatch(self.n, other.n));
        }
        Ok(())
    }

    /// `G ∪ H`: the union of the edge sets.
    pub fn union(&self, other: &Graph) -> Result<Graph, GraphError> {
        self.check_universe(other)?;
        let mut edge_count = 0;
        let adj: Vec<Vec<Vertex>> = self
            .adj
            .iter()
            .zip(&other.adj)
            .map(|(a, b)| {
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() || j < b.len() {
                    let next = match (a.get(i), b.get(j)) {
                        (Some(&x), Some(&y)) if x == y => {
                            i += 1;
                            j += 1;
                            x
                        }
                        (Some(&x), Some(&y)) if x < y => {
                            i += 1;
                            x
                        }
                        (Some(_), Some(&y)) => {
                            j += 1;
                            y
                        }
                        (Some(&x), None) => {
                            i += 1;
                            x
                        }
                        (None, Some(&y)) => {
                            j += 1;
                            y
                        }
                        (None, None) => unreachable!(),
                    };
                    out.push(next);
                }
                edge_count += out.len();
                out
            })
            .collect();
        Ok(Graph {
            n: self.n,
            adj,
            edge_count: edge_count / 2,
        })
    }

    /// `G \ H`: edges of `G` that are not edges of `H`.
    pub fn minus(&self, other: &Graph) -> Result<Graph, GraphError> {
        self.check_universe(other)?;
        let mut edge_count = 0;
        let adj: Vec<Vec<Vertex>> = self
            .adj
            .iter()
            .zip(&other.adj)
            .map(|(a, b)| {
                let out: Vec<Vertex> = a
                    .iter()
                    .copied()
                    .filter(|x| b.binary_search(x).is_err())
                    .collect();
                edge_count += out.len();
                out
            })
            .collect();
        Ok(Graph {
            n: self.n,
            adj,
            edge_count: edge_count / 2,
        })
    }

    /// Keeps only edges with both endpoints in `keep`; the vertex ids are unchanged.
    pub fn restrict(&self, keep: &[bool]) -> Graph {
        let mut edge_count = 0;
        let adj: Vec<Vec<Vertex>> = self
            .adj
            .iter()
            .enumerate()
            .map(|(v, list)| {
                if !keep[v] {
                    return Vec::new();
                }
                let out: Vec<Vertex> = list.iter().copied().filter(|&w| keep[w]).collect();
                edge_count += out.len();
                out
            })
            .collect();
        Graph {
            n: self.n,
            adj,
            edge_count: edge_count / 2,
        }
    }

    /// Keeps only edges satisfying `pred`.
    pub fn filter_edges(&self, mut pred: impl FnMut(Edge) -> bool) -> Graph {
        Graph::from_edge_set(self.n, self.edges().filter(|&e| pred(e)))
    }

    /// Degree-sum identity: `Σ deg(v) = 2 e(G)`, plus symmetry and simplicity.
    pub fn check_invariants(&self) -> bool {
        let sum: usize = self.adj.iter().map(Vec::len).sum();
        sum == 2 * self.edge_count
            && self.adj.iter().enumerate().all(|(v, list)| {
                list.windows(2).all(|w| w[0] < w[1])
                    && list
                        .iter()
                        .all(|&w| w != v && w < self.n && self.adj[w].binary_search(&v).is_ok())
            })
    }
}

/// `e_G(X)`, `e_G(X, Y)` and the external neighbourhood `N_G(U)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeStats {
    pub e_x: usize,
    pub e_xy: usize,
    pub neighborhood: Vec<Vertex>,
}

fn membership(n: usize, set: &[Vertex]) -> Result<Vec<bool>, GraphError> {
    let mut mark = vec![false; n];
    for &v in set {
        if v >= n {
            return Err(GraphError::VertexOutOfRange(v, n));
        }
        mark[v] = true;
    }
    Ok(mark)
}

pub fn edge_stats(
    g: &Graph,
    x: &[Vertex],
    y: &[Vertex],
    u: &[Vertex],
) -> Result<EdgeStats, GraphError> {
    let in_x = membership(g.n, x)?;
    let in_y = membership(g.n, y)?;
    let in_u = membership(g.n, u)?;
    if let Some(&v) = y.iter().find(|&&v| in_x[v]) {
        return Err(GraphError::OverlappingSets(v));
    }
    let mut e_x = 0;
    let mut e_xy = 0;
    for e in g.edges() {
        if in_x[e.u] && in_x[e.v] {
            e_x += 1;
        }
        if (in_x[e.u] && in_y[e.v]) || (in_y[e.u] && in_x[e.v]) {
            e_xy += 1;
        }
    }
    let neighborhood = external_neighborhood(g, &in_u);
    Ok(EdgeStats {
        e_x,
        e_xy,
        neighborhood,
    })
}

/// `N_G(U)` for a membership mask, sorted.
pub fn external_neighborhood<A: Adjacency + ?Sized>(g: &A, in_u: &[bool]) -> Vec<Vertex> {
    let mut seen = vec![false; g.vertex_count()];
    let mut out = Vec::new();
    for (v, _) in in_u.iter().enumerate().filter(|(_, &m)| m) {
        for &w in g.neighbors(v) {
            if !in_u[w] && !seen[w] {
                seen[w] = true;
                out.push(w);
            }
        }
    }
    out.sort_unstable();
    out
}

fn check_probability(p: f64) -> Result<(), GraphError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(GraphError::InvalidProbability(p));
    }
    Ok(())
}

/// Geometric skip length: number of failures before the next success.
#[inline]
fn skip<R: Rng>(rng: &mut R, log_q: f64) -> u64 {
    let r: f64 = rng.gen();
    let s = ((1.0 - r).ln() / log_q).floor();
    if s.is_finite() && s < u64::MAX as f64 {
        s as u64
    } else {
        u64::MAX
    }
}

/// Sparse threshold below which pairs are skipped geometrically.
const SKIP_THRESHOLD: f64 = 0.1;

/// Indices in `0..total` that succeed independently with probability `p`.
pub(crate) fn bernoulli_indices<R: Rng>(rng: &mut R, total: u64, p: f64) -> Vec<u64> {
    let mut out = Vec::new();
    if p <= 0.0 || total == 0 {
        return out;
    }
    if p < SKIP_THRESHOLD {
        let log_q = (-p).ln_1p();
        let mut idx: u64 = 0;
        loop {
            let s = skip(rng, log_q);
            idx = match idx.checked_add(s) {
                Some(i) if i < total => i,
                _ => break,
            };
            out.push(idx);
            idx += 1;
        }
    } else {
        for i in 0..total {
            if rng.gen_bool(p) {
                out.push(i);
            }
        }
    }
    out
}

/// Maps a linear index in `0..C(n,2)` to the pair `(u, v)`, `u < v`, in
/// row order `(0,1), (0,2), …, (1,2), …`.
pub(crate) fn pair_from_index(n: usize, idx: u64) -> (usize, usize) {
    // Row u holds n-1-u pairs; solve for the row by inverting the prefix sum.
    let n64 = n as f64;
    let i = idx as f64;
    let mut u = (((2.0 * n64 - 1.0) - ((2.0 * n64 - 1.0).powi(2) - 8.0 * i).max(0.0).sqrt()) / 2.0)
        .floor() as usize;
    let row_start = |u: usize| -> u64 { (u as u64) * (2 * n as u64 - u as u64 - 1) / 2 };
    while u > 0 && row_start(u) > idx {
        u -= 1;
    }
    while u + 1 < n && row_start(u + 1) <= idx {
        u += 1;
    }
    let v = u + 1 + (idx - row_start(u)) as usize;
    (u, v)
}

/// Samples `G(n, p)` from the stream derived from `seed`.
///
/// Pairs are skipped geometrically for `p < 0.1` and flipped one by one
/// otherwise.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    check_probability(p)?;
    let mut rng = rng::stream(seed, "gnp", &[n as u64]);
    Ok(gnp_with(&mut rng, n, p))
}

pub(crate) fn gnp_with<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    if p >= 1.0 {
        return Graph::complete(n);
    }
    let total = (n as u64) * (n.saturating_sub(1) as u64) / 2;
    let edges = bernoulli_indices(rng, total, p).into_iter().map(|i| {
        let (u, v) = pair_from_index(n, i);
        Edge { u, v }
    });
    Graph::from_edge_set(n, edges)
}

/// A bipartite graph between two disjoint vertex lists.
///
/// `left` and `right` hold global vertex ids; adjacency is stored by local
/// index (position in `left` / `right`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartitePair {
    pub left: Vec<Vertex>,
    pub right: Vec<Vertex>,
    adj_left: Vec<Vec<usize>>,
    adj_right: Vec<Vec<usize>>,
    edge_count: usize,
}

impl BipartitePair {
    /// Builds a pair from local-index edges `(i, j)`, `i` into `left`, `j` into `right`.
    pub fn from_local_edges<I>(
        left: Vec<Vertex>,
        right: Vec<Vertex>,
        edges: I,
    ) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let left_set: HashSet<Vertex> = left.iter().copied().collect();
        if let Some(&v) = right.iter().find(|v| left_set.contains(v)) {
            return Err(GraphError::OverlappingSets(v));
        }
        let mut adj_left = vec![Vec::new(); left.len()];
        let mut adj_right = vec![Vec::new(); right.len()];
        for (i, j) in edges {
            if i >= left.len() {
                return Err(GraphError::VertexOutOfRange(i, left.len()));
            }
            if j >= right.len() {
                return Err(GraphError::VertexOutOfRange(j, right.len()));
            }
            adj_left[i].push(j);
            adj_right[j].push(i);
        }
        let mut edge_count = 0;
        for (i, list) in adj_left.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge(left[i], right[w[0]]));
            }
            edge_count += list.len();
        }
        for list in adj_right.iter_mut() {
            list.sort_unstable();
        }
        Ok(BipartitePair {
            left,
            right,
            adj_left,
            adj_right,
            edge_count,
        })
    }

    /// The cross edges of `g` between two disjoint vertex lists.
    pub fn from_graph(g: &Graph, left: &[Vertex], right: &[Vertex]) -> Result<Self, GraphError> {
        let mut local = vec![usize::MAX; g.n()];
        for (j, &v) in right.iter().enumerate() {
            if v >= g.n() {
                return Err(GraphError::VertexOutOfRange(v, g.n()));
            }
            local[v] = j;
        }
        let mut edges = Vec::new();
        for (i, &a) in left.iter().enumerate() {
            if a >= g.n() {
                return Err(GraphError::VertexOutOfRange(a, g.n()));
            }
            if local[a] != usize::MAX {
                return Err(GraphError::OverlappingSets(a));
            }
            for &b in g.neighbors(a) {
                if local[b] != usize::MAX {
                    edges.push((i, local[b]));
                }
            }
        }
        Self::from_local_edges(left.to_vec(), right.to_vec(), edges)
    }

    pub fn left_len(&self) -> usize {
        self.left.len()
    }

    pub fn right_len(&self) -> usize {
        self.right.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Right-side local neighbours of left vertex `i`.
    pub fn left_neighbors(&self, i: usize) -> &[usize] {
        &self.adj_left[i]
    }

    /// Left-side local neighbours of right vertex `j`.
    pub fn right_neighbors(&self, j: usize) -> &[usize] {
        &self.adj_right[j]
    }

    pub fn has_local_edge(&self, i: usize, j: usize) -> bool {
        self.adj_left[i].binary_search(&j).is_ok()
    }

    /// Local-index edges `(i, j)`.
    pub fn local_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj_left
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().map(move |&j| (i, j)))
    }

    /// Cross edges in global ids.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.local_edges()
            .map(|(i, j)| Edge::of(self.left[i], self.right[j]))
    }

    /// `e(X, Y)` for local index sets `X ⊆ left`, `Y ⊆ right`.
    pub fn cross_count(&self, x: &[usize], y: &[usize]) -> usize {
        let mut in_y = vec![false; self.right.len()];
        for &j in y {
            in_y[j] = true;
        }
        x.iter()
            .map(|&i| self.adj_left[i].iter().filter(|&&j| in_y[j]).count())
            .sum()
    }

    /// Sub-pair induced on local index subsets.
    pub fn induced(&self, left_keep: &[usize], right_keep: &[usize]) -> BipartitePair {
        let mut rmap = vec![usize::MAX; self.right.len()];
        for (new, &j) in right_keep.iter().enumerate() {
            rmap[j] = new;
        }
        let mut adj_left = Vec::with_capacity(left_keep.len());
        let mut adj_right = vec![Vec::new(); right_keep.len()];
        let mut edge_count = 0;
        for (new_i, &i) in left_keep.iter().enumerate() {
            let mut list: Vec<usize> = self.adj_left[i]
                .iter()
                .filter(|&&j| rmap[j] != usize::MAX)
                .map(|&j| rmap[j])
                .collect();
            list.sort_unstable();
            for &j in &list {
                adj_right[j].push(new_i);
            }
            edge_count += list.len();
            adj_left.push(list);
        }
        BipartitePair {
            left: left_keep.iter().map(|&i| self.left[i]).collect(),
            right: right_keep.iter().map(|&j| self.right[j]).collect(),
            adj_left,
            adj_right,
            edge_count,
        }
    }
}

/// Samples `G(n, n; p)` with left ids `0..n` and right ids `n..2n`.
pub fn gen_bipartite_gnnp(n: usize, p: f64, seed: u64) -> Result<BipartitePair, GraphError> {
    check_probability(p)?;
    let mut rng = rng::stream(seed, "gnnp", &[n as u64]);
    let total = (n as u64) * (n as u64);
    let edges: Vec<(usize, usize)> = if p >= 1.0 {
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
    } else {
        bernoulli_indices(&mut rng, total, p)
            .into_iter()
            .map(|i| ((i / n as u64) as usize, (i % n as u64) as usize))
            .collect()
    };
    BipartitePair::from_local_edges((0..n).collect(), (n..2 * n).collect(), edges)
}

/// Writes the edge-list text format: `n m` then one `u v` line per edge, `u < v`.
pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> Result<(), GraphError> {
    writeln!(out, "{} {}", g.n(), g.edge_count())?;
    for e in g.edges() {
        writeln!(out, "{} {}", e.u, e.v)?;
    }
    Ok(())
}

/// Reads the edge-list text format; rejects loops, duplicates, `u > v`, and
/// a header count that disagrees with the body.
pub fn read_edge_list<R: BufRead>(input: R) -> Result<Graph, GraphError> {
    let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let parse_pair = |line: usize, s: &str| -> Result<(usize, usize), GraphError> {
        let mut it = s.split_whitespace();
        let bad = |msg: &str| GraphError::Parse {
            line,
            msg: msg.to_string(),
        };
        let a = it.next().ok_or_else(|| bad("expected two integers"))?;
        let b = it.next().ok_or_else(|| bad("expected two integers"))?;
        if it.next().is_some() {
            return Err(bad("trailing tokens"));
        }
        let a = a.parse::<usize>().map_err(|e| bad(&e.to_string()))?;
        let b = b.parse::<usize>().map_err(|e| bad(&e.to_string()))?;
        Ok((a, b))
    };
    let (hl, header) = lines.next().ok_or(GraphError::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let (n, m) = parse_pair(hl, &header?)?;
    let mut edges = Vec::with_capacity(m);
    for (line, text) in lines {
        let (u, v) = parse_pair(line, &text?)?;
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if u > v {
            return Err(GraphError::Parse {
                line,
                msg: format!("expected u < v, got {u} {v}"),
            });
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(GraphError::Parse {
            line: 1,
            msg: format!("header says {m} edges, found {}", edges.len()),
        });
    }
    Graph::from_edges(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn gnp_extremes() {
        assert_eq!(gen_gnp(5, 0.0, 1).unwrap().edge_count(), 0);
        let k5 = gen_gnp(5, 1.0, 1).unwrap();
        assert_eq!(k5.edge_count(), 10);
        assert_eq!(k5, Graph::complete(5));
        assert!(matches!(
            gen_gnp(5, 1.5, 1),
            Err(GraphError::InvalidProbability(_))
        ));
        assert!(matches!(
            gen_gnp(5, -0.1, 1),
            Err(GraphError::InvalidProbability(_))
        ));
    }

    #[test]
    fn gnp_edge_count_in_chernoff_window() {
        let g = gen_gnp(1000, 0.01, 7).unwrap();
        let mean = 4995.0_f64;
        assert!(
            (g.edge_count() as f64 - mean).abs() <= 4.0 * mean.sqrt(),
            "{}",
            g.edge_count()
        );
        assert!(g.check_invariants());
    }

    #[test]
    fn gnp_sampling_window_oracle() {
        // Empirical check that the ±4σ window used above is not too tight:
        // across 200 seeds essentially every sample lands inside it.
        let mean = 4995.0_f64;
        let inside = (0..200)
            .filter(|&s| {
                (gen_gnp(1000, 0.01, s).unwrap().edge_count() as f64 - mean).abs()
                    <= 4.0 * mean.sqrt()
            })
            .count();
        assert!(inside >= 199, "{inside}");
    }

    #[test]
    fn dense_branch_matches_expectation() {
        let g = gen_gnp(200, 0.3, 5).unwrap();
        let mean = 19900.0 * 0.3;
        let sd = (19900.0_f64 * 0.3 * 0.7).sqrt();
        assert!((g.edge_count() as f64 - mean).abs() <= 4.0 * sd);
    }

    #[test]
    fn pair_index_roundtrip() {
        for n in [2usize, 3, 7, 50] {
            let mut idx = 0u64;
            for u in 0..n {
                for v in u + 1..n {
                    assert_eq!(pair_from_index(n, idx), (u, v), "n={n} idx={idx}");
                    idx += 1;
                }
            }
        }
    }

    #[test]
    fn bipartite_extremes_and_count() {
        let full = gen_bipartite_gnnp(3, 1.0, 11).unwrap();
        assert_eq!(full.edge_count(), 9);
        assert_eq!(gen_bipartite_gnnp(3, 0.0, 11).unwrap().edge_count(), 0);
        let bp = gen_bipartite_gnnp(500, 0.02, 3).unwrap();
        let mean = 5000.0_f64;
        assert!((bp.edge_count() as f64 - mean).abs() <= 4.0 * mean.sqrt());
        assert!(bp.edges().all(|e| e.u < 500 && e.v >= 500));
    }

    #[test]
    fn union_and_minus_examples() {
        let g = path(3, &[(0, 1)]);
        let h = path(3, &[(1, 2)]);
        let u = g.union(&h).unwrap();
        assert_eq!(
            u.edges().collect::<Vec<_>>(),
            vec![Edge { u: 0, v: 1 }, Edge { u: 1, v: 2 }]
        );
        assert_eq!(g.union(&Graph::empty(3)).unwrap(), g);
        assert_eq!(g.union(&g).unwrap(), g);

        let k3 = Graph::complete(3);
        let d = k3.minus(&path(3, &[(0, 1)])).unwrap();
        assert_eq!(
            d.edges().collect::<Vec<_>>(),
            vec![Edge { u: 0, v: 2 }, Edge { u: 1, v: 2 }]
        );
        assert_eq!(k3.minus(&k3).unwrap().edge_count(), 0);
        assert_eq!(k3.minus(&Graph::empty(3)).unwrap(), k3);
        assert!(matches!(
            k3.union(&Graph::empty(4)),
            Err(GraphError::VertexCountMismatch(3, 4))
        ));
        assert!(k3.minus(&Graph::empty(2)).is_err());
    }

    #[test]
    fn edge_stats_examples() {
        let k5 = Graph::complete(5);
        let s = edge_stats(&k5, &[0, 1], &[2, 3], &[0]).unwrap();
        assert_eq!(s.neighborhood, vec![1, 2, 3, 4]);
        assert_eq!(s.e_xy, 4);
        assert_eq!(s.e_x, 1);
        assert!(matches!(
            edge_stats(&k5, &[0, 1], &[1], &[]),
            Err(GraphError::OverlappingSets(1))
        ));
    }

    #[test]
    fn edge_stats_match_brute_force() {
        let g = gen_gnp(20, 0.5, 9).unwrap();
        let x: Vec<usize> = (0..20).filter(|v| v % 3 == 0).collect();
        let y: Vec<usize> = (0..20).filter(|v| v % 3 == 1).collect();
        let mut brute = 0;
        for &a in &x {
            for &b in &y {
                if g.has_edge(a, b) {
                    brute += 1;
                }
            }
        }
        let s = edge_stats(&g, &x, &y, &x).unwrap();
        assert_eq!(s.e_xy, brute);
        assert!(s.neighborhood.iter().all(|v| !x.contains(v)));
    }

    #[test]
    fn edge_list_roundtrip_and_rejections() {
        let g = gen_gnp(30, 0.2, 4).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(read_edge_list(&buf[..]).unwrap(), g);

        assert!(matches!(
            read_edge_list(&b"3 2\n0 1\n0 1\n"[..]),
            Err(GraphError::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            read_edge_list(&b"3 1\n1 1\n"[..]),
            Err(GraphError::SelfLoop(1))
        ));
        assert!(read_edge_list(&b"3 1\n2 1\n"[..]).is_err());
        assert!(read_edge_list(&b"3 2\n0 1\n"[..]).is_err());
        assert!(read_edge_list(&b"3 1\n0 7\n"[..]).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = (Graph, Graph)> {
        (
            2usize..14,
            any::<u64>(),
            any::<u64>(),
            0.0f64..1.0,
            0.0f64..1.0,
        )
            .prop_map(|(n, s1, s2, p, q)| (gen_gnp(n, p, s1).unwrap(), gen_gnp(n, q, s2).unwrap()))
    }

    proptest! {
        #[test]
        fn algebra_invariants((g, h) in arb_graph()) {
            let u = g.union(&h).unwrap();
            let back = u.minus(&h).unwrap();
            prop_assert!(back.edges().all(|e| !h.contains_edge(e)));
            prop_assert!(g.minus(&h).unwrap().edge_count() <= g.edge_count());
            prop_assert!(u.check_invariants());
            prop_assert!(back.check_invariants());
            let mask: Vec<bool> = (0..g.n()).map(|v| v % 2 == 0).collect();
            let nb = external_neighborhood(&g, &mask);
            prop_assert!(nb.iter().all(|&v| !mask[v]));
        }

        #[test]
        fn gnp_is_reproducible(n in 1usize..40, p in 0.0f64..1.0, seed in any::<u64>()) {
            prop_assert_eq!(gen_gnp(n, p, seed).unwrap(), gen_gnp(n, p, seed).unwrap());
        }
    }
}
