//! Rotation–extension machinery: expander checks, the rotation trichotomy
//! with certified boosters, the `≼` order on path systems, extremal
//! normalization, and the round that merges an `s`-path system.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exposure::SlotLayers;
use crate::graph::{Adjacency, Edge, Graph, Vertex};
use crate::matching::PathSystem;
use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum PosaError {
    #[error("exact expander check supports n ≤ {max}, got {n}")]
    TooLargeForExact { n: usize, max: usize },
    #[error("Hamilton oracle supports n ≤ {max}, got {n}")]
    TooLargeForOracle { n: usize, max: usize },
    #[error("expander parameters need m ≥ 1 and c > 0, got m = {m}, c = {c}")]
    InvalidParams { m: usize, c: f64 },
    #[error("not a path of the graph: {0}")]
    NotAPath(String),
    #[error("path system does not partition the vertex set")]
    NotACover,
}

/// `(m, c)`: every `U` with `|U| ≤ m` has `|N(U)| ≥ c|U|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpanderParams {
    pub m: usize,
    pub c: f64,
}

impl ExpanderParams {
    pub fn new(m: usize, c: f64) -> Result<Self, PosaError> {
        if m == 0 || !(c > 0.0) {
            return Err(PosaError::InvalidParams { m, c });
        }
        Ok(ExpanderParams { m, c })
    }
}

pub const EXACT_EXPANDER_MAX_N: usize = 24;
pub const ORACLE_MAX_N: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpanderMode {
    Exact,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpanderVerdict {
    /// Exhaustively verified.
    Expander,
    /// Sampling found no violating set; not a proof.
    NoCounterexample { samples: usize },
    Violation {
        witness: Vec<Vertex>,
        neighborhood: usize,
    },
}

impl ExpanderVerdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, ExpanderVerdict::Violation { .. })
    }
}

fn expands(nbhd: usize, size: usize, c: f64) -> bool {
    nbhd as f64 >= c * size as f64
}

/// Next subset of the same size in colexicographic order.
fn gosper(x: u64) -> u64 {
    let c = x & x.wrapping_neg();
    let r = x + c;
    (((r ^ x) >> 2) / c) | r
}

pub fn check_expander<A: Adjacency + ?Sized>(
    g: &A,
    params: ExpanderParams,
    mode: ExpanderMode,
) -> Result<ExpanderVerdict, PosaError> {
    let n = g.vertex_count();
    let top = params.m.min(n);
    match mode {
        ExpanderMode::Exact => {
            if n > EXACT_EXPANDER_MAX_N {
                return Err(PosaError::TooLargeForExact {
                    n,
                    max: EXACT_EXPANDER_MAX_N,
                });
            }
            let masks: Vec<u64> = (0..n)
                .map(|v| g.neighbors(v).iter().fold(0u64, |m, &w| m | 1 << w))
                .collect();
            for t in 1..=top {
                let mut u: u64 = (1u64 << t) - 1;
                while u < 1u64 << n {
                    let mut nb = 0u64;
                    let mut bits = u;
                    while bits != 0 {
                        nb |= masks[bits.trailing_zeros() as usize];
                        bits &= bits - 1;
                    }
                    let size = (nb & !u).count_ones() as usize;
                    if !expands(size, t, params.c) {
                        let witness = (0..n).filter(|&v| u >> v & 1 == 1).collect();
                        return Ok(ExpanderVerdict::Violation {
                            witness,
                            neighborhood: size,
                        });
                    }
                    u = gosper(u);
                }
            }
            Ok(ExpanderVerdict::Expander)
        }
        ExpanderMode::Sampled { samples, seed } => {
            if n == 0 {
                return Ok(ExpanderVerdict::NoCounterexample { samples: 0 });
            }
            let mut rng = rng::stream(seed, "expander-sample", &[n as u64, params.m as u64]);
            let mut in_u = vec![0u32; n];
            let mut seen = vec![0u32; n];
            let mut stamp = 0u32;
            let measure =
                |set: &[Vertex], in_u: &mut [u32], seen: &mut [u32], stamp: &mut u32| -> usize {
                    *stamp += 1;
                    for &v in set {
                        in_u[v] = *stamp;
                    }
                    let mut count = 0;
                    for &v in set {
                        for &w in g.neighbors(v) {
                            if in_u[w] != *stamp && seen[w] != *stamp {
                                seen[w] = *stamp;
                                count += 1;
                            }
                        }
                    }
                    count
                };
            // Singletons are cheap and catch the commonest violations.
            for v in 0..n {
                let size = measure(&[v], &mut in_u, &mut seen, &mut stamp);
                if !expands(size, 1, params.c) {
                    return Ok(ExpanderVerdict::Violation {
                        witness: vec![v],
                        neighborhood: size,
                    });
                }
            }
            let mut set: Vec<Vertex> = Vec::new();
            for s in 0..samples {
                let t = rng.gen_range(1..=top);
                set.clear();
                if s % 2 == 0 {
                    set.extend(sample(&mut rng, n, t));
                } else {
                    grow_connected(g, &mut rng, t, &mut set);
                }
                let size = measure(&set, &mut in_u, &mut seen, &mut stamp);
                if !expands(size, set.len(), params.c) {
                    set.sort_unstable();
                    return Ok(ExpanderVerdict::Violation {
                        witness: set.clone(),
                        neighborhood: size,
                    });
                }
            }
            Ok(ExpanderVerdict::NoCounterexample { samples })
        }
    }
}

/// A random set of up to `t` vertices grown mostly through neighbours of the set.
fn grow_connected<A: Adjacency + ?Sized, R: Rng>(
    g: &A,
    rng: &mut R,
    t: usize,
    set: &mut Vec<Vertex>,
) {
    let n = g.vertex_count();
    let mut member: HashSet<Vertex> = HashSet::new();
    let start = rng.gen_range(0..n);
    set.push(start);
    member.insert(start);
    let mut attempts = 0;
    while set.len() < t && attempts < 8 * t + 16 {
        attempts += 1;
        let next = if rng.gen_bool(0.9) {
            let u = set[rng.gen_range(0..set.len())];
            let nb = g.neighbors(u);
            if nb.is_empty() {
                continue;
            }
            nb[rng.gen_range(0..nb.len())]
        } else {
            rng.gen_range(0..n)
        };
        if member.insert(next) {
            set.push(next);
        }
    }
}

/// Exact Hamilton-cycle search by subset dynamic programming.
pub fn hamilton_oracle_small<A: Adjacency + ?Sized>(
    g: &A,
) -> Result<Option<Vec<Vertex>>, PosaError> {
    let n = g.vertex_count();
    if n > ORACLE_MAX_N {
        return Err(PosaError::TooLargeForOracle {
            n,
            max: ORACLE_MAX_N,
        });
    }
    if n < 3 {
        return Ok(None);
    }
    let full = (1usize << n) - 1;
    // ends[mask]: vertices v such that a path from 0 through `mask` ends at v.
    let mut ends = vec![0u16; 1 << n];
    ends[1] = 1;
    for mask in 1..=full {
        if mask & 1 == 0 || ends[mask] == 0 {
            continue;
        }
        for v in 0..n {
            if ends[mask] >> v & 1 == 0 {
                continue;
            }
            for &w in g.neighbors(v) {
                if mask >> w & 1 == 0 {
                    ends[mask | 1 << w] |= 1 << w;
                }
            }
        }
    }
    let Some(last) = (1..n).find(|&v| ends[full] >> v & 1 == 1 && g.has_edge(v, 0)) else {
        return Ok(None);
    };
    let mut cycle = vec![last];
    let mut mask = full;
    let mut cur = last;
    while mask != 1 {
        let prev_mask = mask & !(1 << cur);
        let prev = (0..n)
            .find(|&u| ends[prev_mask] >> u & 1 == 1 && g.has_edge(u, cur))
            .expect("dynamic programme is consistent");
        cycle.push(prev);
        mask = prev_mask;
        cur = prev;
    }
    cycle.reverse();
    Ok(Some(cycle))
}

/// Whether `cycle` visits each vertex of `0..n` once using edges of `g`.
pub fn is_hamilton_cycle<A: Adjacency + ?Sized>(g: &A, cycle: &[Vertex]) -> bool {
    let n = g.vertex_count();
    spans_cycle(g, cycle) && cycle.len() == n
}

/// Whether `cycle` is a simple cycle (length ≥ 3) of `g`.
pub fn spans_cycle<A: Adjacency + ?Sized>(g: &A, cycle: &[Vertex]) -> bool {
    if cycle.len() < 3 {
        return false;
    }
    is_path(g, cycle) && g.has_edge(cycle[cycle.len() - 1], cycle[0])
}

/// Whether `path` is a simple path of `g`.
pub fn is_path<A: Adjacency + ?Sized>(g: &A, path: &[Vertex]) -> bool {
    let n = g.vertex_count();
    let mut seen = HashSet::with_capacity(path.len());
    path.iter().all(|&v| v < n && seen.insert(v)) && path.windows(2).all(|w| g.has_edge(w[0], w[1]))
}

const NONE: usize = usize::MAX;

/// A path with position lookup, rotated in place at its last vertex.
struct RotatingPath {
    path: Vec<Vertex>,
    pos: Vec<usize>,
}

impl RotatingPath {
    fn new(path: &[Vertex], n: usize) -> Self {
        let mut pos = vec![NONE; n];
        for (i, &v) in path.iter().enumerate() {
            pos[v] = i;
        }
        RotatingPath {
            path: path.to_vec(),
            pos,
        }
    }

    fn end(&self) -> Vertex {
        self.path[self.path.len() - 1]
    }

    fn contains(&self, v: Vertex) -> bool {
        self.pos[v] != NONE
    }

    /// `v0 … vj vl … v(j+1)`: the edge `vj v(j+1)` is replaced by `vj vl`.
    fn rotate(&mut self, j: usize) {
        self.path[j + 1..].reverse();
        for i in j + 1..self.path.len() {
            self.pos[self.path[i]] = i;
        }
    }
}

/// One endpoint discovered by the rotation closure.
#[derive(Debug, Clone, Copy)]
struct Node {
    end: Vertex,
    parent: usize,
    /// The rotation pivot that produced this endpoint from its parent.
    pivot: Vertex,
}

enum Closure<T> {
    Found(T),
    Done { exhausted: bool },
}

/// Depth-first rotation closure with the first vertex fixed. `visit` is
/// called on every discovered endpoint with the path in its rotated state;
/// on `Some` the search stops and the path is left in that state, otherwise
/// it is restored.
fn closure<A: Adjacency + ?Sized, T>(
    g: &A,
    rp: &mut RotatingPath,
    budget: usize,
    nodes: &mut Vec<Node>,
    mut visit: impl FnMut(&RotatingPath, usize) -> Option<T>,
) -> Closure<T> {
    nodes.clear();
    let mut seen: HashSet<Vertex> = HashSet::new();
    nodes.push(Node {
        end: rp.end(),
        parent: NONE,
        pivot: NONE,
    });
    seen.insert(rp.end());
    if let Some(t) = visit(rp, 0) {
        return Closure::Found(t);
    }
    // (node, next neighbour index)
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    let mut exhausted = false;
    while let Some(&mut (node, ref mut idx)) = stack.last_mut() {
        let end = rp.end();
        let nb = g.neighbors(end);
        let last = rp.path.len() - 1;
        let mut pushed = false;
        while *idx < nb.len() {
            let w = nb[*idx];
            *idx += 1;
            if w >= rp.pos.len() || !rp.contains(w) {
                continue;
            }
            let j = rp.pos[w];
            if j + 1 >= last {
                continue;
            }
            let new_end = rp.path[j + 1];
            if !seen.insert(new_end) {
                continue;
            }
            rp.rotate(j);
            let id = nodes.len();
            nodes.push(Node {
                end: new_end,
                parent: node,
                pivot: w,
            });
            if let Some(t) = visit(rp, id) {
                return Closure::Found(t);
            }
            if nodes.len() >= budget {
                exhausted = true;
            }
            stack.push((id, 0));
            pushed = true;
            break;
        }
        if exhausted {
            // Unwind every rotation on the stack.
            while let Some((id, _)) = stack.pop() {
                if id != 0 {
                    let j = rp.pos[nodes[id].pivot];
                    rp.rotate(j);
                }
            }
            break;
        }
        if !pushed {
            stack.pop();
            if node != 0 {
                let j = rp.pos[nodes[node].pivot];
                rp.rotate(j);
            }
        }
    }
    Closure::Done { exhausted }
}

/// The path reaching `nodes[id]`, replayed from `original`.
fn replay(original: &[Vertex], n: usize, nodes: &[Node], id: usize) -> Vec<Vertex> {
    let mut chain = Vec::new();
    let mut cur = id;
    while cur != 0 && cur != NONE {
        chain.push(nodes[cur].pivot);
        cur = nodes[cur].parent;
    }
    let mut rp = RotatingPath::new(original, n);
    for &pivot in chain.iter().rev() {
        let j = rp.pos[pivot];
        rp.rotate(j);
    }
    rp.path
}

/// Limits on the rotation search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationBudget {
    /// Endpoint discoveries per fixed end; `None` means `4|P|`.
    pub per_end: Option<usize>,
    /// Level-one endpoints used as fixed ends for the second closure.
    pub level2_starts: usize,
}

impl Default for RotationBudget {
    fn default() -> Self {
        RotationBudget {
            per_end: None,
            level2_starts: usize::MAX,
        }
    }
}

impl RotationBudget {
    fn per_end_for(&self, len: usize) -> usize {
        self.per_end.unwrap_or(4 * len).max(1)
    }
}

/// A non-edge `{a, b}` closing a Hamilton path of `G[V(P)]` from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Booster {
    pub pair: Edge,
    tree: usize,
    node: usize,
}

/// Boosters with the rotation traces that certify them.
#[derive(Debug, Clone)]
pub struct BoosterSet {
    original: Vec<Vertex>,
    n: usize,
    level1: Vec<Node>,
    /// `(level-one node of the fixed end, closure nodes)`.
    level2: Vec<(usize, Vec<Node>)>,
    pub boosters: Vec<Booster>,
    pub budget_exhausted: bool,
}

impl BoosterSet {
    pub fn len(&self) -> usize {
        self.boosters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boosters.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = Edge> + '_ {
        self.boosters.iter().map(|b| b.pair)
    }

    /// The Hamilton path of `G[V(P)]` joining the booster's two vertices.
    pub fn hamilton_path(&self, b: &Booster) -> Vec<Vertex> {
        if b.tree == NONE {
            return replay(&self.original, self.n, &self.level1, b.node);
        }
        let (start, nodes) = &self.level2[b.tree];
        let mut base = replay(&self.original, self.n, &self.level1, *start);
        base.reverse();
        replay(&base, self.n, nodes, b.node)
    }

    /// Replays the trace and checks the cycle it closes in `g + {a, b}`.
    pub fn certify<A: Adjacency + ?Sized>(&self, g: &A, b: &Booster) -> Option<Vec<Vertex>> {
        let path = self.hamilton_path(b);
        let ok = path.len() == self.original.len()
            && Edge::of(path[0], path[path.len() - 1]) == b.pair
            && is_path(g, &path)
            && path.iter().collect::<HashSet<_>>() == self.original.iter().collect::<HashSet<_>>();
        ok.then_some(path)
    }
}

#[derive(Debug, Clone)]
pub enum TrichotomyOutcome {
    /// A Hamilton path of `G[V(P)]` whose last vertex sees `outside ∉ V(P)`.
    ExtendablePath {
        path: Vec<Vertex>,
        outside: Vertex,
    },
    /// A Hamilton cycle of `G[V(P)]`, as a vertex sequence.
    HamiltonianSpan {
        cycle: Vec<Vertex>,
    },
    BoosterSet(BoosterSet),
}

fn outside_neighbor<A: Adjacency + ?Sized>(g: &A, rp: &RotatingPath, v: Vertex) -> Option<Vertex> {
    g.neighbors(v).iter().copied().find(|&w| !rp.contains(w))
}

fn check_path<A: Adjacency + ?Sized>(g: &A, path: &[Vertex]) -> Result<(), PosaError> {
    if path.is_empty() || !is_path(g, path) {
        return Err(PosaError::NotAPath(format!("{path:?}")));
    }
    Ok(())
}

/// Rotation closure with one end fixed, then from every reached endpoint:
/// an extension, a Hamilton cycle of the span, or certified boosters.
pub fn posa_trichotomy<A: Adjacency + ?Sized>(
    g: &A,
    path: &[Vertex],
    _params: &ExpanderParams,
) -> Result<TrichotomyOutcome, PosaError> {
    posa_trichotomy_with(g, path, &RotationBudget::default(), &[])
}

/// The trichotomy with an explicit budget. Level-one endpoints listed in
/// `prefer` are used as second-level fixed ends before any others.
pub fn posa_trichotomy_with<A: Adjacency + ?Sized>(
    g: &A,
    path: &[Vertex],
    budget: &RotationBudget,
    prefer: &[Vertex],
) -> Result<TrichotomyOutcome, PosaError> {
    check_path(g, path)?;
    let n = g.vertex_count();
    let len = path.len();
    let per_end = budget.per_end_for(len);
    let mut rp = RotatingPath::new(path, n);
    let x0 = path[0];
    if let Some(w) = outside_neighbor(g, &rp, x0) {
        let mut p = path.to_vec();
        p.reverse();
        return Ok(TrichotomyOutcome::ExtendablePath {
            path: p,
            outside: w,
        });
    }

    let mut level1 = Vec::new();
    let found = closure(g, &mut rp, per_end, &mut level1, |rp, _| {
        let e = rp.end();
        if let Some(w) = outside_neighbor(g, rp, e) {
            return Some(TrichotomyOutcome::ExtendablePath {
                path: rp.path.clone(),
                outside: w,
            });
        }
        if len >= 3 && g.has_edge(e, x0) {
            return Some(TrichotomyOutcome::HamiltonianSpan {
                cycle: rp.path.clone(),
            });
        }
        None
    });
    let mut exhausted = match found {
        Closure::Found(out) => return Ok(out),
        Closure::Done { exhausted } => exhausted,
    };

    let mut set = BoosterSet {
        original: path.to_vec(),
        n,
        level1,
        level2: Vec::new(),
        boosters: Vec::new(),
        budget_exhausted: false,
    };
    if len < 3 {
        set.budget_exhausted = exhausted;
        return Ok(TrichotomyOutcome::BoosterSet(set));
    }
    let mut pairs: HashSet<Edge> = HashSet::new();
    for (id, node) in set.level1.iter().enumerate() {
        let e = Edge::of(x0, node.end);
        if pairs.insert(e) {
            set.boosters.push(Booster {
                pair: e,
                tree: NONE,
                node: id,
            });
        }
    }

    let preferred: HashSet<Vertex> = prefer.iter().copied().collect();
    let mut starts: Vec<usize> = (0..set.level1.len())
        .filter(|&id| preferred.contains(&set.level1[id].end))
        .collect();
    let mut extra = 0;
    for id in 0..set.level1.len() {
        if extra >= budget.level2_starts {
            break;
        }
        if !preferred.contains(&set.level1[id].end) {
            starts.push(id);
            extra += 1;
        }
    }

    let mut nodes = Vec::new();
    for a_id in starts {
        let mut base = replay(path, n, &set.level1, a_id);
        base.reverse();
        let a = base[0];
        let mut rp2 = RotatingPath::new(&base, n);
        let found = closure(g, &mut rp2, per_end, &mut nodes, |rp, _| {
            let e = rp.end();
            if let Some(w) = outside_neighbor(g, rp, e) {
                return Some(TrichotomyOutcome::ExtendablePath {
                    path: rp.path.clone(),
                    outside: w,
                });
            }
            if g.has_edge(e, a) {
                return Some(TrichotomyOutcome::HamiltonianSpan {
                    cycle: rp.path.clone(),
                });
            }
            None
        });
        match found {
            Closure::Found(out) => return Ok(out),
            Closure::Done { exhausted: ex } => exhausted |= ex,
        }
        let tree = set.level2.len();
        for (id, node) in nodes.iter().enumerate() {
            let e = Edge::of(a, node.end);
            if node.end != a && pairs.insert(e) {
                set.boosters.push(Booster {
                    pair: e,
                    tree,
                    node: id,
                });
            }
        }
        set.level2.push((a_id, std::mem::take(&mut nodes)));
    }
    set.budget_exhausted = exhausted;
    Ok(TrichotomyOutcome::BoosterSet(set))
}

/// `(s, |P1| ≥ … ≥ |Ps|)`; ordered so that `a < b` means `a ≺ b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathOrderKey {
    pub s: usize,
    pub lengths: Vec<usize>,
}

impl PathOrderKey {
    pub fn of(ps: &PathSystem) -> Self {
        let mut lengths: Vec<usize> = ps.paths.iter().map(Vec::len).collect();
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        PathOrderKey {
            s: lengths.len(),
            lengths,
        }
    }
}

impl Ord for PathOrderKey {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_path_systems(self, other)
    }
}

impl PartialOrd for PathOrderKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `Less` when `a` has fewer paths, or as many and a lexicographically larger length vector.
pub fn compare_path_systems(a: &PathOrderKey, b: &PathOrderKey) -> Ordering {
    a.s.cmp(&b.s).then_with(|| b.lengths.cmp(&a.lengths))
}

fn sort_paths(paths: &mut [Vec<Vertex>]) {
    paths.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
}

/// Replaces `paths[r]` by `head` followed by the longer side of `w`'s path from `w`;
/// the shorter side stays a separate path. A target whose ends are adjacent
/// is opened as a cycle at `w` and absorbed whole. `head` must span `paths[r]`.
fn splice<A: Adjacency + ?Sized>(
    g: &A,
    paths: &mut Vec<Vec<Vertex>>,
    r: usize,
    mut head: Vec<Vertex>,
    w: Vertex,
) {
    let r2 = paths
        .iter()
        .position(|p| p.contains(&w))
        .expect("target vertex lies on a path");
    debug_assert_ne!(r, r2);
    let mut target = std::mem::take(&mut paths[r2]);
    let j = target.iter().position(|&x| x == w).expect("present");
    let closable = target.len() >= 3 && g.has_edge(target[0], target[target.len() - 1]);
    let (attach, rest): (Vec<Vertex>, Vec<Vertex>) = if closable {
        target.rotate_left(j);
        (target, Vec::new())
    } else if j + 1 >= target.len() - j {
        (
            target[..=j].iter().rev().copied().collect(),
            target[j + 1..].to_vec(),
        )
    } else {
        (target[j..].to_vec(), target[..j].to_vec())
    };
    head.extend(attach);
    paths[r] = head;
    paths[r2] = rest;
    paths.retain(|p| !p.is_empty());
    sort_paths(paths);
}

/// Rotation search on `paths[r]` (from both ends) for an endpoint seeing a
/// vertex whose owner index satisfies `accept`.
fn find_extension<A: Adjacency + ?Sized>(
    g: &A,
    paths: &[Vec<Vertex>],
    r: usize,
    owner: &[usize],
    per_end: usize,
    accept: impl Fn(usize) -> bool,
) -> Option<(Vec<Vertex>, Vertex)> {
    let n = g.vertex_count();
    let mut nodes = Vec::new();
    for flip in [false, true] {
        let mut p = paths[r].clone();
        if flip {
            p.reverse();
        }
        let mut rp = RotatingPath::new(&p, n);
        let hit = closure(g, &mut rp, per_end, &mut nodes, |rp, _| {
            let e = rp.end();
            g.neighbors(e)
                .iter()
                .copied()
                .find(|&w| owner[w] != r && accept(owner[w]))
                .map(|w| (rp.path.clone(), w))
        });
        if let Closure::Found(x) = hit {
            return Some(x);
        }
        if paths[r].len() == 1 {
            break;
        }
    }
    None
}

fn owners(paths: &[Vec<Vertex>], n: usize) -> Vec<usize> {
    let mut owner = vec![NONE; n];
    for (i, p) in paths.iter().enumerate() {
        for &v in p {
            owner[v] = i;
        }
    }
    owner
}

fn check_cover(ps: &PathSystem, n: usize) -> Result<(), PosaError> {
    if !ps.covers_exactly(n) || ps.paths.iter().any(Vec::is_empty) {
        return Err(PosaError::NotACover);
    }
    Ok(())
}

/// Applies the extremal improvement move until no endpoint of a rotated
/// path sees a later path, or `max_moves` moves were made.
pub fn normalize_extremal<A: Adjacency + ?Sized>(
    g: &A,
    ps: &PathSystem,
    max_moves: usize,
) -> Result<PathSystem, PosaError> {
    let n = g.vertex_count();
    check_cover(ps, n)?;
    for p in &ps.paths {
        check_path(g, p)?;
    }
    let mut paths = ps.paths.clone();
    sort_paths(&mut paths);
    let mut moves = 0;
    let mut r = 0;
    while r < paths.len() && moves < max_moves {
        let owner = owners(&paths, n);
        let per_end = 4 * paths[r].len();
        match find_extension(g, &paths, r, &owner, per_end, |o| o > r) {
            Some((head, w)) => {
                let anchor = head[0];
                splice(g, &mut paths, r, head, w);
                moves += 1;
                r = paths
                    .iter()
                    .position(|p| p.contains(&anchor))
                    .expect("grown path present");
            }
            None => r += 1,
        }
    }
    Ok(PathSystem { paths })
}

/// `(G1 ∪ revealed layers) ∖ Γ` with mutable adjacency.
#[derive(Debug, Clone)]
pub struct WorkingGraph {
    adj: Vec<Vec<Vertex>>,
    gamma: HashSet<Edge>,
    gamma_degree: Vec<usize>,
    edge_count: usize,
}

impl WorkingGraph {
    pub fn new(base: &Graph, gamma: impl IntoIterator<Item = Edge>) -> Self {
        let n = base.n();
        let gamma: HashSet<Edge> = gamma.into_iter().collect();
        let mut gamma_degree = vec![0; n];
        for e in &gamma {
            gamma_degree[e.u] += 1;
            gamma_degree[e.v] += 1;
        }
        let mut adj = vec![Vec::new(); n];
        let mut edge_count = 0;
        for e in base.edges() {
            if !gamma.contains(&e) {
                adj[e.u].push(e.v);
                adj[e.v].push(e.u);
                edge_count += 1;
            }
        }
        adj.iter_mut().for_each(|l| l.sort_unstable());
        WorkingGraph {
            adj,
            gamma,
            gamma_degree,
            edge_count,
        }
    }

    /// Adds the edges not in `Γ` and not already present; returns them.
    pub fn reveal(&mut self, edges: &[Edge]) -> Vec<Edge> {
        let mut added = Vec::new();
        for &e in edges {
            if self.gamma.contains(&e) || self.has_edge(e.u, e.v) {
                continue;
            }
            for (x, y) in [(e.u, e.v), (e.v, e.u)] {
                let i = self.adj[x].partition_point(|&z| z < y);
                self.adj[x].insert(i, y);
            }
            self.edge_count += 1;
            added.push(e);
        }
        added
    }

    pub fn in_gamma(&self, e: Edge) -> bool {
        self.gamma.contains(&e)
    }

    pub fn gamma_max_degree(&self) -> usize {
        self.gamma_degree.iter().copied().max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }
}

impl Adjacency for WorkingGraph {
    fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.adj.len() && self.adj[u].binary_search(&v).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeParams {
    pub expander: ExpanderParams,
    pub budget: RotationBudget,
    /// Improvement moves per normalization.
    pub normalize_moves: usize,
}

/// State of one cycle slot while its path system is merged.
#[derive(Debug, Clone)]
pub struct MergeState {
    pub paths: PathSystem,
    pub working: WorkingGraph,
    pub in_s: Vec<bool>,
    /// Next layer to reveal, 1-based.
    pub next_layer: u32,
    pub layers_spent: u32,
    /// `|E1'|` for every booster set met.
    pub booster_counts: Vec<usize>,
    pub contract_violations: usize,
    pub rounds: usize,
    /// Cycles closed on spans smaller than `m`.
    pub small_spans: usize,
}

impl MergeState {
    /// Logs a contract violation when `Δ(Γ) > δ(G) − 2`.
    pub fn new(
        paths: PathSystem,
        working: WorkingGraph,
        in_s: Vec<bool>,
        delta: usize,
    ) -> Result<Self, PosaError> {
        check_cover(&paths, working.vertex_count())?;
        let contract_violations = usize::from(working.gamma_max_degree() + 2 > delta);
        let mut paths = paths;
        sort_paths(&mut paths.paths);
        Ok(MergeState {
            paths,
            working,
            in_s,
            next_layer: 1,
            layers_spent: 0,
            booster_counts: Vec::new(),
            contract_violations,
            rounds: 0,
            small_spans: 0,
        })
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    fn take_layer<'a>(&mut self, layers: &'a SlotLayers) -> Option<&'a [Edge]> {
        if self.next_layer > layers.layers {
            return None;
        }
        let l = layers.layer(self.next_layer);
        self.next_layer += 1;
        self.layers_spent += 1;
        Some(l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RetryReason {
    /// No booster of the longest path appeared in the revealed layer.
    NoBoosterHit,
    /// The closed cycle had no edge leaving its span, even after the layer.
    NoBridge,
    /// Every layer of the slot has been spent.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoundOutcome {
    /// The path system moved strictly down in `≼`.
    Progress {
        paths: usize,
    },
    HamiltonCycle(Vec<Vertex>),
    Retry(RetryReason),
}

/// One merging round: normalize, close the longest path into a cycle (in the
/// graph or through a booster hit by the next layer), then open the cycle
/// into another path. Layers are revealed only when in-graph moves fail.
pub fn merge_round(
    state: &mut MergeState,
    layers: &SlotLayers,
    params: &MergeParams,
) -> Result<RoundOutcome, PosaError> {
    state.rounds += 1;
    let before = PathOrderKey::of(&state.paths);
    state.paths = normalize_extremal(&state.working, &state.paths, params.normalize_moves)?;
    if PathOrderKey::of(&state.paths) < before {
        return Ok(RoundOutcome::Progress {
            paths: state.path_count(),
        });
    }
    let p1 = state.paths.paths[0].clone();
    let cycle = match posa_trichotomy_with(&state.working, &p1, &params.budget, &[])? {
        TrichotomyOutcome::ExtendablePath { path, outside } => {
            splice(&state.working, &mut state.paths.paths, 0, path, outside);
            return Ok(RoundOutcome::Progress {
                paths: state.path_count(),
            });
        }
        TrichotomyOutcome::HamiltonianSpan { cycle } => cycle,
        TrichotomyOutcome::BoosterSet(set) => {
            let usable = set
                .pairs()
                .filter(|&e| !state.working.in_gamma(e) && !state.in_s[e.u] && !state.in_s[e.v])
                .count();
            state.booster_counts.push(usable);
            let Some(layer) = state.take_layer(layers) else {
                return Ok(RoundOutcome::Retry(RetryReason::Exhausted));
            };
            let added = state.working.reveal(layer);
            let span: HashSet<Vertex> = p1.iter().copied().collect();
            let prefer: Vec<Vertex> = added
                .iter()
                .flat_map(|e| [e.u, e.v])
                .filter(|v| span.contains(v))
                .collect();
            if added.is_empty() {
                return Ok(RoundOutcome::Retry(RetryReason::NoBoosterHit));
            }
            let targeted = RotationBudget {
                level2_starts: 0,
                ..params.budget
            };
            match posa_trichotomy_with(&state.working, &p1, &targeted, &prefer)? {
                TrichotomyOutcome::ExtendablePath { path, outside } => {
                    splice(&state.working, &mut state.paths.paths, 0, path, outside);
                    return Ok(RoundOutcome::Progress {
                        paths: state.path_count(),
                    });
                }
                TrichotomyOutcome::HamiltonianSpan { cycle } => cycle,
                TrichotomyOutcome::BoosterSet(_) => {
                    return Ok(RoundOutcome::Retry(RetryReason::NoBoosterHit))
                }
            }
        }
    };
    assert!(
        spans_cycle(&state.working, &cycle),
        "closed cycle must lie in the working graph"
    );
    if cycle.len() < params.expander.m {
        state.small_spans += 1;
    }
    if state.path_count() == 1 {
        assert!(
            is_hamilton_cycle(&state.working, &cycle),
            "final cycle must be Hamiltonian"
        );
        return Ok(RoundOutcome::HamiltonCycle(cycle));
    }
    if let Some((head, w)) = open_cycle(&state.working, &state.paths.paths, &cycle) {
        splice(&state.working, &mut state.paths.paths, 0, head, w);
        return Ok(RoundOutcome::Progress {
            paths: state.path_count(),
        });
    }
    // Keep the span closed for the next round.
    state.paths.paths[0] = cycle.clone();
    let Some(layer) = state.take_layer(layers) else {
        return Ok(RoundOutcome::Retry(RetryReason::Exhausted));
    };
    state.working.reveal(layer);
    if let Some((head, w)) = open_cycle(&state.working, &state.paths.paths, &cycle) {
        splice(&state.working, &mut state.paths.paths, 0, head, w);
        return Ok(RoundOutcome::Progress {
            paths: state.path_count(),
        });
    }
    Ok(RoundOutcome::Retry(RetryReason::NoBridge))
}

/// An edge from the cycle on `paths[0]`'s span to another path, preferring
/// path endpoints; returns the opened cycle ending at the attachment vertex.
fn open_cycle<A: Adjacency + ?Sized>(
    g: &A,
    paths: &[Vec<Vertex>],
    cycle: &[Vertex],
) -> Option<(Vec<Vertex>, Vertex)> {
    let owner = owners(paths, g.vertex_count());
    let is_end = |w: Vertex| {
        let p = &paths[owner[w]];
        p[0] == w || p[p.len() - 1] == w
    };
    let mut best: Option<(usize, Vertex)> = None;
    for (j, &c) in cycle.iter().enumerate() {
        for &w in g.neighbors(c) {
            if owner[w] != 0 {
                if is_end(w) {
                    best = Some((j, w));
                    break;
                }
                best.get_or_insert((j, w));
            }
        }
        if matches!(best, Some((_, w)) if is_end(w)) {
            break;
        }
    }
    let (j, w) = best?;
    let mut head = cycle.to_vec();
    head.rotate_left(j + 1);
    Some((head, w))
}
