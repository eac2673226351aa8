//! Multi-round exposure: `G = G1* ∪ G2*`, the low-degree set `S`, the graphs
//! `G1` / `G2`, and the booster layers that refine `G2` per cycle slot.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binomial::{delta_quantile, BinomialError};
use crate::graph::{gnp_with, Adjacency, Edge, Graph, GraphError, Vertex};
use crate::rng;

#[derive(Debug, Error)]
pub enum ExposureError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("beta too large: first-round probability {p1} ≤ 0 for p = {p}")]
    SplitTooWide { p: f64, p1: f64 },
    #[error("cycle budget must be at least 1")]
    ZeroBudget,
    #[error(transparent)]
    Binomial(#[from] BinomialError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The exposure probabilities.
///
/// `(1−p1)(1−p2) = 1−p`, `(1−p3)^k = 1−p2`, and `(1−p4)^layers = 1−p3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitProbabilities {
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub beta: f64,
    pub lambda: f64,
    pub k: u32,
    pub layers: u32,
    /// Set when the two-round split was infeasible and `p1 = 0.9p` was used.
    pub single_round: bool,
}

/// `max(1, ⌊n^{1−λ}⌋)`.
pub fn layer_count(n: usize, lambda: f64) -> u32 {
    let l = (n as f64).powf(1.0 - lambda).floor();
    l.clamp(1.0, u32::MAX as f64) as u32
}

/// `1 − (1−q)^{1/r}` without cancellation.
fn root_split(q: f64, r: f64) -> f64 {
    if q <= 0.0 {
        0.0
    } else if q >= 1.0 {
        1.0
    } else {
        -((-q).ln_1p() / r).exp_m1()
    }
}

fn finish(
    n: usize,
    p: f64,
    p1: f64,
    beta: f64,
    lambda: f64,
    k: u32,
    single_round: bool,
) -> SplitProbabilities {
    let p2 = if p1 >= p || p1 >= 1.0 {
        0.0
    } else {
        ((p - p1) / (1.0 - p1)).clamp(0.0, 1.0)
    };
    let layers = layer_count(n, lambda);
    let p3 = root_split(p2, k as f64);
    let p4 = root_split(p3, layers as f64);
    SplitProbabilities {
        p,
        p1,
        p2,
        p3,
        p4,
        beta,
        lambda,
        k,
        layers,
        single_round,
    }
}

fn check(p: f64, k: u32) -> Result<(), ExposureError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ExposureError::InvalidProbability(p));
    }
    if k == 0 {
        return Err(ExposureError::ZeroBudget);
    }
    Ok(())
}

/// `p1 = p − β√(p ln n / n)` and the derived `p2, p3, p4`.
pub fn split_probabilities(
    n: usize,
    p: f64,
    beta: f64,
    lambda: f64,
    k: u32,
) -> Result<SplitProbabilities, ExposureError> {
    check(p, k)?;
    let shift = beta * (p * (n as f64).ln() / n as f64).sqrt();
    let p1 = p - shift;
    if shift == 0.0 {
        return Ok(finish(n, p, p, beta, lambda, k, false));
    }
    if p1 <= 0.0 {
        return Err(ExposureError::SplitTooWide { p, p1 });
    }
    Ok(finish(n, p, p1, beta, lambda, k, false))
}

/// Like [`split_probabilities`], but falls back to `p1 = 0.9p` instead of failing.
pub fn split_probabilities_total(
    n: usize,
    p: f64,
    beta: f64,
    lambda: f64,
    k: u32,
) -> Result<SplitProbabilities, ExposureError> {
    match split_probabilities(n, p, beta, lambda, k) {
        Err(ExposureError::SplitTooWide { .. }) => Ok(finish(n, p, 0.9 * p, beta, lambda, k, true)),
        other => other,
    }
}

/// Independent samples of `G(n, p1)` and `G(n, p2)`.
pub fn expose_two_round(n: usize, probs: &SplitProbabilities, seed: u64) -> (Graph, Graph) {
    let mut r1 = rng::stream(seed, "exposure/g1", &[n as u64]);
    let mut r2 = rng::stream(seed, "exposure/g2", &[n as u64]);
    (
        gnp_with(&mut r1, n, probs.p1),
        gnp_with(&mut r2, n, probs.p2),
    )
}

/// Splits a realized graph into `G1*` and `G2*` with the conditional law of
/// an edge's round memberships given that it lies in `G1* ∪ G2*`.
pub fn split_realized(g: &Graph, probs: &SplitProbabilities, seed: u64) -> (Graph, Graph) {
    let (p, p1, p2) = (probs.p, probs.p1, probs.p2);
    let both = if p > 0.0 { p1 * p2 / p } else { 0.0 };
    let only_first = if p > 0.0 { p1 * (1.0 - p2) / p } else { 1.0 };
    let mut r = rng::stream(seed, "exposure/realized", &[g.n() as u64]);
    let (mut e1, mut e2) = (Vec::new(), Vec::new());
    for e in g.edges() {
        let x: f64 = r.gen();
        if x < both {
            e1.push(e);
            e2.push(e);
        } else if x < both + only_first {
            e1.push(e);
        } else {
            e2.push(e);
        }
    }
    (
        Graph::from_edge_set(g.n(), e1),
        Graph::from_edge_set(g.n(), e2),
    )
}

/// `G1*, G2*`, the set `S`, and the derived `G1`, `G2`.
#[derive(Debug, Clone)]
pub struct ExposureOutcome {
    pub g1_star: Graph,
    pub g2_star: Graph,
    /// `G1*` plus every `G2*` edge touching `S`.
    pub g1: Graph,
    /// `G2*` with both endpoints outside `S`; `S` vertices are isolated.
    pub g2: Graph,
    pub s_set: Vec<Vertex>,
    pub in_s: Vec<bool>,
    pub threshold: usize,
    pub probs: SplitProbabilities,
    /// `G2*` edges consulted while building `G1` (exactly those touching `S`).
    pub g2_edges_read: usize,
}

impl ExposureOutcome {
    pub fn union(&self) -> Graph {
        self.g1.union(&self.g2).expect("same universe")
    }
}

/// `δ_{n,p} + ⌊α √(np ln n)⌋`.
pub fn s_threshold(n: usize, p: f64, alpha: f64) -> Result<usize, ExposureError> {
    let d = delta_quantile(n as u64, p)? as usize;
    let nf = n as f64;
    let slack = (alpha * (nf * p * nf.ln()).max(0.0).sqrt()).floor();
    Ok(d + slack as usize)
}

pub fn build_g1_and_s(
    g1_star: Graph,
    g2_star: Graph,
    probs: &SplitProbabilities,
    alpha: f64,
) -> Result<ExposureOutcome, ExposureError> {
    let n = g1_star.n();
    if g2_star.n() != n {
        return Err(GraphError::VertexCountMismatch(n, g2_star.n()).into());
    }
    let threshold = s_threshold(n, probs.p, alpha)?;
    let in_s: Vec<bool> = (0..n).map(|v| g1_star.degree(v) <= threshold).collect();
    let s_set: Vec<Vertex> = (0..n).filter(|&v| in_s[v]).collect();

    let mut moved = Vec::new();
    for &v in &s_set {
        for &w in g2_star.neighbors(v) {
            if !in_s[w] || v < w {
                moved.push(Edge::of(v, w));
            }
        }
    }
    let g2_edges_read = moved.len();
    let g1 = g1_star.union(&Graph::from_edge_set(n, moved))?;
    let keep: Vec<bool> = in_s.iter().map(|&s| !s).collect();
    let g2 = g2_star.restrict(&keep);
    Ok(ExposureOutcome {
        g1_star,
        g2_star,
        g1,
        g2,
        s_set,
        in_s,
        threshold,
        probs: *probs,
        g2_edges_read,
    })
}

/// Whether every minimum-degree vertex of `g` lies in `S`.
pub fn min_degree_vertices_in_s(g: &Graph, in_s: &[bool]) -> bool {
    let d = g.min_degree();
    (0..g.n()).filter(|&v| g.degree(v) == d).all(|v| in_s[v])
}

/// Whether two distinct vertices of `S` are joined by a path with at most
/// `max_len` edges in `g`.
pub fn has_short_s_path(g: &Graph, s_set: &[Vertex], in_s: &[bool], max_len: usize) -> bool {
    let mut dist = vec![usize::MAX; g.n()];
    let mut touched = Vec::new();
    let mut queue = VecDeque::new();
    for &src in s_set {
        for &v in &touched {
            dist[v] = usize::MAX;
        }
        touched.clear();
        dist[src] = 0;
        touched.push(src);
        queue.clear();
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            if dist[v] == max_len {
                continue;
            }
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    touched.push(w);
                    if in_s[w] {
                        return true;
                    }
                    queue.push_back(w);
                }
            }
        }
    }
    false
}

/// Identifies booster layer `s` of cycle slot `i` (both 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerKey {
    pub master_seed: u64,
    pub cycle: u32,
    pub step: u32,
}

/// Forward sample of `G(universe, p4)` for one layer key, on the full vertex range `0..n`.
pub fn sample_booster_layer(
    key: LayerKey,
    probs: &SplitProbabilities,
    n: usize,
    universe: &[Vertex],
) -> Graph {
    let mut r = rng::stream(
        key.master_seed,
        "exposure/layer",
        &[key.cycle as u64, key.step as u64],
    );
    let local = gnp_with(&mut r, universe.len(), probs.p4);
    Graph::from_edge_set(
        n,
        local
            .edges()
            .map(|e| Edge::of(universe[e.u], universe[e.v])),
    )
}

/// Index of the first success given at least one success among independent
/// trials with per-trial probability `q` and at-least-one probability `total`.
fn first_success<R: Rng>(rng: &mut R, q: f64, total: f64, cap: u32) -> u32 {
    let u: f64 = rng.gen();
    if q >= 1.0 {
        return 1;
    }
    let t = ((-u * total).ln_1p() / (-q).ln_1p()).ceil();
    if t.is_nan() || t < 1.0 {
        1
    } else if t >= cap as f64 {
        cap
    } else {
        t as u32
    }
}

/// Next success strictly after `from` among trials with probability `q`, or `None` past `cap`.
fn next_success<R: Rng>(rng: &mut R, from: u32, q: f64, cap: u32) -> Option<u32> {
    if q <= 0.0 {
        return None;
    }
    if q >= 1.0 {
        return (from < cap).then_some(from + 1);
    }
    let u: f64 = rng.gen();
    let skip = ((1.0 - u).ln() / (-q).ln_1p()).floor();
    let next = from as f64 + 1.0 + skip;
    (next <= cap as f64).then_some(next as u32)
}

/// The realized `G2` split into cycle slots and, within a slot, into layers.
///
/// Conditional on an edge being in `G2`, its slot memberships and layer
/// memberships are resampled from the product distribution, so the layers of
/// each slot are distributed as independent `G(V∖S, p4)` graphs.
#[derive(Debug, Clone)]
pub struct BoosterLayers {
    probs: SplitProbabilities,
    seed: u64,
    edges: Vec<Edge>,
}

/// Layers of one slot, sorted by layer index.
#[derive(Debug, Clone, Default)]
pub struct SlotLayers {
    layer_of: Vec<u32>,
    edges: Vec<Edge>,
    pub layers: u32,
}

impl SlotLayers {
    /// Layers given explicitly; `layers[s-1]` is layer `s`.
    pub fn from_layers(layers: Vec<Vec<Edge>>) -> Self {
        let count = layers.len() as u32;
        let mut layer_of = Vec::new();
        let mut edges = Vec::new();
        for (s, list) in layers.into_iter().enumerate() {
            for e in list {
                layer_of.push(s as u32 + 1);
                edges.push(e);
            }
        }
        SlotLayers {
            layer_of,
            edges,
            layers: count,
        }
    }

    /// Edges of layer `s` (1-based).
    pub fn layer(&self, s: u32) -> &[Edge] {
        let lo = self.layer_of.partition_point(|&l| l < s);
        let hi = self.layer_of.partition_point(|&l| l <= s);
        &self.edges[lo..hi]
    }

    /// Layers that hold at least one edge, in increasing order.
    pub fn nonempty_layers(&self) -> Vec<u32> {
        let mut out = self.layer_of.clone();
        out.dedup();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn all_edges(&self) -> &[Edge] {
        &self.edges
    }
}

impl BoosterLayers {
    pub fn new(g2: &Graph, probs: &SplitProbabilities, seed: u64) -> Self {
        BoosterLayers {
            probs: *probs,
            seed,
            edges: g2.edges().collect(),
        }
    }

    /// Slots (1-based) containing `e`, in increasing order.
    fn slots_of(&self, e: Edge) -> Vec<u32> {
        let p = &self.probs;
        let mut r = rng::stream(self.seed, "exposure/slot-split", &[e.u as u64, e.v as u64]);
        let mut out = vec![first_success(&mut r, p.p3, p.p2, p.k)];
        while let Some(next) = next_success(&mut r, *out.last().expect("nonempty"), p.p3, p.k) {
            out.push(next);
        }
        out
    }

    /// Layers (1-based) of slot `i` containing `e`, given `e` lies in slot `i`.
    fn layers_of(&self, e: Edge, i: u32) -> Vec<u32> {
        let p = &self.probs;
        let mut r = rng::stream(
            self.seed,
            "exposure/layer-split",
            &[e.u as u64, e.v as u64, i as u64],
        );
        let mut out = vec![first_success(&mut r, p.p4, p.p3, p.layers)];
        while let Some(next) = next_success(&mut r, *out.last().expect("nonempty"), p.p4, p.layers)
        {
            out.push(next);
        }
        out
    }

    /// Materializes slot `i`'s layers; cost is linear in `e(G2)`.
    pub fn slot(&self, i: u32) -> SlotLayers {
        let mut entries: Vec<(u32, Edge)> = Vec::new();
        for &e in &self.edges {
            if self.slots_of(e).contains(&i) {
                for s in self.layers_of(e, i) {
                    entries.push((s, e));
                }
            }
        }
        entries.sort_unstable();
        SlotLayers {
            layer_of: entries.iter().map(|&(s, _)| s).collect(),
            edges: entries.into_iter().map(|(_, e)| e).collect(),
            layers: self.probs.layers,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_gnp;

    #[test]
    fn degenerate_beta_zero() {
        let s = split_probabilities(100, 0.2, 0.0, 0.1, 3).unwrap();
        assert_eq!((s.p1, s.p2, s.p3, s.p4), (0.2, 0.0, 0.0, 0.0));
    }

    #[test]
    fn identities_hold() {
        let n = 10_000usize;
        let p = (n as f64).ln() / n as f64;
        let s = split_probabilities(n, p, 0.01, 0.05, 2).unwrap();
        assert!(((1.0 - s.p1) * (1.0 - s.p2) - (1.0 - p)).abs() < 1e-12);
        assert!(((1.0 - s.p3).powi(2) - (1.0 - s.p2)).abs() < 1e-12);
        assert!(((1.0 - s.p4).powf(s.layers as f64) - (1.0 - s.p3)).abs() < 1e-12);
        assert!(s.p2 >= p - s.p1);
        assert_eq!(s.layers, 6309);
    }

    #[test]
    fn split_matches_high_precision_oracle() {
        // Values from 50-digit arithmetic for n=10^4, p=ln n/n, β=0.01, λ=0.05, k=2.
        let n = 10_000usize;
        let p = (n as f64).ln() / n as f64;
        let s = split_probabilities(n, p, 0.01, 0.05, 2).unwrap();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(s.p1, 9.118_236_968_256_422e-4) < 1e-12, "{}", s.p1);
        assert!(rel(s.p2, 9.218_746_243_255_806e-6) < 1e-10, "{}", s.p2);
        assert!(rel(s.p3, 4.609_383_744_837_157e-6) < 1e-10, "{}", s.p3);
        assert!(rel(s.p4, 7.306_061_763_187_873e-10) < 1e-10, "{}", s.p4);
    }

    #[test]
    fn too_wide_split_errors_or_falls_back() {
        assert!(matches!(
            split_probabilities(100, 0.001, 5.0, 0.1, 1),
            Err(ExposureError::SplitTooWide { .. })
        ));
        let s = split_probabilities_total(100, 0.001, 5.0, 0.1, 1).unwrap();
        assert!(s.single_round);
        assert!((s.p1 - 0.0009).abs() < 1e-15);
        assert!(((1.0 - s.p1) * (1.0 - s.p2) - 0.999).abs() < 1e-12);
        assert!(matches!(
            split_probabilities(10, 0.5, 0.1, 0.1, 0),
            Err(ExposureError::ZeroBudget)
        ));
        assert!(split_probabilities(10, 1.5, 0.1, 0.1, 1).is_err());
    }

    #[test]
    fn zero_probability_exposes_nothing() {
        let s = split_probabilities_total(20, 0.0, 0.25, 0.1, 1).unwrap();
        let (a, b) = expose_two_round(20, &s, 3);
        assert_eq!(a.edge_count() + b.edge_count(), 0);
    }

    #[test]
    fn exposure_is_deterministic() {
        let s = split_probabilities(200, 0.05, 0.25, 0.1, 2).unwrap();
        let x = expose_two_round(200, &s, 9);
        let y = expose_two_round(200, &s, 9);
        assert_eq!(x.0, y.0);
        assert_eq!(x.1, y.1);
    }

    #[test]
    fn g1_and_s_construction() {
        let n = 300;
        let p = 0.03;
        let s = split_probabilities(n, p, 0.25, 0.1, 2).unwrap();
        let (a, b) = expose_two_round(n, &s, 5);
        let out = build_g1_and_s(a.clone(), b.clone(), &s, 0.5).unwrap();
        for v in 0..n {
            assert_eq!(out.in_s[v], a.degree(v) <= out.threshold);
            if out.in_s[v] {
                assert_eq!(out.g1.degree(v), a.union(&b).unwrap().degree(v));
            }
        }
        for e in out.g2.edges() {
            assert!(!out.in_s[e.u] && !out.in_s[e.v]);
        }
        let g = a.union(&b).unwrap();
        assert_eq!(out.union(), g);

        // Saturated threshold puts every vertex in S.
        let all = build_g1_and_s(a.clone(), b.clone(), &s, 1e6).unwrap();
        assert_eq!(all.s_set.len(), n);
        assert_eq!(all.g1, g);
        // Empty second round leaves G1 = G1*.
        let none = build_g1_and_s(a.clone(), Graph::empty(n), &s, 0.5).unwrap();
        assert_eq!(none.g1, a);
    }

    #[test]
    fn short_path_detection() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap();
        let mut in_s = vec![false; 6];
        in_s[0] = true;
        in_s[5] = true;
        assert!(!has_short_s_path(&g, &[0, 5], &in_s, 4));
        assert!(has_short_s_path(&g, &[0, 5], &in_s, 5));
    }

    #[test]
    fn booster_layer_determinism_and_empty() {
        let mut s = split_probabilities(50, 0.2, 0.25, 0.1, 2).unwrap();
        let key = LayerKey {
            master_seed: 1,
            cycle: 1,
            step: 3,
        };
        let uni: Vec<usize> = (10..40).collect();
        assert_eq!(
            sample_booster_layer(key, &s, 50, &uni),
            sample_booster_layer(key, &s, 50, &uni)
        );
        s.p4 = 0.0;
        assert_eq!(sample_booster_layer(key, &s, 50, &uni).edge_count(), 0);
    }

    #[test]
    fn forward_layers_union_to_p3() {
        let mut s = split_probabilities(8, 0.6, 0.25, 0.0, 1).unwrap();
        s.layers = 4;
        s.p4 = root_split(s.p3, 4.0);
        let uni: Vec<usize> = (0..8).collect();
        let seeds = 5000;
        let mut hits = [[0u32; 8]; 8];
        for seed in 0..seeds {
            let mut u = Graph::empty(8);
            for step in 1..=4 {
                let layer = sample_booster_layer(
                    LayerKey {
                        master_seed: seed,
                        cycle: 1,
                        step,
                    },
                    &s,
                    8,
                    &uni,
                );
                u = u.union(&layer).unwrap();
            }
            for e in u.edges() {
                hits[e.u][e.v] += 1;
            }
        }
        let sd = (s.p3 * (1.0 - s.p3) / seeds as f64).sqrt();
        for a in 0..8 {
            for b in a + 1..8 {
                let f = hits[a][b] as f64 / seeds as f64;
                assert!(
                    (f - s.p3).abs() <= 3.5 * sd,
                    "edge {a}-{b}: {f} vs {}",
                    s.p3
                );
            }
        }
    }

    #[test]
    fn conditional_split_has_product_marginals() {
        // Complete G2 on a tiny universe: slot and layer membership of every
        // edge should be distributed as independent Bernoulli trials
        // conditioned on at least one success.
        let mut s = split_probabilities(10, 0.9, 0.25, 0.0, 3).unwrap();
        s.p2 = 0.6;
        s.p3 = root_split(s.p2, 3.0);
        s.layers = 5;
        s.p4 = root_split(s.p3, 5.0);
        let g2 = Graph::complete(10);
        let mut slot1 = 0usize;
        let mut layer1_of_slot1 = 0usize;
        let trials = 400;
        for seed in 0..trials {
            let bl = BoosterLayers::new(&g2, &s, seed);
            let sl = bl.slot(1);
            let present: std::collections::HashSet<Edge> = sl.all_edges().iter().copied().collect();
            slot1 += present.len();
            layer1_of_slot1 += sl.layer(1).len();
        }
        let total = (trials * 45) as f64;
        let want_slot = s.p3 / s.p2;
        let f = slot1 as f64 / total;
        assert!(
            (f - want_slot).abs() < 4.0 * (want_slot * (1.0 - want_slot) / total).sqrt(),
            "{f} vs {want_slot}"
        );
        let want_layer = s.p4 / s.p3;
        let g = layer1_of_slot1 as f64 / slot1 as f64;
        let sd = (want_layer * (1.0 - want_layer) / slot1 as f64).sqrt();
        assert!((g - want_layer).abs() < 4.0 * sd, "{g} vs {want_layer}");
    }

    #[test]
    fn slot_union_recovers_g2() {
        let s = split_probabilities(400, 0.05, 0.25, 0.1, 3).unwrap();
        let g2 = gen_gnp(400, 0.01, 2).unwrap();
        let bl = BoosterLayers::new(&g2, &s, 77);
        let mut seen = std::collections::HashSet::new();
        for i in 1..=3 {
            let sl = bl.slot(i);
            for w in sl.layer_of.windows(2) {
                assert!(w[0] <= w[1]);
            }
            assert!(sl.layer_of.iter().all(|&l| (1..=s.layers).contains(&l)));
            seen.extend(sl.all_edges().iter().copied());
        }
        assert_eq!(seen.len(), g2.edge_count());
    }

    #[test]
    fn realized_split_covers_graph_with_conditional_rates() {
        let s = split_probabilities(200, 0.3, 0.5, 0.1, 2).unwrap();
        let g = gen_gnp(200, 0.3, 5).unwrap();
        let (g1, g2) = split_realized(&g, &s, 9);
        assert_eq!(g1.union(&g2).unwrap(), g);
        let both = g1.edges().filter(|&e| g2.contains_edge(e)).count() as f64;
        let m = g.edge_count() as f64;
        let want = s.p1 * s.p2 / s.p;
        assert!(
            (both / m - want).abs() < 4.0 * (want * (1.0 - want) / m).sqrt(),
            "{} vs {want}",
            both / m
        );
        let want1 = s.p1 / s.p;
        let f1 = g1.edge_count() as f64 / m;
        assert!((f1 - want1).abs() < 4.0 * (want1 * (1.0 - want1) / m).sqrt());
    }

    #[test]
    fn explicit_layers() {
        let sl = SlotLayers::from_layers(vec![
            vec![Edge::of(0, 1)],
            vec![],
            vec![Edge::of(1, 2), Edge::of(2, 3)],
        ]);
        assert_eq!(sl.layers, 3);
        assert_eq!(sl.layer(1), &[Edge::of(0, 1)]);
        assert!(sl.layer(2).is_empty());
        assert_eq!(sl.layer(3).len(), 2);
        assert_eq!(sl.nonempty_layers(), vec![1, 3]);
    }
}
