//! End-to-end packing, certification, and the Monte-Carlo harness.

use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exposure::{
    build_g1_and_s, expose_two_round, has_short_s_path, split_probabilities,
    split_probabilities_total, split_realized, BoosterLayers, ExposureError, ExposureOutcome,
    SplitProbabilities,
};
use crate::graph::{gen_gnp, Adjacency, BipartitePair, Edge, Graph, GraphError, Vertex};
use crate::matching::{
    assemble_path_system, build_inner_matchings, extend_to_perfect, random_ordered_decomposition,
    ComponentStats, InnerMatchings, MatchingError, PathSystem,
};
use crate::posa::{
    merge_round, ExpanderParams, MergeParams, MergeState, PosaError, RetryReason, RotationBudget,
    RoundOutcome, WorkingGraph,
};
use crate::regular::{
    bisection_schedule, build_level_regulars, factor_pair, FactorPolicy, LevelRegulars,
    PairShortfall, RegularError,
};
use crate::report::{Outcome, PackingReport, SplitStats};
use crate::rng;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("the graph needs at least one vertex")]
    NoVertices,
    #[error("config value {key} = {value} must lie in (0, 1)")]
    InvalidConstant { key: &'static str, value: f64 },
    #[error("experiment grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Exposure(#[from] ExposureError),
    #[error(transparent)]
    Regular(#[from] RegularError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Posa(#[from] PosaError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Constants and fallbacks of a packing run; embedded verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PackingConfig {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub c: f64,
    /// Theoretical expansion constant `(α/16)e^{−16/α−1}`; recorded, not used.
    pub eta: f64,
    /// Admissible-range tag; recorded, not used.
    pub epsilon: f64,
    /// Working `m`; `n/8` when absent.
    pub m_override: Option<usize>,
    /// Layers per cycle slot; `⌊n^{1−λ}⌋` when absent.
    pub retry_budget: Option<u32>,
    /// Merging rounds per slot; `8n + layers` when absent.
    pub max_rounds: Option<usize>,
    pub clamp_k: bool,
    pub single_round_fallback: bool,
    pub trim_high: bool,
    pub peel_rounds: usize,
    /// Second-level fixed ends in the rotation trichotomy.
    pub level2_starts: usize,
    pub seed: u64,
    pub record_timing: bool,
}

/// `(α/16)e^{−16/α−1}`.
pub fn theoretical_eta(alpha: f64) -> f64 {
    alpha / 16.0 * (-16.0 / alpha - 1.0).exp()
}

impl Default for PackingConfig {
    fn default() -> Self {
        let alpha = 0.5;
        PackingConfig {
            alpha,
            beta: 0.25,
            lambda: 0.1,
            c: 1.0 / 3.0,
            eta: theoretical_eta(alpha),
            epsilon: 1e-5,
            m_override: None,
            retry_budget: None,
            max_rounds: None,
            clamp_k: true,
            single_round_fallback: true,
            trim_high: false,
            peel_rounds: 3,
            level2_starts: 4,
            seed: 0,
            record_timing: false,
        }
    }
}

impl PackingConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        PackingConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        for (key, value) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("lambda", self.lambda),
            ("c", self.c),
            ("eta", self.eta),
            ("epsilon", self.epsilon),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(PipelineError::InvalidConstant { key, value });
            }
        }
        Ok(())
    }

    pub fn working_m(&self, n: usize) -> usize {
        self.m_override.unwrap_or(n / 8).max(1)
    }

    fn policy(&self) -> FactorPolicy {
        FactorPolicy {
            trim_high: self.trim_high,
            c: self.c,
            peel_rounds: self.peel_rounds,
            clamp_k: self.clamp_k,
        }
    }

    /// Split probabilities for `k` slots, falling back to a single round if enabled.
    pub fn probabilities(
        &self,
        n: usize,
        p: f64,
        k: usize,
    ) -> Result<SplitProbabilities, ExposureError> {
        let k = k.max(1) as u32;
        if self.single_round_fallback {
            split_probabilities_total(n, p, self.beta, self.lambda, k)
        } else {
            split_probabilities(n, p, self.beta, self.lambda, k)
        }
    }
}

/// A report together with the graph it certifies.
#[derive(Debug, Clone)]
pub struct Packing {
    pub report: PackingReport,
    pub graph: Graph,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerificationFailure {
    /// Cycle `cycle` is not a Hamilton cycle (wrong length, repeated or unknown vertex).
    NotHamiltonian {
        cycle: usize,
    },
    MissingEdge {
        cycle: usize,
        edge: Edge,
    },
    SharedEdge {
        edge: Edge,
        first: usize,
        second: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub pass: bool,
    pub failures: Vec<VerificationFailure>,
}

/// Checks that every cycle is a Hamilton cycle of `g` and that no edge is used twice.
pub fn verify_packing(g: &Graph, cycles: &[Vec<Vertex>]) -> VerificationResult {
    let n = g.n();
    let mut failures = Vec::new();
    let mut owner: std::collections::HashMap<Edge, usize> = std::collections::HashMap::new();
    for (i, c) in cycles.iter().enumerate() {
        let mut seen = vec![false; n];
        let distinct = c
            .iter()
            .all(|&v| v < n && !std::mem::replace(&mut seen[v], true));
        if !distinct || c.len() != n || n < 3 {
            failures.push(VerificationFailure::NotHamiltonian { cycle: i });
            continue;
        }
        for j in 0..n {
            let e = Edge::of(c[j], c[(j + 1) % n]);
            if !g.contains_edge(e) {
                failures.push(VerificationFailure::MissingEdge { cycle: i, edge: e });
            }
            if let Some(&first) = owner.get(&e) {
                failures.push(VerificationFailure::SharedEdge {
                    edge: e,
                    first,
                    second: i,
                });
            } else {
                owner.insert(e, i);
            }
        }
    }
    VerificationResult {
        pass: failures.is_empty(),
        failures,
    }
}

fn check_inputs(n: usize, p: f64, config: &PackingConfig) -> Result<(), PipelineError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PipelineError::InvalidProbability(p));
    }
    if n == 0 {
        return Err(PipelineError::NoVertices);
    }
    config.validate()
}

/// Samples `G = G1* ∪ G2*` and packs it.
pub fn pack(n: usize, p: f64, config: &PackingConfig) -> Result<Packing, PipelineError> {
    Ok(pack_detailed(n, p, config)?.0)
}

/// Packs a given graph, splitting its edges into the two exposure rounds.
pub fn pack_graph(g: &Graph, p: f64, config: &PackingConfig) -> Result<Packing, PipelineError> {
    let n = g.n();
    check_inputs(n, p, config)?;
    let start = Instant::now();
    match config.probabilities(n, p, 1) {
        Ok(probs) => {
            let (g1s, g2s) = split_realized(g, &probs, rng::sub_seed(config.seed, "split", &[]));
            Ok(run(g1s, g2s, p, config, start).0)
        }
        Err(e) => Ok(failed_before_split(g.clone(), p, config, e)),
    }
}

fn pack_detailed(
    n: usize,
    p: f64,
    config: &PackingConfig,
) -> Result<(Packing, Option<ExposureOutcome>), PipelineError> {
    check_inputs(n, p, config)?;
    let start = Instant::now();
    match config.probabilities(n, p, 1) {
        Ok(probs) => {
            let (g1s, g2s) = expose_two_round(n, &probs, config.seed);
            Ok(run(g1s, g2s, p, config, start))
        }
        Err(e) => Ok((
            failed_before_split(gen_gnp(n, p, config.seed)?, p, config, e),
            None,
        )),
    }
}

fn failed_before_split(graph: Graph, p: f64, config: &PackingConfig, e: ExposureError) -> Packing {
    let mut report = PackingReport::empty(graph.n(), p, config.clone());
    report.delta = graph.min_degree();
    report.k_target = report.delta / 2;
    report.outcome = if report.k_target == 0 {
        Outcome::Full
    } else {
        Outcome::Failed
    };
    report.notes.push(format!("split: {e}"));
    Packing { report, graph }
}

fn run(
    g1s: Graph,
    g2s: Graph,
    p: f64,
    config: &PackingConfig,
    start: Instant,
) -> (Packing, Option<ExposureOutcome>) {
    let n = g1s.n();
    let graph = g1s.union(&g2s).expect("rounds share the vertex set");
    let mut report = PackingReport::empty(n, p, config.clone());
    report.delta = graph.min_degree();
    report.k_target = report.delta / 2;
    let exposure = match stages(&graph, g1s, g2s, p, config, &mut report) {
        Ok(ex) => Some(ex),
        Err((ex, e)) => {
            report.notes.push(e.to_string());
            report.outcome = Outcome::Failed;
            ex
        }
    };
    if config.record_timing {
        report.timing_ms = start.elapsed().as_millis() as u64;
    }
    (Packing { report, graph }, exposure)
}

type StageFailure = (Option<ExposureOutcome>, PipelineError);

fn stages(
    graph: &Graph,
    g1s: Graph,
    g2s: Graph,
    p: f64,
    config: &PackingConfig,
    report: &mut PackingReport,
) -> Result<ExposureOutcome, StageFailure> {
    let n = graph.n();
    let k = report.k_target;
    let probs = config
        .probabilities(n, p, k)
        .map_err(|e| (None, e.into()))?;
    report.stages.split = SplitStats {
        p1: probs.p1,
        p2: probs.p2,
        p3: probs.p3,
        p4: probs.p4,
        s_size: 0,
        single_round: probs.single_round,
    };
    let ex = build_g1_and_s(g1s, g2s, &probs, config.alpha).map_err(|e| (None, e.into()))?;
    report.stages.split.s_size = ex.s_set.len();
    if k == 0 {
        report.outcome = Outcome::Full;
        return Ok(ex);
    }
    let stage = match build_path_systems(&ex.g1, p, k, config) {
        Ok(s) => s,
        Err(e) => return Err((Some(ex), e)),
    };
    report.stages.factors.shortfalls = stage.shortfalls;
    report.stages.paths.counts = stage.systems.iter().map(PathSystem::len).collect();
    report.stages.paths.cycles_closed = stage.stats.iter().map(|s| s.cycles_closed).collect();
    let systems = stage.systems;
    if let Err(e) = merge_all(graph, &ex, &probs, systems, config, report) {
        return Err((Some(ex), e));
    }
    let verdict = verify_packing(graph, &report.cycles);
    let r = report.cycles.len();
    assert!(2 * r <= report.delta, "degree budget");
    report.outcome = if !verdict.pass {
        report
            .notes
            .push(format!("verification failed: {:?}", verdict.failures));
        Outcome::Failed
    } else if r == k {
        Outcome::Full
    } else if r > 0 {
        Outcome::Partial(r)
    } else {
        Outcome::Failed
    };
    Ok(ex)
}

/// Everything built before merging: the inner matchings, the top pair, and
/// one path system per cycle slot.
#[derive(Debug, Clone)]
pub struct PathStage {
    pub inner: InnerMatchings,
    pub a1: Vec<Vertex>,
    pub a2: Vec<Vertex>,
    pub systems: Vec<PathSystem>,
    pub stats: Vec<ComponentStats>,
    pub shortfalls: Vec<PairShortfall>,
}

/// Path systems `P_1 … P_k` from the inner matchings and the top-level factor of `g1`.
pub fn build_path_systems(
    g1: &Graph,
    p: f64,
    k: usize,
    config: &PackingConfig,
) -> Result<PathStage, PipelineError> {
    let n = g1.n();
    let seed = config.seed;
    let policy = config.policy();
    let schedule = bisection_schedule(n, p, config.c, seed)?;
    let levels: Vec<LevelRegulars> = (2..=schedule.ell)
        .map(|i| build_level_regulars(g1, &schedule, i, &policy, seed))
        .collect::<Result<_, _>>()?;
    let mut shortfalls: Vec<PairShortfall> = levels
        .iter()
        .flat_map(|l| {
            l.report
                .iter()
                .filter(|s| s.achieved_k < s.target_k)
                .cloned()
        })
        .collect();
    let inner = build_inner_matchings(&levels, k)?;

    let top = schedule.level(1)?;
    let (a0, a1, a2) = (&top.parts[0], &top.parts[1], &top.parts[2]);
    let bp = BipartitePair::from_graph(g1, a1, a2)?;
    let pf = factor_pair(
        &bp,
        k,
        p,
        &policy,
        &mut rng::stream(seed, "top-factor", &[]),
    )?;
    if pf.achieved_k < k {
        shortfalls.insert(
            0,
            PairShortfall {
                level: 1,
                pair: 1,
                target_k: k,
                achieved_k: pf.achieved_k,
                span: pf.sub.span(),
            },
        );
    }
    let ns = random_ordered_decomposition(&pf.sub, &mut rng::stream(seed, "decomposition", &[]))?;

    let mut systems = Vec::with_capacity(k);
    let mut stats = Vec::with_capacity(k);
    for i in 0..k {
        let m_i = inner.matchings.get(i).cloned().unwrap_or_default();
        let n_i = ns.get(i).cloned().unwrap_or_default();
        let ext = extend_to_perfect(
            &n_i,
            a1,
            a2,
            &mut rng::stream(seed, "extension", &[i as u64]),
        )?;
        let (mut ps, st) = assemble_path_system(
            &m_i,
            &ext,
            a1,
            a2,
            &mut rng::stream(seed, "cycle-break", &[i as u64]),
        )?;
        ps.paths.extend(a0.iter().map(|&v| vec![v]));
        systems.push(ps);
        stats.push(st);
    }
    Ok(PathStage {
        inner,
        a1: a1.clone(),
        a2: a2.clone(),
        systems,
        stats,
        shortfalls,
    })
}

/// Merges each slot in turn against `Γ_i = ⋃_{j<i} C_j ∪ ⋃_{j>i} P_j`.
fn merge_all(
    graph: &Graph,
    ex: &ExposureOutcome,
    probs: &SplitProbabilities,
    systems: Vec<PathSystem>,
    config: &PackingConfig,
    report: &mut PackingReport,
) -> Result<(), PipelineError> {
    let n = graph.n();
    let path_edges: Vec<Vec<Edge>> = systems.iter().map(|ps| ps.edges().collect()).collect();
    let layers = BoosterLayers::new(&ex.g2, probs, rng::sub_seed(config.seed, "layers", &[]));
    let params = MergeParams {
        expander: ExpanderParams::new(config.working_m(n), 2.0)?,
        budget: RotationBudget {
            per_end: None,
            level2_starts: config.level2_starts,
        },
        normalize_moves: 4 * n,
    };
    let mut cycle_edges: Vec<Edge> = Vec::new();
    for (i, ps) in systems.into_iter().enumerate() {
        let gamma: Vec<Edge> = cycle_edges
            .iter()
            .copied()
            .chain(path_edges[i + 1..].iter().flatten().copied())
            .collect();
        let working = WorkingGraph::new(&ex.g1, gamma.iter().copied());
        let mut state = MergeState::new(ps, working, ex.in_s.clone(), report.delta)?;
        if state.contract_violations > 0 {
            report.notes.push(format!(
                "slot {}: forbidden graph has maximum degree {} > δ − 2",
                i + 1,
                state.working.gamma_max_degree()
            ));
        }
        let mut slot = layers.slot(i as u32 + 1);
        if let Some(b) = config.retry_budget {
            slot.layers = slot.layers.min(b);
        }
        let cap = config.max_rounds.unwrap_or(8 * n + slot.layers as usize);
        let mut retries = 0;
        loop {
            if state.rounds >= cap {
                report.notes.push(format!(
                    "slot {}: round cap {cap} reached with {} paths",
                    i + 1,
                    state.path_count()
                ));
                break;
            }
            match merge_round(&mut state, &slot, &params)? {
                RoundOutcome::HamiltonCycle(c) => {
                    let gamma_set: std::collections::HashSet<Edge> =
                        gamma.iter().copied().collect();
                    assert!((0..n).all(|j| {
                        let e = Edge::of(c[j], c[(j + 1) % n]);
                        graph.contains_edge(e) && !gamma_set.contains(&e)
                    }));
                    cycle_edges.extend((0..n).map(|j| Edge::of(c[j], c[(j + 1) % n])));
                    report.cycles.push(c);
                    break;
                }
                RoundOutcome::Progress { .. } => {}
                RoundOutcome::Retry(RetryReason::Exhausted) => {
                    report.notes.push(format!(
                        "slot {}: layers exhausted with {} paths",
                        i + 1,
                        state.path_count()
                    ));
                    break;
                }
                RoundOutcome::Retry(_) => retries += 1,
            }
        }
        report.stages.merge.layers_spent.push(state.layers_spent);
        report
            .stages
            .merge
            .booster_counts
            .push(state.booster_counts.iter().sum());
        report.stages.merge.retries.push(retries);
    }
    Ok(())
}

/// Densest observed `e(A) / (|A| √(np ln n))` over small vertex sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityStat {
    pub size_cap: usize,
    pub sets_checked: usize,
    pub max_ratio: f64,
    pub exceeds_gamma: bool,
    /// Whether `p ≥ ln n / n`.
    pub in_regime: bool,
}

/// `2γe^{−2/γ−1} √(n ln n / p)`, floored.
pub fn density_size_cap(n: usize, p: f64, gamma: f64) -> usize {
    let nf = n as f64;
    if p <= 0.0 || n < 2 {
        return n;
    }
    (2.0 * gamma * (-2.0 / gamma - 1.0).exp() * (nf * nf.ln() / p).sqrt()).floor() as usize
}

fn induced_edges(g: &Graph, set: &[Vertex], mark: &mut [bool]) -> usize {
    set.iter().for_each(|&v| mark[v] = true);
    let e = set
        .iter()
        .map(|&v| g.neighbors(v).iter().filter(|&&w| mark[w]).count())
        .sum::<usize>()
        / 2;
    set.iter().for_each(|&v| mark[v] = false);
    e
}

/// Random sets up to the size cap plus greedy dense sets peeled from BFS balls.
pub fn check_sparse_density(
    g: &Graph,
    p: f64,
    gamma: f64,
    samples: usize,
    seed: u64,
) -> DensityStat {
    let n = g.n();
    let nf = n as f64;
    let scale = (nf * p * nf.ln()).max(0.0).sqrt();
    let cap = density_size_cap(n, p, gamma).min(n);
    let mut stat = DensityStat {
        size_cap: cap,
        sets_checked: 0,
        max_ratio: 0.0,
        exceeds_gamma: false,
        in_regime: n >= 2 && p >= nf.ln() / nf,
    };
    if cap == 0 || scale == 0.0 {
        return stat;
    }
    let mut mark = vec![false; n];
    let record = |set: &[Vertex], stat: &mut DensityStat, mark: &mut [bool]| {
        stat.sets_checked += 1;
        if set.is_empty() {
            return;
        }
        let ratio = induced_edges(g, set, mark) as f64 / (set.len() as f64 * scale);
        if ratio > stat.max_ratio {
            stat.max_ratio = ratio;
        }
    };
    let mut r = rng::stream(seed, "density", &[n as u64]);
    for _ in 0..samples {
        let t = r.gen_range(1..=cap);
        let set: Vec<Vertex> = sample(&mut r, n, t).into_vec();
        record(&set, &mut stat, &mut mark);
    }
    // Greedy: BFS ball of size 4·cap around a high-degree or random root,
    // then repeatedly drop the vertex of smallest inner degree.
    let mut roots: Vec<Vertex> = (0..n).collect();
    roots.sort_by_key(|&v| std::cmp::Reverse(g.degree(v)));
    roots.truncate(16);
    roots.extend((0..16).map(|_| r.gen_range(0..n)));
    for root in roots {
        let mut ball = vec![root];
        let mut inside = vec![false; n];
        inside[root] = true;
        let mut head = 0;
        while head < ball.len() && ball.len() < 4 * cap {
            let v = ball[head];
            head += 1;
            for &w in g.neighbors(v) {
                if !inside[w] && ball.len() < 4 * cap {
                    inside[w] = true;
                    ball.push(w);
                }
            }
        }
        while !ball.is_empty() {
            if ball.len() <= cap {
                record(&ball, &mut stat, &mut mark);
            }
            let (idx, _) = ball
                .iter()
                .enumerate()
                .min_by_key(|&(_, &v)| g.neighbors(v).iter().filter(|&&w| inside[w]).count())
                .expect("nonempty");
            inside[ball.swap_remove(idx)] = false;
        }
    }
    stat.exceeds_gamma = stat.max_ratio > gamma;
    stat
}

/// One trial of [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub delta: usize,
    pub delta_in_window: bool,
    pub s_size: usize,
    pub s_small: bool,
    pub s_separated: bool,
    pub k_target: usize,
    pub outcome: Option<Outcome>,
    pub cycles: usize,
    pub cycles_closed_max: Option<usize>,
    pub timing_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAggregate {
    pub n: usize,
    pub p: f64,
    pub trials: usize,
    pub delta_window_rate: f64,
    pub s_small_rate: f64,
    pub separated_rate: f64,
    /// Fraction of packed trials with every `cycles_closed ≤ 5√n`.
    pub cycles_closed_ok_rate: Option<f64>,
    pub full_rate: Option<f64>,
    /// Fraction with at least `k_target − 1` cycles.
    pub near_full_rate: Option<f64>,
    pub mean_timing_ms: f64,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub config: PackingConfig,
    pub points: Vec<PointAggregate>,
}

/// `[np − 2√(np ln n), np − ½√(np ln n)]`.
pub fn min_degree_window(n: usize, p: f64) -> (f64, f64) {
    let nf = n as f64;
    let mu = nf * p;
    let s = (mu * nf.ln()).max(0.0).sqrt();
    (mu - 2.0 * s, mu - 0.5 * s)
}

fn trial(
    n: usize,
    p: f64,
    config: &PackingConfig,
    pack_it: bool,
) -> Result<TrialRecord, PipelineError> {
    let (lo, hi) = min_degree_window(n, p);
    let (delta, ex, packed) = if pack_it {
        let (packing, ex) = pack_detailed(n, p, config)?;
        (packing.report.delta, ex, Some(packing.report))
    } else {
        check_inputs(n, p, config)?;
        let probs = config.probabilities(n, p, 1)?;
        let (g1s, g2s) = expose_two_round(n, &probs, config.seed);
        let delta = g1s.union(&g2s)?.min_degree();
        (
            delta,
            Some(build_g1_and_s(g1s, g2s, &probs, config.alpha)?),
            None,
        )
    };
    let (s_size, s_separated) = ex.as_ref().map_or((0, true), |ex| {
        (
            ex.s_set.len(),
            !has_short_s_path(&ex.g1, &ex.s_set, &ex.in_s, 4),
        )
    });
    Ok(TrialRecord {
        seed: config.seed,
        delta,
        delta_in_window: (lo..=hi).contains(&(delta as f64)),
        s_size,
        s_small: s_size as f64 <= (n as f64).powf(0.1),
        s_separated,
        k_target: delta / 2,
        outcome: packed.as_ref().map(|r| r.outcome),
        cycles: packed.as_ref().map_or(0, |r| r.cycles.len()),
        cycles_closed_max: packed.as_ref().map(|r| {
            r.stages
                .paths
                .cycles_closed
                .iter()
                .copied()
                .max()
                .unwrap_or(0)
        }),
        timing_ms: packed.as_ref().map_or(0, |r| r.timing_ms),
    })
}

/// Runs `trials` seeds per grid point; with `pack_it` false only the
/// exposure-level statistics are gathered.
pub fn run_experiment(
    grid: &[(usize, f64)],
    trials: usize,
    config: &PackingConfig,
    pack_it: bool,
) -> Result<Aggregate, PipelineError> {
    if grid.is_empty() {
        return Err(PipelineError::EmptyGrid);
    }
    config.validate()?;
    let mut points = Vec::with_capacity(grid.len());
    for (idx, &(n, p)) in grid.iter().enumerate() {
        let records: Vec<TrialRecord> = (0..trials)
            .into_par_iter()
            .map(|t| {
                trial(
                    n,
                    p,
                    &config.with_seed(rng::sub_seed(config.seed, "trial", &[idx as u64, t as u64])),
                    pack_it,
                )
            })
            .collect::<Result<_, _>>()?;
        let rate = |f: &dyn Fn(&TrialRecord) -> bool| {
            if trials == 0 {
                0.0
            } else {
                records.iter().filter(|r| f(r)).count() as f64 / trials as f64
            }
        };
        let bound = 5.0 * (n as f64).sqrt();
        let packed = pack_it && trials > 0;
        points.push(PointAggregate {
            n,
            p,
            trials,
            delta_window_rate: rate(&|r| r.delta_in_window),
            s_small_rate: rate(&|r| r.s_small),
            separated_rate: rate(&|r| r.s_separated),
            cycles_closed_ok_rate: packed
                .then(|| rate(&|r| r.cycles_closed_max.is_some_and(|c| c as f64 <= bound))),
            full_rate: packed.then(|| rate(&|r| r.outcome == Some(Outcome::Full))),
            near_full_rate: packed.then(|| {
                rate(&|r| {
                    r.outcome
                        .is_some_and(|o| o != Outcome::Failed || r.k_target <= 1)
                        && r.cycles + 1 >= r.k_target
                })
            }),
            mean_timing_ms: if trials == 0 {
                0.0
            } else {
                records.iter().map(|r| r.timing_ms as f64).sum::<f64>() / trials as f64
            },
            records,
        });
    }
    Ok(Aggregate {
        config: config.clone(),
        points,
    })
}
