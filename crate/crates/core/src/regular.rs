//! Degree-window trimming, k-factors of bipartite pairs, and the nested
//! bisection schedule that feeds the inner matchings.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::Dinic;
use crate::graph::{BipartitePair, Edge, Graph, GraphError, Vertex};
use crate::rng::{self, StageRng};

#[derive(Debug, Error)]
pub enum RegularError {
    #[error("sides differ in size ({0} vs {1})")]
    Unbalanced(usize, usize),
    #[error("schedule has no level {0}")]
    NoSuchLevel(usize),
    #[error("schedule needs 0 < p < 1, got {0}")]
    InvalidProbability(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Allowed degrees `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeWindow {
    pub lo: usize,
    pub hi: usize,
}

impl DegreeWindow {
    /// `[np − c√(np ln n), np + c√(np ln n)]` for a pair with `n` vertices per side.
    pub fn around_mean(n: usize, p: f64, c: f64) -> Self {
        let np = n as f64 * p;
        let half = c * (np * (n as f64).ln()).max(0.0).sqrt();
        DegreeWindow {
            lo: (np - half).ceil().max(0.0) as usize,
            hi: (np + half).floor().max(0.0) as usize,
        }
    }

    pub fn at_least(k: usize) -> Self {
        DegreeWindow {
            lo: k,
            hi: usize::MAX,
        }
    }

    pub fn contains(&self, d: usize) -> bool {
        self.lo <= d && d <= self.hi
    }
}

/// Abort threshold `n^{1−c²/66}/2`, rounded up.
pub fn default_z_cap(n: usize, c: f64) -> usize {
    ((n as f64).powf(1.0 - c * c / 66.0) / 2.0).ceil() as usize
}

/// Result of [`trim_balanced`]. Vertex ids in the removal lists are global.
#[derive(Debug, Clone)]
pub struct TrimResult {
    /// Pair induced on the surviving `(A0, B0)`.
    pub h: BipartitePair,
    /// Local indices (into the input pair) of the survivors.
    pub kept_left: Vec<usize>,
    pub kept_right: Vec<usize>,
    /// `(violator, partner)` pairs evicted for low degree.
    pub removed_minus: Vec<(Vertex, Vertex)>,
    /// `(violator, partner)` pairs evicted for high degree.
    pub removed_plus: Vec<(Vertex, Vertex)>,
    pub z_cap: usize,
    pub aborted: bool,
}

/// Swap-remove set of active local ids, for O(1) uniform picks.
struct ActiveSet {
    items: Vec<usize>,
    pos: Vec<usize>,
}

impl ActiveSet {
    fn full(n: usize) -> Self {
        ActiveSet {
            items: (0..n).collect(),
            pos: (0..n).collect(),
        }
    }

    fn contains(&self, x: usize) -> bool {
        self.pos[x] != usize::MAX
    }

    fn remove(&mut self, x: usize) {
        let i = self.pos[x];
        let last = *self.items.last().expect("nonempty");
        self.items.swap_remove(i);
        if last != x {
            self.pos[last] = i;
        }
        self.pos[x] = usize::MAX;
    }

    fn pick<R: Rng>(&self, rng: &mut R) -> Option<usize> {
        self.items.choose(rng).copied()
    }
}

/// Evicts low- and high-degree vertices in balanced pairs until every
/// surviving degree lies in `window` or a removed class reaches `z_cap`.
///
/// Each violator is evicted together with a uniformly random active vertex
/// from the opposite side.
pub fn trim_balanced<R: Rng>(
    bp: &BipartitePair,
    window: DegreeWindow,
    z_cap: usize,
    rng: &mut R,
) -> Result<TrimResult, RegularError> {
    let (nl, nr) = (bp.left_len(), bp.right_len());
    if nl != nr {
        return Err(RegularError::Unbalanced(nl, nr));
    }
    // Combined ids: left i -> i, right j -> nl + j.
    let mut deg: Vec<usize> = (0..nl)
        .map(|i| bp.left_neighbors(i).len())
        .chain((0..nr).map(|j| bp.right_neighbors(j).len()))
        .collect();
    let mut sides = [ActiveSet::full(nl), ActiveSet::full(nr)];
    let mut low: Vec<usize> = (0..nl + nr).filter(|&x| deg[x] < window.lo).collect();
    let mut high: Vec<usize> = (0..nl + nr).filter(|&x| deg[x] > window.hi).collect();
    low.reverse();
    high.reverse();
    let mut minus = Vec::new();
    let mut plus = Vec::new();
    let mut aborted = false;

    let global = |x: usize| if x < nl { bp.left[x] } else { bp.right[x - nl] };

    let evict =
        |x: usize, sides: &mut [ActiveSet; 2], deg: &mut Vec<usize>, low: &mut Vec<usize>| {
            let (side, local) = if x < nl { (0, x) } else { (1, x - nl) };
            sides[side].remove(local);
            let nbrs: &[usize] = if side == 0 {
                bp.left_neighbors(local)
            } else {
                bp.right_neighbors(local)
            };
            for &y in nbrs {
                let (oside, oid) = if side == 0 { (1, nl + y) } else { (0, y) };
                if sides[oside].contains(y) {
                    deg[oid] -= 1;
                    if deg[oid] + 1 == window.lo {
                        low.push(oid);
                    }
                }
            }
        };

    let is_active = |sides: &[ActiveSet; 2], x: usize| {
        if x < nl {
            sides[0].contains(x)
        } else {
            sides[1].contains(x - nl)
        }
    };

    loop {
        if minus.len() >= z_cap || plus.len() >= z_cap {
            aborted = true;
            break;
        }
        let mut moved = false;
        while let Some(x) = low.pop() {
            if is_active(&sides, x) && deg[x] < window.lo {
                evict(x, &mut sides, &mut deg, &mut low);
                let other = if x < nl { 1 } else { 0 };
                let partner = sides[other].pick(rng).expect("balanced sides");
                let pid = if other == 1 { nl + partner } else { partner };
                evict(pid, &mut sides, &mut deg, &mut low);
                minus.push((global(x), global(pid)));
                moved = true;
                break;
            }
        }
        while let Some(x) = high.pop() {
            if is_active(&sides, x) && deg[x] > window.hi {
                evict(x, &mut sides, &mut deg, &mut low);
                let other = if x < nl { 1 } else { 0 };
                let partner = sides[other].pick(rng).expect("balanced sides");
                let pid = if other == 1 { nl + partner } else { partner };
                evict(pid, &mut sides, &mut deg, &mut low);
                plus.push((global(x), global(pid)));
                moved = true;
                break;
            }
        }
        if !moved {
            break;
        }
    }

    let mut kept_left: Vec<usize> = sides[0].items.clone();
    let mut kept_right: Vec<usize> = sides[1].items.clone();
    kept_left.sort_unstable();
    kept_right.sort_unstable();
    let h = bp.induced(&kept_left, &kept_right);
    Ok(TrimResult {
        h,
        kept_left,
        kept_right,
        removed_minus: minus,
        removed_plus: plus,
        z_cap,
        aborted,
    })
}

/// `e(X, Y) − k(|X| + |Y| − n)` for local index sets of a pair with `n` vertices per side.
pub fn bal_deficiency(bp: &BipartitePair, k: usize, x: &[usize], y: &[usize]) -> i64 {
    let n = bp.left_len() as i64;
    bp.cross_count(x, y) as i64 - k as i64 * (x.len() as i64 + y.len() as i64 - n)
}

/// A bipartite graph that is exactly `k`-regular on its span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularSubgraph {
    pub k: usize,
    /// The spanned vertices and the factor's edges.
    pub pair: BipartitePair,
}

impl RegularSubgraph {
    pub fn span(&self) -> usize {
        self.pair.left_len() + self.pair.right_len()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.pair.edges()
    }

    pub fn is_regular(&self) -> bool {
        self.pair.left_len() == self.pair.right_len()
            && (0..self.pair.left_len()).all(|i| self.pair.left_neighbors(i).len() == self.k)
            && (0..self.pair.right_len()).all(|j| self.pair.right_neighbors(j).len() == self.k)
    }
}

/// Why no k-factor exists: the maximum flow falls short of `k·|A|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorCertificate {
    pub flow: i64,
    pub required: i64,
    /// Left / right local vertices whose flow is below `k`.
    pub unsaturated_left: Vec<usize>,
    pub unsaturated_right: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactorSearch {
    Found(RegularSubgraph),
    Absent(FactorCertificate),
}

impl FactorSearch {
    pub fn found(self) -> Option<RegularSubgraph> {
        match self {
            FactorSearch::Found(h) => Some(h),
            FactorSearch::Absent(_) => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, FactorSearch::Found(_))
    }
}

/// Spanning k-factor of a balanced pair via max flow, or a certificate of absence.
pub fn extract_k_factor(bp: &BipartitePair, k: usize) -> Result<FactorSearch, RegularError> {
    let n = bp.left_len();
    if n != bp.right_len() {
        return Err(RegularError::Unbalanced(n, bp.right_len()));
    }
    let all_left: Vec<usize> = (0..n).collect();
    let all_right: Vec<usize> = (0..n).collect();
    if k > n {
        return Ok(FactorSearch::Absent(FactorCertificate {
            flow: 0,
            required: (k * n) as i64,
            unsaturated_left: all_left,
            unsaturated_right: all_right,
        }));
    }
    if k == 0 {
        let pair =
            BipartitePair::from_local_edges(bp.left.clone(), bp.right.clone(), std::iter::empty())?;
        return Ok(FactorSearch::Found(RegularSubgraph { k, pair }));
    }
    let (s, t) = (2 * n, 2 * n + 1);
    let mut d = Dinic::new(2 * n + 2);
    let src: Vec<_> = (0..n).map(|i| d.add_edge(s, i, k as i64)).collect();
    let snk: Vec<_> = (0..n).map(|j| d.add_edge(n + j, t, k as i64)).collect();
    let mut mids = Vec::with_capacity(bp.edge_count());
    for (i, j) in bp.local_edges() {
        mids.push((i, j, d.add_edge(i, n + j, 1)));
    }
    let flow = d.max_flow(s, t);
    let required = (k * n) as i64;
    if flow < required {
        return Ok(FactorSearch::Absent(FactorCertificate {
            flow,
            required,
            unsaturated_left: (0..n).filter(|&i| d.flow(src[i]) < k as i64).collect(),
            unsaturated_right: (0..n).filter(|&j| d.flow(snk[j]) < k as i64).collect(),
        }));
    }
    let chosen = mids
        .into_iter()
        .filter(|&(_, _, id)| d.flow(id) == 1)
        .map(|(i, j, _)| (i, j));
    let pair = BipartitePair::from_local_edges(bp.left.clone(), bp.right.clone(), chosen)?;
    let h = RegularSubgraph { k, pair };
    assert!(h.is_regular(), "flow decomposition must be k-regular");
    Ok(FactorSearch::Found(h))
}

/// Smallest `bal_deficiency` over `samples` random `(X, Y)` pairs.
pub fn sampled_min_bal<R: Rng>(bp: &BipartitePair, k: usize, samples: usize, rng: &mut R) -> i64 {
    let n = bp.left_len();
    let mut best = i64::MAX;
    for _ in 0..samples {
        let qx: f64 = rng.gen();
        let qy: f64 = rng.gen();
        let x: Vec<usize> = (0..n).filter(|_| rng.gen::<f64>() < qx).collect();
        let y: Vec<usize> = (0..bp.right_len())
            .filter(|_| rng.gen::<f64>() < qy)
            .collect();
        best = best.min(bal_deficiency(bp, k, &x, &y));
    }
    best
}

/// Knobs for [`factor_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorPolicy {
    /// Also evict vertices above the upper window edge.
    pub trim_high: bool,
    /// Window constant for the upper edge.
    pub c: f64,
    /// Rounds of removing flow-unsaturated vertices before lowering `k`.
    pub peel_rounds: usize,
    /// Lower `k` to the largest feasible value when the target fails.
    pub clamp_k: bool,
}

impl Default for FactorPolicy {
    fn default() -> Self {
        FactorPolicy {
            trim_high: false,
            c: 1.0 / 3.0,
            peel_rounds: 3,
            clamp_k: true,
        }
    }
}

/// Outcome of [`factor_pair`]: a regular subgraph with degree `achieved_k ≤ target_k`.
#[derive(Debug, Clone)]
pub struct PairFactor {
    pub target_k: usize,
    pub achieved_k: usize,
    pub sub: RegularSubgraph,
    pub trimmed_pairs: usize,
    pub peeled: usize,
    pub trim_aborted: bool,
}

impl PairFactor {
    pub fn shortfall(&self) -> usize {
        self.target_k - self.achieved_k
    }
}

fn trim_window(bp: &BipartitePair, k: usize, p: f64, policy: &FactorPolicy) -> DegreeWindow {
    let hi = if policy.trim_high {
        DegreeWindow::around_mean(bp.left_len(), p, policy.c)
            .hi
            .max(k)
    } else {
        usize::MAX
    };
    DegreeWindow { lo: k, hi }
}

fn trim_and_extract(
    bp: &BipartitePair,
    k: usize,
    p: f64,
    policy: &FactorPolicy,
    rng: &mut StageRng,
) -> (TrimResult, FactorSearch) {
    let z = default_z_cap(bp.left_len(), policy.c);
    let tr = trim_balanced(bp, trim_window(bp, k, p, policy), z, rng).expect("balanced input");
    let fs = extract_k_factor(&tr.h, k).expect("trim keeps sides balanced");
    (tr, fs)
}

/// Removes the given local vertices plus random partners so the sides stay balanced.
fn peel(
    bp: &BipartitePair,
    drop_left: &[usize],
    drop_right: &[usize],
    rng: &mut StageRng,
) -> BipartitePair {
    let mut gone_l = vec![false; bp.left_len()];
    let mut gone_r = vec![false; bp.right_len()];
    drop_left.iter().for_each(|&i| gone_l[i] = true);
    drop_right.iter().for_each(|&j| gone_r[j] = true);
    let (mut cl, mut cr) = (drop_left.len(), drop_right.len());
    let mut rest_l: Vec<usize> = (0..bp.left_len()).filter(|&i| !gone_l[i]).collect();
    let mut rest_r: Vec<usize> = (0..bp.right_len()).filter(|&j| !gone_r[j]).collect();
    rest_l.shuffle(rng);
    rest_r.shuffle(rng);
    while cl < cr {
        gone_l[rest_l.pop().expect("enough vertices")] = true;
        cl += 1;
    }
    while cr < cl {
        gone_r[rest_r.pop().expect("enough vertices")] = true;
        cr += 1;
    }
    let keep_l: Vec<usize> = (0..bp.left_len()).filter(|&i| !gone_l[i]).collect();
    let keep_r: Vec<usize> = (0..bp.right_len()).filter(|&j| !gone_r[j]).collect();
    bp.induced(&keep_l, &keep_r)
}

/// Trims `bp` to minimum degree `target_k`, extracts a `target_k`-factor of
/// the survivors, and degrades gracefully when that fails: first by peeling
/// flow-unsaturated vertices, then by lowering `k`.
pub fn factor_pair(
    bp: &BipartitePair,
    target_k: usize,
    p: f64,
    policy: &FactorPolicy,
    rng: &mut StageRng,
) -> Result<PairFactor, RegularError> {
    if bp.left_len() != bp.right_len() {
        return Err(RegularError::Unbalanced(bp.left_len(), bp.right_len()));
    }
    let (tr, fs) = trim_and_extract(bp, target_k, p, policy, rng);
    let trimmed = tr.removed_minus.len() + tr.removed_plus.len();
    let aborted = tr.aborted;
    let mut current = tr.h;
    let mut search = fs;
    let mut peeled = 0;
    for _ in 0..policy.peel_rounds {
        let cert = match &search {
            FactorSearch::Found(_) => break,
            FactorSearch::Absent(c) => c.clone(),
        };
        let before = current.left_len();
        let shrunk = peel(
            &current,
            &cert.unsaturated_left,
            &cert.unsaturated_right,
            rng,
        );
        let (tr, fs) = trim_and_extract(&shrunk, target_k, p, policy, rng);
        peeled += before - tr.h.left_len();
        current = tr.h;
        search = fs;
    }
    if let FactorSearch::Found(sub) = search {
        return Ok(PairFactor {
            target_k,
            achieved_k: target_k,
            sub,
            trimmed_pairs: trimmed,
            peeled,
            trim_aborted: aborted,
        });
    }
    if !policy.clamp_k || target_k == 0 {
        let sub = extract_k_factor(&bp.induced(&[], &[]), 0)?
            .found()
            .expect("0-factor");
        return Ok(PairFactor {
            target_k,
            achieved_k: 0,
            sub,
            trimmed_pairs: trimmed,
            peeled,
            trim_aborted: aborted,
        });
    }
    // Largest k in [0, target_k) whose trim-and-extract succeeds.
    let (mut lo, mut hi) = (0usize, target_k);
    let mut best = extract_k_factor(bp, 0)?.found().expect("0-factor");
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match trim_and_extract(bp, mid, p, policy, rng).1 {
            FactorSearch::Found(sub) => {
                lo = mid;
                best = sub;
            }
            FactorSearch::Absent(_) => hi = mid,
        }
    }
    Ok(PairFactor {
        target_k,
        achieved_k: lo,
        sub: best,
        trimmed_pairs: trimmed,
        peeled,
        trim_aborted: aborted,
    })
}

/// One level of the bisection: `parts[0]` is the leftover part, `parts[j]` for
/// `j ≥ 1` has `⌊n/2^i⌋` vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub i: usize,
    pub parts: Vec<Vec<Vertex>>,
    pub k_i: usize,
    pub m_i: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionSchedule {
    pub n: usize,
    pub p: f64,
    pub c: f64,
    pub ell: usize,
    pub levels: Vec<Level>,
    /// `½(np − c√(np ln n))`, unrounded.
    pub k_total: f64,
}

/// Smallest `ℓ ≥ 1` with `p 2^{−ℓ} n < (c/4)√(np ln n)`, capped so the
/// deepest parts are nonempty.
pub fn level_count(n: usize, p: f64, c: f64) -> usize {
    let nf = n as f64;
    let rhs = c / 4.0 * (nf * p * nf.ln()).max(0.0).sqrt();
    let mut ell = 1;
    while p * nf / 2f64.powi(ell as i32) >= rhs && (n >> (ell + 1)) >= 1 {
        ell += 1;
    }
    ell
}

/// `⌊max(0, p2^{−i}n − (c/7)√(p2^{−i}n ln n))⌋`.
pub fn level_degree(n: usize, p: f64, c: f64, i: usize) -> usize {
    let x = p * n as f64 / 2f64.powi(i as i32);
    (x - c / 7.0 * (x * (n as f64).ln()).max(0.0).sqrt())
        .max(0.0)
        .floor() as usize
}

/// `⌊max(0, 2^{−i}n − (2^{−i}n)^{1−c²/5880})⌋`.
pub fn level_span(n: usize, c: f64, i: usize) -> usize {
    let x = n as f64 / 2f64.powi(i as i32);
    (x - x.powf(1.0 - c * c / 5880.0)).max(0.0).floor() as usize
}

/// Nested random bisection of `0..n` into levels `1..=ℓ`.
pub fn bisection_schedule(
    n: usize,
    p: f64,
    c: f64,
    seed: u64,
) -> Result<BisectionSchedule, RegularError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(RegularError::InvalidProbability(p));
    }
    let ell = level_count(n, p, c);
    let mut perm: Vec<Vertex> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, "bisection", &[n as u64]));
    let mut levels: Vec<Level> = Vec::with_capacity(ell);
    let mut prev: Vec<Vec<Vertex>> = vec![Vec::new(), perm];
    for i in 1..=ell {
        let size = n >> i;
        let mut parts = vec![prev[0].clone()];
        for part in &prev[1..] {
            parts.push(part[..size].to_vec());
            parts.push(part[size..2 * size].to_vec());
            parts[0].extend_from_slice(&part[2 * size..]);
        }
        levels.push(Level {
            i,
            parts: parts.clone(),
            k_i: level_degree(n, p, c, i),
            m_i: level_span(n, c, i),
        });
        prev = parts;
    }
    let nf = n as f64;
    let k_total = 0.5 * (nf * p - c * (nf * p * nf.ln()).sqrt());
    Ok(BisectionSchedule {
        n,
        p,
        c,
        ell,
        levels,
        k_total,
    })
}

impl BisectionSchedule {
    pub fn level(&self, i: usize) -> Result<&Level, RegularError> {
        if i == 0 || i > self.levels.len() {
            return Err(RegularError::NoSuchLevel(i));
        }
        Ok(&self.levels[i - 1])
    }
}

/// Per-pair bookkeeping of [`build_level_regulars`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairShortfall {
    pub level: usize,
    pub pair: usize,
    pub target_k: usize,
    pub achieved_k: usize,
    pub span: usize,
}

#[derive(Debug, Clone)]
pub struct LevelRegulars {
    pub level: usize,
    pub k_i: usize,
    /// One entry per pair `(A_{2j−1}, A_{2j})`, in order of `j`.
    pub subgraphs: Vec<RegularSubgraph>,
    pub report: Vec<PairShortfall>,
}

/// `k_i`-regular subgraphs of every pair at level `i`, clamping `k` per pair where needed.
pub fn build_level_regulars(
    g: &Graph,
    schedule: &BisectionSchedule,
    i: usize,
    policy: &FactorPolicy,
    seed: u64,
) -> Result<LevelRegulars, RegularError> {
    let level = schedule.level(i)?;
    let pairs = (level.parts.len() - 1) / 2;
    let results: Vec<Result<PairFactor, RegularError>> = (1..=pairs)
        .into_par_iter()
        .map(|j| {
            let bp = BipartitePair::from_graph(g, &level.parts[2 * j - 1], &level.parts[2 * j])?;
            let mut r = rng::stream(seed, "level-factor", &[i as u64, j as u64]);
            factor_pair(&bp, level.k_i, schedule.p, policy, &mut r)
        })
        .collect();
    let mut subgraphs = Vec::with_capacity(pairs);
    let mut report = Vec::with_capacity(pairs);
    for (j, r) in results.into_iter().enumerate() {
        let pf = r?;
        report.push(PairShortfall {
            level: i,
            pair: j + 1,
            target_k: pf.target_k,
            achieved_k: pf.achieved_k,
            span: pf.sub.span(),
        });
        subgraphs.push(pf.sub);
    }
    Ok(LevelRegulars {
        level: i,
        k_i: level.k_i,
        subgraphs,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_bipartite_gnnp, gen_gnp};
    use rand::SeedableRng;

    fn pair(n: usize, edges: &[(usize, usize)]) -> BipartitePair {
        BipartitePair::from_local_edges(
            (0..n).collect(),
            (n..2 * n).collect(),
            edges.iter().copied(),
        )
        .unwrap()
    }

    fn complete(n: usize) -> BipartitePair {
        let e: Vec<_> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        pair(n, &e)
    }

    fn r(seed: u64) -> StageRng {
        StageRng::seed_from_u64(seed)
    }

    #[test]
    fn trim_vacuous_when_in_window() {
        let bp = complete(4);
        let t = trim_balanced(&bp, DegreeWindow { lo: 4, hi: 4 }, 10, &mut r(1)).unwrap();
        assert_eq!(t.h, bp);
        assert!(t.removed_minus.is_empty() && t.removed_plus.is_empty() && !t.aborted);
    }

    #[test]
    fn trim_single_isolated_vertex() {
        let e: Vec<_> = (0..3).flat_map(|i| (0..4).map(move |j| (i, j))).collect();
        let bp = pair(4, &e);
        let t = trim_balanced(&bp, DegreeWindow { lo: 1, hi: 4 }, 10, &mut r(3)).unwrap();
        assert_eq!(t.removed_minus.len(), 1);
        assert_eq!(t.removed_minus[0].0, 3);
        assert!(t.removed_minus[0].1 >= 4);
        assert!(t.removed_plus.is_empty());
        assert_eq!(t.h.left_len(), 3);
        assert_eq!(t.h.right_len(), 3);
    }

    #[test]
    fn trim_random_pairs_land_in_window_or_abort() {
        // At this size the eviction process is close to critical and often
        // runs into the cap; every run must still end balanced, and every
        // run that stops on its own must be inside the window.
        let w = DegreeWindow::around_mean(2000, 0.02, 0.75);
        let mut completed = 0;
        for seed in 0..40 {
            let bp = gen_bipartite_gnnp(2000, 0.02, seed).unwrap();
            let t = trim_balanced(&bp, w, default_z_cap(2000, 0.75), &mut r(5)).unwrap();
            assert_eq!(t.h.left_len(), t.h.right_len());
            assert_eq!(
                t.removed_minus.len() + t.removed_plus.len(),
                2000 - t.h.left_len()
            );
            if t.aborted {
                assert!(t.removed_minus.len() >= t.z_cap || t.removed_plus.len() >= t.z_cap);
                continue;
            }
            completed += 1;
            assert!((0..t.h.left_len()).all(|i| w.contains(t.h.left_neighbors(i).len())));
            assert!((0..t.h.right_len()).all(|j| w.contains(t.h.right_neighbors(j).len())));
        }
        assert!(completed > 0);
    }

    #[test]
    fn trim_aborts_at_cap() {
        let bp = pair(5, &[]);
        let t = trim_balanced(&bp, DegreeWindow::at_least(1), 2, &mut r(0)).unwrap();
        assert!(t.aborted);
        assert_eq!(t.removed_minus.len(), 2);
    }

    #[test]
    fn bal_examples() {
        let bp = complete(3);
        assert_eq!(bal_deficiency(&bp, 2, &[], &[0, 1, 2]), 0);
        assert_eq!(bal_deficiency(&bp, 2, &[0, 1, 2], &[0, 1, 2]), 9 - 6);
        let single = pair(2, &[(0, 0)]);
        assert_eq!(bal_deficiency(&single, 1, &[0, 1], &[0, 1]), -1);
        assert!(!extract_k_factor(&single, 1).unwrap().is_found());
    }

    #[test]
    fn factor_examples() {
        let k33 = complete(3);
        let h = extract_k_factor(&k33, 3).unwrap().found().unwrap();
        assert_eq!(h.pair, k33);
        let c6 = pair(3, &[(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 0)]);
        let h = extract_k_factor(&c6, 2).unwrap().found().unwrap();
        assert_eq!(h.pair.edge_count(), 6);
        assert!(matches!(
            extract_k_factor(&k33, 4).unwrap(),
            FactorSearch::Absent(_)
        ));
        let z = extract_k_factor(&k33, 0).unwrap().found().unwrap();
        assert_eq!((z.span(), z.pair.edge_count()), (6, 0));
        let lop = BipartitePair::from_local_edges(vec![0], vec![1, 2], []).unwrap();
        assert!(matches!(
            extract_k_factor(&lop, 1),
            Err(RegularError::Unbalanced(1, 2))
        ));
    }

    #[test]
    fn factor_is_subgraph_and_bal_nonnegative() {
        let bp = gen_bipartite_gnnp(60, 0.3, 2).unwrap();
        let h = extract_k_factor(&bp, 8).unwrap().found().unwrap();
        assert!(h.is_regular());
        assert!(h.edges().all(|e| bp.edges().any(|f| f == e)));
        assert!(sampled_min_bal(&bp, 8, 10_000, &mut r(9)) >= 0);
    }

    #[test]
    fn schedule_matches_closed_forms() {
        // 40-digit evaluation: (c/4)√(np ln n) = 9.928…, so ℓ = 7 since
        // 1024/2^7 = 8 < 9.928 ≤ 16; k_2 = ⌊256 − (1/21)√(256 ln 2^20)⌋ = 253.
        let n = 1 << 20;
        let p = 2f64.powi(-10);
        let c = 1.0 / 3.0;
        assert_eq!(level_count(n, p, c), 7);
        assert_eq!(level_degree(n, p, c, 2), 253);
        assert_eq!(level_degree(n, p, c, 7), 7);
        // m_i is tiny at this scale because the exponent 1 − c²/5880 is so close to 1.
        assert_eq!(level_span(n, c, 2), 61);
        assert_eq!(level_span(n, c, 7), 1);
    }

    #[test]
    fn schedule_is_nested_and_minimal() {
        let n = 4096;
        let p = 4.0 * (n as f64).ln() / n as f64;
        let c = 1.0 / 3.0;
        let s = bisection_schedule(n, p, c, 1).unwrap();
        let rhs = c / 4.0 * (n as f64 * p * (n as f64).ln()).sqrt();
        let at = |l: usize| p * n as f64 / 2f64.powi(l as i32);
        assert!(at(s.ell) < rhs);
        assert!(s.ell == 1 || at(s.ell - 1) >= rhs);
        for lvl in &s.levels {
            assert_eq!(lvl.parts.len(), (1 << lvl.i) + 1);
            assert!(lvl.parts[1..].iter().all(|x| x.len() == n >> lvl.i));
            let total: usize = lvl.parts.iter().map(Vec::len).sum();
            assert_eq!(total, n);
        }
        for w in s.levels.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            for j in 1..b.parts.len() {
                let parent = j.div_ceil(2);
                assert!(b.parts[j].iter().all(|v| a.parts[parent].contains(v)));
            }
        }
    }

    #[test]
    fn degree_budget_sum() {
        let n = 1 << 20;
        let p = 2f64.powi(-10);
        let c = 1.0 / 3.0;
        let ell = level_count(n, p, c);
        let sum: usize = (2..=ell).map(|i| level_degree(n, p, c, i)).sum();
        let np = n as f64 * p;
        // Floors lose at most one per level.
        assert!(sum as f64 + ell as f64 >= np / 2.0 - c / 2.0 * (np * (n as f64).ln()).sqrt());
    }

    #[test]
    fn level_regulars_are_exactly_regular() {
        let n = 4096;
        let p = 4.0 * (n as f64).ln() / n as f64;
        let g = gen_gnp(n, p, 21).unwrap();
        let s = bisection_schedule(n, p, 1.0 / 3.0, 3).unwrap();
        let lr = build_level_regulars(&g, &s, 2, &FactorPolicy::default(), 4).unwrap();
        assert_eq!(lr.subgraphs.len(), 2);
        for (h, rep) in lr.subgraphs.iter().zip(&lr.report) {
            assert!(h.is_regular());
            assert_eq!(h.k, rep.achieved_k);
            assert!(h.edges().all(|e| g.contains_edge(e)));
        }
        let mut seen = std::collections::HashSet::new();
        for h in &lr.subgraphs {
            for v in h.pair.left.iter().chain(&h.pair.right) {
                assert!(seen.insert(*v));
            }
        }
    }

    #[test]
    fn complete_pair_is_returned_unchanged() {
        let g = Graph::complete(8);
        let s = BisectionSchedule {
            n: 8,
            p: 0.5,
            c: 0.3,
            ell: 1,
            levels: vec![Level {
                i: 1,
                parts: vec![vec![], vec![0, 1, 2, 3], vec![4, 5, 6, 7]],
                k_i: 4,
                m_i: 4,
            }],
            k_total: 1.0,
        };
        let lr = build_level_regulars(&g, &s, 1, &FactorPolicy::default(), 0).unwrap();
        assert_eq!(lr.subgraphs[0].pair.edge_count(), 16);
        assert!(matches!(
            build_level_regulars(&g, &s, 2, &FactorPolicy::default(), 0),
            Err(RegularError::NoSuchLevel(2))
        ));
    }

    #[test]
    fn fallback_lowers_k_on_sparse_pairs() {
        let bp = gen_bipartite_gnnp(50, 0.06, 5).unwrap();
        let pf = factor_pair(&bp, 5, 0.06, &FactorPolicy::default(), &mut r(1)).unwrap();
        assert!(pf.sub.is_regular());
        assert_eq!(pf.sub.k, pf.achieved_k);
        assert!(pf.achieved_k <= 5);
    }
}
