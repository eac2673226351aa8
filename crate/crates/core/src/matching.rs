//! Perfect-matching decompositions of regular bipartite graphs, random
//! perfect extensions, and path systems built from two matchings.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, Vertex};
use crate::regular::{LevelRegulars, RegularSubgraph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchingError {
    #[error("subgraph is not {0}-regular on its span")]
    NotRegular(usize),
    #[error("vertex {0} is covered twice")]
    NotAMatching(Vertex),
    #[error("sides have {0} and {1} uncovered vertices")]
    UncoveredMismatch(usize, usize),
    #[error("edge {0} does not join the two sides")]
    NotCrossing(Edge),
    #[error("edge {0} of the inner matching crosses the halves")]
    InnerEdgeCrosses(Edge),
    #[error("vertex {0} is outside the vertex set")]
    UnknownVertex(Vertex),
    #[error("vertex {0} has degree greater than 2 in the union")]
    DegreeTooHigh(Vertex),
}

/// Pairwise vertex-disjoint edges.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Matching {
    pub edges: Vec<Edge>,
}

impl Matching {
    pub fn new(edges: Vec<Edge>) -> Result<Self, MatchingError> {
        let m = Matching { edges };
        m.check()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    fn check(&self) -> Result<(), MatchingError> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.edges {
            for v in [e.u, e.v] {
                if !seen.insert(v) {
                    return Err(MatchingError::NotAMatching(v));
                }
            }
        }
        Ok(())
    }

    /// `partner[v]` for `v < n`.
    pub fn partner_map(&self, n: usize) -> Vec<Option<Vertex>> {
        let mut out = vec![None; n];
        for e in &self.edges {
            out[e.u] = Some(e.v);
            out[e.v] = Some(e.u);
        }
        out
    }
}

const NIL: usize = usize::MAX;

/// Maximum matching by Hopcroft–Karp; returns `mate_left[i]` (`usize::MAX` if free).
///
/// Neighbour lists are scanned in the given order, so callers control
/// tie-breaking by permuting them.
pub fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> Vec<usize> {
    let n_left = adj.len();
    let mut mate_l = vec![NIL; n_left];
    let mut mate_r = vec![NIL; n_right];
    let mut dist = vec![0usize; n_left];
    let mut it = vec![0usize; n_left];
    loop {
        // Layer free left vertices.
        let mut q = VecDeque::new();
        for i in 0..n_left {
            if mate_l[i] == NIL {
                dist[i] = 0;
                q.push_back(i);
            } else {
                dist[i] = NIL;
            }
        }
        let mut found = false;
        while let Some(i) = q.pop_front() {
            for &j in &adj[i] {
                let m = mate_r[j];
                if m == NIL {
                    found = true;
                } else if dist[m] == NIL {
                    dist[m] = dist[i] + 1;
                    q.push_back(m);
                }
            }
        }
        if !found {
            break;
        }
        it.iter_mut().for_each(|x| *x = 0);
        for root in 0..n_left {
            if mate_l[root] != NIL {
                continue;
            }
            // Iterative layered DFS from `root`.
            let mut stack: Vec<usize> = vec![root];
            let mut via: Vec<usize> = Vec::new();
            while let Some(&i) = stack.last() {
                let mut advanced = false;
                while it[i] < adj[i].len() {
                    let j = adj[i][it[i]];
                    it[i] += 1;
                    let m = mate_r[j];
                    if m == NIL {
                        // Augment along the stack.
                        via.push(j);
                        for (&a, &b) in stack.iter().zip(&via) {
                            mate_l[a] = b;
                            mate_r[b] = a;
                        }
                        stack.clear();
                        advanced = true;
                        break;
                    }
                    if dist[m] == dist[i] + 1 {
                        via.push(j);
                        stack.push(m);
                        advanced = true;
                        break;
                    }
                }
                if !advanced {
                    dist[i] = NIL;
                    stack.pop();
                    via.pop();
                }
            }
        }
    }
    mate_l
}

fn perfect_matchings_of(
    h: &RegularSubgraph,
    mut adj: Vec<Vec<usize>>,
) -> Result<Vec<Matching>, MatchingError> {
    if !h.is_regular() {
        return Err(MatchingError::NotRegular(h.k));
    }
    let n = h.pair.left_len();
    let mut out = Vec::with_capacity(h.k);
    for _ in 0..h.k {
        let mate = hopcroft_karp(&adj, n);
        // A regular bipartite graph always has a perfect matching.
        assert!(
            mate.iter().all(|&j| j != NIL),
            "regular graph without perfect matching"
        );
        let edges = mate
            .iter()
            .enumerate()
            .map(|(i, &j)| Edge::of(h.pair.left[i], h.pair.right[j]))
            .collect();
        for (i, &j) in mate.iter().enumerate() {
            adj[i].retain(|&x| x != j);
        }
        out.push(Matching { edges });
    }
    Ok(out)
}

fn local_adj(h: &RegularSubgraph) -> Vec<Vec<usize>> {
    (0..h.pair.left_len())
        .map(|i| h.pair.left_neighbors(i).to_vec())
        .collect()
}

/// Splits a `k`-regular bipartite graph into `k` perfect matchings.
pub fn decompose_regular(h: &RegularSubgraph) -> Result<Vec<Matching>, MatchingError> {
    perfect_matchings_of(h, local_adj(h))
}

/// Decomposition with randomized search order, returned in uniformly random order.
pub fn random_ordered_decomposition<R: Rng>(
    h: &RegularSubgraph,
    rng: &mut R,
) -> Result<Vec<Matching>, MatchingError> {
    let mut adj = local_adj(h);
    for list in adj.iter_mut() {
        list.shuffle(rng);
    }
    let mut out = perfect_matchings_of(h, adj)?;
    out.shuffle(rng);
    Ok(out)
}

/// Matchings inside the two halves, pooled over bisection levels.
#[derive(Debug, Clone)]
pub struct InnerMatchings {
    /// Largest first, at most the requested count.
    pub matchings: Vec<Matching>,
    /// How many of the requested matchings could not be supplied.
    pub shortfall: usize,
}

/// Pools the level decompositions: the `s`-th matching of a level is the
/// union of the `s`-th matchings of its pairs. Keeps the `k` largest.
pub fn build_inner_matchings(
    levels: &[LevelRegulars],
    k: usize,
) -> Result<InnerMatchings, MatchingError> {
    let mut pool: Vec<Matching> = Vec::new();
    for lvl in levels {
        let per_pair: Vec<Vec<Matching>> = lvl
            .subgraphs
            .iter()
            .map(decompose_regular)
            .collect::<Result<_, _>>()?;
        let depth = per_pair.iter().map(Vec::len).max().unwrap_or(0);
        for s in 0..depth {
            let mut edges = Vec::new();
            for ms in &per_pair {
                if let Some(m) = ms.get(s) {
                    edges.extend_from_slice(&m.edges);
                }
            }
            pool.push(Matching { edges });
        }
    }
    pool.sort_by_key(|m| std::cmp::Reverse(m.len()));
    pool.truncate(k);
    let shortfall = k - pool.len();
    Ok(InnerMatchings {
        matchings: pool,
        shortfall,
    })
}

/// A matching between `A` and `B` completed to a perfect matching with
/// edges that need not exist in the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerfectExtension {
    pub base: Matching,
    pub synthetic: Vec<Edge>,
    pub total: Matching,
}

/// Matches the uncovered vertices of `A` to those of `B` by a uniformly random bijection.
pub fn extend_to_perfect<R: Rng>(
    base: &Matching,
    a: &[Vertex],
    b: &[Vertex],
    rng: &mut R,
) -> Result<PerfectExtension, MatchingError> {
    let n = a.iter().chain(b).copied().max().map_or(0, |m| m + 1);
    let mut side = vec![0u8; n];
    a.iter().for_each(|&v| side[v] = 1);
    b.iter().for_each(|&v| side[v] = 2);
    let mut covered = vec![false; n];
    for e in &base.edges {
        if e.v >= n || side[e.u] == 0 || side[e.v] == 0 || side[e.u] == side[e.v] {
            return Err(MatchingError::NotCrossing(*e));
        }
        for v in [e.u, e.v] {
            if covered[v] {
                return Err(MatchingError::NotAMatching(v));
            }
            covered[v] = true;
        }
    }
    let free_a: Vec<Vertex> = a.iter().copied().filter(|&v| !covered[v]).collect();
    let mut free_b: Vec<Vertex> = b.iter().copied().filter(|&v| !covered[v]).collect();
    if free_a.len() != free_b.len() {
        return Err(MatchingError::UncoveredMismatch(free_a.len(), free_b.len()));
    }
    free_b.shuffle(rng);
    let synthetic: Vec<Edge> = free_a
        .iter()
        .zip(&free_b)
        .map(|(&x, &y)| Edge::of(x, y))
        .collect();
    let mut all = base.edges.clone();
    all.extend_from_slice(&synthetic);
    Ok(PerfectExtension {
        base: base.clone(),
        synthetic,
        total: Matching { edges: all },
    })
}

/// Vertex-disjoint paths, each a vertex sequence; a single vertex is a path.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PathSystem {
    pub paths: Vec<Vec<Vertex>>,
}

impl PathSystem {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.paths.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.paths
            .iter()
            .flat_map(|p| p.windows(2).map(|w| Edge::of(w[0], w[1])))
    }

    /// Whether the paths partition `0..n`.
    pub fn covers_exactly(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for &v in self.paths.iter().flatten() {
            if v >= n || seen[v] {
                return false;
            }
            seen[v] = true;
        }
        seen.into_iter().all(|s| s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComponentStats {
    pub path_count: usize,
    /// Cycles closed by the exploration of `M ∪ N'`.
    pub cycles_closed: usize,
    pub isolated_in_m: usize,
    /// `|N' \ N|`.
    pub dropped_edges: usize,
}

/// Counts the cycles closed when exploring `M ∪ N'` component by component:
/// from an untouched start, follow the `N'` edge, then the `M` edge, until
/// the walk returns to the start or reaches a vertex without an `M` edge.
pub fn explore_cycles(
    vertices: &[Vertex],
    m: &[Option<Vertex>],
    n_total: &[Option<Vertex>],
) -> usize {
    let size = m.len();
    let mut touched = vec![false; size];
    let mut cycles = 0;
    for &start in vertices {
        if touched[start] {
            continue;
        }
        let mut active = start;
        loop {
            touched[active] = true;
            let w = n_total[active].expect("perfect extension covers every vertex");
            touched[w] = true;
            match m[w] {
                Some(next) if next == start => {
                    cycles += 1;
                    break;
                }
                Some(next) if !touched[next] => active = next,
                _ => break,
            }
        }
    }
    cycles
}

/// Paths of `M ∪ N` over `A ∪ B`, with each cycle broken at a uniformly random edge.
pub fn assemble_path_system<R: Rng>(
    m: &Matching,
    ext: &PerfectExtension,
    a: &[Vertex],
    b: &[Vertex],
    rng: &mut R,
) -> Result<(PathSystem, ComponentStats), MatchingError> {
    let vertices: Vec<Vertex> = a.iter().chain(b).copied().collect();
    let size = vertices.iter().copied().max().map_or(0, |x| x + 1);
    let mut side = vec![0u8; size];
    a.iter().for_each(|&v| side[v] = 1);
    b.iter().for_each(|&v| side[v] = 2);
    let in_set = |v: Vertex| v < size && side[v] != 0;

    let mut m_of = vec![None; size];
    for e in &m.edges {
        for v in [e.u, e.v] {
            if !in_set(v) {
                return Err(MatchingError::UnknownVertex(v));
            }
        }
        if side[e.u] != side[e.v] {
            return Err(MatchingError::InnerEdgeCrosses(*e));
        }
        for (x, y) in [(e.u, e.v), (e.v, e.u)] {
            if m_of[x].is_some() {
                return Err(MatchingError::DegreeTooHigh(x));
            }
            m_of[x] = Some(y);
        }
    }
    let mut base_of = vec![None; size];
    let mut total_of = vec![None; size];
    for (edges, map) in [
        (&ext.base.edges, &mut base_of),
        (&ext.total.edges, &mut total_of),
    ] {
        for e in edges.iter() {
            for v in [e.u, e.v] {
                if !in_set(v) {
                    return Err(MatchingError::UnknownVertex(v));
                }
            }
            if side[e.u] == side[e.v] {
                return Err(MatchingError::NotCrossing(*e));
            }
            for (x, y) in [(e.u, e.v), (e.v, e.u)] {
                if map[x].is_some() {
                    return Err(MatchingError::DegreeTooHigh(x));
                }
                map[x] = Some(y);
            }
        }
    }
    if let Some(&v) = vertices.iter().find(|&&v| total_of[v].is_none()) {
        return Err(MatchingError::UncoveredMismatch(
            usize::from(side[v] == 1),
            usize::from(side[v] == 2),
        ));
    }

    let neighbors = |v: Vertex| [m_of[v], base_of[v]].into_iter().flatten();
    let mut visited = vec![false; size];
    let mut paths = Vec::new();
    // Path components first, walked from an end.
    for &v in &vertices {
        if visited[v] || neighbors(v).count() == 2 {
            continue;
        }
        let mut path = vec![v];
        visited[v] = true;
        let mut cur = v;
        while let Some(next) = neighbors(cur).find(|&w| !visited[w]) {
            visited[next] = true;
            path.push(next);
            cur = next;
        }
        paths.push(path);
    }
    // The rest are cycles.
    for &v in &vertices {
        if visited[v] {
            continue;
        }
        let mut cycle = vec![v];
        visited[v] = true;
        let mut cur = v;
        while let Some(next) = neighbors(cur).find(|&w| !visited[w]) {
            visited[next] = true;
            cycle.push(next);
            cur = next;
        }
        // Drop edge (cycle[r], cycle[r+1]) and read the path from cycle[r+1].
        let r = rng.gen_range(0..cycle.len());
        let len = cycle.len();
        cycle.rotate_left((r + 1) % len);
        paths.push(cycle);
    }

    let stats = ComponentStats {
        path_count: paths.len(),
        cycles_closed: explore_cycles(&vertices, &m_of, &total_of),
        isolated_in_m: vertices.iter().filter(|&&v| m_of[v].is_none()).count(),
        dropped_edges: ext.synthetic.len(),
    };
    Ok((PathSystem { paths }, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BipartitePair;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn regular(n: usize, k: usize, edges: &[(usize, usize)]) -> RegularSubgraph {
        let pair = BipartitePair::from_local_edges(
            (0..n).collect(),
            (n..2 * n).collect(),
            edges.iter().copied(),
        )
        .unwrap();
        RegularSubgraph { k, pair }
    }

    fn is_partition(h: &RegularSubgraph, ms: &[Matching]) -> bool {
        let mut all: Vec<Edge> = ms.iter().flat_map(|m| m.edges.iter().copied()).collect();
        all.sort();
        let mut want: Vec<Edge> = h.edges().collect();
        want.sort();
        all == want
            && ms
                .iter()
                .all(|m| m.check().is_ok() && m.len() == h.pair.left_len())
    }

    #[test]
    fn k33_and_c6() {
        let e: Vec<_> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
        let k33 = regular(3, 3, &e);
        let ms = decompose_regular(&k33).unwrap();
        assert_eq!(ms.len(), 3);
        assert!(is_partition(&k33, &ms));
        let c6 = regular(3, 2, &[(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 0)]);
        let ms = decompose_regular(&c6).unwrap();
        assert_eq!(ms.len(), 2);
        assert!(is_partition(&c6, &ms));
        let bad = regular(3, 2, &[(0, 0)]);
        assert_eq!(decompose_regular(&bad), Err(MatchingError::NotRegular(2)));
    }

    #[test]
    fn hopcroft_karp_maximum() {
        let adj = vec![vec![0, 1], vec![0], vec![0]];
        let mate = hopcroft_karp(&adj, 2);
        assert_eq!(mate.iter().filter(|&&j| j != NIL).count(), 2);
    }

    #[test]
    fn ordered_decomposition_frequencies_on_c6() {
        let c6 = regular(3, 2, &[(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut first_has_00 = 0;
        for _ in 0..2000 {
            let ms = random_ordered_decomposition(&c6, &mut rng).unwrap();
            assert!(is_partition(&c6, &ms));
            if ms[0].edges.contains(&Edge::of(0, 3)) {
                first_has_00 += 1;
            }
        }
        let f = first_has_00 as f64 / 2000.0;
        assert!((f - 0.5).abs() <= 0.05, "{f}");
    }

    #[test]
    fn extension_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let perfect = Matching::new(vec![Edge::of(0, 3), Edge::of(1, 4), Edge::of(2, 5)]).unwrap();
        let ext = extend_to_perfect(&perfect, &[0, 1, 2], &[3, 4, 5], &mut rng).unwrap();
        assert!(ext.synthetic.is_empty());
        assert_eq!(ext.total, perfect);
        let part = Matching::new(vec![Edge::of(0, 3)]).unwrap();
        let ext = extend_to_perfect(&part, &[0, 1, 2], &[3, 4, 5], &mut rng).unwrap();
        assert_eq!(ext.synthetic.len(), 2);
        assert!(ext.synthetic.iter().all(|e| !part.edges.contains(e)));
        assert!(matches!(
            extend_to_perfect(&part, &[0, 1], &[3, 4, 5], &mut rng),
            Err(MatchingError::UncoveredMismatch(1, 2))
        ));
    }

    #[test]
    fn empty_inner_matching_gives_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = Matching::new(vec![Edge::of(0, 3), Edge::of(1, 4), Edge::of(2, 5)]).unwrap();
        let ext = extend_to_perfect(&base, &[0, 1, 2], &[3, 4, 5], &mut rng).unwrap();
        let (ps, st) =
            assemble_path_system(&Matching::default(), &ext, &[0, 1, 2], &[3, 4, 5], &mut rng)
                .unwrap();
        assert_eq!(ps.len(), 3);
        assert!(ps.paths.iter().all(|p| p.len() == 2));
        assert_eq!(st.isolated_in_m, 6);
        assert_eq!(st.cycles_closed, 0);
    }

    #[test]
    fn single_cycle_becomes_one_path() {
        // A = {0,1}, B = {2,3}; M = {01, 23}, N = {02, 13}: a 4-cycle.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = Matching::new(vec![Edge::of(0, 1), Edge::of(2, 3)]).unwrap();
        let base = Matching::new(vec![Edge::of(0, 2), Edge::of(1, 3)]).unwrap();
        let ext = extend_to_perfect(&base, &[0, 1], &[2, 3], &mut rng).unwrap();
        let (ps, st) = assemble_path_system(&m, &ext, &[0, 1], &[2, 3], &mut rng).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps.paths[0].len(), 4);
        assert_eq!(st.cycles_closed, 1);
        let crossing = Matching::new(vec![Edge::of(0, 2)]).unwrap();
        assert!(matches!(
            assemble_path_system(&crossing, &ext, &[0, 1], &[2, 3], &mut rng),
            Err(MatchingError::InnerEdgeCrosses(_))
        ));
    }

    #[test]
    fn inner_matchings_pool_levels() {
        use crate::graph::Graph;
        use crate::regular::{build_level_regulars, BisectionSchedule, FactorPolicy, Level};
        // ℓ = 2 with complete level-2 pairs: matchings are perfect on each half.
        let g = Graph::complete(8);
        let s = BisectionSchedule {
            n: 8,
            p: 0.99,
            c: 0.3,
            ell: 2,
            levels: vec![
                Level {
                    i: 1,
                    parts: vec![vec![], vec![0, 1, 2, 3], vec![4, 5, 6, 7]],
                    k_i: 4,
                    m_i: 4,
                },
                Level {
                    i: 2,
                    parts: vec![vec![], vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]],
                    k_i: 2,
                    m_i: 2,
                },
            ],
            k_total: 2.0,
        };
        let lr = build_level_regulars(&g, &s, 2, &FactorPolicy::default(), 0).unwrap();
        let inner = build_inner_matchings(&[lr], 2).unwrap();
        assert_eq!(inner.shortfall, 0);
        for m in &inner.matchings {
            assert_eq!(m.len(), 4);
            assert!(m.edges.iter().all(|e| (e.u < 4) == (e.v < 4)));
        }
        let more = build_inner_matchings(&[], 3).unwrap();
        assert_eq!(more.shortfall, 3);
    }

    #[test]
    fn random_regular_decompositions_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(1..60);
            let k = rng.gen_range(1..=n.min(8));
            // Union of k disjoint shifted permutations is k-regular.
            let mut edges = Vec::new();
            for s in 0..k {
                for i in 0..n {
                    edges.push((i, (i + s) % n));
                }
            }
            let h = regular(n, k, &edges);
            let ms = random_ordered_decomposition(&h, &mut rng).unwrap();
            assert!(is_partition(&h, &ms));
        }
    }
}
