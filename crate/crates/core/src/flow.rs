//! Dinic max flow with an iterative blocking-flow search.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    rev: usize,
}

#[derive(Debug, Clone)]
pub struct Dinic {
    graph: Vec<Vec<Arc>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

/// Handle to an arc added with [`Dinic::add_edge`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArcId {
    from: usize,
    idx: usize,
}

impl Dinic {
    pub fn new(n: usize) -> Self {
        Dinic {
            graph: vec![Vec::new(); n],
            level: vec![-1; n],
            iter: vec![0; n],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64) -> ArcId {
        let idx = self.graph[from].len();
        let rev_idx = if from == to {
            idx + 1
        } else {
            self.graph[to].len()
        };
        self.graph[from].push(Arc {
            to,
            cap,
            rev: rev_idx,
        });
        self.graph[to].push(Arc {
            to: from,
            cap: 0,
            rev: idx,
        });
        ArcId { from, idx }
    }

    /// Flow currently routed through `id`.
    pub fn flow(&self, id: ArcId) -> i64 {
        let a = &self.graph[id.from][id.idx];
        self.graph[a.to][a.rev].cap
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for a in &self.graph[v] {
                if a.cap > 0 && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[v] + 1;
                    q.push_back(a.to);
                }
            }
        }
        self.level[t] >= 0
    }

    /// One augmenting path in the level graph, or 0.
    fn augment(&mut self, s: usize, t: usize) -> i64 {
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut v = s;
        loop {
            if v == t {
                let f = path
                    .iter()
                    .map(|&(u, i)| self.graph[u][i].cap)
                    .min()
                    .unwrap_or(0);
                for &(u, i) in &path {
                    self.graph[u][i].cap -= f;
                    let (to, rev) = (self.graph[u][i].to, self.graph[u][i].rev);
                    self.graph[to][rev].cap += f;
                }
                return f;
            }
            let mut advanced = false;
            while self.iter[v] < self.graph[v].len() {
                let i = self.iter[v];
                let a = &self.graph[v][i];
                if a.cap > 0 && self.level[a.to] == self.level[v] + 1 {
                    path.push((v, i));
                    v = a.to;
                    advanced = true;
                    break;
                }
                self.iter[v] += 1;
            }
            if !advanced {
                // Dead end: retreat and skip the arc that led here.
                self.level[v] = -1;
                match path.pop() {
                    Some((u, _)) => {
                        self.iter[u] += 1;
                        v = u;
                    }
                    None => return 0,
                }
            }
        }
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.augment(s, t);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
        total
    }

    /// Vertices reachable from `s` in the residual graph.
    pub fn min_cut_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.graph.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for a in &self.graph[v] {
                if a.cap > 0 && !seen[a.to] {
                    seen[a.to] = true;
                    stack.push(a.to);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_network() {
        let mut d = Dinic::new(6);
        d.add_edge(0, 1, 10);
        d.add_edge(0, 2, 10);
        d.add_edge(1, 3, 4);
        d.add_edge(1, 4, 8);
        d.add_edge(2, 4, 9);
        d.add_edge(3, 5, 10);
        d.add_edge(4, 3, 6);
        d.add_edge(4, 5, 10);
        assert_eq!(d.max_flow(0, 5), 19);
    }

    #[test]
    fn disconnected() {
        let mut d = Dinic::new(4);
        d.add_edge(0, 1, 10);
        d.add_edge(2, 3, 5);
        assert_eq!(d.max_flow(0, 3), 0);
        assert!(!d.min_cut_side(0)[3]);
    }

    #[test]
    fn arc_flows_are_consistent() {
        let mut d = Dinic::new(4);
        let a = d.add_edge(0, 1, 10);
        let b = d.add_edge(0, 2, 5);
        d.add_edge(1, 3, 10);
        d.add_edge(2, 3, 5);
        assert_eq!(d.max_flow(0, 3), 15);
        assert_eq!(d.flow(a), 10);
        assert_eq!(d.flow(b), 5);
    }

    #[test]
    fn long_alternating_paths_do_not_recurse() {
        // A chain forcing deep level graphs.
        let n = 100_000;
        let mut d = Dinic::new(n);
        for v in 0..n - 1 {
            d.add_edge(v, v + 1, 1);
        }
        assert_eq!(d.max_flow(0, n - 1), 1);
    }
}
