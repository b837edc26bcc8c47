//! Dinic blocking-flow max-flow with integer capacities.
//!
//! Arcs are stored in pairs (`e`, `e ^ 1`); an undirected edge of capacity
//! `c` is a pair whose two arcs both carry `c`. Augmentation is iterative,
//! so long level graphs cannot overflow the stack, and arcs are scanned in
//! insertion order, which makes every solve deterministic.

use std::collections::VecDeque;

/// Capacity treated as unbounded. Large enough to dominate any finite cut we
/// build, small enough that sums never overflow.
pub const INF: i64 = i64::MAX / 4;

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    adj: Vec<Vec<u32>>,
    to: Vec<u32>,
    cap: Vec<i64>,
    initial: Vec<i64>,
    level: Vec<u32>,
    iter: Vec<u32>,
}

const UNSEEN: u32 = u32::MAX;

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            initial: Vec::new(),
            level: vec![UNSEEN; nodes],
            iter: vec![0; nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn arc_count(&self) -> usize {
        self.to.len()
    }

    /// Directed arc `u -> v`; returns its id.
    pub fn add_arc(&mut self, u: usize, v: usize, cap: i64) -> usize {
        self.add_pair(u, v, cap, 0)
    }

    /// Undirected edge with capacity `cap` in both directions.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: i64) -> usize {
        self.add_pair(u, v, cap, cap)
    }

    fn add_pair(&mut self, u: usize, v: usize, fwd: i64, bwd: i64) -> usize {
        let id = self.to.len();
        self.to.push(v as u32);
        self.cap.push(fwd);
        self.initial.push(fwd);
        self.adj[u].push(id as u32);
        self.to.push(u as u32);
        self.cap.push(bwd);
        self.initial.push(bwd);
        self.adj[v].push(id as u32 + 1);
        id
    }

    /// Net flow pushed along arc `id` in its forward direction.
    pub fn flow_on(&self, id: usize) -> i64 {
        self.initial[id] - self.cap[id]
    }

    pub fn residual(&self, id: usize) -> i64 {
        self.cap[id]
    }

    fn build_levels(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(UNSEEN);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && self.level[v] == UNSEEN {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] != UNSEEN
    }

    fn blocking_flow(&mut self, s: usize, t: usize) -> i64 {
        self.iter.fill(0);
        let mut total = 0i64;
        let mut path: Vec<u32> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let push = path
                    .iter()
                    .map(|&e| self.cap[e as usize])
                    .min()
                    .expect("path to sink is nonempty");
                for &e in &path {
                    self.cap[e as usize] -= push;
                    self.cap[(e ^ 1) as usize] += push;
                }
                total = total.saturating_add(push);
                let cut = path
                    .iter()
                    .position(|&e| self.cap[e as usize] == 0)
                    .expect("a bottleneck arc saturates");
                path.truncate(cut);
                u = match path.last() {
                    Some(&e) => self.to[e as usize] as usize,
                    None => s,
                };
                continue;
            }
            let mut advanced = false;
            while (self.iter[u] as usize) < self.adj[u].len() {
                let e = self.adj[u][self.iter[u] as usize];
                let v = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && self.level[v] == self.level[u] + 1 {
                    path.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                self.iter[u] += 1;
            }
            if !advanced {
                if u == s {
                    return total;
                }
                // dead end: drop it from the level graph
                self.level[u] = UNSEEN;
                let e = path.pop().expect("non-source node has an entry arc");
                u = self.to[(e ^ 1) as usize] as usize;
                self.iter[u] += 1;
            }
        }
    }

    /// Maximum `s`-`t` flow value. Can be called again after adding arcs;
    /// flow already pushed is kept.
    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut flow = 0i64;
        while self.build_levels(s, t) {
            flow = flow.saturating_add(self.blocking_flow(s, t));
        }
        flow
    }

    /// Nodes reachable from `s` in the residual graph: the source side of a
    /// minimum cut once `max_flow` has run.
    pub fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &e in &self.adj[u] {
                let v = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Restore all capacities, discarding any flow.
    pub fn reset(&mut self) {
        self.cap.copy_from_slice(&self.initial);
    }

    pub fn set_capacity(&mut self, id: usize, cap: i64) {
        self.initial[id] = cap;
        self.cap[id] = cap;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_network() {
        // CLRS figure 26.1, max flow 23.
        let mut g = FlowNetwork::new(6);
        for (u, v, c) in [
            (0, 1, 16),
            (0, 2, 13),
            (2, 1, 4),
            (1, 3, 12),
            (3, 2, 9),
            (2, 4, 14),
            (4, 3, 7),
            (3, 5, 20),
            (4, 5, 4),
        ] {
            g.add_arc(u, v, c);
        }
        assert_eq!(g.max_flow(0, 5), 23);
        let side = g.residual_reachable(0);
        assert!(side[0] && !side[5]);
    }

    /// Min cut over all source-side subsets.
    fn brute_min_cut(n: usize, arcs: &[(usize, usize, i64)]) -> i64 {
        let mut best = i64::MAX;
        for mask in 0u32..(1 << n) {
            if mask & 1 == 0 || mask & (1 << (n - 1)) != 0 {
                continue;
            }
            let c: i64 = arcs
                .iter()
                .filter(|&&(u, v, _)| mask & (1 << u) != 0 && mask & (1 << v) == 0)
                .map(|a| a.2)
                .sum();
            best = best.min(c);
        }
        best
    }

    proptest! {
        #[test]
        fn matches_brute_force_cut(
            n in 2usize..8,
            raw in proptest::collection::vec((0usize..8, 0usize..8, 0i64..5), 0..20)
        ) {
            let arcs: Vec<_> = raw.into_iter()
                .map(|(u, v, c)| (u % n, v % n, c))
                .filter(|(u, v, _)| u != v)
                .collect();
            let mut g = FlowNetwork::new(n);
            for &(u, v, c) in &arcs {
                g.add_arc(u, v, c);
            }
            let f = g.max_flow(0, n - 1);
            prop_assert_eq!(f, brute_min_cut(n, &arcs));
            let side = g.residual_reachable(0);
            let cut: i64 = arcs.iter()
                .filter(|&&(u, v, _)| side[u] && !side[v])
                .map(|a| a.2)
                .sum();
            prop_assert_eq!(cut, f);
        }
    }

    #[test]
    fn undirected_edges_carry_both_ways() {
        let mut g = FlowNetwork::new(3);
        g.add_edge(2, 1, 1);
        g.add_edge(1, 0, 1);
        assert_eq!(g.max_flow(0, 2), 1);
        g.reset();
        assert_eq!(g.max_flow(2, 0), 1);
    }

    #[test]
    fn long_path_does_not_recurse() {
        let n = 200_000;
        let mut g = FlowNetwork::new(n);
        for i in 0..n - 1 {
            g.add_edge(i, i + 1, 1);
        }
        assert_eq!(g.max_flow(0, n - 1), 1);
    }
}
