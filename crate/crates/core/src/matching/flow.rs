//! Min-cost flow by successive shortest paths with Johnson potentials.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

const INF: i64 = i64::MAX / 4;

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    rev: usize,
    cap: i64,
    cost: i64,
}

#[derive(Debug, Clone)]
pub struct MinCostFlow {
    graph: Vec<Vec<Arc>>,
}

/// Handle to a forward arc, for reading its flow after solving.
#[derive(Debug, Clone, Copy)]
pub struct ArcId {
    from: usize,
    idx: usize,
}

impl MinCostFlow {
    pub fn new(n: usize) -> Self {
        Self {
            graph: vec![Vec::new(); n],
        }
    }

    /// Adds an arc with non-negative cost.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> ArcId {
        debug_assert!(cost >= 0 && cap >= 0);
        let idx = self.graph[from].len();
        let rev = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Arc { to, rev, cap, cost });
        self.graph[to].push(Arc {
            to: from,
            rev: idx,
            cap: 0,
            cost: -cost,
        });
        ArcId { from, idx }
    }

    pub fn flow_on(&self, arc: ArcId) -> i64 {
        let a = self.graph[arc.from][arc.idx];
        self.graph[a.to][a.rev].cap
    }

    /// Pushes up to `limit` units from `source` to `sink` at minimum cost.
    /// Returns `(flow, cost)`.
    pub fn solve(&mut self, source: usize, sink: usize, limit: i64) -> (i64, i64) {
        let n = self.graph.len();
        let mut potential = vec![0i64; n];
        let mut dist = vec![INF; n];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let (mut flow, mut cost) = (0i64, 0i64);

        while flow < limit {
            dist.fill(INF);
            prev.fill(None);
            dist[source] = 0;
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0i64, source)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for (i, a) in self.graph[u].iter().enumerate() {
                    if a.cap <= 0 {
                        continue;
                    }
                    let nd = d + a.cost + potential[u] - potential[a.to];
                    if nd < dist[a.to] {
                        dist[a.to] = nd;
                        prev[a.to] = Some((u, i));
                        heap.push(Reverse((nd, a.to)));
                    }
                }
            }
            if dist[sink] >= INF {
                break;
            }
            for v in 0..n {
                if dist[v] < INF {
                    potential[v] += dist[v];
                }
            }
            let mut push = limit - flow;
            let mut v = sink;
            while let Some((u, i)) = prev[v] {
                push = push.min(self.graph[u][i].cap);
                v = u;
            }
            let mut v = sink;
            while let Some((u, i)) = prev[v] {
                let rev = self.graph[u][i].rev;
                self.graph[u][i].cap -= push;
                self.graph[v][rev].cap += push;
                cost += push * self.graph[u][i].cost;
                v = u;
            }
            flow += push;
        }
        (flow, cost)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_cheaper_of_two_paths() {
        let mut g = MinCostFlow::new(4);
        let a = g.add_arc(0, 1, 1, 5);
        let b = g.add_arc(0, 2, 1, 1);
        g.add_arc(1, 3, 1, 0);
        g.add_arc(2, 3, 1, 0);
        assert_eq!(g.solve(0, 3, 1), (1, 1));
        assert_eq!(g.flow_on(a), 0);
        assert_eq!(g.flow_on(b), 1);
    }

    #[test]
    fn reroutes_through_residual_arcs() {
        // Classic case where the greedy first path must be undone.
        let mut g = MinCostFlow::new(4);
        g.add_arc(0, 1, 1, 0);
        g.add_arc(0, 2, 1, 0);
        g.add_arc(1, 3, 1, 10);
        g.add_arc(1, 2, 1, 0);
        g.add_arc(2, 3, 1, 1);
        assert_eq!(g.solve(0, 3, 2), (2, 11));
    }
}
