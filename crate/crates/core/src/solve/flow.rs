//! Min-cost max-flow by successive shortest augmenting paths.
//!
//! Dijkstra with Johnson potentials; arc costs must be non-negative so the zero
//! potential is valid at the start.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    cost: i64,
}

#[derive(Debug, Clone, Default)]
pub struct MinCostFlow {
    adj: Vec<Vec<usize>>,
    // arc 2i is forward, 2i+1 its residual twin
    arcs: Vec<Arc>,
    original_cap: Vec<i64>,
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            ..Default::default()
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Adds an arc and returns its id for [`MinCostFlow::flow`].
    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
        assert!(cost >= 0, "negative arc cost {cost}");
        assert!(cap >= 0, "negative capacity {cap}");
        let id = self.original_cap.len();
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap, cost });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.original_cap.push(cap);
        id
    }

    /// Flow currently routed on arc `id`.
    pub fn flow(&self, id: usize) -> i64 {
        self.original_cap[id] - self.arcs[2 * id].cap
    }

    /// Pushes as much flow as possible from `s` to `t` at minimum cost.
    /// Returns `(flow, cost)`.
    pub fn run(&mut self, s: usize, t: usize) -> (i64, i64) {
        let n = self.adj.len();
        let mut potential = vec![0i64; n];
        let mut total_flow = 0;
        let mut total_cost = 0;
        loop {
            let mut dist = vec![i64::MAX; n];
            let mut prev_arc = vec![usize::MAX; n];
            let mut heap = BinaryHeap::new();
            dist[s] = 0;
            heap.push(Reverse((0i64, s)));
            while let Some(Reverse((d, v))) = heap.pop() {
                if d > dist[v] {
                    continue;
                }
                for &a in &self.adj[v] {
                    let arc = &self.arcs[a];
                    if arc.cap == 0 {
                        continue;
                    }
                    let nd = d + arc.cost + potential[v] - potential[arc.to];
                    if nd < dist[arc.to] {
                        dist[arc.to] = nd;
                        prev_arc[arc.to] = a;
                        heap.push(Reverse((nd, arc.to)));
                    }
                }
            }
            if dist[t] == i64::MAX {
                break;
            }
            for v in 0..n {
                if dist[v] < i64::MAX {
                    potential[v] += dist[v];
                }
            }
            let mut push = i64::MAX;
            let mut v = t;
            while v != s {
                let a = prev_arc[v];
                push = push.min(self.arcs[a].cap);
                v = self.arcs[a ^ 1].to;
            }
            v = t;
            while v != s {
                let a = prev_arc[v];
                self.arcs[a].cap -= push;
                self.arcs[a ^ 1].cap += push;
                total_cost += push * self.arcs[a].cost;
                v = self.arcs[a ^ 1].to;
            }
            total_flow += push;
        }
        (total_flow, total_cost)
    }
}
