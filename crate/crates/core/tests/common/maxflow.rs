//! Edmonds-Karp maximum flow on a dense capacity matrix.

use std::collections::VecDeque;

pub struct FlowNetwork {
    cap: Vec<Vec<i64>>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self { cap: vec![vec![0; nodes]; nodes] }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, capacity: i64) {
        self.cap[from][to] += capacity;
    }

    pub fn max_flow(mut self, source: usize, sink: usize) -> i64 {
        let n = self.cap.len();
        let mut total = 0;
        loop {
            let mut parent = vec![usize::MAX; n];
            parent[source] = source;
            let mut queue = VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    if parent[v] == usize::MAX && self.cap[u][v] > 0 {
                        parent[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            if parent[sink] == usize::MAX {
                return total;
            }
            let mut push = i64::MAX;
            let mut v = sink;
            while v != source {
                let u = parent[v];
                push = push.min(self.cap[u][v]);
                v = u;
            }
            let mut v = sink;
            while v != source {
                let u = parent[v];
                self.cap[u][v] -= push;
                self.cap[v][u] += push;
                v = u;
            }
            total += push;
        }
    }
}

/// Demand left uncovered when aggregate `supply` may serve aggregate `demand`
/// along `edges` of `(demand, supply)` pairs.
pub fn shortage(supply: &[i64], demand: &[i64], edges: &[(usize, usize)]) -> i64 {
    let r = supply.len();
    let (source, sink) = (2 * r, 2 * r + 1);
    let mut net = FlowNetwork::new(2 * r + 2);
    for k in 0..r {
        net.add_edge(source, k, supply[k]);
        net.add_edge(r + k, sink, demand[k]);
    }
    for &(d, s) in edges {
        net.add_edge(s, r + d, i64::MAX / 4);
    }
    demand.iter().sum::<i64>() - net.max_flow(source, sink)
}
