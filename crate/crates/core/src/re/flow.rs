//! Exact solver for the decoder-placement LP.
//!
//! The LP is a transportation problem: each path ships at most `red_p`
//! redundant bytes, each router absorbs at most its capacity, and a byte of
//! path `p` decoded at router `r` earns `d_pr`. With integral supplies and
//! capacities, a max-profit flow from source to sink through
//! `s -> p -> r -> t` is an optimal basic solution of the LP, so successive
//! shortest paths over the residual graph solve it exactly in integers.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// One transportation instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportProblem {
    /// Redundant bytes per path.
    pub supply: Vec<u64>,
    /// Router capacity in bytes.
    pub capacity: Vec<u64>,
    /// For each path, `(router, profit per byte)`.
    pub arcs: Vec<Vec<(usize, u32)>>,
}

impl TransportProblem {
    /// Objective of an assignment given as bytes per arc.
    pub fn objective(&self, flow: &[Vec<u64>]) -> u128 {
        self.arcs
            .iter()
            .zip(flow)
            .flat_map(|(arcs, f)| arcs.iter().zip(f))
            .map(|(&(_, d), &y)| y as u128 * d as u128)
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    to: usize,
    cap: i64,
    cost: i64,
}

struct Graph {
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
}

impl Graph {
    fn new(n: usize) -> Self {
        Graph {
            edges: Vec::new(),
            out: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.out[from].push(id);
        self.out[to].push(id + 1);
        id
    }
}

/// Bytes per arc of an optimal assignment, in the shape of `problem.arcs`.
pub fn solve_transport(problem: &TransportProblem) -> Vec<Vec<u64>> {
    let paths = problem.supply.len();
    let routers = problem.capacity.len();
    let s = 0;
    let path_node = |p: usize| 1 + p;
    let router_node = |r: usize| 1 + paths + r;
    let t = 1 + paths + routers;
    let n = t + 1;

    let mut g = Graph::new(n);
    let mut arc_ids = Vec::with_capacity(paths);
    for (p, arcs) in problem.arcs.iter().enumerate() {
        let supply = problem.supply[p] as i64;
        let ids = arcs
            .iter()
            .map(|&(r, d)| {
                if supply > 0 && problem.capacity[r] > 0 && d > 0 {
                    Some(g.add(path_node(p), router_node(r), supply, -(d as i64)))
                } else {
                    None
                }
            })
            .collect::<Vec<_>>();
        if ids.iter().any(Option::is_some) {
            g.add(s, path_node(p), supply, 0);
        }
        arc_ids.push(ids);
    }
    for (r, &cap) in problem.capacity.iter().enumerate() {
        if cap > 0 {
            g.add(router_node(r), t, cap as i64, 0);
        }
    }

    // Potentials for the initial graph; it is a layered DAG, so a single
    // forward pass gives exact shortest distances.
    let mut pi = vec![0i64; n];
    for (p, ids) in arc_ids.iter().enumerate() {
        for id in ids.iter().flatten() {
            let e = g.edges[*id];
            pi[e.to] = pi[e.to].min(pi[path_node(p)] + e.cost);
        }
    }
    pi[t] = (0..routers)
        .map(|r| pi[router_node(r)])
        .min()
        .unwrap_or(0)
        .min(0);

    let mut dist = vec![i64::MAX; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    loop {
        dist.iter_mut().for_each(|d| *d = i64::MAX);
        prev.iter_mut().for_each(|e| *e = usize::MAX);
        dist[s] = 0;
        heap.push(Reverse((0i64, s)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &id in &g.out[u] {
                let e = g.edges[id];
                if e.cap == 0 {
                    continue;
                }
                let nd = d + e.cost + pi[u] - pi[e.to];
                debug_assert!(e.cost + pi[u] - pi[e.to] >= 0);
                if nd < dist[e.to] {
                    dist[e.to] = nd;
                    prev[e.to] = id;
                    heap.push(Reverse((nd, e.to)));
                }
            }
        }
        if dist[t] == i64::MAX {
            break;
        }
        let true_cost = dist[t] + pi[t] - pi[s];
        if true_cost >= 0 {
            break;
        }
        for v in 0..n {
            if dist[v] != i64::MAX {
                pi[v] += dist[v];
            }
        }
        let mut push = i64::MAX;
        let mut v = t;
        while v != s {
            let id = prev[v];
            push = push.min(g.edges[id].cap);
            v = g.edges[id ^ 1].to;
        }
        let mut v = t;
        while v != s {
            let id = prev[v];
            g.edges[id].cap -= push;
            g.edges[id ^ 1].cap += push;
            v = g.edges[id ^ 1].to;
        }
    }

    arc_ids
        .iter()
        .map(|ids| {
            ids.iter()
                .map(|id| id.map_or(0, |id| g.edges[id ^ 1].cap as u64))
                .collect()
        })
        .collect()
}

/// Greedy assignment: arcs in decreasing profit, ties by path then router,
/// each taking as many bytes as both its path and its router still allow.
pub fn greedy_transport(problem: &TransportProblem) -> Vec<Vec<u64>> {
    let mut order: Vec<(u32, usize, usize, usize)> = problem
        .arcs
        .iter()
        .enumerate()
        .flat_map(|(p, arcs)| {
            arcs.iter()
                .enumerate()
                .map(move |(k, &(r, d))| (d, p, r, k))
        })
        .collect();
    order.sort_by_key(|&(d, p, r, _)| (Reverse(d), p, r));
    let mut left_p = problem.supply.clone();
    let mut left_r = problem.capacity.clone();
    let mut flow: Vec<Vec<u64>> = problem.arcs.iter().map(|a| vec![0; a.len()]).collect();
    for (d, p, r, k) in order {
        if d == 0 {
            continue;
        }
        let y = left_p[p].min(left_r[r]);
        flow[p][k] += y;
        left_p[p] -= y;
        left_r[r] -= y;
    }
    flow
}
