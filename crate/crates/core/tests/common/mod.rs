//! Independent oracles shared by the integration tests and the acceptance
//! harness.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::path::Path;

use redsim::metrics::warmup_len;
use redsim::re::TransportProblem;
use redsim::scenario::ReportRow;
use redsim::topology::{NodeId, Topology};

/// Obviously-correct LRU, most recent first. Returns the evicted key.
pub fn reference_access(list: &mut Vec<u32>, cap: usize, key: u32) -> Option<u32> {
    if let Some(pos) = list.iter().position(|&k| k == key) {
        list.remove(pos);
        list.insert(0, key);
        return None;
    }
    if cap == 0 {
        return None;
    }
    list.insert(0, key);
    if list.len() > cap {
        list.pop()
    } else {
        None
    }
}

/// Plain BFS hop distances from `from`.
pub fn bfs(topo: &Topology, from: NodeId) -> Vec<u32> {
    let mut dist = vec![u32::MAX; topo.node_count()];
    dist[from.index()] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &v in topo.neighbors(u) {
            if dist[v.index()] == u32::MAX {
                dist[v.index()] = dist[u.index()] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Analytic Bloom false-positive rate.
pub fn bloom_bound(m: u64, k: u32, n: usize) -> f64 {
    (1.0 - (-(k as f64) * n as f64 / m as f64).exp()).powi(k as i32)
}

/// Best objective of a transportation instance whose paths each ship 20
/// units, over fractions in steps of 0.05.
pub fn grid_oracle(problem: &TransportProblem) -> u128 {
    fn rec(problem: &TransportProblem, p: usize, load: &mut Vec<u64>) -> u128 {
        if p == problem.supply.len() {
            return 0;
        }
        let arcs = &problem.arcs[p];
        let step = problem.supply[p] / 20;
        let mut best = 0;
        let mut units = vec![0u64; arcs.len()];
        loop {
            let used: u64 = units.iter().sum();
            let fits = arcs
                .iter()
                .zip(&units)
                .all(|(&(r, _), &u)| load[r] + u * step <= problem.capacity[r]);
            if used <= 20 && fits {
                for (&(r, _), &u) in arcs.iter().zip(&units) {
                    load[r] += u * step;
                }
                let here: u128 = arcs
                    .iter()
                    .zip(&units)
                    .map(|(&(_, d), &u)| (u * step) as u128 * d as u128)
                    .sum();
                best = best.max(here + rec(problem, p + 1, load));
                for (&(r, _), &u) in arcs.iter().zip(&units) {
                    load[r] -= u * step;
                }
            }
            let mut i = 0;
            loop {
                if i == units.len() {
                    return best;
                }
                units[i] += 1;
                if units[i] <= 20 {
                    break;
                }
                units[i] = 0;
                i += 1;
            }
        }
    }
    rec(problem, 0, &mut vec![0; problem.capacity.len()])
}

pub fn transport_feasible(problem: &TransportProblem, flow: &[Vec<u64>]) -> bool {
    let mut load = vec![0u64; problem.capacity.len()];
    for (p, (arcs, f)) in problem.arcs.iter().zip(flow).enumerate() {
        if f.iter().sum::<u64>() > problem.supply[p] {
            return false;
        }
        for (&(r, _), &y) in arcs.iter().zip(f) {
            load[r] += y;
        }
    }
    load.iter().zip(&problem.capacity).all(|(l, c)| l <= c)
}

/// Recomputes `(footprint_reduction, hit_rate)` of a per-seed report row
/// from the exported trace and fulfillment log, with its own BFS baseline.
pub fn replay_row(
    export: &Path,
    row: &ReportRow,
    topo: &Topology,
    warmup: f64,
    chunk: u64,
) -> (f64, f64) {
    let seed = row.seed.expect("per-seed row");
    let trace_path = export.join("traces").join(format!(
        "{}-{}-a{}-{}-s{seed}.csv",
        row.topology, row.level, row.alpha, row.pattern
    ));
    let variant = if row.last_copy == Some(false) {
        "-nolc"
    } else {
        ""
    };
    let log_path = export.join("fulfillment").join(format!(
        "{}-{}-{}{variant}-c{}-a{}-{}-s{seed}.csv",
        row.topology, row.level, row.policy, row.cache_chunks, row.alpha, row.pattern
    ));
    let read = |p: &Path| -> Vec<csv::StringRecord> {
        csv::Reader::from_reader(File::open(p).unwrap())
            .records()
            .map(Result::unwrap)
            .collect()
    };
    let trace = read(&trace_path);
    let log = read(&log_path);
    assert_eq!(trace.len(), log.len());
    let mut dist_cache: HashMap<u32, Vec<u32>> = HashMap::new();
    let warm = warmup_len(log.len(), warmup);
    let (mut reduced, mut baseline, mut hits) = (0u64, 0u64, 0usize);
    for (t, l) in trace.iter().zip(&log).skip(warm) {
        assert_eq!(t[0], l[0]);
        let client: u32 = t[1].parse().unwrap();
        let server: u32 = t[2].parse().unwrap();
        let dist = dist_cache
            .entry(server)
            .or_insert_with(|| bfs(topo, NodeId(server)));
        // One access hop from the client host to its POP's CR.
        baseline += chunk * (dist[client as usize] as u64 + 1);
        let hops: u64 = l[3].parse().unwrap();
        let bytes_hops: u64 = l[4].parse().unwrap();
        assert_eq!(bytes_hops, chunk * hops);
        reduced += bytes_hops;
        hits += usize::from(&l[1] != "origin");
    }
    (
        1.0 - reduced as f64 / baseline as f64,
        hits as f64 / (log.len() - warm) as f64,
    )
}
