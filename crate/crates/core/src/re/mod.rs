//! Redundancy-elimination baselines.
//!
//! SmartRE: the server POP's ingress router encodes every chunk it has seen
//! on a path within the current profiling window, and routers downstream
//! decode the share the caching manifest assigns them. Decoders sit on
//! `v0 ..= v(L-1)` of the path `v0 .. vL` (client to server), the CRs INCA
//! consults short of the server POP itself. Origin always serves, and hops
//! are counted from the client as in the CR network.
//!
//! EndRE: each client/server pair keeps an LRU chunk memory at the client
//! and the server sends only a shim for chunks the client still holds.

mod flow;

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::sync::Arc;

pub use flow::{greedy_transport, solve_transport, TransportProblem};

use crate::cachenet::{origin_hops, LruStore, ACCESS_HOPS};
use crate::topology::{NodeId, Placement, Topology};
use crate::workload::RequestEvent;

/// PACK is not simulated; it is reported as EndRE's savings shifted by this
/// constant.
pub const PACK_SAVINGS_OFFSET: f64 = -0.02;

/// Tolerance on manifest constraint residuals.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathProfile {
    pub client: NodeId,
    pub server: NodeId,
    /// Nodes from client to server.
    pub nodes: Arc<[NodeId]>,
    pub vol_bytes: u64,
    pub red_bytes: u64,
}

impl PathProfile {
    /// Links between client and server POP.
    pub fn links(&self) -> u32 {
        (self.nodes.len() - 1) as u32
    }

    /// Hops a chunk from the origin travels to the client.
    pub fn hops(&self) -> u32 {
        self.links() + ACCESS_HOPS
    }

    /// Decoder candidates `(router, hops from ingress)`, far end first.
    pub fn decoders(&self) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        let len = self.links();
        (0..len).map(move |i| (self.nodes[i as usize], len - i))
    }
}

/// Per-path volume and redundancy over tumbling windows of `window`
/// requests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RedundancyProfile {
    pub window: usize,
    pub windows: u64,
    pub chunk_size: u64,
    pub paths: Vec<PathProfile>,
    index: HashMap<(NodeId, NodeId), usize>,
}

impl RedundancyProfile {
    pub fn path_id(&self, client: NodeId, server: NodeId) -> Option<usize> {
        self.index.get(&(client, server)).copied()
    }

    pub fn total_vol(&self) -> u64 {
        self.paths.iter().map(|p| p.vol_bytes).sum()
    }

    pub fn total_red(&self) -> u64 {
        self.paths.iter().map(|p| p.red_bytes).sum()
    }

    /// Per-window decoder capacity that lets every path decode all its
    /// redundancy at its farthest decoder: the heaviest such load on any
    /// router.
    pub fn ideal_capacity(&self) -> u64 {
        let mut load: HashMap<NodeId, u64> = HashMap::new();
        for p in &self.paths {
            if let Some((r, _)) = p.decoders().next() {
                *load.entry(r).or_default() += p.red_bytes;
            }
        }
        load.values()
            .map(|&b| b.div_ceil(self.windows.max(1)))
            .max()
            .unwrap_or(0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path_id", "vol_bytes", "red_bytes"])?;
        for (id, p) in self.paths.iter().enumerate() {
            w.write_record(&[
                id.to_string(),
                p.vol_bytes.to_string(),
                p.red_bytes.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scans `trace` in windows of `window` requests. A request is redundant
/// when its chunk already crossed the same path earlier in its window.
///
/// # Panics
///
/// If `window` is zero or a trace node is not in the topology.
pub fn build_redundancy_profile(
    trace: &[RequestEvent],
    placement: &Placement,
    topology: &Topology,
    window: usize,
    chunk_size: u64,
) -> RedundancyProfile {
    assert!(window >= 1, "profile window must be at least one request");
    let mut paths = Vec::with_capacity(placement.pair_count());
    let mut index = HashMap::with_capacity(placement.pair_count());
    for &client in placement.clients() {
        for &server in placement.servers() {
            index.insert((client, server), paths.len());
            paths.push(PathProfile {
                client,
                server,
                nodes: topology
                    .shortest_path(client, server)
                    .expect("placement nodes"),
                vol_bytes: 0,
                red_bytes: 0,
            });
        }
    }
    let mut profile = RedundancyProfile {
        window,
        windows: trace.len().div_ceil(window) as u64,
        chunk_size,
        paths,
        index,
    };
    for_each_redundancy(trace, window, |ev, redundant| {
        let id = match profile.path_id(ev.client, ev.server) {
            Some(id) => id,
            None => {
                let id = profile.paths.len();
                profile.index.insert((ev.client, ev.server), id);
                profile.paths.push(PathProfile {
                    client: ev.client,
                    server: ev.server,
                    nodes: topology
                        .shortest_path(ev.client, ev.server)
                        .expect("trace nodes"),
                    vol_bytes: 0,
                    red_bytes: 0,
                });
                id
            }
        };
        let p = &mut profile.paths[id];
        p.vol_bytes += chunk_size;
        if redundant {
            p.red_bytes += chunk_size;
        }
    });
    profile
}

fn for_each_redundancy(
    trace: &[RequestEvent],
    window: usize,
    mut f: impl FnMut(&RequestEvent, bool),
) {
    let mut seen: HashSet<(NodeId, NodeId, u32)> = HashSet::new();
    for (i, ev) in trace.iter().enumerate() {
        if i % window == 0 {
            seen.clear();
        }
        let redundant = !seen.insert((ev.client, ev.server, ev.chunk.rank));
        f(ev, redundant);
    }
}

/// Fraction of each path's redundant volume decoded at each on-path router.
#[derive(Debug, Clone, PartialEq)]
pub struct CachingManifest {
    /// Per path, `(router, hops from ingress, fraction)` for every decoder
    /// candidate.
    pub paths: Vec<Vec<(NodeId, u32, f64)>>,
    /// Σ x · red_p · dist over the profile, in byte-hops.
    pub objective: f64,
}

impl CachingManifest {
    pub fn zero(profile: &RedundancyProfile) -> Self {
        CachingManifest {
            paths: profile
                .paths
                .iter()
                .map(|p| p.decoders().map(|(r, d)| (r, d, 0.0)).collect())
                .collect(),
            objective: 0.0,
        }
    }

    /// Largest violations of the per-path and per-router constraints, in
    /// fraction and bytes respectively; both are ≤ 0 when feasible.
    pub fn residuals(
        &self,
        profile: &RedundancyProfile,
        capacities: &DecoderCapacity,
    ) -> (f64, f64) {
        let mut path_excess = f64::NEG_INFINITY;
        let mut load: HashMap<NodeId, f64> = HashMap::new();
        for (p, entries) in profile.paths.iter().zip(&self.paths) {
            let total: f64 = entries.iter().map(|e| e.2).sum();
            path_excess = path_excess.max(total - 1.0);
            for &(r, _, x) in entries {
                *load.entry(r).or_default() += x * p.red_bytes as f64;
            }
        }
        let router_excess = load
            .iter()
            .map(|(r, l)| l - capacities.total_bytes(*r, profile.windows) as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        (path_excess.max(-1.0), router_excess)
    }

    pub fn is_feasible(&self, profile: &RedundancyProfile, capacities: &DecoderCapacity) -> bool {
        let (p, r) = self.residuals(profile, capacities);
        p <= FEASIBILITY_TOL && r <= FEASIBILITY_TOL
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path_id", "router", "fraction"])?;
        for (id, entries) in self.paths.iter().enumerate() {
            for &(r, _, x) in entries {
                if x > 0.0 {
                    w.write_record(&[id.to_string(), r.to_string(), x.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Decoder memory per router, in bytes per profiling window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecoderCapacity {
    Uniform(u64),
    PerRouter(HashMap<NodeId, u64>),
}

impl DecoderCapacity {
    pub fn per_window(&self, router: NodeId) -> u64 {
        match self {
            DecoderCapacity::Uniform(c) => *c,
            DecoderCapacity::PerRouter(m) => m.get(&router).copied().unwrap_or(0),
        }
    }

    fn total_bytes(&self, router: NodeId, windows: u64) -> u64 {
        self.per_window(router).saturating_mul(windows.max(1))
    }
}

fn transport_problem(
    profile: &RedundancyProfile,
    capacities: &DecoderCapacity,
) -> (TransportProblem, Vec<NodeId>) {
    let mut routers: Vec<NodeId> = profile
        .paths
        .iter()
        .flat_map(|p| p.decoders().map(|(r, _)| r))
        .collect();
    routers.sort_unstable();
    routers.dedup();
    let slot: HashMap<NodeId, usize> = routers.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let problem = TransportProblem {
        supply: profile.paths.iter().map(|p| p.red_bytes).collect(),
        capacity: routers
            .iter()
            .map(|&r| capacities.total_bytes(r, profile.windows))
            .collect(),
        arcs: profile
            .paths
            .iter()
            .map(|p| p.decoders().map(|(r, d)| (slot[&r], d)).collect())
            .collect(),
    };
    (problem, routers)
}

fn manifest_from_flow(
    profile: &RedundancyProfile,
    problem: &TransportProblem,
    flow: &[Vec<u64>],
) -> CachingManifest {
    let paths = profile
        .paths
        .iter()
        .zip(flow)
        .map(|(p, f)| {
            p.decoders()
                .zip(f)
                .map(|((r, d), &y)| {
                    let x = if p.red_bytes == 0 {
                        0.0
                    } else {
                        y as f64 / p.red_bytes as f64
                    };
                    (r, d, x)
                })
                .collect()
        })
        .collect();
    CachingManifest {
        paths,
        objective: problem.objective(flow) as f64,
    }
}

/// Optimal decoder placement.
pub fn solve_manifest_lp(
    profile: &RedundancyProfile,
    capacities: &DecoderCapacity,
) -> CachingManifest {
    let (problem, _) = transport_problem(profile, capacities);
    let flow = solve_transport(&problem);
    manifest_from_flow(profile, &problem, &flow)
}

/// Greedy decoder placement by saving per byte.
pub fn solve_manifest_greedy(
    profile: &RedundancyProfile,
    capacities: &DecoderCapacity,
) -> CachingManifest {
    let (problem, _) = transport_problem(profile, capacities);
    let flow = greedy_transport(&problem);
    manifest_from_flow(profile, &problem, &flow)
}

/// Per-request outcome of an RE run. Every request is served by the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReRecord {
    pub request: RequestEvent,
    pub hops: u32,
    /// Bytes leaving the server.
    pub bytes: f64,
    pub bytes_hops: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReOutcome {
    pub requests: u64,
    pub origin_served: u64,
    pub baseline_bytes: u64,
    pub transferred_bytes: f64,
    pub baseline_bytes_hops: u64,
    pub reduced_bytes_hops: f64,
    pub reduction_fraction: f64,
    pub bandwidth_savings: f64,
}

impl ReOutcome {
    pub fn from_records(records: &[ReRecord], chunk_size: u64) -> Self {
        let baseline_bytes = chunk_size * records.len() as u64;
        let baseline_bytes_hops: u64 = records.iter().map(|r| chunk_size * r.hops as u64).sum();
        let transferred_bytes: f64 = records.iter().map(|r| r.bytes).sum();
        let reduced_bytes_hops: f64 = records.iter().map(|r| r.bytes_hops).sum();
        let frac = |reduced: f64, base: u64| {
            if base == 0 {
                0.0
            } else {
                1.0 - reduced / base as f64
            }
        };
        ReOutcome {
            requests: records.len() as u64,
            origin_served: records.len() as u64,
            baseline_bytes,
            transferred_bytes,
            baseline_bytes_hops,
            reduced_bytes_hops,
            reduction_fraction: frac(reduced_bytes_hops, baseline_bytes_hops),
            bandwidth_savings: frac(transferred_bytes, baseline_bytes),
        }
    }
}

/// Replays `trace` under `manifest`, detecting redundancy with the
/// profile's windowing. A redundant chunk decoded at router `r` crosses the
/// `d_r` hops from the ingress as a shim of `shim_bytes` instead.
pub fn simulate_smartre(
    trace: &[RequestEvent],
    manifest: &CachingManifest,
    profile: &RedundancyProfile,
    topology: &Topology,
    shim_bytes: u64,
) -> Vec<ReRecord> {
    let chunk = profile.chunk_size as f64;
    let saving_per_hop = (profile.chunk_size.saturating_sub(shim_bytes)) as f64;
    let path_saving: Vec<f64> = manifest
        .paths
        .iter()
        .map(|entries| entries.iter().map(|&(_, d, x)| x * d as f64).sum::<f64>() * saving_per_hop)
        .collect();
    let mut records = Vec::with_capacity(trace.len());
    for_each_redundancy(trace, profile.window, |ev, redundant| {
        let (hops, saved) = match profile.path_id(ev.client, ev.server) {
            Some(id) => (
                profile.paths[id].hops(),
                if redundant { path_saving[id] } else { 0.0 },
            ),
            None => (origin_hops(topology, ev.client, ev.server), 0.0),
        };
        records.push(ReRecord {
            request: *ev,
            hops,
            bytes: chunk,
            bytes_hops: chunk * hops as f64 - saved,
        });
    });
    records
}

/// End-to-end RE with `pair_cache_capacity` chunks of memory per
/// client/server pair.
pub fn simulate_endre(
    trace: &[RequestEvent],
    pair_cache_capacity: usize,
    topology: &Topology,
    chunk_size: u64,
    shim_bytes: u64,
) -> Vec<ReRecord> {
    let mut memories: HashMap<(NodeId, NodeId), LruStore<u32>> = HashMap::new();
    let mut hops_cache: HashMap<(NodeId, NodeId), u32> = HashMap::new();
    trace
        .iter()
        .map(|ev| {
            let key = (ev.client, ev.server);
            let hops = *hops_cache
                .entry(key)
                .or_insert_with(|| origin_hops(topology, ev.client, ev.server));
            let memory = memories
                .entry(key)
                .or_insert_with(|| LruStore::new(pair_cache_capacity));
            let bytes = if memory.touch(&ev.chunk.rank) {
                shim_bytes.min(chunk_size)
            } else {
                memory.insert(ev.chunk.rank);
                chunk_size
            } as f64;
            ReRecord {
                request: *ev,
                hops,
                bytes,
                bytes_hops: bytes * hops as f64,
            }
        })
        .collect()
}
