//! Randomized invariants checked against brute-force oracles.

mod common;

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use redsim::cachenet::{
    admit_cachedbit, Admission, BloomDigest, CacheConfig, CacheNetwork, CrState, LruStore,
    ResponseContext,
};
use redsim::re::{
    build_redundancy_profile, greedy_transport, solve_manifest_greedy, solve_manifest_lp,
    solve_transport, DecoderCapacity, TransportProblem,
};
use redsim::topology::{bundled, parse_edge_list, select_servers, Level, NodeId, Topology};
use redsim::workload::{generate_trace, Catalog, ChunkId, TrafficPattern};

/// Request semantics: a hit refreshes, a miss inserts.
fn access(store: &mut LruStore<u32>, key: u32) {
    if !store.touch(&key) {
        store.insert(key);
    }
}

proptest! {
    #[test]
    fn lru_inclusion_on_nested_capacities(
        caps in (0usize..12, 0usize..12),
        keys in prop::collection::vec(0u32..24, 0..300),
    ) {
        let (small, large) = (caps.0.min(caps.1), caps.0.max(caps.1));
        let mut a = LruStore::new(small);
        let mut b = LruStore::new(large);
        for &k in &keys {
            access(&mut a, k);
            access(&mut b, k);
            prop_assert!(a.len() <= small && b.len() <= large);
            for key in a.iter() {
                prop_assert!(b.contains(&key), "{key} in capacity {small} but not {large}");
            }
        }
    }

    #[test]
    fn lru_matches_reference_list(
        cap in 0usize..10,
        keys in prop::collection::vec(0u32..16, 0..300),
    ) {
        let mut store = LruStore::new(cap);
        let mut list = Vec::new();
        for &k in &keys {
            let expected = common::reference_access(&mut list, cap, k);
            let got = if store.touch(&k) { None } else { store.insert(k) };
            prop_assert_eq!(got, expected);
            prop_assert_eq!(store.iter().collect::<Vec<_>>(), list.clone());
        }
    }
}

fn small_topologies() -> Vec<Arc<Topology>> {
    ["path6", "star", "exodus-pop", "exodus-router"]
        .into_iter()
        .map(|n| Arc::new(bundled(n).unwrap()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cr_capacity_never_exceeded(
        topo in 0usize..4,
        admission in prop::sample::select(vec![Admission::All, Admission::Cachedbit, Admission::Nbsc]),
        capacity in 0usize..9,
        last_copy: bool,
        seed: u64,
    ) {
        let topo = small_topologies().swap_remove(topo);
        let placement = select_servers(&topo, 1.max(topo.pop_nodes().len() / 3)).unwrap();
        let catalog = Catalog::new(60, 0.8, 1024).unwrap();
        let trace = generate_trace(&catalog, &topo, &placement, TrafficPattern::Constant, 400, seed).unwrap();
        let mut config = CacheConfig::new(admission, capacity);
        config.last_copy = last_copy;
        config.exchange_period = 37;
        let mut net = CacheNetwork::new(topo.clone(), config, seed);
        for ev in &trace {
            let rec = net.process_request(ev);
            prop_assert!(net.crs().iter().all(|cr| cr.store.len() <= capacity));
            prop_assert!(rec.bytes_hops == 1024 * rec.hops as u64);
        }
    }

    #[test]
    fn cachedbit_adds_at_most_two_copies(
        len in 1usize..10,
        prefill in prop::collection::vec(any::<bool>(), 10),
        cached_bit: bool,
        last_copy: bool,
        seed: u64,
    ) {
        let mut crs: Vec<CrState> = (0..len).map(|i| CrState::new(NodeId(i as u32), 4, 16, 4)).collect();
        let chunk = ChunkId::from_rank(7);
        for (cr, &fill) in crs.iter_mut().zip(&prefill) {
            if fill {
                cr.lru_insert(chunk);
            }
        }
        let path: Vec<NodeId> = (0..len as u32).rev().map(NodeId).collect();
        let mut ctx = ResponseContext::new(&path);
        ctx.cached_bit = cached_bit;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stored = admit_cachedbit(&mut crs, &mut ctx, chunk, last_copy, &mut rng);
        prop_assert!(stored <= 2);
        if cached_bit || !last_copy {
            prop_assert!(stored <= 1);
        }
        if last_copy {
            prop_assert!(crs[0].store.contains(&chunk));
        }
    }
}

#[test]
fn cachedbit_store_rate_matches_closed_form() {
    // Four CRs, fresh chunk every response: one copy at the last CR plus
    // one more unless all three coins before it fail.
    let n = 4;
    let trials = 40_000;
    let mut crs: Vec<CrState> = (0..n)
        .map(|i| CrState::new(NodeId(i), trials, 16, 4))
        .collect();
    let path: Vec<NodeId> = (0..n).rev().map(NodeId).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut total = 0usize;
    for t in 0..trials {
        let mut ctx = ResponseContext::new(&path);
        total += admit_cachedbit(
            &mut crs,
            &mut ctx,
            ChunkId::from_rank(t as u32),
            true,
            &mut rng,
        );
    }
    let q = 1.0 - 0.75f64.powi(3);
    let expected = 1.0 + q;
    let sigma = (q * (1.0 - q) / trials as f64).sqrt();
    let mean = total as f64 / trials as f64;
    assert!(
        (mean - expected).abs() <= 3.0 * sigma,
        "mean {mean} vs {expected} ± {}",
        3.0 * sigma
    );
}

proptest! {
    #[test]
    fn bloom_has_no_false_negatives(
        capacity in 1usize..400,
        ranks in prop::collection::hash_set(0u32..100_000, 0..400),
    ) {
        let mut f = BloomDigest::for_capacity(capacity, 16, 4);
        for &r in &ranks {
            f.insert(ChunkId::from_rank(r).digest);
        }
        for &r in &ranks {
            prop_assert!(f.query(ChunkId::from_rank(r).digest));
        }
    }
}

#[test]
fn bloom_fpr_within_twice_analytic_bound() {
    for capacity in [64usize, 128, 256, 512, 1024] {
        let mut f = BloomDigest::for_capacity(capacity, 16, 4);
        for r in 0..capacity as u32 {
            f.insert(ChunkId::from_rank(r).digest);
        }
        let bound = common::bloom_bound(f.m(), f.k(), capacity);
        let probes = 10_000u32;
        let fp = (0..probes)
            .filter(|i| f.query(ChunkId::from_rank(1_000_000 + i).digest))
            .count();
        let rate = fp as f64 / probes as f64;
        assert!(
            rate <= 2.0 * bound,
            "capacity {capacity}: fpr {rate} > 2 x {bound}"
        );
    }
}

/// Random connected graph: a random tree plus extra edges.
fn random_graph() -> impl Strategy<Value = (usize, Vec<(u32, u32)>)> {
    (2usize..30).prop_flat_map(|n| {
        let parents: Vec<BoxedStrategy<u32>> = (1..n).map(|i| (0..i as u32).boxed()).collect();
        let extra = prop::collection::vec((0..n as u32, 0..n as u32), 0..2 * n);
        (Just(n), parents, extra).prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(u32, u32)> = parents
                .into_iter()
                .enumerate()
                .map(|(i, p)| (i as u32 + 1, p))
                .collect();
            edges.extend(extra.into_iter().filter(|(a, b)| a != b));
            (n, edges)
        })
    })
}

fn edge_list(edges: &[(u32, u32)]) -> String {
    edges.iter().map(|(a, b)| format!("{a} {b}\n")).collect()
}

fn floyd_warshall(n: usize, edges: &[(u32, u32)]) -> Vec<Vec<u32>> {
    let inf = u32::MAX / 2;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in edges {
        d[a as usize][b as usize] = 1;
        d[b as usize][a as usize] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shortest_paths_match_floyd_warshall((n, edges) in random_graph()) {
        let topo = parse_edge_list(&edge_list(&edges), Level::Pop).unwrap();
        let dist = floyd_warshall(n, &edges);
        let adjacent: HashSet<(u32, u32)> = edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        for a in 0..n as u32 {
            for b in 0..n as u32 {
                let path = topo.shortest_path(NodeId(a), NodeId(b)).unwrap();
                prop_assert_eq!(path.len() as u32 - 1, dist[a as usize][b as usize]);
                prop_assert_eq!(topo.distance(NodeId(a), NodeId(b)).unwrap(), dist[a as usize][b as usize]);
                prop_assert!(path.windows(2).all(|w| adjacent.contains(&(w[0].0, w[1].0))));
                // Lexicographically smallest: at each step, the lowest
                // neighbour that stays on a shortest path.
                let mut expected = vec![a];
                let mut cur = a;
                while cur != b {
                    cur = (0..n as u32)
                        .find(|&v| adjacent.contains(&(cur, v))
                            && dist[v as usize][b as usize] + 1 == dist[cur as usize][b as usize])
                        .unwrap();
                    expected.push(cur);
                }
                prop_assert_eq!(path.iter().map(|v| v.0).collect::<Vec<_>>(), expected);
                prop_assert_eq!(topo.shortest_path(NodeId(a), NodeId(b)).unwrap(), path);
            }
        }
    }

    #[test]
    fn server_selection_ignores_edge_order((n, edges) in random_graph(), k in 1usize..6, seed: u64) {
        prop_assume!(k < n);
        let topo = parse_edge_list(&edge_list(&edges), Level::Pop).unwrap();
        let mut shuffled: Vec<(u32, u32)> = edges.iter().map(|&(a, b)| (b, a)).collect();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let other = parse_edge_list(&edge_list(&shuffled), Level::Pop).unwrap();
        let ids = |t: &Topology, nodes: &[NodeId]| nodes.iter().map(|&v| t.original_id(v)).collect::<Vec<_>>();
        let p = select_servers(&topo, k).unwrap();
        let q = select_servers(&other, k).unwrap();
        prop_assert_eq!(ids(&topo, p.servers()), ids(&other, q.servers()));
        prop_assert_eq!(ids(&topo, p.clients()), ids(&other, q.clients()));
        // Highest degree first, ties to the lowest id.
        let mut ranked: Vec<NodeId> = topo.pop_nodes();
        ranked.sort_by_key(|&v| (std::cmp::Reverse(topo.degree(v)), v));
        let mut top: Vec<NodeId> = ranked[..k].to_vec();
        top.sort();
        prop_assert_eq!(p.servers(), &top[..]);
    }
}

/// Transportation instances whose optimum lies on a 0.05 grid: every path
/// ships 20 units and capacities are whole units.
fn grid_instance() -> impl Strategy<Value = TransportProblem> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(paths, routers)| {
        let max_arcs = if paths == 3 { 2 } else { 3 };
        let arcs = prop::collection::vec(
            prop::collection::btree_map(0..routers, 1u32..6, 1..=max_arcs.min(routers)),
            paths,
        );
        let caps = prop::collection::vec(0u64..45, routers);
        (arcs, caps).prop_map(move |(arcs, capacity)| TransportProblem {
            supply: vec![20; paths],
            capacity,
            arcs: arcs.into_iter().map(|m| m.into_iter().collect()).collect(),
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lp_matches_grid_oracle(problem in grid_instance()) {
        let flow = solve_transport(&problem);
        prop_assert!(common::transport_feasible(&problem, &flow));
        let lp = problem.objective(&flow) as f64;
        let grid = common::grid_oracle(&problem) as f64;
        prop_assert!(lp >= grid, "LP {lp} below grid {grid}");
        prop_assert!(lp <= grid * 1.01 + 1e-9, "LP {lp} vs grid {grid}");
    }

    #[test]
    fn greedy_is_feasible_and_half_optimal(problem in grid_instance()) {
        let lp = problem.objective(&solve_transport(&problem));
        let greedy_flow = greedy_transport(&problem);
        prop_assert!(common::transport_feasible(&problem, &greedy_flow));
        let greedy = problem.objective(&greedy_flow);
        prop_assert!(greedy <= lp);
        prop_assert!(2 * greedy >= lp, "greedy {greedy} vs LP {lp}");
    }

    #[test]
    fn lp_is_monotone_in_capacity(problem in grid_instance(), extra in prop::collection::vec(0u64..20, 3)) {
        let base = problem.objective(&solve_transport(&problem));
        let mut bigger = problem.clone();
        for (c, e) in bigger.capacity.iter_mut().zip(&extra) {
            *c += e;
        }
        prop_assert!(problem.objective(&solve_transport(&bigger)) >= base);
    }

    #[test]
    fn manifests_are_feasible(
        seed: u64,
        window in 50usize..2000,
        per_window in 0u64..40_000,
        greedy: bool,
    ) {
        let topo = bundled("exodus-pop").unwrap();
        let placement = select_servers(&topo, 10).unwrap();
        let catalog = Catalog::new(300, 0.9, 1024).unwrap();
        let trace = generate_trace(&catalog, &topo, &placement, TrafficPattern::Gravity, 3000, seed).unwrap();
        let profile = build_redundancy_profile(&trace, &placement, &topo, window, 1024);
        let caps = DecoderCapacity::Uniform(per_window);
        let manifest = if greedy {
            solve_manifest_greedy(&profile, &caps)
        } else {
            solve_manifest_lp(&profile, &caps)
        };
        let (path_excess, router_excess) = manifest.residuals(&profile, &caps);
        prop_assert!(path_excess <= 1e-6 && router_excess <= 1e-6, "{path_excess} {router_excess}");
        prop_assert!(manifest.paths.iter().flatten().all(|&(_, _, x)| (0.0..=1.0 + 1e-12).contains(&x)));
    }
}

#[test]
fn bfs_distances_are_symmetric_on_bundled_maps() {
    for name in ["sprint-pop", "att-router"] {
        let topo = bundled(name).unwrap();
        let n = topo.node_count() as u32;
        for a in (0..n).step_by(37) {
            // Plain BFS from a, independent of the topology's own cache.
            let mut dist = vec![u32::MAX; n as usize];
            let mut queue = VecDeque::from([a]);
            dist[a as usize] = 0;
            while let Some(u) = queue.pop_front() {
                for &v in topo.neighbors(NodeId(u)) {
                    if dist[v.index()] == u32::MAX {
                        dist[v.index()] = dist[u as usize] + 1;
                        queue.push_back(v.0);
                    }
                }
            }
            for b in 0..n {
                assert_eq!(
                    topo.distance(NodeId(a), NodeId(b)).unwrap(),
                    dist[b as usize]
                );
                assert_eq!(
                    topo.distance(NodeId(b), NodeId(a)).unwrap(),
                    dist[b as usize]
                );
            }
        }
    }
}
