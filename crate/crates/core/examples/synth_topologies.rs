//! Regenerates the bundled ISP topologies under `assets/topologies/`.
//!
//! Each map is a seeded geographic graph: POPs are scattered on the unit
//! square, joined by a Euclidean spanning tree plus a mix of short regional
//! links and a few long-haul links attached preferentially to well-connected
//! POPs. Routers are then spread over POPs roughly in proportion to POP
//! degree, meshed inside each POP, and joined along every POP-level link,
//! with extra links added until the router/link counts match the target.
//!
//! ```text
//! cargo run -p redsim-core --example synth_topologies
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Spec {
    name: &'static str,
    pops: usize,
    routers: usize,
    links: usize,
    seed: u64,
}

const SPECS: &[Spec] = &[
    Spec {
        name: "exodus",
        pops: 23,
        routers: 338,
        links: 800,
        seed: 3967,
    },
    Spec {
        name: "sprint",
        pops: 43,
        routers: 547,
        links: 1600,
        seed: 1239,
    },
    Spec {
        name: "att",
        pops: 108,
        routers: 733,
        links: 2300,
        seed: 7018,
    },
    Spec {
        name: "ntt",
        pops: 121,
        routers: 1018,
        links: 2300,
        seed: 2914,
    },
];

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/topologies");
    fs::create_dir_all(&dir)?;
    for spec in SPECS {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let pop_edges = pop_graph(spec.pops, &mut rng);
        let (router_edges, gateways) = router_graph(spec, &pop_edges, &mut rng);

        let mut pop_txt = format!(
            "# level=pop name={}\n# synthetic: {} POPs, seed {}\n",
            spec.name, spec.pops, spec.seed
        );
        for (u, v) in &pop_edges {
            pop_txt.push_str(&format!("{u} {v}\n"));
        }
        fs::write(dir.join(format!("{}-pop.txt", spec.name)), pop_txt)?;

        let mut router_txt = format!(
            "# level=router name={}\n# synthetic: {} routers, {} links, seed {}\n# pops {}\n",
            spec.name,
            spec.routers,
            spec.links,
            spec.seed,
            gateways
                .iter()
                .map(|g| g.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        for (u, v) in &router_edges {
            router_txt.push_str(&format!("{u} {v}\n"));
        }
        fs::write(dir.join(format!("{}-router.txt", spec.name)), router_txt)?;
        println!(
            "{}: {} pops / {} pop links, {} routers / {} links",
            spec.name,
            spec.pops,
            pop_edges.len(),
            spec.routers,
            router_edges.len()
        );
    }
    Ok(())
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn pop_graph(n: usize, rng: &mut ChaCha8Rng) -> BTreeSet<(usize, usize)> {
    let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
    let mut edges = BTreeSet::new();
    let add = |edges: &mut BTreeSet<(usize, usize)>, u: usize, v: usize| {
        edges.insert((u.min(v), u.max(v)))
    };

    // Prim's spanning tree.
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, 0usize); n];
    in_tree[0] = true;
    for v in 1..n {
        best[v] = (dist(points[0], points[v]), 0);
    }
    for _ in 1..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0))
            .unwrap();
        in_tree[v] = true;
        add(&mut edges, v, best[v].1);
        for w in 0..n {
            let d = dist(points[v], points[w]);
            if !in_tree[w] && d < best[w].0 {
                best[w] = (d, v);
            }
        }
    }

    // Regional links: some POPs also connect to a near neighbour.
    for u in 0..n {
        if rng.random::<f64>() < 0.35 {
            let mut by_dist: Vec<usize> = (0..n).filter(|&v| v != u).collect();
            by_dist.sort_by(|&a, &b| {
                dist(points[u], points[a]).total_cmp(&dist(points[u], points[b]))
            });
            let pick = by_dist[rng.random_range(0..3.min(by_dist.len()))];
            add(&mut edges, u, pick);
        }
    }

    // Long-haul links between well-connected POPs.
    let long_haul = n / 6;
    let mut added = 0;
    while added < long_haul {
        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let total: usize = degree.iter().map(|d| d * d).sum();
        let mut pick = || {
            let mut x = rng.random_range(0..total);
            for (v, d) in degree.iter().enumerate() {
                if x < d * d {
                    return v;
                }
                x -= d * d;
            }
            n - 1
        };
        let (u, v) = (pick(), pick());
        if u != v && add(&mut edges, u, v) {
            added += 1;
        }
    }
    edges
}

fn router_graph(
    spec: &Spec,
    pop_edges: &BTreeSet<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) -> (BTreeSet<(usize, usize)>, Vec<usize>) {
    let n = spec.pops;
    let mut pop_degree = vec![0usize; n];
    for &(u, v) in pop_edges {
        pop_degree[u] += 1;
        pop_degree[v] += 1;
    }

    // Largest-remainder split of the routers, one per POP guaranteed.
    let spare = spec.routers - n;
    let weight: Vec<f64> = pop_degree.iter().map(|&d| (d as f64).powf(1.3)).collect();
    let total: f64 = weight.iter().sum();
    let quota: Vec<f64> = weight.iter().map(|w| w / total * spare as f64).collect();
    let mut count: Vec<usize> = quota.iter().map(|q| 1 + q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (quota[b] - quota[b].floor()).total_cmp(&(quota[a] - quota[a].floor())));
    let mut missing = spec.routers - count.iter().sum::<usize>();
    for &p in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        count[p] += 1;
        missing -= 1;
    }

    let mut members: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut next = 0;
    for &c in &count {
        members.push((next..next + c).collect());
        next += c;
    }

    let mut edges = BTreeSet::new();
    let add = |edges: &mut BTreeSet<(usize, usize)>, u: usize, v: usize| {
        u != v && edges.insert((u.min(v), u.max(v)))
    };
    for routers in &members {
        for i in 1..routers.len() {
            let parent = routers[rng.random_range(0..i)];
            add(&mut edges, routers[i], parent);
        }
    }
    for &(a, b) in pop_edges {
        let u = members[a][rng.random_range(0..members[a].len())];
        let v = members[b][rng.random_range(0..members[b].len())];
        add(&mut edges, u, v);
    }
    let pop_edge_list: Vec<(usize, usize)> = pop_edges.iter().copied().collect();
    while edges.len() < spec.links {
        if rng.random::<f64>() < 0.7 {
            let p = rng.random_range(0..n);
            if members[p].len() < 2 {
                continue;
            }
            let u = members[p][rng.random_range(0..members[p].len())];
            let v = members[p][rng.random_range(0..members[p].len())];
            add(&mut edges, u, v);
        } else {
            let (a, b) = pop_edge_list[rng.random_range(0..pop_edge_list.len())];
            let u = members[a][rng.random_range(0..members[a].len())];
            let v = members[b][rng.random_range(0..members[b].len())];
            add(&mut edges, u, v);
        }
    }

    let mut degree = vec![0usize; spec.routers];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    let gateways = members
        .iter()
        .map(|routers| {
            *routers
                .iter()
                .max_by_key(|&&r| (degree[r], std::cmp::Reverse(r)))
                .unwrap()
        })
        .collect();
    (edges, gateways)
}
