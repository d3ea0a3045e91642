use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{Level, NodeTag, Topology, TopologyError};

/// Parses the `u v` edge-list format.
///
/// ```text
/// # level=pop name=sprint
/// 0 1
/// 1 2
/// ```
///
/// Lines starting with `#` are comments. Two comment forms are directives:
/// the `level=`/`name=` header and, for router-level files, `# pops <id>...`
/// naming the routers that act as POP attachment points. Node ids are
/// compacted to a dense range in ascending order of their original value.
pub fn parse_edge_list(source: &str, level: Level) -> Result<Topology, TopologyError> {
    parse(source, Some(level))
}

/// Like [`parse_edge_list`] but takes the level from the header, defaulting
/// to POP level when the header does not name one.
pub fn parse_edge_list_auto(source: &str) -> Result<Topology, TopologyError> {
    parse(source, None)
}

fn parse(source: &str, requested: Option<Level>) -> Result<Topology, TopologyError> {
    let mut declared: Option<Level> = None;
    let mut name = String::from("unnamed");
    let mut pops: Option<(usize, Vec<u64>)> = None;
    let mut raw_edges = Vec::new();

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix("pops") {
                let ids = rest
                    .split_whitespace()
                    .map(|tok| tok.parse::<u64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| TopologyError::Directive {
                        line: line_no,
                        message: "pops directive expects integer ids".into(),
                    })?;
                pops.get_or_insert((line_no, Vec::new())).1.extend(ids);
            } else if comment.contains('=') {
                for token in comment.split_whitespace() {
                    match token.split_once('=') {
                        Some(("level", value)) => {
                            declared =
                                Some(value.parse().map_err(|_| TopologyError::Directive {
                                    line: line_no,
                                    message: format!("unknown level {value:?}"),
                                })?);
                        }
                        Some(("name", value)) => name = value.to_string(),
                        _ => {}
                    }
                }
            }
            continue;
        }

        let mut tokens = line.split_whitespace();
        let parsed = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(u), Some(v), None) => u.parse::<u64>().ok().zip(v.parse::<u64>().ok()),
            _ => None,
        };
        let Some((u, v)) = parsed else {
            return Err(TopologyError::Malformed {
                line: line_no,
                text: line.to_string(),
            });
        };
        if u == v {
            return Err(TopologyError::SelfLoop {
                line: line_no,
                node: u,
            });
        }
        raw_edges.push((u, v));
    }

    let level = match (requested, declared) {
        (Some(expected), Some(found)) if expected != found => {
            return Err(TopologyError::LevelMismatch { expected, found })
        }
        (Some(level), _) | (None, Some(level)) => level,
        (None, None) => Level::Pop,
    };

    let ids: BTreeSet<u64> = raw_edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    let original_ids: Vec<u64> = ids.into_iter().collect();
    let index: HashMap<u64, u32> = original_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i as u32))
        .collect();

    let tags = match (level, pops) {
        (Level::Router, Some((line, listed))) => {
            let mut tags = vec![NodeTag::Router; original_ids.len()];
            for id in listed {
                let Some(&i) = index.get(&id) else {
                    return Err(TopologyError::Directive {
                        line,
                        message: format!("pops directive names unknown node {id}"),
                    });
                };
                tags[i as usize] = NodeTag::Pop;
            }
            tags
        }
        _ => vec![NodeTag::Pop; original_ids.len()],
    };

    let edges = raw_edges.iter().map(|(u, v)| (index[u], index[v]));
    Topology::from_parts(name, level, original_ids, tags, edges)
}

/// Result of converting a Rocketfuel `.cch` map.
#[derive(Debug)]
pub struct CchImport {
    /// Router-level topology; one router per location is tagged as the POP
    /// attachment point.
    pub routers: Topology,
    /// POP-level topology obtained by collapsing routers by location.
    pub pops: Topology,
    /// Location name of every POP-level node, by original POP id.
    pub pop_names: Vec<String>,
    /// Internal routers dropped because they were outside the largest
    /// connected component.
    pub dropped_routers: usize,
}

/// Converts a Rocketfuel `.cch` router map.
///
/// Each internal router line looks like
/// `uid @location [+] [bb] (n) [&ext] -> <nuid> <nuid> ... {-euid} =name rN`.
/// External nodes (negative uids) and `{...}` external links are ignored.
/// Only the largest connected component is kept.
pub fn import_cch(source: &str, name: &str) -> Result<CchImport, TopologyError> {
    let mut location: BTreeMap<u64, String> = BTreeMap::new();
    let mut links: BTreeSet<(u64, u64)> = BTreeSet::new();

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('-') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let uid = tokens
            .next()
            .and_then(|t| t.parse::<u64>().ok())
            .ok_or_else(|| TopologyError::Malformed {
                line: line_no,
                text: line.to_string(),
            })?;
        let mut loc = String::from("unknown");
        for token in tokens {
            if let Some(l) = token.strip_prefix('@') {
                loc = l.to_string();
            } else if let Some(n) = token.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
                let n = n.parse::<u64>().map_err(|_| TopologyError::Malformed {
                    line: line_no,
                    text: line.to_string(),
                })?;
                if n != uid {
                    links.insert((uid.min(n), uid.max(n)));
                }
            } else if token.starts_with('=') {
                break;
            }
        }
        location.insert(uid, loc);
    }

    // Neighbours that never got their own line have an unknown location.
    for &(u, v) in &links {
        location.entry(u).or_insert_with(|| "unknown".into());
        location.entry(v).or_insert_with(|| "unknown".into());
    }

    let keep = largest_component(&links);
    let dropped_routers = location.len() - keep.len();
    let links: Vec<(u64, u64)> = links
        .into_iter()
        .filter(|(u, v)| keep.contains(u) && keep.contains(v))
        .collect();

    // Router degree, for picking each location's attachment router.
    let mut degree: HashMap<u64, usize> = HashMap::new();
    for &(u, v) in &links {
        *degree.entry(u).or_default() += 1;
        *degree.entry(v).or_default() += 1;
    }
    let mut by_location: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for &uid in &keep {
        by_location
            .entry(location[&uid].as_str())
            .or_default()
            .push(uid);
    }
    let pop_names: Vec<String> = by_location.keys().map(|s| s.to_string()).collect();
    let pop_index: HashMap<&str, u64> = by_location
        .keys()
        .enumerate()
        .map(|(i, &l)| (l, i as u64))
        .collect();
    let gateways: Vec<u64> = by_location
        .values()
        .map(|members| {
            *members
                .iter()
                .max_by_key(|&&uid| {
                    (
                        degree.get(&uid).copied().unwrap_or(0),
                        std::cmp::Reverse(uid),
                    )
                })
                .expect("location has members")
        })
        .collect();

    let mut router_src = format!("# level=router name={name}\n");
    router_src.push_str(&format!(
        "# pops {}\n",
        gateways
            .iter()
            .map(|g| g.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    ));
    for &(u, v) in &links {
        router_src.push_str(&format!("{u} {v}\n"));
    }
    let routers = parse(&router_src, Some(Level::Router))?;

    let pop_links: BTreeSet<(u64, u64)> = links
        .iter()
        .filter_map(|(u, v)| {
            let a = pop_index[location[u].as_str()];
            let b = pop_index[location[v].as_str()];
            (a != b).then(|| (a.min(b), a.max(b)))
        })
        .collect();
    let mut pop_src = format!("# level=pop name={name}\n");
    for (u, v) in pop_links {
        pop_src.push_str(&format!("{u} {v}\n"));
    }
    let pops = parse(&pop_src, Some(Level::Pop))?;

    Ok(CchImport {
        routers,
        pops,
        pop_names,
        dropped_routers,
    })
}

fn largest_component(links: &BTreeSet<(u64, u64)>) -> BTreeSet<u64> {
    let mut adj: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for &(u, v) in links {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    let mut seen = BTreeSet::new();
    let mut best = BTreeSet::new();
    for &start in adj.keys() {
        if seen.contains(&start) {
            continue;
        }
        let mut component = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some(u) = queue.pop_front() {
            component.insert(u);
            for &v in &adj[&u] {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        if component.len() > best.len() {
            best = component;
        }
    }
    best
}
