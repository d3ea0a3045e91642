//! ISP topologies: loading, validation, endpoint placement and
//! deterministic minimum-hop routing.
//!
//! A [`Topology`] is an undirected, connected, unit-weight graph whose node
//! ids are compacted to the dense range `0..node_count`. Every node carries a
//! [`NodeTag`]: POP nodes are the candidate attachment points for clients and
//! servers, router nodes only forward. In a POP-level file every node is a
//! POP; router-level files may name their attachment routers with a
//! `# pops` directive.

mod bundled;
mod parse;

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

pub use bundled::{bundled, bundled_names, BUNDLED};
pub use parse::{import_cch, parse_edge_list, parse_edge_list_auto, CchImport};

/// Dense node index inside a [`Topology`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Granularity of a topology file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Pop,
    Router,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Pop => "pop",
            Level::Router => "router",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pop" => Ok(Level::Pop),
            "router" => Ok(Level::Router),
            other => Err(TopologyError::UnknownLevel(other.to_string())),
        }
    }
}

/// Role of a single node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeTag {
    Pop,
    Router,
}

#[derive(Debug, thiserror::Error)]
pub enum TopologyError {
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: u64 },
    #[error("line {line}: malformed line {text:?} (expected \"u v\")")]
    Malformed { line: usize, text: String },
    #[error("line {line}: {message}")]
    Directive { line: usize, message: String },
    #[error("topology has no edges")]
    Empty,
    #[error("topology is disconnected: node {node} is unreachable from node {root}")]
    Disconnected { node: u64, root: u64 },
    #[error("file declares level={found} but {expected} was requested")]
    LevelMismatch { expected: Level, found: Level },
    #[error("unknown topology level {0:?}")]
    UnknownLevel(String),
    #[error("cannot pick {requested} servers from {available} POP nodes")]
    TooManyServers { requested: usize, available: usize },
    #[error("node {0} is not part of the topology")]
    UnknownNode(NodeId),
    #[error("unknown bundled topology {0:?}")]
    UnknownBundled(String),
}

/// An immutable, validated topology.
///
/// Shortest paths are computed lazily and memoized, so a topology can be
/// shared read-only between any number of simulation runs.
pub struct Topology {
    name: String,
    level: Level,
    original_ids: Vec<u64>,
    tags: Vec<NodeTag>,
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
    distance_to: Vec<OnceLock<Vec<u32>>>,
    paths: RwLock<PathCache>,
}

type PathCache = HashMap<(NodeId, NodeId), Arc<[NodeId]>>;

impl fmt::Debug for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Topology")
            .field("name", &self.name)
            .field("level", &self.level)
            .field("nodes", &self.node_count())
            .field("edges", &self.edge_count)
            .finish()
    }
}

impl Topology {
    /// Builds a topology from already-compacted parts. `edges` may contain
    /// duplicates (in either orientation); they are collapsed.
    pub(crate) fn from_parts(
        name: String,
        level: Level,
        original_ids: Vec<u64>,
        tags: Vec<NodeTag>,
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self, TopologyError> {
        let n = original_ids.len();
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            debug_assert_ne!(u, v);
            adjacency[u as usize].push(NodeId(v));
            adjacency[v as usize].push(NodeId(u));
        }
        let mut edge_count = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
        }
        edge_count /= 2;
        if edge_count == 0 {
            return Err(TopologyError::Empty);
        }

        let topo = Topology {
            name,
            level,
            original_ids,
            tags,
            adjacency,
            edge_count,
            distance_to: (0..n).map(|_| OnceLock::new()).collect(),
            paths: RwLock::new(HashMap::new()),
        };
        // Connectivity check from the smallest node.
        let dist = topo.bfs(NodeId(0));
        if let Some(missing) = dist.iter().position(|&d| d == u32::MAX) {
            return Err(TopologyError::Disconnected {
                node: topo.original_ids[missing],
                root: topo.original_ids[0],
            });
        }
        Ok(topo)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count() as u32).map(NodeId)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.index() < self.node_count()
    }

    /// Id the node had in the source file.
    pub fn original_id(&self, node: NodeId) -> u64 {
        self.original_ids[node.index()]
    }

    pub fn tag(&self, node: NodeId) -> NodeTag {
        self.tags[node.index()]
    }

    /// Nodes that can host clients or servers.
    pub fn pop_nodes(&self) -> Vec<NodeId> {
        self.nodes()
            .filter(|&n| self.tag(n) == NodeTag::Pop)
            .collect()
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node.index()].len()
    }

    /// Neighbours in ascending id order.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node.index()]
    }

    /// All edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for u in self.nodes() {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    fn bfs(&self, source: NodeId) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.node_count()];
        let mut queue = VecDeque::new();
        dist[source.index()] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let next = dist[u.index()] + 1;
            for &v in self.neighbors(u) {
                if dist[v.index()] == u32::MAX {
                    dist[v.index()] = next;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn distances_to(&self, target: NodeId) -> &[u32] {
        self.distance_to[target.index()].get_or_init(|| self.bfs(target))
    }

    /// Hop distance between two nodes.
    pub fn distance(&self, a: NodeId, b: NodeId) -> Result<u32, TopologyError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.distances_to(b)[a.index()])
    }

    fn check(&self, node: NodeId) -> Result<(), TopologyError> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(TopologyError::UnknownNode(node))
        }
    }

    /// Minimum-hop path from `a` to `b`, endpoints included.
    ///
    /// Among equal-length paths the lexicographically smallest node sequence
    /// is returned: walking from `a`, each step takes the smallest neighbour
    /// that is one hop closer to `b`.
    pub fn shortest_path(&self, a: NodeId, b: NodeId) -> Result<Arc<[NodeId]>, TopologyError> {
        self.check(a)?;
        self.check(b)?;
        if let Some(path) = self.paths.read().expect("path cache poisoned").get(&(a, b)) {
            return Ok(Arc::clone(path));
        }
        let dist = self.distances_to(b);
        let mut path = Vec::with_capacity(dist[a.index()] as usize + 1);
        let mut current = a;
        path.push(current);
        while current != b {
            let want = dist[current.index()] - 1;
            current = *self
                .neighbors(current)
                .iter()
                .find(|v| dist[v.index()] == want)
                .expect("connected topology has a closer neighbour");
            path.push(current);
        }
        let path: Arc<[NodeId]> = path.into();
        self.paths
            .write()
            .expect("path cache poisoned")
            .insert((a, b), Arc::clone(&path));
        Ok(path)
    }

    /// Nodes within `radius` hops of `node`, excluding `node`, ascending.
    pub fn within_radius(&self, node: NodeId, radius: u32) -> Vec<NodeId> {
        if radius == 1 {
            return self.neighbors(node).to_vec();
        }
        let mut dist = vec![u32::MAX; self.node_count()];
        let mut queue = VecDeque::new();
        let mut out = Vec::new();
        dist[node.index()] = 0;
        queue.push_back(node);
        while let Some(u) = queue.pop_front() {
            if dist[u.index()] == radius {
                continue;
            }
            for &v in self.neighbors(u) {
                if dist[v.index()] == u32::MAX {
                    dist[v.index()] = dist[u.index()] + 1;
                    out.push(v);
                    queue.push_back(v);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Writes the topology in the edge-list format it was loaded from,
    /// using the original node ids.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# level={} name={}\n", self.level, self.name);
        if self.level == Level::Router {
            let pops: Vec<String> = self
                .pop_nodes()
                .iter()
                .map(|&n| self.original_id(n).to_string())
                .collect();
            if pops.len() < self.node_count() {
                out.push_str(&format!("# pops {}\n", pops.join(" ")));
            }
        }
        for (u, v) in self.edges() {
            out.push_str(&format!(
                "{} {}\n",
                self.original_id(u),
                self.original_id(v)
            ));
        }
        out
    }
}

/// Server and client attachment points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    servers: Vec<NodeId>,
    clients: Vec<NodeId>,
}

impl Placement {
    /// Builds a placement from explicit sets. Both must be non-empty and
    /// disjoint.
    pub fn new(mut servers: Vec<NodeId>, mut clients: Vec<NodeId>) -> Result<Self, PlacementError> {
        servers.sort_unstable();
        servers.dedup();
        clients.sort_unstable();
        clients.dedup();
        if servers.is_empty() || clients.is_empty() {
            return Err(PlacementError::Empty);
        }
        if let Some(&n) = servers.iter().find(|s| clients.binary_search(s).is_ok()) {
            return Err(PlacementError::Overlap(n));
        }
        Ok(Placement { servers, clients })
    }

    pub fn servers(&self) -> &[NodeId] {
        &self.servers
    }

    pub fn clients(&self) -> &[NodeId] {
        &self.clients
    }

    pub fn pair_count(&self) -> usize {
        self.servers.len() * self.clients.len()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PlacementError {
    #[error("placement needs at least one server and one client")]
    Empty,
    #[error("node {0} is both a server and a client")]
    Overlap(NodeId),
}

/// Picks the `k` highest-degree POP nodes as servers (ties to the lowest id)
/// and makes every other POP node a client.
pub fn select_servers(topology: &Topology, k: usize) -> Result<Placement, TopologyError> {
    let mut pops = topology.pop_nodes();
    if k == 0 || k >= pops.len() {
        return Err(TopologyError::TooManyServers {
            requested: k,
            available: pops.len(),
        });
    }
    pops.sort_by_key(|&n| (std::cmp::Reverse(topology.degree(n)), n));
    let clients = pops.split_off(k);
    Ok(Placement::new(pops, clients).expect("disjoint non-empty split"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle4() -> Topology {
        parse_edge_list("0 1\n1 2\n2 3\n3 0\n", Level::Pop).unwrap()
    }

    #[test]
    fn four_cycle_shape() {
        let t = cycle4();
        assert_eq!(t.node_count(), 4);
        assert_eq!(t.edge_count(), 4);
        assert!(t.nodes().all(|n| t.degree(n) == 2));
    }

    #[test]
    fn identity_path() {
        let t = cycle4();
        let p = t.shortest_path(NodeId(2), NodeId(2)).unwrap();
        assert_eq!(&*p, &[NodeId(2)]);
    }

    #[test]
    fn opposite_corners_take_lower_neighbour() {
        let t = cycle4();
        let p = t.shortest_path(NodeId(0), NodeId(2)).unwrap();
        assert_eq!(&*p, &[NodeId(0), NodeId(1), NodeId(2)]);
        let p = t.shortest_path(NodeId(1), NodeId(3)).unwrap();
        assert_eq!(&*p, &[NodeId(1), NodeId(0), NodeId(3)]);
    }

    #[test]
    fn path_graph_server_tie_break() {
        // a-b-c-d
        let t = parse_edge_list("0 1\n1 2\n2 3\n", Level::Pop).unwrap();
        let p = select_servers(&t, 1).unwrap();
        assert_eq!(p.servers(), &[NodeId(1)]);
        assert_eq!(p.clients(), &[NodeId(0), NodeId(2), NodeId(3)]);
    }

    #[test]
    fn too_many_servers() {
        let t = cycle4();
        assert!(matches!(
            select_servers(&t, 4),
            Err(TopologyError::TooManyServers { .. })
        ));
        assert!(select_servers(&t, 3).is_ok());
    }

    #[test]
    fn radius_two_neighbourhood() {
        // star with a tail: 0 is the hub, 1..4 leaves, 4-5 tail
        let t = parse_edge_list("0 1\n0 2\n0 3\n0 4\n4 5\n", Level::Pop).unwrap();
        assert_eq!(t.within_radius(NodeId(1), 1), vec![NodeId(0)]);
        assert_eq!(
            t.within_radius(NodeId(1), 2),
            vec![NodeId(0), NodeId(2), NodeId(3), NodeId(4)]
        );
    }

    #[test]
    fn placement_rejects_overlap() {
        assert!(matches!(
            Placement::new(vec![NodeId(1)], vec![NodeId(1), NodeId(2)]),
            Err(PlacementError::Overlap(NodeId(1)))
        ));
        assert!(Placement::new(vec![], vec![NodeId(1)]).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let src = "# level=router name=x\n# pops 10 30\n10 20\n20 30\n30 10\n30 40\n";
        let t = parse_edge_list(src, Level::Router).unwrap();
        let again = parse_edge_list(&t.to_edge_list(), Level::Router).unwrap();
        assert_eq!(again.edges(), t.edges());
        assert_eq!(again.pop_nodes(), t.pop_nodes());
        assert_eq!(again.name(), "x");
    }
}
