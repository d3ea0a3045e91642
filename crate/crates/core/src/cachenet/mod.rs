//! Content-router network simulation.
//!
//! Every node of the topology runs a content router (CR) with a bounded LRU
//! store. Clients sit behind POP `v0` and a request to server POP `vL` walks
//! the shortest path `v0 .. vL`, consulting every CR on it nearest first.
//! Hops are counted from the client: the access link to `v0` is the first
//! hop, so a copy at `v_i` is `i + 1` hops away and the origin at `vL` is
//! `L + 1` hops away.
//!
//! The response travels back towards the client through the CRs it has not
//! yet passed, and the admission policy decides which of them keep a copy.
//! A response served from an on-path CR starts with its cached bit set,
//! since the chunk is already cached on that path; origin and neighbour
//! responses start with it clear.

mod bloom;
mod lru;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

pub use bloom::BloomDigest;
pub use lru::LruStore;

use crate::topology::{NodeId, Topology};
use crate::workload::{seeded_rng, unit_draw, ChunkId, RequestEvent, ADMISSION_STREAM};

/// Admission policy of the CR network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Admission {
    /// Every CR on the response path keeps a copy.
    All,
    /// At most one probabilistic copy per response, plus (optionally) a
    /// copy at the CR closest to the client.
    Cachedbit,
    /// Cachedbit admission plus Bloom-digest neighbour search on misses.
    Nbsc,
}

impl Admission {
    pub fn as_str(self) -> &'static str {
        match self {
            Admission::All => "all",
            Admission::Cachedbit => "cachedbit",
            Admission::Nbsc => "nbsc",
        }
    }
}

impl fmt::Display for Admission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where neighbour search runs under [`Admission::Nbsc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborScope {
    /// On every on-path miss.
    EveryHop,
    /// Only at the CR closest to the client.
    LastHop,
}

impl FromStr for NeighborScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "every-hop" => Ok(NeighborScope::EveryHop),
            "last-hop" => Ok(NeighborScope::LastHop),
            other => Err(format!("unknown neighbour scope {other:?}")),
        }
    }
}

/// Extra hops charged for a neighbour hit: query out, data back.
pub const NEIGHBOR_DETOUR_HOPS: u32 = 2;

/// The client-to-`v0` access link.
pub const ACCESS_HOPS: u32 = 1;

/// Hops from the client to the origin behind `server`.
pub fn origin_hops(topology: &Topology, client: NodeId, server: NodeId) -> u32 {
    ACCESS_HOPS
        + topology
            .distance(client, server)
            .expect("trace nodes belong to the topology")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheConfig {
    pub admission: Admission,
    /// Chunks per CR.
    pub capacity: usize,
    pub chunk_size: u64,
    /// Cachedbit/NbSC always store at the CR closest to the client.
    pub last_copy: bool,
    pub radius: u32,
    /// Digests are rebuilt after every `exchange_period` requests.
    pub exchange_period: u64,
    pub bloom_bits_per_chunk: u64,
    pub bloom_hashes: u32,
    pub neighbor_scope: NeighborScope,
}

impl CacheConfig {
    pub fn new(admission: Admission, capacity: usize) -> Self {
        CacheConfig {
            admission,
            capacity,
            chunk_size: 1024,
            last_copy: true,
            radius: 1,
            exchange_period: 1000,
            bloom_bits_per_chunk: 16,
            bloom_hashes: 4,
            neighbor_scope: NeighborScope::EveryHop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HitKind {
    Origin,
    Cr,
    Neighbor,
}

impl HitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HitKind::Origin => "origin",
            HitKind::Cr => "cr",
            HitKind::Neighbor => "neighbor",
        }
    }

    pub fn is_hit(self) -> bool {
        !matches!(self, HitKind::Origin)
    }
}

impl FromStr for HitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "origin" => Ok(HitKind::Origin),
            "cr" => Ok(HitKind::Cr),
            "neighbor" => Ok(HitKind::Neighbor),
            other => Err(format!("unknown hit kind {other:?}")),
        }
    }
}

/// Outcome of one request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FulfillmentRecord {
    pub request: RequestEvent,
    pub hit: HitKind,
    pub serving_node: NodeId,
    /// Hops from the client to the serving point, detour included.
    pub hops: u32,
    pub bytes_hops: u64,
}

impl FulfillmentRecord {
    /// The record the request would get with caching disabled.
    pub fn baseline(topology: &Topology, ev: &RequestEvent, chunk_size: u64) -> Self {
        let hops = origin_hops(topology, ev.client, ev.server);
        FulfillmentRecord {
            request: *ev,
            hit: HitKind::Origin,
            serving_node: ev.server,
            hops,
            bytes_hops: chunk_size * hops as u64,
        }
    }
}

/// Writes `seq,hit,serving_node,hops,bytes_hops`.
pub fn write_fulfillment_csv<W: Write>(records: &[FulfillmentRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seq", "hit", "serving_node", "hops", "bytes_hops"])?;
    for r in records {
        w.write_record(&[
            r.request.seq.to_string(),
            r.hit.as_str().to_string(),
            r.serving_node.to_string(),
            r.hops.to_string(),
            r.bytes_hops.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One content router.
#[derive(Debug, Clone)]
pub struct CrState {
    pub node: NodeId,
    pub store: LruStore<ChunkId>,
    /// Digest as last published to neighbours.
    pub digest: BloomDigest,
}

impl CrState {
    pub fn new(node: NodeId, capacity: usize, bits_per_chunk: u64, hashes: u32) -> Self {
        CrState {
            node,
            store: LruStore::new(capacity),
            digest: BloomDigest::for_capacity(capacity, bits_per_chunk, hashes),
        }
    }

    pub fn lru_touch(&mut self, chunk: &ChunkId) -> bool {
        self.store.touch(chunk)
    }

    pub fn lru_insert(&mut self, chunk: ChunkId) -> Option<ChunkId> {
        self.store.insert(chunk)
    }

    /// Rebuilds the published digest from the current store.
    pub fn rebuild_digest(&mut self) {
        self.digest.clear();
        for chunk in self.store.iter() {
            self.digest.insert(chunk.digest);
        }
    }
}

/// CRs a response passes, ordered from the serving point towards the
/// client, and the cached bit it carries.
#[derive(Debug, Clone)]
pub struct ResponseContext<'a> {
    pub path: &'a [NodeId],
    pub cached_bit: bool,
}

impl<'a> ResponseContext<'a> {
    pub fn new(path: &'a [NodeId]) -> Self {
        ResponseContext {
            path,
            cached_bit: false,
        }
    }
}

/// Every CR on the response path stores the chunk. Returns how many CRs
/// newly stored it.
pub fn admit_all(crs: &mut [CrState], ctx: &mut ResponseContext<'_>, chunk: ChunkId) -> usize {
    let mut stored = 0;
    for &node in ctx.path {
        let cr = &mut crs[node.index()];
        if !cr.store.contains(&chunk) && cr.store.capacity() > 0 {
            stored += 1;
        }
        cr.lru_insert(chunk);
        debug_assert!(cr.store.len() <= cr.store.capacity());
    }
    stored
}

/// Cachedbit admission over a response path of `n` CRs.
///
/// Walking from the serving point, each CR stores the chunk with
/// probability `1/n` while the cached bit is unset; the first store sets the
/// bit. With `last_copy` the final CR (closest to the client) stores
/// regardless of the bit and draws no coin. Returns how many CRs newly
/// stored the chunk.
pub fn admit_cachedbit<R: RngCore + ?Sized>(
    crs: &mut [CrState],
    ctx: &mut ResponseContext<'_>,
    chunk: ChunkId,
    last_copy: bool,
    rng: &mut R,
) -> usize {
    let n = ctx.path.len();
    if n == 0 {
        return 0;
    }
    let p = 1.0 / n as f64;
    let mut stored = 0;
    for (i, &node) in ctx.path.iter().enumerate() {
        let last = i + 1 == n;
        let store = if last && last_copy {
            true
        } else if ctx.cached_bit {
            false
        } else {
            unit_draw(rng) < p
        };
        if store {
            let cr = &mut crs[node.index()];
            if !cr.store.contains(&chunk) && cr.store.capacity() > 0 {
                stored += 1;
            }
            cr.lru_insert(chunk);
            debug_assert!(cr.store.len() <= cr.store.capacity());
            ctx.cached_bit = true;
        }
    }
    stored
}

/// The CR network for one scenario run.
pub struct CacheNetwork {
    topology: Arc<Topology>,
    config: CacheConfig,
    crs: Vec<CrState>,
    probe_sets: Vec<Vec<NodeId>>,
    processed: u64,
    rng: Option<ChaCha8Rng>,
    scratch: Vec<NodeId>,
}

impl fmt::Debug for CacheNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CacheNetwork")
            .field("topology", &self.topology.name())
            .field("config", &self.config)
            .field("processed", &self.processed)
            .finish()
    }
}

impl CacheNetwork {
    /// A fresh network with empty stores; admission coins come from the
    /// admission stream of `seed`.
    pub fn new(topology: Arc<Topology>, config: CacheConfig, seed: u64) -> Self {
        let crs = topology
            .nodes()
            .map(|n| {
                CrState::new(
                    n,
                    config.capacity,
                    config.bloom_bits_per_chunk,
                    config.bloom_hashes,
                )
            })
            .collect();
        let probe_sets = if config.admission == Admission::Nbsc {
            topology
                .nodes()
                .map(|n| topology.within_radius(n, config.radius))
                .collect()
        } else {
            Vec::new()
        };
        CacheNetwork {
            topology,
            config,
            crs,
            probe_sets,
            processed: 0,
            rng: Some(seeded_rng(seed, ADMISSION_STREAM)),
            scratch: Vec::new(),
        }
    }

    pub fn config(&self) -> &CacheConfig {
        &self.config
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn cr(&self, node: NodeId) -> &CrState {
        &self.crs[node.index()]
    }

    pub fn cr_mut(&mut self, node: NodeId) -> &mut CrState {
        &mut self.crs[node.index()]
    }

    pub fn crs(&self) -> &[CrState] {
        &self.crs
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    /// Every CR rebuilds its digest from its current store and publishes it.
    pub fn exchange_digests(&mut self) {
        for cr in &mut self.crs {
            cr.rebuild_digest();
        }
    }

    /// First CR within `radius` hops of `cr` (ascending id) whose published
    /// digest claims `chunk` and whose store really holds it.
    pub fn neighbor_lookup(&self, cr: NodeId, chunk: &ChunkId, radius: u32) -> Option<NodeId> {
        self.topology
            .within_radius(cr, radius)
            .into_iter()
            .find(|&w| self.verified_holder(w, chunk))
    }

    fn verified_holder(&self, node: NodeId, chunk: &ChunkId) -> bool {
        let cr = &self.crs[node.index()];
        cr.digest.query(chunk.digest) && cr.store.contains(chunk)
    }

    /// Processes one request with the network's own admission stream.
    pub fn process_request(&mut self, ev: &RequestEvent) -> FulfillmentRecord {
        let mut rng = self.rng.take().expect("admission stream present");
        let record = self.process_request_with(ev, &mut rng);
        self.rng = Some(rng);
        record
    }

    /// Processes one request drawing admission coins from `rng`.
    pub fn process_request_with<R: RngCore + ?Sized>(
        &mut self,
        ev: &RequestEvent,
        rng: &mut R,
    ) -> FulfillmentRecord {
        let path = self
            .topology
            .shortest_path(ev.client, ev.server)
            .expect("trace nodes belong to the topology");
        let chunk = ev.chunk;
        let len = path.len() - 1;

        // (hit kind, serving node, hops, index of the first CR the response
        // does not pass)
        let mut outcome = (
            HitKind::Origin,
            ev.server,
            ACCESS_HOPS + len as u32,
            len + 1,
        );
        for (i, &node) in path.iter().enumerate() {
            let hops = ACCESS_HOPS + i as u32;
            if self.crs[node.index()].lru_touch(&chunk) {
                outcome = (HitKind::Cr, node, hops, i);
                break;
            }
            if self.searches_neighbors(i) {
                if let Some(w) = self.probe_neighbors(node, &path, &chunk) {
                    self.crs[w.index()].lru_touch(&chunk);
                    outcome = (HitKind::Neighbor, w, hops + NEIGHBOR_DETOUR_HOPS, i + 1);
                    break;
                }
            }
        }
        let (hit, serving_node, hops, end) = outcome;

        // Response path: CRs v_{end-1} down to v_0.
        self.scratch.clear();
        self.scratch.extend(path[..end].iter().rev());
        let response = std::mem::take(&mut self.scratch);
        let mut ctx = ResponseContext::new(&response);
        ctx.cached_bit = hit == HitKind::Cr;
        match self.config.admission {
            Admission::All => {
                admit_all(&mut self.crs, &mut ctx, chunk);
            }
            Admission::Cachedbit | Admission::Nbsc => {
                admit_cachedbit(&mut self.crs, &mut ctx, chunk, self.config.last_copy, rng);
            }
        }
        self.scratch = response;

        self.processed += 1;
        if self.config.admission == Admission::Nbsc
            && self.config.exchange_period > 0
            && self.processed.is_multiple_of(self.config.exchange_period)
        {
            self.exchange_digests();
        }

        FulfillmentRecord {
            request: *ev,
            hit,
            serving_node,
            hops,
            bytes_hops: self.config.chunk_size * hops as u64,
        }
    }

    fn searches_neighbors(&self, hop: usize) -> bool {
        self.config.admission == Admission::Nbsc
            && match self.config.neighbor_scope {
                NeighborScope::EveryHop => true,
                NeighborScope::LastHop => hop == 0,
            }
    }

    fn probe_neighbors(&self, node: NodeId, path: &[NodeId], chunk: &ChunkId) -> Option<NodeId> {
        // On-path CRs are reached by the walk itself.
        self.probe_sets[node.index()]
            .iter()
            .copied()
            .filter(|w| !path.contains(w))
            .find(|&w| self.verified_holder(w, chunk))
    }

    /// Replays a trace, returning one record per request.
    pub fn run(&mut self, trace: &[RequestEvent]) -> Vec<FulfillmentRecord> {
        trace.iter().map(|ev| self.process_request(ev)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{bundled, parse_edge_list, Level};
    use crate::workload::ChunkId;

    /// Replays scripted 64-bit outputs.
    struct Scripted(Vec<u64>, usize);

    impl RngCore for Scripted {
        fn next_u32(&mut self) -> u32 {
            self.next_u64() as u32
        }
        fn next_u64(&mut self) -> u64 {
            let v = self.0[self.1];
            self.1 += 1;
            v
        }
        fn fill_bytes(&mut self, _: &mut [u8]) {
            unimplemented!()
        }
    }

    const YES: u64 = 0; // draw 0.0, always below 1/n
    const NO: u64 = u64::MAX; // draw just under 1.0

    fn ev(seq: u64, client: u32, server: u32, rank: u32) -> RequestEvent {
        RequestEvent {
            seq,
            client: NodeId(client),
            server: NodeId(server),
            chunk: ChunkId::from_rank(rank),
        }
    }

    fn path6() -> Arc<Topology> {
        Arc::new(bundled("path6").unwrap())
    }

    fn stored(net: &CacheNetwork, rank: u32) -> Vec<u32> {
        net.crs()
            .iter()
            .filter(|cr| cr.store.contains(&ChunkId::from_rank(rank)))
            .map(|cr| cr.node.0)
            .collect()
    }

    #[test]
    fn cold_start_goes_to_origin() {
        let mut net = CacheNetwork::new(path6(), CacheConfig::new(Admission::All, 4), 1);
        let r = net.process_request(&ev(0, 0, 5, 3));
        assert_eq!(r.hit, HitKind::Origin);
        assert_eq!(r.serving_node, NodeId(5));
        assert_eq!(r.hops, 6);
        assert_eq!(r.bytes_hops, 6 * 1024);
    }

    #[test]
    fn all_repeat_hits_first_cr() {
        let mut net = CacheNetwork::new(path6(), CacheConfig::new(Admission::All, 4), 1);
        net.process_request(&ev(0, 0, 5, 3));
        assert_eq!(stored(&net, 3), vec![0, 1, 2, 3, 4, 5]);
        let r = net.process_request(&ev(1, 0, 5, 3));
        assert_eq!(r.hit, HitKind::Cr);
        assert_eq!(r.serving_node, NodeId(0));
        assert_eq!(r.hops, 1);
    }

    #[test]
    fn admit_all_stores_everywhere() {
        let mut crs: Vec<CrState> = (0..3).map(|i| CrState::new(NodeId(i), 2, 16, 4)).collect();
        let path = [NodeId(0), NodeId(1), NodeId(2)];
        let chunk = ChunkId::from_rank(9);
        assert_eq!(
            admit_all(&mut crs, &mut ResponseContext::new(&path), chunk),
            3
        );
        assert!(crs.iter().all(|cr| cr.store.contains(&chunk)));
        assert_eq!(
            admit_all(&mut crs, &mut ResponseContext::new(&path), chunk),
            0
        );
    }

    #[test]
    fn cachedbit_single_cr_always_caches() {
        let mut crs = vec![CrState::new(NodeId(0), 2, 16, 4)];
        let path = [NodeId(0)];
        let mut rng = Scripted(vec![], 0);
        let chunk = ChunkId::from_rank(1);
        let n = admit_cachedbit(
            &mut crs,
            &mut ResponseContext::new(&path),
            chunk,
            true,
            &mut rng,
        );
        assert_eq!(n, 1);
        assert_eq!(rng.1, 0, "forced store draws no coin");
    }

    #[test]
    fn cachedbit_set_on_arrival_only_last_stores() {
        let mut crs: Vec<CrState> = (0..4).map(|i| CrState::new(NodeId(i), 2, 16, 4)).collect();
        let path = [NodeId(3), NodeId(2), NodeId(1), NodeId(0)];
        let mut ctx = ResponseContext {
            path: &path,
            cached_bit: true,
        };
        let mut rng = Scripted(vec![], 0);
        let chunk = ChunkId::from_rank(1);
        assert_eq!(
            admit_cachedbit(&mut crs, &mut ctx, chunk, true, &mut rng),
            1
        );
        assert!(crs[0].store.contains(&chunk));
        assert!(crs[1..].iter().all(|cr| !cr.store.contains(&chunk)));
    }

    #[test]
    fn cachedbit_without_last_copy_may_store_nothing() {
        let mut crs: Vec<CrState> = (0..3).map(|i| CrState::new(NodeId(i), 2, 16, 4)).collect();
        let path = [NodeId(2), NodeId(1), NodeId(0)];
        let mut rng = Scripted(vec![NO, NO, NO], 0);
        let chunk = ChunkId::from_rank(1);
        let n = admit_cachedbit(
            &mut crs,
            &mut ResponseContext::new(&path),
            chunk,
            false,
            &mut rng,
        );
        assert_eq!(n, 0);
        assert_eq!(rng.1, 3);
    }

    /// Hand trace on the path 0-1-2-3-4-5, client 0, server 5, cachedbit
    /// with last copy, capacity 1. Coins are drawn only while the cached bit
    /// is clear and never for node 0, the last CR. A hit on the path sets the
    /// bit, so only node 0 copies after it.
    ///
    /// | # | chunk | coins (CR)           | outcome        | stores after |
    /// |---|-------|----------------------|----------------|--------------|
    /// | 0 | A     | 5:N 4:N 3:Y          | origin, 6 hops | A@0 A@3      |
    /// | 1 | A     | none                 | cr@0, 1 hop    | A@0 A@3      |
    /// | 2 | B     | 5:N 4:N 3:N 2:N 1:N  | origin, 6 hops | A@3 B@0      |
    /// | 3 | A     | none (bit set)       | cr@3, 4 hops   | A@0 A@3      |
    /// | 4 | B     | 5:N 4:Y              | origin, 6 hops | A@3 B@0 B@4  |
    #[test]
    fn scripted_cachedbit_trace() {
        let mut net = CacheNetwork::new(path6(), CacheConfig::new(Admission::Cachedbit, 1), 1);
        let mut rng = Scripted(vec![NO, NO, YES, NO, NO, NO, NO, NO, NO, YES], 0);
        let (a, b) = (7, 8);
        let trace = [
            ev(0, 0, 5, a),
            ev(1, 0, 5, a),
            ev(2, 0, 5, b),
            ev(3, 0, 5, a),
            ev(4, 0, 5, b),
        ];
        let expected = [
            (HitKind::Origin, 5, 6),
            (HitKind::Cr, 0, 1),
            (HitKind::Origin, 5, 6),
            (HitKind::Cr, 3, 4),
            (HitKind::Origin, 5, 6),
        ];
        let after = [
            (vec![0, 3], vec![]),
            (vec![0, 3], vec![]),
            (vec![3], vec![0]),
            (vec![0, 3], vec![]),
            (vec![3], vec![0, 4]),
        ];
        for ((e, want), (with_a, with_b)) in trace.iter().zip(expected).zip(after) {
            let r = net.process_request_with(e, &mut rng);
            assert_eq!((r.hit, r.serving_node.0, r.hops), want, "request {}", e.seq);
            assert_eq!(stored(&net, a), with_a, "A after request {}", e.seq);
            assert_eq!(stored(&net, b), with_b, "B after request {}", e.seq);
        }
        assert_eq!(rng.1, 10, "all scripted coins consumed");
    }

    fn nbsc_fixture() -> (CacheNetwork, NodeId) {
        // Path 0-1-2-3 with a side node 4 hanging off 1.
        let topo = Arc::new(parse_edge_list("0 1\n1 2\n2 3\n1 4\n", Level::Pop).unwrap());
        let mut cfg = CacheConfig::new(Admission::Nbsc, 2);
        cfg.exchange_period = 0;
        (CacheNetwork::new(topo, cfg, 1), NodeId(4))
    }

    #[test]
    fn neighbor_lookup_clean_digests() {
        let (net, _) = nbsc_fixture();
        assert_eq!(
            net.neighbor_lookup(NodeId(1), &ChunkId::from_rank(1), 1),
            None
        );
    }

    #[test]
    fn neighbor_lookup_current_digest() {
        let (mut net, side) = nbsc_fixture();
        let chunk = ChunkId::from_rank(1);
        net.cr_mut(side).lru_insert(chunk);
        assert_eq!(
            net.neighbor_lookup(NodeId(1), &chunk, 1),
            None,
            "not yet published"
        );
        net.exchange_digests();
        assert_eq!(net.neighbor_lookup(NodeId(1), &chunk, 1), Some(side));

        let r = net.process_request(&ev(0, 0, 3, 1));
        assert_eq!(r.hit, HitKind::Neighbor);
        assert_eq!(r.serving_node, side);
        // Found while at v1: access hop, one link, then the detour.
        assert_eq!(r.hops, 2 + NEIGHBOR_DETOUR_HOPS);
        assert_eq!(r.bytes_hops, 4 * 1024);
        // The response passes nodes 1 and 0; node 0 keeps the forced copy.
        assert!(net.cr(NodeId(0)).store.contains(&chunk));
    }

    #[test]
    fn stale_digest_falls_back_to_path() {
        let (mut net, side) = nbsc_fixture();
        let chunk = ChunkId::from_rank(1);
        net.cr_mut(side).lru_insert(chunk);
        net.exchange_digests();
        // Evict the chunk between exchanges.
        net.cr_mut(side).lru_insert(ChunkId::from_rank(2));
        net.cr_mut(side).lru_insert(ChunkId::from_rank(3));
        assert!(net.cr(side).digest.query(chunk.digest));
        assert_eq!(net.neighbor_lookup(NodeId(1), &chunk, 1), None);
        let r = net.process_request(&ev(0, 0, 3, 1));
        assert_eq!(r.hit, HitKind::Origin);
        assert_eq!(r.hops, 4);
    }

    #[test]
    fn exchange_covers_store() {
        let (mut net, side) = nbsc_fixture();
        assert!(net.crs().iter().all(|cr| cr.digest.is_clear()));
        net.cr_mut(side).lru_insert(ChunkId::from_rank(5));
        net.cr_mut(side).lru_insert(ChunkId::from_rank(6));
        net.exchange_digests();
        for chunk in net.cr(side).store.iter() {
            assert!(net.cr(side).digest.query(chunk.digest));
        }
        assert!(net.cr(NodeId(0)).digest.is_clear());
    }

    #[test]
    fn zero_capacity_matches_baseline() {
        let topo = path6();
        let mut net = CacheNetwork::new(topo.clone(), CacheConfig::new(Admission::Nbsc, 0), 1);
        for (seq, (c, s)) in [(0, 5), (2, 4), (0, 5), (1, 3)].into_iter().enumerate() {
            let e = ev(seq as u64, c, s, 1);
            let r = net.process_request(&e);
            assert_eq!(r, FulfillmentRecord::baseline(&topo, &e, 1024));
        }
    }

    #[test]
    fn fulfillment_csv_layout() {
        let topo = path6();
        let e = ev(0, 0, 5, 1);
        let mut buf = Vec::new();
        write_fulfillment_csv(&[FulfillmentRecord::baseline(&topo, &e, 1024)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "seq,hit,serving_node,hops,bytes_hops\n0,origin,5,6,6144\n"
        );
    }
}
