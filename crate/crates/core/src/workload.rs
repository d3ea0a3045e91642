//! Zipf chunk catalog and deterministic request traces.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::topology::{NodeId, Placement, Topology};

/// Identifier of the generator used for every random draw; echoed in report
/// metadata so traces can be reproduced elsewhere.
pub const RNG_ALGORITHM: &str = "chacha8-stream-u53";

/// Stream used for trace generation.
pub const TRACE_STREAM: u64 = 0;
/// Stream used for probabilistic admission decisions.
pub const ADMISSION_STREAM: u64 = 1;

/// Seeded generator for a given logical stream.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in `[0, 1)` from the top 53 bits of one 64-bit output.
pub fn unit_draw<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("catalog must contain at least one chunk")]
    EmptyCatalog,
    #[error("zipf exponent must be finite and non-negative, got {0}")]
    BadAlpha(f64),
    #[error("chunk size must be positive")]
    ZeroChunkSize,
    #[error("a trace needs at least one request")]
    EmptyTrace,
    #[error("unknown traffic pattern {0:?}")]
    UnknownPattern(String),
    #[error("cannot remap trace: {0}")]
    Remap(String),
}

/// A content chunk. The digest stands in for a content hash and is a pure
/// function of the rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChunkId {
    pub rank: u32,
    pub digest: u64,
}

impl ChunkId {
    pub fn from_rank(rank: u32) -> Self {
        let hash = Sha256::digest(format!("chunk:{rank}").as_bytes());
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&hash[..8]);
        ChunkId {
            rank,
            digest: u64::from_be_bytes(bytes),
        }
    }
}

/// Zipf-weighted chunk population: rank `i` (0-based) has probability
/// proportional to `1 / (i + 1)^alpha`.
#[derive(Debug, Clone)]
pub struct Catalog {
    chunk_size: u64,
    alpha: f64,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    ids: Vec<ChunkId>,
}

impl Catalog {
    pub fn new(n_chunks: usize, alpha: f64, chunk_size: u64) -> Result<Self, WorkloadError> {
        if n_chunks == 0 {
            return Err(WorkloadError::EmptyCatalog);
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(WorkloadError::BadAlpha(alpha));
        }
        if chunk_size == 0 {
            return Err(WorkloadError::ZeroChunkSize);
        }
        let raw: Vec<f64> = (1..=n_chunks).map(|i| (i as f64).powf(-alpha)).collect();
        // Sum smallest-first to keep the normalisation tight.
        let total: f64 = raw.iter().rev().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mut cumulative = Vec::with_capacity(n_chunks);
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        let ids = (0..n_chunks as u32).map(ChunkId::from_rank).collect();
        Ok(Catalog {
            chunk_size,
            alpha,
            weights,
            cumulative,
            ids,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn chunk_size(&self) -> u64 {
        self.chunk_size
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn chunk(&self, rank: u32) -> ChunkId {
        self.ids[rank as usize]
    }

    /// Inverse-CDF lookup for a uniform draw `u` in `[0, 1)`.
    pub fn rank_for(&self, u: f64) -> u32 {
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.len() - 1) as u32
    }
}

/// How client/server pairs are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficPattern {
    /// Client and server uniform over their sets.
    Constant,
    /// Pair probability proportional to `degree(client) * degree(server)`.
    Gravity,
}

impl TrafficPattern {
    pub fn as_str(self) -> &'static str {
        match self {
            TrafficPattern::Constant => "constant",
            TrafficPattern::Gravity => "gravity",
        }
    }
}

impl fmt::Display for TrafficPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrafficPattern {
    type Err = WorkloadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(TrafficPattern::Constant),
            "gravity" => Ok(TrafficPattern::Gravity),
            other => Err(WorkloadError::UnknownPattern(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RequestEvent {
    pub seq: u64,
    pub client: NodeId,
    pub server: NodeId,
    pub chunk: ChunkId,
}

/// Draws client/server pairs for a placement.
#[derive(Debug, Clone)]
pub struct PairSampler {
    clients: Vec<NodeId>,
    servers: Vec<NodeId>,
    // Empty for the constant pattern.
    client_cdf: Vec<f64>,
    server_cdf: Vec<f64>,
}

impl PairSampler {
    pub fn new(topology: &Topology, placement: &Placement, pattern: TrafficPattern) -> Self {
        let cdf = |nodes: &[NodeId]| {
            let total: f64 = nodes.iter().map(|&n| topology.degree(n) as f64).sum();
            let mut acc = 0.0;
            nodes
                .iter()
                .map(|&n| {
                    acc += topology.degree(n) as f64 / total;
                    acc
                })
                .collect::<Vec<_>>()
        };
        let (client_cdf, server_cdf) = match pattern {
            TrafficPattern::Constant => (Vec::new(), Vec::new()),
            TrafficPattern::Gravity => (cdf(placement.clients()), cdf(placement.servers())),
        };
        PairSampler {
            clients: placement.clients().to_vec(),
            servers: placement.servers().to_vec(),
            client_cdf,
            server_cdf,
        }
    }

    fn pick(nodes: &[NodeId], cdf: &[f64], u: f64) -> NodeId {
        let idx = if cdf.is_empty() {
            (u * nodes.len() as f64) as usize
        } else {
            cdf.partition_point(|&c| c <= u)
        };
        nodes[idx.min(nodes.len() - 1)]
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> (NodeId, NodeId) {
        let client = Self::pick(&self.clients, &self.client_cdf, unit_draw(rng));
        let server = Self::pick(&self.servers, &self.server_cdf, unit_draw(rng));
        (client, server)
    }
}

/// Draws one request: client, then server, then chunk.
pub fn sample_request<R: RngCore + ?Sized>(
    catalog: &Catalog,
    pairs: &PairSampler,
    seq: u64,
    rng: &mut R,
) -> RequestEvent {
    let (client, server) = pairs.sample(rng);
    let chunk = catalog.chunk(catalog.rank_for(unit_draw(rng)));
    RequestEvent {
        seq,
        client,
        server,
        chunk,
    }
}

/// Generates a replayable trace; a pure function of its arguments.
pub fn generate_trace(
    catalog: &Catalog,
    topology: &Topology,
    placement: &Placement,
    pattern: TrafficPattern,
    n_requests: usize,
    seed: u64,
) -> Result<Vec<RequestEvent>, WorkloadError> {
    if n_requests == 0 {
        return Err(WorkloadError::EmptyTrace);
    }
    let pairs = PairSampler::new(topology, placement, pattern);
    let mut rng = seeded_rng(seed, TRACE_STREAM);
    Ok((0..n_requests as u64)
        .map(|seq| sample_request(catalog, &pairs, seq, &mut rng))
        .collect())
}

/// Rewrites a trace onto another placement by position: the i-th client
/// (server) of `from` becomes the i-th client (server) of `to`. Fails if
/// `to` has fewer clients or servers, which would merge pairs.
pub fn remap_trace(
    trace: &[RequestEvent],
    from: &Placement,
    to: &Placement,
) -> Result<Vec<RequestEvent>, WorkloadError> {
    if to.clients().len() < from.clients().len() || to.servers().len() < from.servers().len() {
        return Err(WorkloadError::Remap(format!(
            "target placement has {} clients / {} servers, source needs {} / {}",
            to.clients().len(),
            to.servers().len(),
            from.clients().len(),
            from.servers().len()
        )));
    }
    trace
        .iter()
        .map(|ev| {
            let c = from.clients().binary_search(&ev.client);
            let s = from.servers().binary_search(&ev.server);
            match (c, s) {
                (Ok(c), Ok(s)) => Ok(RequestEvent {
                    client: to.clients()[c],
                    server: to.servers()[s],
                    ..*ev
                }),
                _ => Err(WorkloadError::Remap(format!(
                    "request {} uses a pair outside the source placement",
                    ev.seq
                ))),
            }
        })
        .collect()
}

/// Writes `seq,client,server,rank`.
pub fn write_trace_csv<W: Write>(trace: &[RequestEvent], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seq", "client", "server", "rank"])?;
    for ev in trace {
        w.write_record(&[
            ev.seq.to_string(),
            ev.client.to_string(),
            ev.server.to_string(),
            ev.chunk.rank.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
