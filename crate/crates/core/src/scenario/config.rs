use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cachenet::{Admission, NeighborScope};
use crate::topology::Level;
use crate::workload::{TrafficPattern, RNG_ALGORITHM};

use super::ScenarioError;

/// Environment variables `REDSIM_<KEY>` override config key `<key>`.
pub const ENV_PREFIX: &str = "REDSIM_";

/// One caching or RE scheme under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    All,
    Cachedbit,
    Nbsc,
    SmartreLp,
    SmartreGreedy,
    Endre,
    /// No caching and no RE; every row reports zero savings.
    #[serde(rename = "none")]
    NoCache,
}

impl Policy {
    pub const VARIANTS: [Policy; 7] = [
        Policy::All,
        Policy::Cachedbit,
        Policy::Nbsc,
        Policy::SmartreLp,
        Policy::SmartreGreedy,
        Policy::Endre,
        Policy::NoCache,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::All => "all",
            Policy::Cachedbit => "cachedbit",
            Policy::Nbsc => "nbsc",
            Policy::SmartreLp => "smartre-lp",
            Policy::SmartreGreedy => "smartre-greedy",
            Policy::Endre => "endre",
            Policy::NoCache => "none",
        }
    }

    /// The CR admission policy, for INCA policies.
    pub fn admission(self) -> Option<Admission> {
        match self {
            Policy::All => Some(Admission::All),
            Policy::Cachedbit => Some(Admission::Cachedbit),
            Policy::Nbsc => Some(Admission::Nbsc),
            _ => None,
        }
    }

    pub fn is_smartre(self) -> bool {
        matches!(self, Policy::SmartreLp | Policy::SmartreGreedy)
    }

    /// Whether the `last_copy` axis applies.
    pub fn uses_last_copy(self) -> bool {
        matches!(self, Policy::Cachedbit | Policy::Nbsc)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::VARIANTS
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| ScenarioError::Config(format!("unknown policy {s:?}")))
    }
}

/// How a `cache_chunks` value becomes SmartRE decoder memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmartreCapacity {
    /// The profile's ideal capacity scaled by `c / max(cache_chunks)`, so
    /// capacities 1024, 512, 256, 128 give the 1, 1/2, 1/4, 1/8 ladder.
    IdealScaled,
    /// `c * chunk_size` bytes per profiling window.
    Bytes,
}

/// A scenario matrix. Axes are the list-valued keys; a scalar is accepted
/// wherever a list is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Bundled names (`sprint`, `att-router`, `path6`) or edge-list paths.
    pub topology: Vec<String>,
    pub level: Level,
    /// Server POPs; 0 picks 20, or at most 10 on topologies under 40 POPs.
    pub servers: usize,
    pub policy: Vec<Policy>,
    pub cache_chunks: Vec<usize>,
    pub alpha: Vec<f64>,
    pub pattern: Vec<TrafficPattern>,
    pub seeds: Vec<u64>,
    pub last_copy: Vec<bool>,
    pub catalog: usize,
    pub chunk_size: u64,
    /// Requests per trace, warmup included.
    pub n_requests: usize,
    pub warmup: f64,
    pub radius: u32,
    pub exchange_period: u64,
    pub bloom_bits_per_chunk: u64,
    pub bloom_hashes: u32,
    pub neighbor_scope: NeighborScope,
    pub shim_bytes: u64,
    /// Profiling window in requests; 0 uses `smartre_window_per_path`
    /// times the number of client/server pairs.
    pub smartre_window: usize,
    pub smartre_window_per_path: usize,
    pub smartre_capacity: SmartreCapacity,
    /// EndRE memory per pair in chunks; 0 follows `cache_chunks`.
    pub endre_pair_chunks: usize,
    pub compare_inca: Policy,
    pub compare_re: Policy,
    /// Must name the built-in generator; recorded for reproducibility.
    pub rng: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            topology: vec!["sprint".into()],
            level: Level::Pop,
            servers: 0,
            policy: vec![Policy::All, Policy::Cachedbit, Policy::Nbsc],
            cache_chunks: vec![128, 256, 512, 1024],
            alpha: vec![0.9],
            pattern: vec![TrafficPattern::Constant],
            seeds: vec![1, 2, 3, 4, 5],
            last_copy: vec![true],
            catalog: 10_000,
            chunk_size: 1024,
            n_requests: 125_000,
            warmup: 0.2,
            radius: 1,
            exchange_period: 1000,
            bloom_bits_per_chunk: 16,
            bloom_hashes: 4,
            neighbor_scope: NeighborScope::EveryHop,
            shim_bytes: 32,
            smartre_window: 0,
            smartre_window_per_path: 800,
            smartre_capacity: SmartreCapacity::IdealScaled,
            endre_pair_chunks: 0,
            compare_inca: Policy::Nbsc,
            compare_re: Policy::SmartreLp,
            rng: RNG_ALGORITHM.into(),
        }
    }
}

/// Keys holding matrix axes; a scalar value is read as a one-element list.
pub const AXIS_KEYS: [&str; 7] = [
    "topology",
    "policy",
    "cache_chunks",
    "alpha",
    "pattern",
    "seeds",
    "last_copy",
];

/// Parses an override value as a TOML value, falling back to a string.
fn override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl ScenarioConfig {
    pub fn from_toml(source: &str) -> Result<Self, ScenarioError> {
        Self::from_toml_with_overrides(source, std::iter::empty::<(String, String)>())
    }

    /// Parses `source`, then replaces keys with `(key, value)` overrides.
    pub fn from_toml_with_overrides<I, K, V>(
        source: &str,
        overrides: I,
    ) -> Result<Self, ScenarioError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut table: toml::Table = toml::from_str(source)?;
        for (k, v) in overrides {
            table.insert(k.as_ref().to_ascii_lowercase(), override_value(v.as_ref()));
        }
        for key in AXIS_KEYS {
            if let Some(v) = table.get_mut(key) {
                if !v.is_array() {
                    *v = toml::Value::Array(vec![v.clone()]);
                }
            }
        }
        let config: ScenarioConfig = toml::Value::Table(table).try_into()?;
        config.validate()?;
        Ok(config)
    }

    /// `REDSIM_*` variables of the current process, as override pairs.
    pub fn env_overrides() -> Vec<(String, String)> {
        let mut vars: Vec<(String, String)> = std::env::vars()
            .filter_map(|(k, v)| Some((k.strip_prefix(ENV_PREFIX)?.to_ascii_lowercase(), v)))
            .collect();
        vars.sort();
        vars
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |m: String| Err(ScenarioError::Config(m));
        let lists = [
            ("topology", self.topology.is_empty()),
            ("policy", self.policy.is_empty()),
            ("cache_chunks", self.cache_chunks.is_empty()),
            ("alpha", self.alpha.is_empty()),
            ("pattern", self.pattern.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("last_copy", self.last_copy.is_empty()),
        ];
        if let Some((key, _)) = lists.iter().find(|(_, empty)| *empty) {
            return err(format!("{key} must not be empty"));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return err(format!("alpha must be positive, got {a}"));
        }
        if self.catalog == 0 {
            return err("catalog must hold at least one chunk".into());
        }
        if self.chunk_size == 0 {
            return err("chunk_size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.warmup) {
            return err(format!("warmup must be in [0, 1), got {}", self.warmup));
        }
        if self.n_requests == 0 {
            return err("n_requests must be positive".into());
        }
        if self.exchange_period == 0 {
            return err("exchange_period must be positive".into());
        }
        if self.bloom_bits_per_chunk == 0 || self.bloom_hashes == 0 {
            return err("bloom sizing must be positive".into());
        }
        if self.smartre_window == 0 && self.smartre_window_per_path == 0 {
            return err("smartre window must be positive".into());
        }
        if self.rng != RNG_ALGORITHM {
            return err(format!(
                "unsupported rng {:?}; only {RNG_ALGORITHM:?} is built in",
                self.rng
            ));
        }
        let dup = |name: &str, n: usize, unique: usize| {
            if n != unique {
                Err(ScenarioError::Config(format!(
                    "{name} has duplicate entries"
                )))
            } else {
                Ok(())
            }
        };
        let mut p = self.policy.clone();
        p.sort();
        p.dedup();
        dup("policy", self.policy.len(), p.len())?;
        let mut s = self.seeds.clone();
        s.sort();
        s.dedup();
        dup("seeds", self.seeds.len(), s.len())?;
        let mut c = self.cache_chunks.clone();
        c.sort();
        c.dedup();
        dup("cache_chunks", self.cache_chunks.len(), c.len())?;
        Ok(())
    }

    /// The resolved config, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::to_toml`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Number of scenarios (report rows per seed).
    pub fn scenario_count(&self) -> usize {
        let per_axis = self.cache_chunks.len() * self.alpha.len() * self.pattern.len();
        let policies: usize = self
            .policy
            .iter()
            .map(|p| {
                if p.uses_last_copy() {
                    self.last_copy.len()
                } else {
                    1
                }
            })
            .sum();
        self.topology.len() * policies * per_axis
    }
}
