//! Experiment matrices: configuration, execution and reports.
//!
//! A matrix is the product of topologies, policies, capacities, alphas,
//! patterns, last-copy variants and seeds. Every policy at a given
//! (topology, pattern, alpha, seed) replays the same trace, so each such
//! tuple is one independent unit of work.

mod config;
mod report;

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

pub use config::{Policy, ScenarioConfig, SmartreCapacity, AXIS_KEYS, ENV_PREFIX};
pub use report::{
    compare_inca_smartre, read_report_csv, write_compare_csv, write_report_csv, CompareRow,
    ReportRow, Spread, REPORT_HEADER,
};

use crate::cachenet::{write_fulfillment_csv, CacheConfig, CacheNetwork, FulfillmentRecord};
use crate::metrics::{hop_counts, warmup_len, HopCdf, MetricsReport};
use crate::re::{
    build_redundancy_profile, simulate_endre, simulate_smartre, solve_manifest_greedy,
    solve_manifest_lp, DecoderCapacity, RedundancyProfile,
};
use crate::topology::{
    bundled, parse_edge_list, select_servers, Level, Placement, Topology, TopologyError,
};
use crate::workload::{
    generate_trace, write_trace_csv, Catalog, RequestEvent, TrafficPattern, RNG_ALGORITHM,
};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid config")]
    Toml(#[from] toml::de::Error),
    #[error("topology {name:?}")]
    Topology {
        name: String,
        #[source]
        source: TopologyError,
    },
    #[error("topology {name:?} is neither bundled nor readable")]
    TopologyFile {
        name: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario {scenario}: {message}")]
    Run { scenario: String, message: String },
    #[error("comparison has missing points:\n  {}", .0.join("\n  "))]
    MissingPoints(Vec<String>),
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Default server count for a topology with `pops` POPs.
pub fn default_servers(pops: usize) -> usize {
    if pops >= 40 {
        20
    } else {
        (pops / 2).clamp(1, 10)
    }
}

/// Resolves a topology entry: a bundled `<entry>-<level>` or `<entry>`,
/// else an edge-list file.
pub fn load_topology(entry: &str, level: Level) -> Result<Topology, ScenarioError> {
    let wrap = |source| ScenarioError::Topology {
        name: entry.to_string(),
        source,
    };
    let topo = match bundled(&format!("{entry}-{level}")).or_else(|_| bundled(entry)) {
        Ok(t) => t,
        Err(_) => {
            let src = fs::read_to_string(entry).map_err(|source| ScenarioError::TopologyFile {
                name: entry.to_string(),
                source,
            })?;
            parse_edge_list(&src, level).map_err(wrap)?
        }
    };
    if topo.level() != level {
        return Err(ScenarioError::Config(format!(
            "topology {entry:?} is {}-level but the config asks for {level}",
            topo.level()
        )));
    }
    Ok(topo)
}

/// A topology ready to run: the graph, its placement and SmartRE window.
#[derive(Debug, Clone)]
pub struct PreparedTopology {
    pub label: String,
    pub topology: Arc<Topology>,
    pub placement: Placement,
    pub smartre_window: usize,
}

impl PreparedTopology {
    pub fn new(entry: &str, config: &ScenarioConfig) -> Result<Self, ScenarioError> {
        let topology = load_topology(entry, config.level)?;
        let servers = match config.servers {
            0 => default_servers(topology.pop_nodes().len()),
            k => k,
        };
        let placement =
            select_servers(&topology, servers).map_err(|source| ScenarioError::Topology {
                name: entry.to_string(),
                source,
            })?;
        let window = match config.smartre_window {
            0 => config.smartre_window_per_path * placement.pair_count(),
            w => w,
        };
        Ok(PreparedTopology {
            label: entry.to_string(),
            topology: Arc::new(topology),
            placement,
            smartre_window: window.min(config.n_requests),
        })
    }
}

/// Position of a scenario in the config's axes; orders the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct ScenarioKey {
    topology: usize,
    policy: usize,
    cache: usize,
    alpha: usize,
    pattern: usize,
    last_copy: usize,
}

#[derive(Debug, Clone, Copy)]
struct Unit {
    topology: usize,
    pattern: usize,
    alpha: usize,
    seed: usize,
}

#[derive(Debug, Clone)]
struct RunOutcome {
    key: ScenarioKey,
    seed: usize,
    report: MetricsReport,
    hops: BTreeMap<u32, u64>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 and 1 both run sequentially.
    pub parallel: usize,
    /// Directory for per-run traces, fulfillment logs and SmartRE
    /// profiles/manifests.
    pub export_dir: Option<PathBuf>,
}

/// Everything a matrix run produces.
#[derive(Debug, Clone)]
pub struct MatrixReport {
    pub config_hash: String,
    pub rows: Vec<ReportRow>,
    /// Hop CDFs of INCA scenarios, pooled over seeds, by scenario label.
    pub hop_cdfs: Vec<(String, HopCdf)>,
    /// Resolved config and per-topology facts, as TOML.
    pub metadata: String,
}

impl MatrixReport {
    /// Writes `report.csv`, `metadata.toml` and `hops/<label>.csv`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), ScenarioError> {
        fs::create_dir_all(dir.join("hops"))?;
        write_report_csv(
            &self.rows,
            BufWriter::new(File::create(dir.join("report.csv"))?),
        )?;
        fs::write(dir.join("metadata.toml"), &self.metadata)?;
        for (label, cdf) in &self.hop_cdfs {
            cdf.write_csv(BufWriter::new(File::create(
                dir.join("hops").join(format!("{label}.csv")),
            )?))?;
        }
        Ok(())
    }
}

struct Matrix<'a> {
    config: &'a ScenarioConfig,
    topologies: Vec<PreparedTopology>,
    catalogs: Vec<Catalog>,
    hash: String,
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

impl Matrix<'_> {
    fn label(&self, key: &ScenarioKey) -> String {
        let c = self.config;
        let policy = c.policy[key.policy];
        let variant = if policy.uses_last_copy() && !c.last_copy[key.last_copy] {
            "-nolc"
        } else {
            ""
        };
        format!(
            "{}-{}-{}{}-c{}-a{}-{}",
            sanitize(&self.topologies[key.topology].label),
            c.level,
            policy,
            variant,
            c.cache_chunks[key.cache],
            c.alpha[key.alpha],
            c.pattern[key.pattern]
        )
    }

    fn trace_label(&self, unit: &Unit) -> String {
        let c = self.config;
        format!(
            "{}-{}-a{}-{}-s{}",
            sanitize(&self.topologies[unit.topology].label),
            c.level,
            c.alpha[unit.alpha],
            c.pattern[unit.pattern],
            c.seeds[unit.seed]
        )
    }

    fn cache_config(&self, policy: Policy, capacity: usize, last_copy: bool) -> CacheConfig {
        let c = self.config;
        CacheConfig {
            admission: policy.admission().expect("INCA policy"),
            capacity,
            chunk_size: c.chunk_size,
            last_copy,
            radius: c.radius,
            exchange_period: c.exchange_period,
            bloom_bits_per_chunk: c.bloom_bits_per_chunk,
            bloom_hashes: c.bloom_hashes,
            neighbor_scope: c.neighbor_scope,
        }
    }

    fn smartre_capacity(&self, profile: &RedundancyProfile, cache: usize) -> DecoderCapacity {
        let c = self.config;
        match c.smartre_capacity {
            SmartreCapacity::IdealScaled => {
                let max = *c.cache_chunks.iter().max().expect("validated non-empty");
                let scaled = if max == 0 {
                    0
                } else {
                    (profile.ideal_capacity() as u128 * cache as u128 / max as u128) as u64
                };
                DecoderCapacity::Uniform(scaled)
            }
            SmartreCapacity::Bytes => DecoderCapacity::Uniform(cache as u64 * c.chunk_size),
        }
    }

    fn run_unit(
        &self,
        unit: Unit,
        export: Option<&Path>,
    ) -> Result<Vec<RunOutcome>, ScenarioError> {
        let c = self.config;
        let prepared = &self.topologies[unit.topology];
        let topo = &prepared.topology;
        let seed = c.seeds[unit.seed];
        let run_err = |key: Option<&ScenarioKey>, message: String| ScenarioError::Run {
            scenario: match key {
                Some(k) => format!("{} seed {seed}", self.label(k)),
                None => self.trace_label(&unit),
            },
            message,
        };
        let trace = generate_trace(
            &self.catalogs[unit.alpha],
            topo,
            &prepared.placement,
            c.pattern[unit.pattern],
            c.n_requests,
            seed,
        )
        .map_err(|e| run_err(None, e.to_string()))?;
        let warm = warmup_len(trace.len(), c.warmup);
        if let Some(dir) = export {
            let path = dir
                .join("traces")
                .join(format!("{}.csv", self.trace_label(&unit)));
            write_trace_csv(&trace, BufWriter::new(File::create(path)?))?;
        }
        let baseline: Vec<FulfillmentRecord> = trace
            .iter()
            .map(|ev| FulfillmentRecord::baseline(topo, ev, c.chunk_size))
            .collect();
        let profile = c.policy.iter().any(|p| p.is_smartre()).then(|| {
            build_redundancy_profile(
                &trace,
                &prepared.placement,
                topo,
                prepared.smartre_window,
                c.chunk_size,
            )
        });
        if let (Some(dir), Some(profile)) = (export, &profile) {
            let path = dir
                .join("smartre")
                .join(format!("{}-profile.csv", self.trace_label(&unit)));
            profile.write_csv(BufWriter::new(File::create(path)?))?;
        }

        let mut out = Vec::new();
        for (pi, &policy) in c.policy.iter().enumerate() {
            let variants = if policy.uses_last_copy() {
                c.last_copy.len()
            } else {
                1
            };
            for ci in 0..c.cache_chunks.len() {
                for li in 0..variants {
                    let key = ScenarioKey {
                        topology: unit.topology,
                        policy: pi,
                        cache: ci,
                        alpha: unit.alpha,
                        pattern: unit.pattern,
                        last_copy: li,
                    };
                    let (report, hops) = self
                        .run_policy(
                            &key,
                            &trace,
                            &baseline,
                            profile.as_ref(),
                            warm,
                            export,
                            seed,
                        )
                        .map_err(|m| run_err(Some(&key), m))?;
                    out.push(RunOutcome {
                        key,
                        seed: unit.seed,
                        report,
                        hops,
                    });
                }
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn run_policy(
        &self,
        key: &ScenarioKey,
        trace: &[RequestEvent],
        baseline: &[FulfillmentRecord],
        profile: Option<&RedundancyProfile>,
        warm: usize,
        export: Option<&Path>,
        seed: u64,
    ) -> Result<(MetricsReport, BTreeMap<u32, u64>), String> {
        let c = self.config;
        let topo = &self.topologies[key.topology].topology;
        let policy = c.policy[key.policy];
        let cache = c.cache_chunks[key.cache];
        let export_to = |sub: &str, suffix: &str| {
            export.map(|dir| {
                dir.join(sub)
                    .join(format!("{}-s{seed}{suffix}.csv", self.label(key)))
            })
        };
        let io = |e: std::io::Error| e.to_string();
        let csv_err = |e: csv::Error| e.to_string();
        match policy {
            Policy::All | Policy::Cachedbit | Policy::Nbsc => {
                let cfg = self.cache_config(policy, cache, c.last_copy[key.last_copy]);
                let mut net = CacheNetwork::new(topo.clone(), cfg, seed);
                let records = net.run(trace);
                if let Some(path) = export_to("fulfillment", "") {
                    write_fulfillment_csv(
                        &records,
                        BufWriter::new(File::create(path).map_err(io)?),
                    )
                    .map_err(csv_err)?;
                }
                let measured = &records[warm..];
                let report = MetricsReport::from_inca(measured, &baseline[warm..])
                    .map_err(|e| e.to_string())?;
                Ok((report, hop_counts(measured)))
            }
            Policy::NoCache => {
                let report = MetricsReport::from_inca(&baseline[warm..], &baseline[warm..])
                    .map_err(|e| e.to_string())?;
                Ok((report, BTreeMap::new()))
            }
            Policy::SmartreLp | Policy::SmartreGreedy => {
                let profile = profile.expect("profile built for SmartRE policies");
                let caps = self.smartre_capacity(profile, cache);
                let manifest = if policy == Policy::SmartreLp {
                    solve_manifest_lp(profile, &caps)
                } else {
                    solve_manifest_greedy(profile, &caps)
                };
                if !manifest.is_feasible(profile, &caps) {
                    return Err("caching manifest violates its constraints".into());
                }
                if let Some(path) = export_to("smartre", "-manifest") {
                    manifest
                        .write_csv(BufWriter::new(File::create(path).map_err(io)?))
                        .map_err(csv_err)?;
                }
                let records = simulate_smartre(trace, &manifest, profile, topo, c.shim_bytes);
                let report = MetricsReport::from_re(&records[warm..], c.chunk_size)
                    .map_err(|e| e.to_string())?;
                Ok((report, BTreeMap::new()))
            }
            Policy::Endre => {
                let pair = match c.endre_pair_chunks {
                    0 => cache,
                    n => n,
                };
                let records = simulate_endre(trace, pair, topo, c.chunk_size, c.shim_bytes);
                let report = MetricsReport::from_re(&records[warm..], c.chunk_size)
                    .map_err(|e| e.to_string())?;
                Ok((report, BTreeMap::new()))
            }
        }
    }

    fn metadata(&self) -> String {
        let mut table = toml::Table::new();
        table.insert("config_hash".into(), self.hash.clone().into());
        table.insert("rng".into(), RNG_ALGORITHM.into());
        table.insert(
            "generator".into(),
            format!("redsim {}", env!("CARGO_PKG_VERSION")).into(),
        );
        let config: toml::Table =
            toml::from_str(&self.config.to_toml()).expect("config round-trips");
        table.insert("config".into(), config.into());
        let topologies: Vec<toml::Value> = self
            .topologies
            .iter()
            .map(|t| {
                let mut m = toml::Table::new();
                m.insert("label".into(), t.label.clone().into());
                m.insert("name".into(), t.topology.name().into());
                m.insert("nodes".into(), (t.topology.node_count() as i64).into());
                m.insert("edges".into(), (t.topology.edge_count() as i64).into());
                m.insert(
                    "servers".into(),
                    (t.placement.servers().len() as i64).into(),
                );
                m.insert(
                    "clients".into(),
                    (t.placement.clients().len() as i64).into(),
                );
                m.insert("smartre_window".into(), (t.smartre_window as i64).into());
                m.into()
            })
            .collect();
        table.insert("topologies".into(), topologies.into());
        toml::to_string(&table).expect("metadata serializes")
    }
}

/// Runs `jobs` over `threads` workers and returns results in job order, or
/// the error of the lowest failing job.
fn run_jobs<T: Send, E: Send>(
    jobs: usize,
    threads: usize,
    job: impl Fn(usize) -> Result<T, E> + Sync,
) -> Result<Vec<T>, E> {
    if threads <= 1 {
        return (0..jobs).map(job).collect();
    }
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let slots: Mutex<Vec<Option<Result<T, E>>>> = Mutex::new((0..jobs).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.min(jobs) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs || failed.load(Ordering::Relaxed) {
                    break;
                }
                let r = job(i);
                if r.is_err() {
                    failed.store(true, Ordering::Relaxed);
                }
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    let slots = slots.into_inner().expect("worker panicked");
    let mut out = Vec::with_capacity(jobs);
    for slot in slots {
        match slot {
            Some(r) => out.push(r?),
            // Jobs are claimed in order, so a skipped job follows a failure.
            None => unreachable!("skipped job without an earlier failure"),
        }
    }
    Ok(out)
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Executes the whole matrix. Config and topology problems are reported
/// before any scenario runs.
pub fn run_matrix(
    config: &ScenarioConfig,
    options: &RunOptions,
) -> Result<MatrixReport, ScenarioError> {
    config.validate()?;
    let topologies = config
        .topology
        .iter()
        .map(|entry| PreparedTopology::new(entry, config))
        .collect::<Result<Vec<_>, _>>()?;
    let catalogs = config
        .alpha
        .iter()
        .map(|&a| Catalog::new(config.catalog, a, config.chunk_size))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ScenarioError::Config(e.to_string()))?;
    let matrix = Matrix {
        config,
        topologies,
        catalogs,
        hash: config.hash(),
    };
    if let Some(dir) = &options.export_dir {
        for sub in ["traces", "fulfillment", "smartre"] {
            fs::create_dir_all(dir.join(sub))?;
        }
    }

    let mut units = Vec::new();
    for topology in 0..config.topology.len() {
        for pattern in 0..config.pattern.len() {
            for alpha in 0..config.alpha.len() {
                for seed in 0..config.seeds.len() {
                    units.push(Unit {
                        topology,
                        pattern,
                        alpha,
                        seed,
                    });
                }
            }
        }
    }
    let export = options.export_dir.as_deref();
    let results = run_jobs(units.len(), options.parallel, |i| {
        matrix.run_unit(units[i], export)
    })?;

    let mut grouped: BTreeMap<ScenarioKey, Vec<RunOutcome>> = BTreeMap::new();
    for outcome in results.into_iter().flatten() {
        grouped.entry(outcome.key).or_default().push(outcome);
    }
    let mut rows = Vec::new();
    let mut hop_cdfs = Vec::new();
    for (key, mut runs) in grouped {
        runs.sort_by_key(|r| r.seed);
        let policy = config.policy[key.policy];
        let row = |seed: Option<u64>, r: &MetricsReport, spread: Option<Spread>| ReportRow {
            topology: matrix.topologies[key.topology].label.clone(),
            level: config.level,
            policy,
            last_copy: policy
                .uses_last_copy()
                .then(|| config.last_copy[key.last_copy]),
            cache_chunks: config.cache_chunks[key.cache],
            alpha: config.alpha[key.alpha],
            pattern: config.pattern[key.pattern],
            seed,
            hit_rate: r.hit_rate,
            footprint_reduction: r.footprint_reduction,
            bandwidth_savings: r.bandwidth_savings,
            origin_fraction: r.origin_fraction,
            spread,
            config_hash: matrix.hash.clone(),
        };
        for run in &runs {
            rows.push(row(Some(config.seeds[run.seed]), &run.report, None));
        }
        let stat = |f: fn(&MetricsReport) -> f64| {
            mean_sd(&runs.iter().map(|r| f(&r.report)).collect::<Vec<_>>())
        };
        let (hit, hit_sd) = stat(|r| r.hit_rate);
        let (fp, fp_sd) = stat(|r| r.footprint_reduction);
        let (bw, bw_sd) = stat(|r| r.bandwidth_savings);
        let (origin, _) = stat(|r| r.origin_fraction);
        let mut mean = runs[0].report.clone();
        mean.hit_rate = hit;
        mean.footprint_reduction = fp;
        mean.bandwidth_savings = bw;
        mean.origin_fraction = origin;
        rows.push(row(
            None,
            &mean,
            Some(Spread {
                hit_rate: hit_sd,
                footprint_reduction: fp_sd,
                bandwidth_savings: bw_sd,
            }),
        ));
        if policy.admission().is_some() {
            let mut pooled: BTreeMap<u32, u64> = BTreeMap::new();
            for run in &runs {
                for (&h, &n) in &run.hops {
                    *pooled.entry(h).or_default() += n;
                }
            }
            hop_cdfs.push((matrix.label(&key), HopCdf::from_counts(&pooled)));
        }
    }

    Ok(MatrixReport {
        config_hash: matrix.hash.clone(),
        rows,
        hop_cdfs,
        metadata: matrix.metadata(),
    })
}

/// Runs only the two compared policies and joins their mean rows.
pub fn run_comparison(
    config: &ScenarioConfig,
    options: &RunOptions,
) -> Result<Vec<CompareRow>, ScenarioError> {
    let (inca, re) = (config.compare_inca, config.compare_re);
    let missing: Vec<Policy> = [inca, re]
        .into_iter()
        .filter(|p| !config.policy.contains(p))
        .collect();
    if !missing.is_empty() {
        return Err(ScenarioError::Config(format!(
            "compare needs policies {} in the config",
            missing
                .iter()
                .map(|p| p.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    let mut narrowed = config.clone();
    narrowed.policy.retain(|p| *p == inca || *p == re);
    let report = run_matrix(&narrowed, options)?;
    compare_inca_smartre(&report.rows, inca, re)
}

pub type MeanKey = (String, Policy, Option<bool>, usize, u64, TrafficPattern);

/// Mean rows of `rows`, keyed by (topology, policy, last_copy, cache,
/// alpha bits, pattern) for lookups in tests and tooling.
pub fn mean_index(rows: &[ReportRow]) -> HashMap<MeanKey, &ReportRow> {
    rows.iter()
        .filter(|r| r.is_mean())
        .map(|r| {
            (
                (
                    r.topology.clone(),
                    r.policy,
                    r.last_copy,
                    r.cache_chunks,
                    r.alpha.to_bits(),
                    r.pattern,
                ),
                r,
            )
        })
        .collect()
}
