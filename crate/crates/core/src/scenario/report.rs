use std::io::{Read, Write};

use crate::topology::Level;
use crate::workload::TrafficPattern;

use super::{Policy, ScenarioError};

pub const REPORT_HEADER: [&str; 16] = [
    "topology",
    "level",
    "policy",
    "cache_chunks",
    "alpha",
    "pattern",
    "seed",
    "hit_rate",
    "footprint_reduction",
    "bandwidth_savings",
    "origin_fraction",
    "last_copy",
    "hit_rate_sd",
    "footprint_reduction_sd",
    "bandwidth_savings_sd",
    "config_hash",
];

/// Sample standard deviations across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Spread {
    pub hit_rate: f64,
    pub footprint_reduction: f64,
    pub bandwidth_savings: f64,
}

/// One report line: a single seed, or the mean over seeds when `seed` is
/// `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub topology: String,
    pub level: Level,
    pub policy: Policy,
    /// Set for policies with a last-copy variant.
    pub last_copy: Option<bool>,
    pub cache_chunks: usize,
    pub alpha: f64,
    pub pattern: TrafficPattern,
    pub seed: Option<u64>,
    pub hit_rate: f64,
    pub footprint_reduction: f64,
    pub bandwidth_savings: f64,
    pub origin_fraction: f64,
    /// Present on mean rows.
    pub spread: Option<Spread>,
    pub config_hash: String,
}

impl ReportRow {
    pub fn is_mean(&self) -> bool {
        self.seed.is_none()
    }

    fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        vec![
            self.topology.clone(),
            self.level.to_string(),
            self.policy.to_string(),
            self.cache_chunks.to_string(),
            self.alpha.to_string(),
            self.pattern.to_string(),
            self.seed
                .map_or_else(|| "mean".to_string(), |s| s.to_string()),
            self.hit_rate.to_string(),
            self.footprint_reduction.to_string(),
            self.bandwidth_savings.to_string(),
            self.origin_fraction.to_string(),
            self.last_copy.map_or_else(String::new, |b| b.to_string()),
            opt(self.spread.map(|s| s.hit_rate)),
            opt(self.spread.map(|s| s.footprint_reduction)),
            opt(self.spread.map(|s| s.bandwidth_savings)),
            self.config_hash.clone(),
        ]
    }

    fn from_record(rec: &csv::StringRecord) -> Result<Self, String> {
        if rec.len() != REPORT_HEADER.len() {
            return Err(format!(
                "expected {} fields, got {}",
                REPORT_HEADER.len(),
                rec.len()
            ));
        }
        let f = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| format!("{}: {e}", REPORT_HEADER[i]))
        };
        let opt_f = |i: usize| {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        let hit_sd = opt_f(12)?;
        let spread = match hit_sd {
            Some(hit_rate) => Some(Spread {
                hit_rate,
                footprint_reduction: f(13)?,
                bandwidth_savings: f(14)?,
            }),
            None => None,
        };
        Ok(ReportRow {
            topology: rec[0].to_string(),
            level: rec[1].parse().map_err(|e| format!("{e}"))?,
            policy: rec[2].parse().map_err(|e| format!("{e}"))?,
            cache_chunks: rec[3].parse().map_err(|e| format!("cache_chunks: {e}"))?,
            alpha: f(4)?,
            pattern: rec[5].parse().map_err(|e| format!("{e}"))?,
            seed: match &rec[6] {
                "mean" => None,
                s => Some(s.parse().map_err(|e| format!("seed: {e}"))?),
            },
            hit_rate: f(7)?,
            footprint_reduction: f(8)?,
            bandwidth_savings: f(9)?,
            origin_fraction: f(10)?,
            last_copy: match &rec[11] {
                "" => None,
                s => Some(s.parse().map_err(|e| format!("last_copy: {e}"))?),
            },
            spread,
            config_hash: rec[15].to_string(),
        })
    }
}

pub fn write_report_csv<W: Write>(rows: &[ReportRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report_csv<R: Read>(input: R) -> Result<Vec<ReportRow>, ScenarioError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(REPORT_HEADER) {
        return Err(ScenarioError::Report("unexpected report header".into()));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            ReportRow::from_record(&rec?)
                .map_err(|m| ScenarioError::Report(format!("row {}: {m}", i + 1)))
        })
        .collect()
}

/// INCA and RE footprint reductions at one point of the shared axes.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub topology: String,
    pub level: Level,
    pub alpha: f64,
    pub pattern: TrafficPattern,
    pub cache_chunks: usize,
    pub inca: Policy,
    pub re: Policy,
    pub inca_footprint: f64,
    pub re_footprint: f64,
    /// `inca / re`; undefined when the RE reduction is zero.
    pub ratio: Option<f64>,
}

type Point = (String, Level, u64, TrafficPattern, usize);

fn point(row: &ReportRow) -> Point {
    (
        row.topology.clone(),
        row.level,
        row.alpha.to_bits(),
        row.pattern,
        row.cache_chunks,
    )
}

/// Joins the mean rows of `inca` and `re` on topology, alpha, pattern and
/// capacity, in report order. For policies with a last-copy variant the
/// first configured variant is used.
pub fn compare_inca_smartre(
    rows: &[ReportRow],
    inca: Policy,
    re: Policy,
) -> Result<Vec<CompareRow>, ScenarioError> {
    let pick = |policy: Policy| {
        let mut seen: Vec<(Point, f64)> = Vec::new();
        for row in rows.iter().filter(|r| r.is_mean() && r.policy == policy) {
            let p = point(row);
            if !seen.iter().any(|(q, _)| *q == p) {
                seen.push((p, row.footprint_reduction));
            }
        }
        seen
    };
    let left = pick(inca);
    let right = pick(re);
    let mut points: Vec<&Point> = Vec::new();
    for (p, _) in left.iter().chain(&right) {
        if !points.contains(&p) {
            points.push(p);
        }
    }
    let lookup =
        |side: &[(Point, f64)], p: &Point| side.iter().find(|(q, _)| q == p).map(|(_, v)| *v);
    let mut missing = Vec::new();
    let mut out = Vec::new();
    for p in points {
        let (topology, level, alpha, pattern, cache_chunks) = p.clone();
        let alpha = f64::from_bits(alpha);
        match (lookup(&left, p), lookup(&right, p)) {
            (Some(a), Some(b)) => out.push(CompareRow {
                topology,
                level,
                alpha,
                pattern,
                cache_chunks,
                inca,
                re,
                inca_footprint: a,
                re_footprint: b,
                ratio: (b != 0.0).then(|| a / b),
            }),
            (a, _) => missing.push(format!(
                "{} missing at {topology}/{level} alpha={alpha} pattern={pattern} cache_chunks={cache_chunks}",
                if a.is_none() { inca } else { re }
            )),
        }
    }
    if out.is_empty() && missing.is_empty() {
        missing.push(format!("no mean rows for {inca} or {re}"));
    }
    if !missing.is_empty() {
        return Err(ScenarioError::MissingPoints(missing));
    }
    Ok(out)
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "topology",
        "level",
        "alpha",
        "pattern",
        "cache_chunks",
        "inca_policy",
        "re_policy",
        "inca_footprint_reduction",
        "re_footprint_reduction",
        "ratio",
    ])?;
    for r in rows {
        w.write_record(&[
            r.topology.clone(),
            r.level.to_string(),
            r.alpha.to_string(),
            r.pattern.to_string(),
            r.cache_chunks.to_string(),
            r.inca.to_string(),
            r.re.to_string(),
            r.inca_footprint.to_string(),
            r.re_footprint.to_string(),
            r.ratio.map_or_else(String::new, |v| v.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
