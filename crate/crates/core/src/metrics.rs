//! Hit rate, hop distribution and footprint over the measured part of a run.

use std::collections::BTreeMap;
use std::io::Write;

use crate::cachenet::FulfillmentRecord;
use crate::re::{ReOutcome, ReRecord};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no records to measure")]
    Empty,
    #[error("baseline footprint is zero")]
    ZeroBaseline,
    #[error("record and baseline sets differ in length ({records} vs {baseline})")]
    Mismatch { records: usize, baseline: usize },
}

/// Index of the first measured record when the leading `fraction` of `n`
/// records is warmup.
pub fn warmup_len(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction.clamp(0.0, 1.0)).floor() as usize).min(n)
}

/// The records after warmup.
pub fn measured<T>(records: &[T], warmup_fraction: f64) -> &[T] {
    &records[warmup_len(records.len(), warmup_fraction)..]
}

/// Fraction of requests served by a CR, on path or neighbouring.
pub fn hit_rate(records: &[FulfillmentRecord]) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let hits = records.iter().filter(|r| r.hit.is_hit()).count();
    Ok(hits as f64 / records.len() as f64)
}

/// Cumulative distribution of hops over hit records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HopCdf {
    pub points: Vec<(u32, f64)>,
}

impl HopCdf {
    /// True when the run had no hits to distribute.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Fraction of hits within `hops` hops.
    pub fn at(&self, hops: u32) -> f64 {
        self.points
            .iter()
            .take_while(|&&(h, _)| h <= hops)
            .last()
            .map_or(0.0, |&(_, f)| f)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["hops", "cum_fraction"])?;
        for (h, f) in &self.points {
            w.write_record(&[h.to_string(), f.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn hop_cdf(records: &[FulfillmentRecord]) -> HopCdf {
    HopCdf::from_counts(&hop_counts(records))
}

/// Number of hits at each hop count.
pub fn hop_counts(records: &[FulfillmentRecord]) -> BTreeMap<u32, u64> {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.hit.is_hit()) {
        *counts.entry(r.hops).or_default() += 1;
    }
    counts
}

impl HopCdf {
    /// CDF of a hop histogram, e.g. pooled over several runs.
    pub fn from_counts(counts: &BTreeMap<u32, u64>) -> Self {
        let total: u64 = counts.values().sum();
        let mut acc = 0;
        let points = counts
            .iter()
            .map(|(&h, &c)| {
                acc += c;
                (
                    h,
                    if acc == total {
                        1.0
                    } else {
                        acc as f64 / total as f64
                    },
                )
            })
            .collect();
        HopCdf { points }
    }
}

/// `1 - reduced / baseline`.
pub fn reduction(reduced: f64, baseline: u64) -> Result<f64, MetricsError> {
    if baseline == 0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok(1.0 - reduced / baseline as f64)
}

/// Footprint reduction of `records` against the same trace replayed with
/// caching disabled.
pub fn footprint_reduction(
    records: &[FulfillmentRecord],
    baseline: &[FulfillmentRecord],
) -> Result<f64, MetricsError> {
    if records.len() != baseline.len() {
        return Err(MetricsError::Mismatch {
            records: records.len(),
            baseline: baseline.len(),
        });
    }
    let reduced: u64 = records.iter().map(|r| r.bytes_hops).sum();
    let base: u64 = baseline.iter().map(|r| r.bytes_hops).sum();
    reduction(reduced as f64, base)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub requests: u64,
    pub hit_rate: f64,
    /// Requests served by the origin, as a fraction.
    pub origin_fraction: f64,
    pub hop_cdf: HopCdf,
    pub baseline_bytes_hops: u64,
    pub reduced_bytes_hops: f64,
    pub footprint_reduction: f64,
    pub bandwidth_savings: f64,
}

impl MetricsReport {
    /// Report for a CR-network run. Bandwidth savings are the byte-hops
    /// saved over every link, which equals the footprint reduction.
    pub fn from_inca(
        records: &[FulfillmentRecord],
        baseline: &[FulfillmentRecord],
    ) -> Result<Self, MetricsError> {
        let hit_rate = hit_rate(records)?;
        let footprint = footprint_reduction(records, baseline)?;
        Ok(MetricsReport {
            requests: records.len() as u64,
            hit_rate,
            origin_fraction: 1.0 - hit_rate,
            hop_cdf: hop_cdf(records),
            baseline_bytes_hops: baseline.iter().map(|r| r.bytes_hops).sum(),
            reduced_bytes_hops: records.iter().map(|r| r.bytes_hops).sum::<u64>() as f64,
            footprint_reduction: footprint,
            bandwidth_savings: footprint,
        })
    }

    /// Report for an RE run. RE never serves from the network, so the hit
    /// rate is zero; bandwidth savings are the bytes saved at the server.
    pub fn from_re(records: &[ReRecord], chunk_size: u64) -> Result<Self, MetricsError> {
        if records.is_empty() {
            return Err(MetricsError::Empty);
        }
        let out = ReOutcome::from_records(records, chunk_size);
        reduction(out.reduced_bytes_hops, out.baseline_bytes_hops)?;
        Ok(MetricsReport {
            requests: out.requests,
            hit_rate: 0.0,
            origin_fraction: out.origin_served as f64 / out.requests as f64,
            hop_cdf: HopCdf::default(),
            baseline_bytes_hops: out.baseline_bytes_hops,
            reduced_bytes_hops: out.reduced_bytes_hops,
            footprint_reduction: out.reduction_fraction,
            bandwidth_savings: out.bandwidth_savings,
        })
    }
}
