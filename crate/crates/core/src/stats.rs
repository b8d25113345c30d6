//! Per-page deltas against the baseline variant and their distributions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::loadsim::PageMetrics;

/// Metrics compared between each variant and the baseline.
pub const DELTA_METRICS: [&str; 6] = ["fcp", "speed_index", "plt", "page_size", "request_count", "js_processing"];

/// Normal-approximation 95% two-sided quantile.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
}

/// One simulated `(page, solution)` measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub page_id: String,
    pub solution: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(flatten)]
    pub metrics: PageMetrics,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkipEntry {
    pub page_id: String,
    pub solution: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub page_id: String,
    pub solution: String,
    pub metric: String,
    pub original_value: f64,
    pub variant_value: f64,
    /// `original_value - variant_value`; positive means the variant improved.
    pub delta: f64,
}

impl DeltaRecord {
    pub fn new(page_id: &str, solution: &str, metric: &str, original_value: f64, variant_value: f64) -> Self {
        DeltaRecord {
            page_id: page_id.to_string(),
            solution: solution.to_string(),
            metric: metric.to_string(),
            original_value,
            variant_value,
            delta: original_value - variant_value,
        }
    }
}

/// Deltas of every non-baseline record against the same page's baseline record,
/// sorted by `(page_id, solution, metric)`. Pages without a baseline are skipped.
pub fn compute_deltas(results: &[EvaluationRecord], baseline_solution: &str) -> (Vec<DeltaRecord>, Vec<SkipEntry>) {
    let baselines: BTreeMap<&str, &EvaluationRecord> = results
        .iter()
        .filter(|r| r.solution == baseline_solution)
        .map(|r| (r.page_id.as_str(), r))
        .collect();
    let mut deltas = Vec::new();
    let mut skips = Vec::new();
    for r in results.iter().filter(|r| r.solution != baseline_solution) {
        let Some(base) = baselines.get(r.page_id.as_str()) else {
            skips.push(SkipEntry {
                page_id: r.page_id.clone(),
                solution: r.solution.clone(),
                reason: format!("no {baseline_solution} baseline for page"),
            });
            continue;
        };
        for metric in DELTA_METRICS {
            let original = base.metrics.metric(metric).expect("known metric");
            let variant = r.metrics.metric(metric).expect("known metric");
            deltas.push(DeltaRecord::new(&r.page_id, &r.solution, metric, original, variant));
        }
    }
    deltas.sort_by(|a, b| (&a.page_id, &a.solution, &a.metric).cmp(&(&b.page_id, &b.solution, &b.metric)));
    skips.sort();
    (deltas, skips)
}

/// Right-continuous empirical CDF with ties merged: `(value, fraction of samples <= value)`.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = p,
            _ => out.push((v, p)),
        }
    }
    Ok(out)
}

/// Smallest value whose cumulative probability reaches `q`.
pub fn quantile(ecdf: &[(f64, f64)], q: f64) -> Option<f64> {
    ecdf.iter().find(|&&(_, p)| p >= q).or(ecdf.last()).map(|&(v, _)| v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub median: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 when n == 1.
    pub sd: f64,
    pub ci95: (f64, f64),
    /// Set when n == 1 and the interval collapses to the mean.
    pub ci_degenerate: bool,
}

pub fn median(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

pub fn summarize(values: &[f64]) -> Result<Summary, StatsError> {
    let median = median(values)?;
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok(Summary {
            n,
            median,
            mean,
            sd: 0.0,
            ci95: (mean, mean),
            ci_degenerate: true,
        });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let half = Z_95 * sd / (n as f64).sqrt();
    Ok(Summary {
        n,
        median,
        mean,
        sd,
        ci95: (mean - half, mean + half),
        ci_degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub metric: String,
    pub solution: String,
    /// `None` aggregates every page.
    pub group: Option<String>,
    pub n: usize,
    pub ecdf: Vec<(f64, f64)>,
    pub median: f64,
    pub mean: f64,
    pub ci95: (f64, f64),
    pub ci_degenerate: bool,
}

impl DistributionSummary {
    pub fn from_values(metric: &str, solution: &str, group: Option<&str>, values: &[f64]) -> Result<Self, StatsError> {
        let s = summarize(values)?;
        Ok(DistributionSummary {
            metric: metric.to_string(),
            solution: solution.to_string(),
            group: group.map(str::to_string),
            n: s.n,
            ecdf: ecdf(values)?,
            median: s.median,
            mean: s.mean,
            ci95: s.ci95,
            ci_degenerate: s.ci_degenerate,
        })
    }
}

/// One summary per `(metric, solution)` over all pages, plus one per group when
/// `groups` labels any page. Sorted by `(metric, solution, group)`.
pub fn summarize_deltas(deltas: &[DeltaRecord], groups: &BTreeMap<String, String>) -> Vec<DistributionSummary> {
    let mut buckets: BTreeMap<(String, String, Option<String>), Vec<f64>> = BTreeMap::new();
    for d in deltas {
        let key = (d.metric.clone(), d.solution.clone());
        buckets.entry((key.0.clone(), key.1.clone(), None)).or_default().push(d.delta);
        if let Some(g) = groups.get(&d.page_id) {
            buckets.entry((key.0, key.1, Some(g.clone()))).or_default().push(d.delta);
        }
    }
    buckets
        .into_iter()
        .map(|((metric, solution, group), values)| {
            DistributionSummary::from_values(&metric, &solution, group.as_deref(), &values).expect("bucket is non-empty")
        })
        .collect()
}

/// Distinct group labels in sorted order.
pub fn group_names(groups: &BTreeMap<String, String>) -> Vec<String> {
    groups.values().cloned().collect::<BTreeSet<_>>().into_iter().collect()
}
