//! Result artifacts: CSV tables, `summaries.json`, and a static HTML report.
//!
//! Everything written here is a pure function of the bundle. Floats use the
//! shortest representation that round-trips so re-emitting a bundle
//! reproduces every file byte for byte.

pub mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::ExperimentConfig;
use crate::similarity::SimilarityScores;
use crate::stats::{self, DeltaRecord, DistributionSummary, EvaluationRecord, SkipEntry, DELTA_METRICS};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("storage error at {path}: {source}")]
    StorageError {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRow {
    pub page_id: String,
    pub solution: String,
    #[serde(flatten)]
    pub scores: SimilarityScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub experiment_id: String,
    pub config_snapshot: Option<ExperimentConfig>,
    pub baseline: String,
    pub deltas: Vec<DeltaRecord>,
    pub summaries: Vec<DistributionSummary>,
    pub similarity_table: Vec<SimilarityRow>,
    pub similarity_summaries: Vec<DistributionSummary>,
    pub skip_report: Vec<SkipEntry>,
    pub group_labels: BTreeMap<String, String>,
}

impl ReportBundle {
    /// Derives deltas and all summaries from raw evaluation records.
    pub fn build(
        experiment_id: &str,
        config_snapshot: Option<ExperimentConfig>,
        baseline: &str,
        records: &[EvaluationRecord],
        mut similarity_table: Vec<SimilarityRow>,
        mut skips: Vec<SkipEntry>,
    ) -> Self {
        let group_labels: BTreeMap<String, String> = records
            .iter()
            .filter_map(|r| r.group.as_ref().map(|g| (r.page_id.clone(), g.clone())))
            .collect();
        let (deltas, delta_skips) = stats::compute_deltas(records, baseline);
        skips.extend(delta_skips);
        skips.sort();
        skips.dedup();
        let summaries = stats::summarize_deltas(&deltas, &group_labels);

        similarity_table.sort_by(|a, b| (&a.page_id, &a.solution).cmp(&(&b.page_id, &b.solution)));
        let mut buckets: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
        for row in &similarity_table {
            buckets.entry(("structural", &row.solution)).or_default().push(row.scores.structural);
            buckets.entry(("functional", &row.solution)).or_default().push(row.scores.functional);
        }
        let similarity_summaries = buckets
            .into_iter()
            .map(|((metric, solution), values)| {
                DistributionSummary::from_values(metric, solution, None, &values).expect("non-empty bucket")
            })
            .collect();

        ReportBundle {
            experiment_id: experiment_id.to_string(),
            config_snapshot,
            baseline: baseline.to_string(),
            deltas,
            summaries,
            similarity_table,
            similarity_summaries,
            skip_report: skips,
            group_labels,
        }
    }

    fn solutions(&self) -> Vec<&str> {
        let mut s: Vec<&str> = self.summaries.iter().map(|s| s.solution.as_str()).collect();
        s.dedup();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Shortest round-trip decimal.
pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), ReportError> {
    fs::write(path, contents).map_err(|source| ReportError::StorageError {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

/// Writes `deltas.csv`, `similarity.csv`, and `skips.csv` (only when skips exist).
pub fn emit_csv(bundle: &ReportBundle, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(out_dir).map_err(|source| ReportError::StorageError {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();

    let deltas = csv_bytes(
        &["page_id", "solution", "metric", "original", "variant", "delta"],
        bundle.deltas.iter().map(|d| {
            vec![
                d.page_id.clone(),
                d.solution.clone(),
                d.metric.clone(),
                fmt_num(d.original_value),
                fmt_num(d.variant_value),
                fmt_num(d.delta),
            ]
        }),
    );
    let path = out_dir.join("deltas.csv");
    write_file(&path, &deltas)?;
    paths.push(path);

    let sim = csv_bytes(
        &["page_id", "solution", "structural", "functional"],
        bundle.similarity_table.iter().map(|r| {
            vec![
                r.page_id.clone(),
                r.solution.clone(),
                fmt_num(r.scores.structural),
                fmt_num(r.scores.functional),
            ]
        }),
    );
    let path = out_dir.join("similarity.csv");
    write_file(&path, &sim)?;
    paths.push(path);

    let skips_path = out_dir.join("skips.csv");
    if bundle.skip_report.is_empty() {
        if skips_path.exists() {
            let _ = fs::remove_file(&skips_path);
        }
    } else {
        let skips = csv_bytes(
            &["page_id", "solution", "reason"],
            bundle
                .skip_report
                .iter()
                .map(|s| vec![s.page_id.clone(), s.solution.clone(), s.reason.clone()]),
        );
        write_file(&skips_path, &skips)?;
        paths.push(skips_path);
    }
    Ok(paths)
}

#[derive(Serialize)]
struct SummariesFile<'a> {
    experiment_id: &'a str,
    baseline: &'a str,
    config: &'a Option<ExperimentConfig>,
    ci_method: &'static str,
    summaries: &'a [DistributionSummary],
    similarity_summaries: &'a [DistributionSummary],
}

pub fn emit_summaries(bundle: &ReportBundle, out_dir: &Path) -> Result<PathBuf, ReportError> {
    let file = SummariesFile {
        experiment_id: &bundle.experiment_id,
        baseline: &bundle.baseline,
        config: &bundle.config_snapshot,
        ci_method: "normal approximation: mean +/- 1.96 * sd / sqrt(n), sample sd",
        summaries: &bundle.summaries,
        similarity_summaries: &bundle.similarity_summaries,
    };
    let path = out_dir.join("summaries.json");
    let mut json = serde_json::to_vec_pretty(&file).expect("summaries serialize");
    json.push(b'\n');
    write_file(&path, &json)?;
    Ok(path)
}

fn metric_unit(metric: &str) -> &'static str {
    match metric {
        "page_size" => "bytes",
        "request_count" => "requests",
        "structural" | "functional" => "score",
        _ => "seconds",
    }
}

fn series_label(s: &DistributionSummary) -> String {
    match &s.group {
        Some(g) => format!("{} [{}]", s.solution, g),
        None => s.solution.clone(),
    }
}

/// Renders the self-contained `report.html`.
pub fn render_html(bundle: &ReportBundle) -> String {
    let grouped = !bundle.group_labels.is_empty();
    let mut h = String::new();
    h.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(h, "<title>wasef report {}</title>", svg::escape(&bundle.experiment_id));
    h.push_str(
        "<style>body{font-family:sans-serif;margin:24px;color:#222}section{margin-bottom:28px}\
         .panel{display:inline-block;vertical-align:top;margin:6px}table{border-collapse:collapse;font-size:12px}\
         td,th{border:1px solid #ccc;padding:2px 6px;text-align:right}pre{background:#f6f6f6;padding:8px;font-size:11px}</style>\n",
    );
    h.push_str("</head>\n<body>\n");
    let _ = writeln!(h, "<h1>Experiment {}</h1>", svg::escape(&bundle.experiment_id));
    let _ = writeln!(
        h,
        "<p>Deltas are <em>improvement</em> = baseline ({}) value minus variant value; positive means the variant is faster or smaller.</p>",
        svg::escape(&bundle.baseline)
    );

    let solutions = bundle.solutions();
    for metric in DELTA_METRICS {
        let of_metric: Vec<&DistributionSummary> = bundle.summaries.iter().filter(|s| s.metric == metric).collect();
        if of_metric.is_empty() {
            continue;
        }
        let _ = writeln!(h, "<section id=\"metric-{metric}\">\n<h2>{metric} improvement</h2>");
        let series: Vec<svg::Series> = of_metric
            .iter()
            .filter(|s| s.group.is_some() == grouped)
            .map(|s| svg::Series {
                label: series_label(s),
                ecdf: &s.ecdf,
            })
            .collect();
        let x_label = format!("{metric} improvement ({})", metric_unit(metric));
        let _ = writeln!(h, "<div class=\"panel\">{}</div>", svg::ecdf_chart(metric, &x_label, &series));
        let bars: Vec<svg::Bar> = solutions
            .iter()
            .flat_map(|sol| of_metric.iter().filter(move |s| s.solution == *sol))
            .map(|s| svg::Bar {
                label: series_label(s),
                mean: s.mean,
                ci: s.ci95,
            })
            .collect();
        let _ = writeln!(
            h,
            "<div class=\"panel\">{}</div>",
            svg::bar_chart(metric, &format!("mean improvement ({})", metric_unit(metric)), &bars)
        );
        h.push_str("<table><tr><th>solution</th><th>group</th><th>n</th><th>median</th><th>mean</th><th>ci95 low</th><th>ci95 high</th></tr>\n");
        for s in &of_metric {
            let _ = writeln!(
                h,
                "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
                svg::escape(&s.solution),
                svg::escape(s.group.as_deref().unwrap_or("all")),
                s.n,
                fmt_num(s.median),
                fmt_num(s.mean),
                fmt_num(s.ci95.0),
                fmt_num(s.ci95.1)
            );
        }
        h.push_str("</table>\n</section>\n");
    }

    h.push_str("<section id=\"similarity\">\n<h2>Similarity to the original page</h2>\n");
    for metric in ["structural", "functional"] {
        let series: Vec<svg::Series> = bundle
            .similarity_summaries
            .iter()
            .filter(|s| s.metric == metric)
            .map(|s| svg::Series {
                label: s.solution.clone(),
                ecdf: &s.ecdf,
            })
            .collect();
        if series.is_empty() {
            continue;
        }
        let _ = writeln!(
            h,
            "<div class=\"panel\">{}</div>",
            svg::ecdf_chart(&format!("similarity-{metric}"), &format!("{metric} similarity"), &series)
        );
    }
    h.push_str("<table><tr><th>solution</th><th>score</th><th>n</th><th>median</th><th>mean</th></tr>\n");
    for s in &bundle.similarity_summaries {
        let _ = writeln!(
            h,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
            svg::escape(&s.solution),
            s.metric,
            s.n,
            fmt_num(s.median),
            fmt_num(s.mean)
        );
    }
    h.push_str("</table>\n</section>\n");

    if !bundle.skip_report.is_empty() {
        h.push_str("<section id=\"skips\">\n<h2>Skipped</h2>\n<table><tr><th>page</th><th>solution</th><th>reason</th></tr>\n");
        for s in &bundle.skip_report {
            let _ = writeln!(
                h,
                "<tr><td>{}</td><td>{}</td><td>{}</td></tr>",
                svg::escape(&s.page_id),
                svg::escape(&s.solution),
                svg::escape(&s.reason)
            );
        }
        h.push_str("</table>\n</section>\n");
    }

    h.push_str("<footer>\n<p>Error bars and ci95 columns use the normal approximation: mean &#177; 1.96 &#215; sd / &#8730;n with the sample standard deviation.</p>\n");
    if let Some(cfg) = &bundle.config_snapshot {
        let json = serde_json::to_string_pretty(cfg).expect("config serializes");
        let _ = writeln!(h, "<h3>Configuration</h3>\n<pre>{}</pre>", svg::escape(&json));
    }
    h.push_str("</footer>\n</body>\n</html>\n");
    h
}

pub fn emit_html(bundle: &ReportBundle, out_dir: &Path) -> Result<PathBuf, ReportError> {
    let path = out_dir.join("report.html");
    write_file(&path, render_html(bundle).as_bytes())?;
    Ok(path)
}

/// Writes every report artifact into `out_dir`.
pub fn emit_all(bundle: &ReportBundle, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut paths = emit_csv(bundle, out_dir)?;
    paths.push(emit_summaries(bundle, out_dir)?);
    paths.push(emit_html(bundle, out_dir)?);
    Ok(paths)
}
