mod common;

use std::fs;
use std::path::Path;

use common::record;
use wasef::report::{emit_all, render_html, ReportBundle, SimilarityRow};
use wasef::similarity::{SimilarityComponents, SimilarityScores};
use wasef::stats::{median, EvaluationRecord, SkipEntry};

fn bundle(records: &[EvaluationRecord], skips: Vec<SkipEntry>) -> ReportBundle {
    let sims = records
        .iter()
        .filter(|r| r.solution != "identity")
        .map(|r| SimilarityRow {
            page_id: r.page_id.clone(),
            solution: r.solution.clone(),
            scores: SimilarityScores {
                structural: 0.75,
                functional: 1.0,
                components: SimilarityComponents { text_sim: 1.0, image_sim: 0.5, element_sim: 0.5 },
            },
        })
        .collect();
    ReportBundle::build("exp0123456789abc", None, "identity", records, sims, skips)
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn section<'a>(html: &'a str, id: &str) -> &'a str {
    let start = html.find(&format!("<section id=\"{id}\">")).unwrap();
    let end = start + html[start..].find("</section>").unwrap();
    &html[start..end]
}

#[test]
fn two_pages_one_solution() {
    let records = vec![
        record(0, "identity", 3.0),
        record(0, "js-strip", 2.0),
        record(1, "identity", 4.0),
        record(1, "js-strip", 3.5),
    ];
    let dir = tempfile::tempdir().unwrap();
    let files = emit_all(&bundle(&records, Vec::new()), dir.path()).unwrap();
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["deltas.csv", "similarity.csv", "summaries.json", "report.html"]);
    assert!(!dir.path().join("skips.csv").exists());

    let rows = csv_rows(&dir.path().join("deltas.csv"));
    assert_eq!(rows.len(), 12);
    let plt: Vec<f64> = rows.iter().filter(|r| &r[2] == "plt").map(|r| r[5].parse().unwrap()).collect();
    assert_eq!(plt, [1.0, 0.5]);

    // Medians in summaries.json re-derived from the CSV.
    let summaries: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("summaries.json")).unwrap()).unwrap();
    for s in summaries["summaries"].as_array().unwrap() {
        let metric = s["metric"].as_str().unwrap();
        let values: Vec<f64> = rows.iter().filter(|r| &r[2] == metric).map(|r| r[5].parse().unwrap()).collect();
        assert!((s["median"].as_f64().unwrap() - median(&values).unwrap()).abs() < 1e-9, "{metric}");
    }
}

#[test]
fn emission_is_byte_stable() {
    let records: Vec<_> = (0..6)
        .flat_map(|p| [record(p, "identity", 2.0 + p as f64), record(p, "js-dce", 1.5 + p as f64 * 0.9)])
        .collect();
    let b = bundle(&records, Vec::new());
    let (one, two) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_all(&b, one.path()).unwrap();
    emit_all(&b, two.path()).unwrap();
    for name in ["deltas.csv", "similarity.csv", "summaries.json", "report.html"] {
        assert_eq!(fs::read(one.path().join(name)).unwrap(), fs::read(two.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn one_ecdf_line_per_solution() {
    let mut records = Vec::new();
    for p in 0..4 {
        records.push(record(p, "identity", 3.0 + p as f64));
        records.push(record(p, "js-strip", 2.0 + p as f64));
        records.push(record(p, "js-dce", 2.5 + p as f64));
        records.push(record(p, "img-downscale", 2.8 + p as f64));
    }
    let html = render_html(&bundle(&records, Vec::new()));
    let plt = section(&html, "metric-plt");
    let ecdf = &plt[..plt.find("class=\"bars\"").unwrap()];
    assert_eq!(ecdf.matches("<polyline").count(), 3);
    for sol in ["img-downscale", "js-dce", "js-strip"] {
        assert!(ecdf.contains(&format!("data-series=\"{sol}\"")), "{sol}");
    }
}

#[test]
fn constant_deltas_draw_flat_error_bars() {
    let records: Vec<_> = (0..5).flat_map(|p| [record(p, "identity", 3.0), record(p, "js-strip", 2.0)]).collect();
    let html = render_html(&bundle(&records, Vec::new()));
    let bars = section(&html, "metric-plt");
    assert!(bars.contains("class=\"errorbar\""));
    assert!(bars.contains("data-height=\"0.00\""));
}

#[test]
fn skips_are_reported() {
    let records = vec![record(0, "identity", 3.0), record(0, "js-strip", 2.0), record(1, "js-strip", 2.0)];
    let skip = SkipEntry { page_id: "p02".into(), solution: "js-dce".into(), reason: "transform failed: boom".into() };
    let dir = tempfile::tempdir().unwrap();
    let b = bundle(&records, vec![skip]);
    emit_all(&b, dir.path()).unwrap();
    let rows = csv_rows(&dir.path().join("skips.csv"));
    let pages: Vec<&str> = rows.iter().map(|r| r.get(0).unwrap()).collect();
    // p01 has no baseline measurement, p02 failed outright.
    assert_eq!(pages, ["p01", "p02"]);
    assert!(render_html(&b).contains("<section id=\"skips\">"));

    // A clean rerun into the same directory removes the stale skips file.
    emit_all(&bundle(&records[..2], Vec::new()), dir.path()).unwrap();
    assert!(!dir.path().join("skips.csv").exists());
}
