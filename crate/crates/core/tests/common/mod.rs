#![allow(dead_code)]

use wasef::archive::{ArchivedExchange, ArchivedPage, PageSource, SYNTHETIC_RECORDED_AT};
use wasef::loadsim::{DeviceProfile, PageMetrics};
use wasef::pagemodel::{Resource, ResourceGraph, ResourceKind, TextBlock};
use wasef::stats::EvaluationRecord;

pub const ROOT: &str = "https://a.test/";

/// Device whose parse and execution rates are large enough to be negligible.
pub fn fast_device() -> DeviceProfile {
    DeviceProfile {
        js_exec_bytes_per_sec: 1e9,
        html_parse_bytes_per_sec: 1e9,
        ..DeviceProfile::lowend()
    }
}

pub fn res(url: &str, kind: ResourceKind, bytes: u64, offset: u64, discovery_index: usize) -> Resource {
    Resource {
        url: url.to_string(),
        kind,
        bytes,
        discovery_index,
        visual_weight: if kind == ResourceKind::Image { bytes as f64 } else { 0.0 },
        render_blocking: kind.is_render_blocking(),
        missing: false,
        offset,
    }
}

pub fn text(chars: u64, offset: u64, discovery_index: usize) -> TextBlock {
    TextBlock {
        char_count: chars,
        discovery_index,
        offset,
        text: "x".repeat(chars as usize),
    }
}

pub fn graph(root_bytes: u64, resources: Vec<Resource>, text_blocks: Vec<TextBlock>) -> ResourceGraph {
    ResourceGraph {
        root: res(ROOT, ResourceKind::Html, root_bytes, 0, 0),
        resources,
        text_blocks,
        interactive_elements: Vec::new(),
        body_tags: Default::default(),
        potentially_undercounted: false,
    }
}

pub fn exchange(url: &str, content_type: &str, body: Vec<u8>) -> ArchivedExchange {
    ArchivedExchange::new(
        "GET",
        url.to_string(),
        200,
        vec![("Content-Type".to_string(), content_type.to_string())],
        body,
    )
}

/// A page rooted at [`ROOT`] with the given HTML and `(url, content type, body length)` sub-resources.
pub fn page(html: &str, subs: &[(&str, &str, usize)]) -> ArchivedPage {
    let mut exchanges = vec![exchange(ROOT, "text/html", html.as_bytes().to_vec())];
    for &(url, ct, len) in subs {
        exchanges.push(exchange(url, ct, vec![b'x'; len]));
    }
    ArchivedPage::from_exchanges(ROOT, exchanges, SYNTHETIC_RECORDED_AT, PageSource::Synthetic).unwrap()
}

/// A measurement for page `p{page:02}` whose timings scale with `plt`.
pub fn record(page: usize, solution: &str, plt: f64) -> EvaluationRecord {
    EvaluationRecord {
        page_id: format!("p{page:02}"),
        solution: solution.into(),
        group: None,
        metrics: PageMetrics {
            fcp_seconds: plt / 2.0,
            plt_seconds: plt,
            speed_index_seconds: plt * 0.75,
            js_processing_seconds: 0.1,
            page_size_bytes: 1000,
            request_count: 5,
            cpu_proxy_seconds: 0.0,
            energy_proxy_units: 0.0,
            memory_proxy_bytes: 0,
            paint_timeline: Vec::new(),
            zero_visual: false,
        },
    }
}
