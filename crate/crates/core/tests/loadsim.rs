mod common;

use common::*;
use wasef::fixtures::{self, FixtureMix};
use wasef::loadsim::{simulate_load, speed_index, trace_load, DeviceProfile, NetworkProfile, SimError};
use wasef::pagemodel::{self, ResourceKind};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn text_then_image_page_parsed_from_html() {
    let head = "<html><body><p>Hello world</p><img src=\"a.png\">";
    let tail = "</body></html>";
    let pad = 20_000 - head.len() - tail.len() - "<!---->".len();
    let html = format!("{head}<!--{}-->{tail}", "x".repeat(pad));
    assert_eq!(html.len(), 20_000);
    let page = page(&html, &[("https://a.test/a.png", "image/png", 80_000)]);
    let graph = pagemodel::parse_page(&page).unwrap();
    let m = simulate_load(&graph, &NetworkProfile::three_g(), &fast_device()).unwrap();

    // Root arrives at 0.4 + 20000/200000; the image costs one more RTT plus 0.4 s of transfer.
    assert!(close(m.fcp_seconds, 0.5, 1e-6), "fcp {}", m.fcp_seconds);
    assert!(close(m.plt_seconds, 1.3, 1e-6), "plt {}", m.plt_seconds);
    assert!(m.fcp_seconds <= m.speed_index_seconds && m.speed_index_seconds <= m.plt_seconds);
    assert_eq!(m.request_count, 2);
    assert_eq!(m.page_size_bytes, 100_000);
}

#[test]
fn sync_script_execution_time_is_exact() {
    let g = graph(
        1_000,
        vec![res("https://a.test/app.js", ResourceKind::ScriptSync, 100_000, 10, 0)],
        vec![text(5, 500, 1)],
    );
    let m = simulate_load(&g, &NetworkProfile::three_g(), &DeviceProfile::lowend()).unwrap();
    assert_eq!(m.js_processing_seconds, 1.0);
    // The text sits after the blocking script, so it cannot paint before the script has run.
    assert!(m.fcp_seconds >= 1.0 + 0.4 + 0.5);
}

#[test]
fn zero_visual_page_collapses_paint_metrics() {
    let m = simulate_load(&graph(20_000, Vec::new(), Vec::new()), &NetworkProfile::three_g(), &fast_device()).unwrap();
    assert!(m.zero_visual);
    assert!(m.paint_timeline.is_empty());
    // Parse end: 0.5 s for the root plus 20000 B at 1e9 B/s.
    assert!(close(m.fcp_seconds, 0.5 + 2e-5, 1e-12), "{m:?}");
    assert_eq!(m.fcp_seconds, m.plt_seconds);
    assert_eq!(m.speed_index_seconds, m.plt_seconds);
}

#[test]
fn speed_index_is_area_above_the_curve() {
    assert_eq!(speed_index(&[(2.0, 1.0)], 2.0), 2.0);
    assert_eq!(speed_index(&[(1.0, 0.5), (2.0, 1.0)], 1.0), 1.5);
    assert_eq!(speed_index(&[(1.0, 0.25), (3.0, 1.0)], 1.0), 2.5);
    assert_eq!(speed_index(&[], 0.7), 0.7);
}

#[test]
fn simulation_is_deterministic() {
    let (pages, _) = fixtures::generate_pages(10, 3, FixtureMix::Mixed).unwrap();
    for page in &pages {
        let g = pagemodel::parse_page(page).unwrap();
        let a = simulate_load(&g, &NetworkProfile::three_g(), &DeviceProfile::lowend()).unwrap();
        let b = simulate_load(&g, &NetworkProfile::three_g(), &DeviceProfile::lowend()).unwrap();
        assert_eq!(a, b, "{}", page.page_id);
    }
}

#[test]
fn invalid_profiles_are_rejected() {
    let g = graph(1_000, Vec::new(), vec![text(3, 10, 0)]);
    let net = NetworkProfile { bandwidth_bytes_per_sec: 0.0, ..NetworkProfile::three_g() };
    assert!(matches!(simulate_load(&g, &net, &fast_device()), Err(SimError::InvalidProfile(_))));
    let dev = DeviceProfile { js_exec_bytes_per_sec: -1.0, ..DeviceProfile::lowend() };
    assert!(matches!(simulate_load(&g, &NetworkProfile::three_g(), &dev), Err(SimError::InvalidProfile(_))));
}

/// Removing a resource can make the page finish later.
///
/// 1 B/s downlink, 1 s RTT, two connections on the single host. Images X (1 B),
/// Y (4 B), W (10 B) and an async script Z (1 B, 20 s of execution) are all
/// discovered when the 1 B root lands at t=2.
///
/// With X: X and Y share the link from 3, X ends at 5 and W takes its slot; Y
/// runs alone 5..6 and ends at 10. Z is fetched 10..13 and executes until 33.
///
/// Without X: Y and W share from 3 and Y ends at 11. Z is fetched 11..14 and
/// executes until 34. X's early exit gave Y a second of full bandwidth.
#[test]
fn deleting_a_resource_can_delay_load_completion() {
    let net = NetworkProfile {
        name: "tiny".into(),
        bandwidth_bytes_per_sec: 1.0,
        rtt_seconds: 1.0,
        max_connections_per_host: 2,
    };
    let dev = DeviceProfile { js_exec_bytes_per_sec: 0.05, ..fast_device() };
    let x = res("https://a.test/x.png", ResourceKind::Image, 1, 0, 0);
    let y = res("https://a.test/y.png", ResourceKind::Image, 4, 0, 1);
    let w = res("https://a.test/w.png", ResourceKind::Image, 10, 0, 2);
    let z = res("https://a.test/z.js", ResourceKind::ScriptAsync, 1, 0, 3);

    let full = graph(1, vec![x, y.clone(), w.clone(), z.clone()], Vec::new());
    let (m_full, t_full) = trace_load(&full, &net, &dev).unwrap();
    let mut reduced = graph(1, vec![y, w, z], Vec::new());
    for (i, r) in reduced.resources.iter_mut().enumerate() {
        r.discovery_index = i;
    }
    let (m_reduced, t_reduced) = trace_load(&reduced, &net, &dev).unwrap();

    let fetched = |t: &[wasef::loadsim::ResourceTiming], url: &str| {
        t.iter().find(|r| r.url == url).and_then(|r| r.fetched).unwrap()
    };
    assert!(close(fetched(&t_full, "https://a.test/y.png"), 10.0, 1e-9));
    assert!(close(fetched(&t_full, "https://a.test/z.js"), 13.0, 1e-9));
    assert!(close(fetched(&t_reduced, "https://a.test/y.png"), 11.0, 1e-9));
    assert!(close(fetched(&t_reduced, "https://a.test/z.js"), 14.0, 1e-9));
    assert!(close(m_full.plt_seconds, 33.0, 1e-9), "plt {}", m_full.plt_seconds);
    assert!(close(m_reduced.plt_seconds, 34.0, 1e-9), "plt {}", m_reduced.plt_seconds);
}
