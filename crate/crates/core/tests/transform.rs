mod common;

use std::os::unix::fs::PermissionsExt;
use std::sync::Arc;

use common::*;
use wasef::archive::{ArchivedPage, PageSource, SYNTHETIC_RECORDED_AT};
use wasef::fixtures::{self, FixtureMix};
use wasef::loadsim::{simulate_load, DeviceProfile, NetworkProfile};
use wasef::pagemodel::{self, ResourceKind};
use wasef::transform::{
    apply_transform, ExternalTransform, ParamSpec, Params, Transform, TransformError, TransformOutput,
    TransformRegistry, TransformSpec, DOWNSCALE_MARKER,
};

fn root_text(page: &ArchivedPage) -> String {
    String::from_utf8(page.root().unwrap().body.clone()).unwrap()
}

struct Rehost;

impl Transform for Rehost {
    fn name(&self) -> &str {
        "rehost"
    }
    fn description(&self) -> &str {
        "moves the page to another origin"
    }
    fn apply(&self, page: &ArchivedPage, _: &Params) -> Result<TransformOutput, TransformError> {
        let root = page.root().unwrap().clone();
        let moved = exchange("https://elsewhere.test/", "text/html", root.body);
        Ok(ArchivedPage::from_exchanges("https://elsewhere.test/", [moved], SYNTHETIC_RECORDED_AT, PageSource::Synthetic)
            .unwrap()
            .into())
    }
}

#[test]
fn registry_lists_builtins_and_accepts_extensions() {
    let mut reg = TransformRegistry::with_builtins();
    let names: Vec<String> = reg.list().into_iter().map(|t| t.name).collect();
    assert_eq!(names, ["identity", "js-strip", "js-block-thirdparty", "js-dce", "img-downscale"]);

    reg.register(Arc::new(Rehost)).unwrap();
    assert_eq!(reg.list().len(), 6);
    assert!(matches!(reg.register(Arc::new(Rehost)), Err(TransformError::DuplicateTransform(_))));
    assert!(matches!(
        reg.register(Arc::new(ExternalTransform::new("Bad Name", "/bin/true"))),
        Err(TransformError::InvalidName(_))
    ));

    // A transform may not move the page to another root URL.
    let p = page("<p>hi</p>", &[]);
    assert!(matches!(reg.apply(&TransformSpec::named("rehost"), &p), Err(TransformError::TransformFailed { .. })));
    assert!(matches!(
        reg.apply(&TransformSpec::named("no-such"), &p),
        Err(TransformError::UnknownTransform(_))
    ));
    assert!(matches!(
        reg.apply(&TransformSpec::named("identity").with_param("x", "1"), &p),
        Err(TransformError::InvalidParam { .. })
    ));
}

#[test]
fn identity_is_byte_identical() {
    let (pages, _) = fixtures::generate_pages(5, 1, FixtureMix::Mixed).unwrap();
    for p in &pages {
        let v = apply_transform(&TransformSpec::named("identity"), p).unwrap();
        assert_eq!(v.page.exchanges, p.exchanges);
        assert_eq!(v.page.page_id, format!("{}:identity", p.page_id));
        assert_eq!(v.base_page_id, p.page_id);
        assert_eq!(v.provenance.bytes_removed, 0);
        assert_eq!(v.provenance.resources_dropped, 0);
    }
}

#[test]
fn js_strip_removes_scripts_handlers_and_script_bytes() {
    let inline = "<script>var x = 1;</script>";
    let handler = " onclick=\"go()\"";
    let html = format!(
        "<html><head><script src=\"/a.js\"></script><script async src=\"/b.js\"></script></head>\
         <body><p>text</p>{inline}<button{handler}>Go</button></body></html>"
    );
    let p = page(&html, &[("https://a.test/a.js", "application/javascript", 30_000), ("https://a.test/b.js", "text/javascript", 20_000)]);
    let v = apply_transform(&TransformSpec::named("js-strip"), &p).unwrap();

    let expected = "<html><head></head><body><p>text</p><button>Go</button></body></html>";
    assert_eq!(root_text(&v.page), expected);
    assert_eq!(v.page.exchanges.len(), 1);
    assert_eq!(v.provenance.resources_dropped, 2);
    assert_eq!(v.provenance.bytes_removed as usize, 50_000 + html.len() - expected.len());

    let g = pagemodel::parse_page(&v.page).unwrap();
    assert!(g.resources.iter().all(|r| !r.kind.is_script()));
    let m = simulate_load(&g, &NetworkProfile::three_g(), &DeviceProfile::lowend()).unwrap();
    assert_eq!(m.js_processing_seconds, 0.0);
}

#[test]
fn img_downscale_halves_images_with_marker() {
    let html = "<html><body><img src=\"/big.png\"><img src=\"/tiny.png\"></body></html>";
    let p = page(html, &[("https://a.test/big.png", "image/png", 80_000), ("https://a.test/tiny.png", "image/png", 20)]);
    let v = apply_transform(&TransformSpec::named("img-downscale"), &p).unwrap();
    let big = v.page.get("https://a.test/big.png").unwrap();
    assert_eq!(big.body.len(), 40_016);
    assert!(big.body.ends_with(DOWNSCALE_MARKER));
    assert_eq!(v.page.get("https://a.test/tiny.png").unwrap().body.len(), 20);
    assert_eq!(v.provenance.bytes_removed, 39_984);

    let q = apply_transform(&TransformSpec::named("img-downscale").with_param("quality", "0.25"), &p).unwrap();
    assert_eq!(q.page.get("https://a.test/big.png").unwrap().body.len(), 20_016);
    for bad in ["0", "1.5", "half"] {
        let err = apply_transform(&TransformSpec::named("img-downscale").with_param("quality", bad), &p).unwrap_err();
        assert!(matches!(err, TransformError::InvalidParam { .. }), "{bad}");
    }
}

#[test]
fn js_block_thirdparty_uses_exact_host() {
    let html = "<html><body><script src=\"/own.js\"></script><script src=\"https://cdn.x.test/t.js\"></script>\
                <script src=\"https://www.a.test/w.js\"></script><p>x</p></body></html>";
    let p = page(
        html,
        &[
            ("https://a.test/own.js", "text/javascript", 100),
            ("https://cdn.x.test/t.js", "text/javascript", 200),
            ("https://www.a.test/w.js", "text/javascript", 300),
        ],
    );
    let v = apply_transform(&TransformSpec::named("js-block-thirdparty"), &p).unwrap();
    assert_eq!(root_text(&v.page), "<html><body><script src=\"/own.js\"></script><p>x</p></body></html>");
    assert!(v.page.get("https://a.test/own.js").is_some());
    assert!(v.page.get("https://cdn.x.test/t.js").is_none());
    assert!(v.page.get("https://www.a.test/w.js").is_none());
    assert_eq!(v.provenance.resources_dropped, 2);
}

#[test]
fn js_dce_deletes_unreferenced_functions_transitively() {
    let js = "function used() { return 1; }\n\
              function onTap(el) { return used(); }\n\
              function dead() { return deader(); }\n\
              function deader() { return 2; }\n\
              function fromInline() { return 3; }\n";
    let html = "<html><body><script src=\"/app.js\"></script><script>fromInline();</script>\
                <button onclick=\"onTap(this)\">t</button></body></html>";
    let mut p = page(html, &[]);
    let app = exchange("https://a.test/app.js", "application/javascript", js.as_bytes().to_vec());
    p.exchanges.insert(("GET".into(), app.url.clone()), app);

    let v = apply_transform(&TransformSpec::named("js-dce"), &p).unwrap();
    let out = String::from_utf8(v.page.get("https://a.test/app.js").unwrap().body.clone()).unwrap();
    for kept in ["function used", "function onTap", "function fromInline"] {
        assert!(out.contains(kept), "{kept} missing from {out:?}");
    }
    assert!(!out.contains("function dead"));
    assert!(!out.contains("function deader"));
    assert_eq!(root_text(&v.page), html);

    let again = apply_transform(&TransformSpec::named("js-dce"), &v.page).unwrap();
    assert_eq!(again.page.exchanges, v.page.exchanges);
}

#[test]
fn builtins_never_grow_pages() {
    let (pages, _) = fixtures::generate_pages(40, 17, FixtureMix::Mixed).unwrap();
    let reg = TransformRegistry::with_builtins();
    for p in &pages {
        for info in reg.list() {
            let v = reg.apply(&TransformSpec::named(&info.name), p).unwrap();
            assert!(v.provenance.bytes_removed >= 0, "{} grew {}", info.name, p.page_id);
            assert_eq!(v.page.root_url, p.root_url);
            let g = pagemodel::parse_page(&v.page).unwrap();
            assert!(g.resources.iter().all(|r| r.kind != ResourceKind::Html));
        }
    }
}

fn script(dir: &std::path::Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

#[test]
fn external_programs_plug_in() {
    let dir = tempfile::tempdir().unwrap();
    let copy = script(dir.path(), "copy.sh", "read input\ncp -r \"$input\" out\necho out");
    let fail = script(dir.path(), "fail.sh", "echo \"level=$WASEF_PARAM_LEVEL\" >&2\nexit 1");
    let silent = script(dir.path(), "silent.sh", "read input");

    let mut reg = TransformRegistry::with_builtins();
    reg.register(Arc::new(ExternalTransform::new("copy", &copy))).unwrap();
    let mut failing = ExternalTransform::new("fail", &fail);
    failing.params = vec![ParamSpec { name: "level".into(), description: "passed through".into(), default: None }];
    reg.register(Arc::new(failing)).unwrap();
    reg.register(Arc::new(ExternalTransform::new("silent", &silent))).unwrap();
    assert_eq!(reg.list().len(), 8);

    let (pages, _) = fixtures::generate_pages(2, 4, FixtureMix::Mixed).unwrap();
    let v = reg.apply(&TransformSpec::named("copy"), &pages[0]).unwrap();
    assert_eq!(v.page.exchanges, pages[0].exchanges);
    assert_eq!(v.page.page_id, format!("{}:copy", pages[0].page_id));

    match reg.apply(&TransformSpec::named("fail").with_param("level", "7"), &pages[0]) {
        Err(TransformError::TransformFailed { cause, .. }) => assert!(cause.contains("level=7"), "{cause}"),
        other => panic!("expected failure, got {other:?}"),
    }
    assert!(matches!(
        reg.apply(&TransformSpec::named("silent"), &pages[0]),
        Err(TransformError::TransformFailed { .. })
    ));
}
