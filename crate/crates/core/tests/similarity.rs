mod common;

use std::collections::BTreeMap;

use common::*;
use wasef::fixtures::{self, FixtureMix};
use wasef::pagemodel;
use wasef::similarity::{score_pages, SimilarityError, SimilarityWeights};
use wasef::transform::{apply_transform, TransformSpec};

const W: SimilarityWeights = SimilarityWeights { text: 0.5, image: 0.3, element: 0.2 };

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn identity_scores_one() {
    let (pages, _) = fixtures::generate_pages(8, 12, FixtureMix::Mixed).unwrap();
    for p in &pages {
        let s = score_pages(p, p, &W).unwrap();
        assert_eq!((s.structural, s.functional), (1.0, 1.0), "{}", p.page_id);
    }
}

#[test]
fn removing_every_image() {
    let original = page(
        "<html><body><p>alpha beta beta</p><img src=\"/1.png\"><img src=\"/2.png\"></body></html>",
        &[("https://a.test/1.png", "image/png", 50), ("https://a.test/2.png", "image/png", 60)],
    );
    let variant = page("<html><body><p>alpha beta beta</p></body></html>", &[]);
    let og = pagemodel::parse_page(&original).unwrap();
    assert_eq!(og.body_tags, BTreeMap::from([("img".to_string(), 2), ("p".to_string(), 1)]));

    let s = score_pages(&original, &variant, &W).unwrap();
    // Text unchanged, no images left, tag histograms (img 2, p 1) vs (p 1) have cosine 1/sqrt(5).
    let element = 1.0 / 5f64.sqrt();
    assert_eq!(s.components.text_sim, 1.0);
    assert_eq!(s.components.image_sim, 0.0);
    assert!(close(s.components.element_sim, element));
    assert!(close(s.structural, 0.5 + 0.2 * element));
    assert_eq!(s.functional, 1.0, "no interactive elements means nothing to lose");
}

#[test]
fn text_changes_use_multiset_overlap() {
    let original = page("<html><body><p>a a b c</p></body></html>", &[]);
    let variant = page("<html><body><p>a b b</p></body></html>", &[]);
    let s = score_pages(&original, &variant, &W).unwrap();
    // min counts a1 b1 = 2; max counts a2 b2 c1 = 5.
    assert!(close(s.components.text_sim, 0.4));
}

#[test]
fn js_strip_keeps_links_but_breaks_handler_buttons() {
    let html = "<html><body><script src=\"/app.js\"></script>\
                <a href=\"/one\">one</a><a href=\"/two\">two</a>\
                <button onclick=\"save()\">s</button><button onclick=\"load()\">l</button></body></html>";
    let mut original = page(html, &[]);
    let app = exchange(
        "https://a.test/app.js",
        "application/javascript",
        b"function save() {}\nfunction load() {}\n".to_vec(),
    );
    original.exchanges.insert(("GET".into(), app.url.clone()), app);
    assert_eq!(pagemodel::parse_page(&original).unwrap().interactive_elements.len(), 4);

    let stripped = apply_transform(&TransformSpec::named("js-strip"), &original).unwrap();
    let s = score_pages(&original, &stripped.page, &W).unwrap();
    assert_eq!(s.functional, 0.5);

    let dce = apply_transform(&TransformSpec::named("js-dce"), &original).unwrap();
    assert_eq!(score_pages(&original, &dce.page, &W).unwrap().functional, 1.0);
}

#[test]
fn empty_variant_scores_zero() {
    let original = page(
        "<html><body><p>words</p><a href=\"/x\">x</a><img src=\"/i.png\"></body></html>",
        &[("https://a.test/i.png", "image/png", 10)],
    );
    let empty = page("<html><body></body></html>", &[]);
    let s = score_pages(&original, &empty, &W).unwrap();
    assert_eq!((s.structural, s.functional), (0.0, 0.0));
}

#[test]
fn weights_must_sum_to_one() {
    let p = page("<p>x</p>", &[]);
    let bad = SimilarityWeights { text: 0.5, image: 0.5, element: 0.5 };
    assert!(matches!(score_pages(&p, &p, &bad), Err(SimilarityError::BadWeights(_))));
    let neg = SimilarityWeights { text: 1.2, image: -0.2, element: 0.0 };
    assert!(score_pages(&p, &p, &neg).is_err());
}

#[test]
fn scores_are_bounded_and_dce_keeps_behaviour() {
    let (pages, _) = fixtures::generate_pages(30, 21, FixtureMix::Mixed).unwrap();
    for p in &pages {
        for name in ["js-strip", "js-block-thirdparty", "js-dce", "img-downscale"] {
            let v = apply_transform(&TransformSpec::named(name), p).unwrap();
            let s = score_pages(p, &v.page, &W).unwrap();
            assert!((0.0..=1.0).contains(&s.structural) && (0.0..=1.0).contains(&s.functional));
        }
        let v = apply_transform(&TransformSpec::named("js-dce"), p).unwrap();
        assert_eq!(score_pages(p, &v.page, &W).unwrap().functional, 1.0, "js-dce broke {}", p.page_id);
    }
}
