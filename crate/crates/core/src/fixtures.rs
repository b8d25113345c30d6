//! Seeded synthetic pages covering the resource, script and interaction mix the
//! pipeline has to handle, including the degenerate page classes.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::{self, ArchiveError, ArchivedExchange, ArchivedPage, Corpus, PageSource, SYNTHETIC_RECORDED_AT};

const WORDS: [&str; 32] = [
    "river", "market", "signal", "orange", "harbor", "window", "garden", "letter", "silver", "winter",
    "bridge", "forest", "pocket", "engine", "castle", "planet", "ticket", "valley", "meadow", "candle",
    "rocket", "number", "spring", "mirror", "island", "anchor", "basket", "copper", "summer", "tunnel",
    "shadow", "violet",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureMix {
    /// Varied pages plus one of each degenerate class.
    #[default]
    Mixed,
    /// Every page carries well over a second of script processing on the low-end device.
    JsHeavy,
}

/// Page shapes that stress edge cases in the simulator and similarity scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Regular,
    JsHeavy,
    ZeroVisual,
    ScriptOnly,
    ImageOnly,
}

struct Builder {
    base: String,
    head: String,
    body: String,
    exchanges: Vec<ArchivedExchange>,
}

impl Builder {
    fn new(base: &str) -> Self {
        Builder {
            base: base.to_string(),
            head: String::new(),
            body: String::new(),
            exchanges: Vec::new(),
        }
    }

    fn add(&mut self, url: &str, content_type: &str, body: Vec<u8>) {
        let headers = vec![
            ("Content-Type".to_string(), content_type.to_string()),
            ("Content-Length".to_string(), body.len().to_string()),
        ];
        self.exchanges.push(ArchivedExchange::new("GET", url.to_string(), 200, headers, body));
    }

    fn finish(mut self, title: &str) -> Result<ArchivedPage, ArchiveError> {
        let html = format!(
            "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{title}</title>\n{}</head>\n<body>\n{}</body>\n</html>\n",
            self.head, self.body
        );
        let base = self.base.clone();
        self.add(&base, "text/html; charset=utf-8", html.into_bytes());
        ArchivedPage::from_exchanges(&base, self.exchanges, SYNTHETIC_RECORDED_AT, PageSource::Synthetic)
    }
}

fn words(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

fn image_body(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    let mut body = b"\x89PNG\r\n\x1a\n".to_vec();
    body.resize(len.max(body.len()), 0);
    rng.fill(&mut body[8..]);
    body
}

fn filler(rng: &mut ChaCha8Rng, out: &mut String, prefix: &str, bytes: usize) {
    let start = out.len();
    let mut n = 0;
    while out.len() - start < bytes {
        let _ = writeln!(out, "  var {prefix}{n} = \"{}\" + {n}; acc += {prefix}{n}.length;", words(rng, 2));
        n += 1;
    }
}

/// A script with live code reachable from its top level or from `handlers`,
/// plus unreferenced functions holding roughly `dead_share` of the bytes.
fn script_body(rng: &mut ChaCha8Rng, tag: &str, bytes: usize, dead_share: f64, handlers: &[String]) -> Vec<u8> {
    let dead = (bytes as f64 * dead_share) as usize;
    let live = bytes.saturating_sub(dead);
    let mut s = format!("// {tag}\n");
    let _ = writeln!(s, "function {tag}_helper(x) {{\n  var acc = 0;");
    filler(rng, &mut s, "h", live / 2);
    s.push_str("  return acc + x;\n}\n");
    let _ = writeln!(s, "function {tag}_init() {{\n  var acc = {tag}_helper(1);");
    filler(rng, &mut s, "i", live / 2);
    s.push_str("  return acc;\n}\n");
    let dead_fns = if dead > 0 { rng.gen_range(1..=3) } else { 0 };
    for k in 0..dead_fns {
        let _ = writeln!(s, "function {tag}_unused{k}(x) {{\n  var acc = x;");
        filler(rng, &mut s, "d", dead / dead_fns);
        s.push_str("  return acc;\n}\n");
    }
    for h in handlers {
        let _ = writeln!(s, "function {h}(el) {{\n  return {tag}_helper(el ? 1 : 0);\n}}");
    }
    let _ = writeln!(s, "{tag}_init();");
    s.into_bytes()
}

fn class_for(index: usize, count: usize, mix: FixtureMix) -> Class {
    if mix == FixtureMix::JsHeavy {
        return Class::JsHeavy;
    }
    // Degenerate classes only once the corpus has room for a regular page too.
    match index {
        1 if count >= 4 => Class::ZeroVisual,
        2 if count >= 4 => Class::ScriptOnly,
        3 if count >= 4 => Class::ImageOnly,
        _ => Class::Regular,
    }
}

fn generate_page(rng: &mut ChaCha8Rng, index: usize, class: Class) -> Result<(ArchivedPage, &'static str), ArchiveError> {
    let landing = index.is_multiple_of(2);
    let host = format!("site{index}.example");
    let base = if landing {
        format!("https://{host}/")
    } else {
        format!("https://{host}/articles/{index}")
    };
    let group = if landing { "landing" } else { "internal" };
    let mut b = Builder::new(&base);
    let origin = format!("https://{host}");
    let third_party = format!("https://cdn{}.thirdparty.example", index % 3);

    match class {
        Class::ZeroVisual => {
            b.add(&format!("{origin}/style.css"), "text/css", b"body { margin: 0 }\n".repeat(40));
            b.head.push_str(&format!("<link rel=\"stylesheet\" href=\"{origin}/style.css\">\n"));
        }
        Class::ScriptOnly => {
            let url = format!("{origin}/app.js");
            let size = rng.gen_range(8_000..30_000);
            b.add(&url, "application/javascript", script_body(rng, "solo", size, 0.3, &[]));
            b.body.push_str(&format!("<script src=\"{url}\"></script>\n<script>var ready = 1;</script>\n"));
        }
        Class::ImageOnly => {
            for k in 0..rng.gen_range(1..=4) {
                let url = format!("{origin}/img/photo{k}.png");
                let size = rng.gen_range(4_000..60_000);
                b.add(&url, "image/png", image_body(rng, size));
                b.body.push_str(&format!("<img src=\"{url}\" alt=\"\">\n"));
            }
        }
        Class::Regular | Class::JsHeavy => regular_page(rng, &mut b, &origin, &third_party, class == Class::JsHeavy),
    }
    Ok((b.finish(&format!("Page {index}"))?, group))
}

fn regular_page(rng: &mut ChaCha8Rng, b: &mut Builder, origin: &str, third_party: &str, heavy: bool) {
    let scale = if heavy { 4 } else { 1 };

    for k in 0..rng.gen_range(0..=2) {
        let url = format!("{origin}/css/site{k}.css");
        b.add(&url, "text/css", format!(".c{k} {{ color: #333 }}\n").repeat(rng.gen_range(20..200)).into_bytes());
        b.head.push_str(&format!("<link rel=\"stylesheet\" href=\"{url}\">\n"));
    }

    // Handlers live in external scripts so script removal breaks them.
    let handler_count = rng.gen_range(0..=3);
    let handlers: Vec<String> = (0..handler_count).map(|k| format!("onAction{k}")).collect();
    let first_party_scripts = if heavy { rng.gen_range(1..=2) } else { rng.gen_range(0..=2) };
    let mut handlers_placed = false;
    for k in 0..first_party_scripts {
        let url = format!("{origin}/js/app{k}.js");
        let size = rng.gen_range(4_000..40_000) * scale;
        let owned: &[String] = if !handlers_placed { &handlers } else { &[] };
        handlers_placed = true;
        let dead_share = rng.gen_range(0.2..0.6);
        b.add(&url, "application/javascript", script_body(rng, &format!("app{k}"), size, dead_share, owned));
        b.head.push_str(&format!("<script src=\"{url}\"></script>\n"));
    }
    let third_party_scripts = if heavy { rng.gen_range(1..=3) } else { rng.gen_range(0..=2) };
    for k in 0..third_party_scripts {
        let url = format!("{third_party}/lib{k}.js");
        let size = rng.gen_range(5_000..30_000) * scale;
        let dead_share = rng.gen_range(0.1..0.5);
        b.add(&url, "application/javascript", script_body(rng, &format!("tp{k}"), size, dead_share, &[]));
        b.head.push_str(&format!("<script src=\"{url}\"></script>\n"));
    }
    let inline_handlers: Vec<String> = if handlers_placed { Vec::new() } else { handlers.clone() };
    let mut inline = String::from("var config = { theme: \"light\" };\n");
    for h in &inline_handlers {
        let _ = writeln!(inline, "function {h}(el) {{ return el ? 1 : 0; }}");
    }
    if rng.gen_bool(0.15) {
        inline.push_str("var extra = document.createElement('script');\n");
    }
    b.head.push_str(&format!("<script>\n{inline}</script>\n"));

    b.body.push_str(&format!("<h1>{}</h1>\n", words(rng, 3)));
    let nav = rng.gen_range(0..=5);
    if nav > 0 {
        b.body.push_str("<nav>");
        for k in 0..nav {
            b.body.push_str(&format!("<a href=\"{origin}/section/{k}\">{}</a> ", words(rng, 1)));
        }
        b.body.push_str("</nav>\n");
    }
    let images = rng.gen_range(0..=5);
    let paragraphs = rng.gen_range(1..=6);
    for k in 0..paragraphs.max(images) {
        if k < paragraphs {
            let n = rng.gen_range(5..80);
            b.body.push_str(&format!("<p>{}</p>\n", words(rng, n)));
        }
        if k < images {
            let url = format!("{origin}/img/{k}.png");
            if rng.gen_bool(0.08) {
                // Referenced but never archived.
                b.body.push_str(&format!("<img src=\"{url}\" alt=\"missing\">\n"));
            } else {
                let size = rng.gen_range(2_000..60_000);
                b.add(&url, "image/png", image_body(rng, size));
                b.body.push_str(&format!("<img src=\"{url}\" alt=\"{}\">\n", words(rng, 1)));
            }
        }
    }
    for (k, h) in handlers.iter().enumerate() {
        b.body.push_str(&format!("<button id=\"act{k}\" onclick=\"{h}(this)\">{}</button>\n", words(rng, 1)));
    }
    if rng.gen_bool(0.3) {
        b.body.push_str(&format!(
            "<form action=\"{origin}/search\"><input type=\"text\" name=\"q\"><input type=\"submit\" value=\"Go\"></form>\n"
        ));
    }
    if rng.gen_bool(0.2) {
        let url = format!("{third_party}/widget.html");
        b.add(&url, "text/html", format!("<html><body>{}</body></html>", words(rng, 10)).into_bytes());
        b.body.push_str(&format!("<iframe src=\"{url}\"></iframe>\n"));
    }
    let tail_scripts = [("async", heavy || rng.gen_bool(0.5)), ("defer", heavy || rng.gen_bool(0.5))];
    for (attr, present) in tail_scripts {
        if present {
            let url = format!("{origin}/js/{attr}.js");
            let size = rng.gen_range(3_000..20_000) * scale;
            let dead_share = rng.gen_range(0.1..0.5);
            b.add(&url, "application/javascript", script_body(rng, attr, size, dead_share, &[]));
            b.body.push_str(&format!("<script {attr} src=\"{url}\"></script>\n"));
        }
    }
}

/// Generates `count` pages in memory along with their group labels.
pub fn generate_pages(
    count: usize,
    seed: u64,
    mix: FixtureMix,
) -> Result<(Vec<ArchivedPage>, BTreeMap<String, String>), ArchiveError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pages = Vec::with_capacity(count);
    let mut groups = BTreeMap::new();
    for i in 0..count {
        let (page, group) = generate_page(&mut rng, i, class_for(i, count, mix))?;
        groups.insert(page.page_id.clone(), group.to_string());
        pages.push(page);
    }
    Ok((pages, groups))
}

/// Writes `count` seeded pages under `archive_dir` and a corpus named `corpus_name` listing them.
pub fn make_fixtures(
    archive_dir: &Path,
    corpus_name: &str,
    count: usize,
    seed: u64,
    mix: FixtureMix,
) -> Result<Corpus, ArchiveError> {
    let (pages, groups) = generate_pages(count, seed, mix)?;
    let mut ids = Vec::with_capacity(pages.len());
    for page in &pages {
        ids.push(archive::store_page(page, archive_dir)?);
    }
    let corpus = Corpus {
        name: corpus_name.to_string(),
        pages: ids,
        group_labels: Some(groups),
    };
    archive::store_corpus(&corpus, archive_dir)?;
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let (a, _) = generate_pages(6, 9, FixtureMix::Mixed).unwrap();
        let (b, _) = generate_pages(6, 9, FixtureMix::Mixed).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate_pages(6, 10, FixtureMix::Mixed).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_classes_present() {
        let (pages, _) = generate_pages(4, 1, FixtureMix::Mixed).unwrap();
        let graphs: Vec<_> = pages.iter().map(|p| crate::pagemodel::parse_page(p).unwrap()).collect();
        assert!(graphs[1].text_blocks.is_empty() && graphs[1].image_urls().count() == 0);
        assert!(graphs[2].resources.iter().all(|r| r.kind.is_script()));
        assert!(graphs[3].text_blocks.is_empty() && graphs[3].image_urls().count() > 0);
    }
}
