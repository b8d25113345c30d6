use std::collections::BTreeSet;
use std::ops::Range;

use crate::archive::{is_image_type, is_script_type, normalize_url_with_base, url_host, ArchivedPage};
use crate::js;
use crate::pagemodel::html::{self, attr, Token};
use crate::pagemodel::{decode_document, encode_document};

use super::{ParamSpec, Params, Transform, TransformError, TransformOutput};

/// Appended to every thinned image body.
pub const DOWNSCALE_MARKER: &[u8; 16] = b"WASEF-DOWNSCALED";

pub struct Identity;

impl Transform for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn description(&self) -> &str {
        "No-op baseline variant"
    }

    fn apply(&self, page: &ArchivedPage, _: &Params) -> Result<TransformOutput, TransformError> {
        Ok(page.clone().into())
    }
}

/// Removes the given byte ranges (sorted, possibly overlapping) from `text`.
fn splice_out(text: &str, mut ranges: Vec<Range<usize>>) -> String {
    ranges.sort_by_key(|r| (r.start, r.end));
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for r in ranges {
        if r.start > pos {
            out.push_str(&text[pos..r.start]);
        }
        pos = pos.max(r.end);
    }
    out.push_str(&text[pos.min(text.len())..]);
    out
}

/// Span of each `<script>` element from its start tag through its end tag.
fn script_elements(tokens: &[Token]) -> Vec<(Range<usize>, Vec<html::Attribute>)> {
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        let Token::StartTag { name, attrs, span, .. } = t else { continue };
        if name != "script" {
            continue;
        }
        let mut end = span.end;
        for next in &tokens[i + 1..] {
            match next {
                Token::RawText { span } => end = span.end,
                Token::EndTag { name, span } if name == "script" => {
                    end = span.end;
                    break;
                }
                _ => break,
            }
        }
        out.push((span.start..end, attrs.clone()));
    }
    out
}

fn rewrite_root(page: &ArchivedPage, f: impl FnOnce(&str) -> String) -> ArchivedPage {
    let mut variant = page.clone();
    let root_url = page.root_url.clone();
    if let Some(root) = variant.get_mut(&root_url) {
        let (text, encoding) = decode_document(&root.body);
        let rewritten = f(&text);
        root.set_body(encode_document(&rewritten, encoding));
    }
    variant
}

fn drop_exchanges(page: &mut ArchivedPage, urls: &BTreeSet<String>) -> usize {
    let before = page.exchanges.len();
    page.exchanges
        .retain(|(method, url), _| !(method == "GET" && urls.contains(url) && *url != page.root_url));
    before - page.exchanges.len()
}

pub struct JsStrip;

impl Transform for JsStrip {
    fn name(&self) -> &str {
        "js-strip"
    }

    fn description(&self) -> &str {
        "Removes every <script> element and on* handler attribute, and drops script responses"
    }

    fn apply(&self, page: &ArchivedPage, _: &Params) -> Result<TransformOutput, TransformError> {
        let mut script_urls = BTreeSet::new();
        let mut variant = rewrite_root(page, |text| {
            let tokens = html::tokenize(text);
            let mut cut: Vec<Range<usize>> = Vec::new();
            for (span, attrs) in script_elements(&tokens) {
                if let Some(src) = attr(&attrs, "src") {
                    if let Ok(url) = normalize_url_with_base(src, &page.root_url) {
                        script_urls.insert(url);
                    }
                }
                cut.push(span);
            }
            for t in &tokens {
                if let Token::StartTag { name, attrs, .. } = t {
                    if name == "script" {
                        continue;
                    }
                    cut.extend(
                        attrs
                            .iter()
                            .filter(|a| a.name.starts_with("on") && a.name.len() > 2)
                            .map(|a| a.span.clone()),
                    );
                }
            }
            splice_out(text, cut)
        });
        script_urls.extend(
            page.exchanges
                .values()
                .filter(|e| is_script_type(&e.content_type))
                .map(|e| e.url.clone()),
        );
        let dropped = drop_exchanges(&mut variant, &script_urls);
        Ok(TransformOutput {
            page: variant,
            notes: vec![format!("dropped {dropped} script responses")],
        })
    }
}

pub struct JsBlockThirdParty;

impl Transform for JsBlockThirdParty {
    fn name(&self) -> &str {
        "js-block-thirdparty"
    }

    fn description(&self) -> &str {
        "Removes external scripts served from a host other than the page's own host"
    }

    fn apply(&self, page: &ArchivedPage, _: &Params) -> Result<TransformOutput, TransformError> {
        let root_host = url_host(&page.root_url);
        let mut blocked = BTreeSet::new();
        let mut variant = rewrite_root(page, |text| {
            let tokens = html::tokenize(text);
            let mut cut = Vec::new();
            for (span, attrs) in script_elements(&tokens) {
                let Some(src) = attr(&attrs, "src") else { continue };
                let Ok(url) = normalize_url_with_base(src, &page.root_url) else { continue };
                if url_host(&url) != root_host {
                    blocked.insert(url);
                    cut.push(span);
                }
            }
            splice_out(text, cut)
        });
        drop_exchanges(&mut variant, &blocked);
        let notes = blocked.into_iter().map(|u| format!("blocked {u}")).collect();
        Ok(TransformOutput { page: variant, notes })
    }
}

pub struct JsDce;

impl Transform for JsDce {
    fn name(&self) -> &str {
        "js-dce"
    }

    fn description(&self) -> &str {
        "Deletes top-level function declarations whose names are never referenced elsewhere"
    }

    fn apply(&self, page: &ArchivedPage, _: &Params) -> Result<TransformOutput, TransformError> {
        let root = page.root().ok_or_else(|| TransformError::TransformFailed {
            transform: self.name().to_string(),
            cause: "missing root document".to_string(),
        })?;
        let (root_text, _) = decode_document(&root.body);
        let tokens = html::tokenize(&root_text);

        // Reference sources that js-dce never rewrites: inline scripts and handler attributes.
        let mut fixed: Vec<String> = Vec::new();
        let mut referenced = BTreeSet::new();
        for (i, t) in tokens.iter().enumerate() {
            let Token::StartTag { name, attrs, .. } = t else { continue };
            fixed.extend(
                attrs
                    .iter()
                    .filter(|a| a.name.starts_with("on") && a.name.len() > 2)
                    .map(|a| a.value.clone()),
            );
            if name != "script" {
                continue;
            }
            match attr(attrs, "src") {
                Some(src) => {
                    if let Ok(url) = normalize_url_with_base(src, &page.root_url) {
                        referenced.insert(url);
                    }
                }
                None => {
                    if let Some(Token::RawText { span }) = tokens.get(i + 1) {
                        fixed.push(root_text[span.clone()].to_string());
                    }
                }
            }
        }

        // Scripts eligible for elimination; must be valid UTF-8 to be rewritten.
        let mut scripts: Vec<(String, String)> = page
            .exchanges
            .values()
            .filter(|e| e.method == "GET" && e.url != page.root_url)
            .filter(|e| is_script_type(&e.content_type) || referenced.contains(&e.url))
            .filter_map(|e| String::from_utf8(e.body.clone()).ok().map(|s| (e.url.clone(), s)))
            .collect();

        let mut deleted: Vec<String> = Vec::new();
        loop {
            let mut cuts: Vec<Vec<Range<usize>>> = vec![Vec::new(); scripts.len()];
            for (si, (_, text)) in scripts.iter().enumerate() {
                for decl in js::top_level_functions(text) {
                    let mut refs = fixed.iter().map(|f| js::count_word(f, &decl.name, None)).sum::<usize>();
                    for (sj, (_, other)) in scripts.iter().enumerate() {
                        let exclude = (si == sj).then_some(&decl.span);
                        refs += js::count_word(other, &decl.name, exclude);
                    }
                    if refs == 0 {
                        deleted.push(decl.name);
                        cuts[si].push(decl.span);
                    }
                }
            }
            if cuts.iter().all(Vec::is_empty) {
                break;
            }
            for ((_, text), cut) in scripts.iter_mut().zip(cuts) {
                if !cut.is_empty() {
                    *text = splice_out(text, cut);
                }
            }
        }

        let mut variant = page.clone();
        for (url, text) in scripts {
            if let Some(ex) = variant.get_mut(&url) {
                if ex.body != text.as_bytes() {
                    ex.set_body(text.into_bytes());
                }
            }
        }
        let notes = deleted.into_iter().map(|n| format!("deleted function {n}")).collect();
        Ok(TransformOutput { page: variant, notes })
    }
}

pub struct ImgDownscale;

impl ImgDownscale {
    fn quality(params: &Params) -> Result<f64, TransformError> {
        let raw = params.get("quality").map(String::as_str).unwrap_or("0.5");
        let bad = |reason: &str| TransformError::InvalidParam {
            transform: "img-downscale".to_string(),
            param: "quality".to_string(),
            reason: format!("{reason}: {raw:?}"),
        };
        let q: f64 = raw.parse().map_err(|_| bad("not a number"))?;
        if !(q > 0.0 && q <= 1.0) {
            return Err(bad("must be in (0, 1]"));
        }
        Ok(q)
    }

    /// Length of the kept prefix of an image of `len` bytes.
    pub fn kept_prefix(len: usize, quality: f64) -> usize {
        ((quality * len as f64).ceil() as usize).min(len)
    }
}

impl Transform for ImgDownscale {
    fn name(&self) -> &str {
        "img-downscale"
    }

    fn description(&self) -> &str {
        "Thins every image body to a quality fraction of its bytes plus a 16-byte marker (not decodable)"
    }

    fn params(&self) -> Vec<ParamSpec> {
        vec![ParamSpec {
            name: "quality".to_string(),
            description: "fraction of image bytes kept, in (0, 1]".to_string(),
            default: Some("0.5".to_string()),
        }]
    }

    fn apply(&self, page: &ArchivedPage, params: &Params) -> Result<TransformOutput, TransformError> {
        let quality = Self::quality(params)?;
        let mut variant = page.clone();
        let mut thinned = 0;
        for ex in variant.exchanges.values_mut() {
            if !is_image_type(&ex.content_type) {
                continue;
            }
            let keep = Self::kept_prefix(ex.body.len(), quality);
            // Never grow a body: tiny images stay as they are.
            if keep + DOWNSCALE_MARKER.len() >= ex.body.len() {
                continue;
            }
            let mut body = ex.body[..keep].to_vec();
            body.extend_from_slice(DOWNSCALE_MARKER);
            ex.set_body(body);
            thinned += 1;
        }
        Ok(TransformOutput {
            page: variant,
            notes: vec![format!("thinned {thinned} images at quality {quality}")],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splice_handles_overlap() {
        assert_eq!(splice_out("abcdef", vec![3..5, 1..2, 1..4]), "af");
        assert_eq!(splice_out("abc", vec![]), "abc");
    }

    #[test]
    fn kept_prefix_rounds_up() {
        assert_eq!(ImgDownscale::kept_prefix(80000, 0.5), 40000);
        assert_eq!(ImgDownscale::kept_prefix(3, 0.5), 2);
        assert_eq!(ImgDownscale::kept_prefix(10, 1.0), 10);
    }

    #[test]
    fn quality_validation() {
        let mut p = Params::new();
        assert_eq!(ImgDownscale::quality(&p).unwrap(), 0.5);
        p.insert("quality".into(), "0".into());
        assert!(ImgDownscale::quality(&p).is_err());
        p.insert("quality".into(), "abc".into());
        assert!(ImgDownscale::quality(&p).is_err());
    }
}
