//! Static page model: the resources a document references, in document order,
//! with the blocking semantics and visual weights the load simulator consumes.

pub mod html;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::archive::{normalize_url_with_base, ArchivedPage};
use crate::similarity::{InteractiveElement, InteractiveKind};
use html::{attr, Token};

/// Visual weight of one visible text character, in image-byte equivalents.
pub const TEXT_WEIGHT_PER_CHAR: f64 = 50.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PageModelError {
    #[error("root document {0} is not in the archive")]
    NoRootDocument(String),
    #[error("root document is empty")]
    EmptyDocument,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Html,
    ScriptSync,
    ScriptAsync,
    ScriptDefer,
    ScriptInline,
    Stylesheet,
    Image,
    Iframe,
    Other,
}

impl ResourceKind {
    pub fn is_script(self) -> bool {
        matches!(
            self,
            ResourceKind::ScriptSync
                | ResourceKind::ScriptAsync
                | ResourceKind::ScriptDefer
                | ResourceKind::ScriptInline
        )
    }

    pub fn is_render_blocking(self) -> bool {
        matches!(self, ResourceKind::Stylesheet | ResourceKind::ScriptSync)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resource {
    pub url: String,
    pub kind: ResourceKind,
    pub bytes: u64,
    pub discovery_index: usize,
    pub visual_weight: f64,
    pub render_blocking: bool,
    /// Referenced but absent from the archive.
    pub missing: bool,
    /// Byte offset in the root document at which the parser reaches this resource.
    pub offset: u64,
}

impl Resource {
    /// Inline scripts are executed from the document and are never fetched.
    pub fn is_request(&self) -> bool {
        self.kind != ResourceKind::ScriptInline
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBlock {
    pub char_count: u64,
    pub discovery_index: usize,
    /// Byte offset in the root document at which the block has been fully parsed.
    pub offset: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceGraph {
    pub root: Resource,
    /// Sub-resources in document order; the root is held separately.
    pub resources: Vec<Resource>,
    pub text_blocks: Vec<TextBlock>,
    pub interactive_elements: Vec<InteractiveElement>,
    /// Start-tag histogram over body elements.
    pub body_tags: BTreeMap<String, u64>,
    /// Some script appears to inject resources at runtime that static parsing cannot see.
    pub potentially_undercounted: bool,
}

impl ResourceGraph {
    pub fn text_tokens(&self) -> impl Iterator<Item = &str> {
        self.text_blocks.iter().flat_map(|b| b.text.split_whitespace())
    }

    pub fn image_urls(&self) -> impl Iterator<Item = &str> {
        self.resources
            .iter()
            .filter(|r| r.kind == ResourceKind::Image)
            .map(|r| r.url.as_str())
    }

    /// 1 for the root plus one per distinct fetched sub-resource URL.
    pub fn request_count(&self) -> usize {
        let mut urls: Vec<&str> = self
            .resources
            .iter()
            .filter(|r| r.is_request() && r.url != self.root.url)
            .map(|r| r.url.as_str())
            .collect();
        urls.sort_unstable();
        urls.dedup();
        1 + urls.len()
    }

    pub fn missing_count(&self) -> usize {
        self.resources.iter().filter(|r| r.missing).count()
    }
}

/// How a root document's bytes were turned into text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextEncoding {
    Utf8,
    Latin1,
}

pub fn decode_document(bytes: &[u8]) -> (String, TextEncoding) {
    match std::str::from_utf8(bytes) {
        Ok(s) => (s.to_string(), TextEncoding::Utf8),
        Err(_) => (bytes.iter().map(|&b| b as char).collect(), TextEncoding::Latin1),
    }
}

pub fn encode_document(text: &str, encoding: TextEncoding) -> Vec<u8> {
    match encoding {
        TextEncoding::Utf8 => text.as_bytes().to_vec(),
        TextEncoding::Latin1 => text.chars().map(|c| c as u32 as u8).collect(),
    }
}

/// Maps offsets in decoded text back to offsets in the original bytes.
struct OffsetMap<'a> {
    text: &'a str,
    encoding: TextEncoding,
}

impl OffsetMap<'_> {
    fn byte_offset(&self, at: usize) -> u64 {
        match self.encoding {
            TextEncoding::Utf8 => at as u64,
            TextEncoding::Latin1 => self.text[..at].chars().count() as u64,
        }
    }
}

const INLINE_TAGS: &[&str] = &[
    "a", "abbr", "b", "bdi", "bdo", "br", "cite", "code", "data", "dfn", "em", "font", "i", "kbd",
    "label", "mark", "q", "s", "samp", "small", "span", "strong", "sub", "sup", "time", "u", "var",
    "wbr",
];

const HEAD_ONLY: &[&str] = &["html", "head", "body", "meta", "title", "base"];

const UNDERCOUNT_MARKERS: &[&str] = &[
    "document.createElement('script'",
    "document.createElement(\"script\"",
    "new Image(",
];

fn is_executable_script_type(ty: Option<&str>) -> Option<bool> {
    // Some(true) = classic, Some(false) = module, None = not executable.
    match ty.map(|t| t.trim().to_ascii_lowercase()) {
        None => Some(true),
        Some(t) if t.is_empty() => Some(true),
        Some(t) if t == "module" => Some(false),
        Some(t)
            if matches!(
                t.split(';').next().unwrap_or("").trim(),
                "text/javascript"
                    | "application/javascript"
                    | "application/x-javascript"
                    | "text/ecmascript"
                    | "application/ecmascript"
                    | "text/jscript"
            ) =>
        {
            Some(true)
        }
        _ => None,
    }
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct TextRun {
    text: String,
    end: usize,
}

struct Builder<'a> {
    page: &'a ArchivedPage,
    offsets: OffsetMap<'a>,
    next_index: usize,
    resources: Vec<Resource>,
    text_blocks: Vec<TextBlock>,
    run: Option<TextRun>,
    ordinals: BTreeMap<&'static str, usize>,
    elements: Vec<InteractiveElement>,
}

impl<'a> Builder<'a> {
    fn index(&mut self) -> usize {
        self.next_index += 1;
        self.next_index
    }

    fn flush_text(&mut self) {
        if let Some(run) = self.run.take() {
            let text = collapse_whitespace(&run.text);
            let char_count = text.chars().count() as u64;
            if char_count > 0 {
                let discovery_index = self.index();
                self.text_blocks.push(TextBlock {
                    char_count,
                    discovery_index,
                    offset: self.offsets.byte_offset(run.end),
                    text,
                });
            }
        }
    }

    fn push_text(&mut self, text: &str, end: usize) {
        let run = self.run.get_or_insert_with(|| TextRun {
            text: String::new(),
            end,
        });
        run.text.push_str(text);
        run.end = end;
    }

    fn add_resource(&mut self, raw_url: &str, kind: ResourceKind, offset: usize) {
        let raw_url = raw_url.trim();
        if raw_url.is_empty() || raw_url.starts_with("data:") || raw_url.starts_with("javascript:") {
            return;
        }
        let Ok(url) = normalize_url_with_base(raw_url, &self.page.root_url) else {
            return;
        };
        if !(url.starts_with("http://") || url.starts_with("https://")) {
            return;
        }
        let (bytes, missing) = match self.page.get(&url) {
            Some(ex) => (ex.body.len() as u64, false),
            None => (0, true),
        };
        let discovery_index = self.index();
        self.resources.push(Resource {
            visual_weight: if kind == ResourceKind::Image { bytes as f64 } else { 0.0 },
            render_blocking: kind.is_render_blocking(),
            url,
            kind,
            bytes,
            discovery_index,
            missing,
            offset: self.offsets.byte_offset(offset),
        });
    }

    fn add_inline_script(&mut self, len: usize, end: usize) {
        let discovery_index = self.index();
        self.resources.push(Resource {
            url: self.page.root_url.clone(),
            kind: ResourceKind::ScriptInline,
            bytes: len as u64,
            discovery_index,
            visual_weight: 0.0,
            render_blocking: false,
            missing: false,
            offset: self.offsets.byte_offset(end),
        });
    }

    fn ordinal(&mut self, kind: &'static str) -> usize {
        let n = self.ordinals.entry(kind).or_insert(0);
        *n += 1;
        *n
    }

    fn interactive(&mut self, name: &str, attrs: &[html::Attribute]) {
        let handlers: Vec<&html::Attribute> = attrs
            .iter()
            .filter(|a| a.name.starts_with("on") && a.name.len() > 2)
            .collect();
        let handler_fn_names = handlers
            .iter()
            .flat_map(|a| crate::js::called_identifiers(&a.value))
            .collect();
        let resolve = |raw: &str| {
            normalize_url_with_base(raw, &self.page.root_url).unwrap_or_else(|_| raw.to_string())
        };
        let named = |attrs: &[html::Attribute]| {
            attr(attrs, "id")
                .or_else(|| attr(attrs, "name"))
                .filter(|v| !v.is_empty())
                .map(str::to_string)
        };
        let (kind, key) = match name {
            "a" if attr(attrs, "href").is_some() => {
                let href = attr(attrs, "href").unwrap_or_default();
                (InteractiveKind::Link, format!("link:{}", resolve(href)))
            }
            "button" => {
                let id = named(attrs).unwrap_or_else(|| format!("#{}", self.ordinal("button")));
                (InteractiveKind::Button, format!("button:{id}"))
            }
            "input" | "select" | "textarea" => {
                let ty = attr(attrs, "type").unwrap_or("text").to_ascii_lowercase();
                let id = named(attrs).unwrap_or_else(|| format!("#{}", self.ordinal("input")));
                (InteractiveKind::Input, format!("input:{name}:{ty}:{id}"))
            }
            "form" => {
                let id = attr(attrs, "action")
                    .map(resolve)
                    .or_else(|| named(attrs))
                    .unwrap_or_else(|| format!("#{}", self.ordinal("form")));
                (InteractiveKind::Form, format!("form:{id}"))
            }
            _ if !handlers.is_empty() => {
                let id = named(attrs).unwrap_or_else(|| {
                    let mut h = Sha256::new();
                    for a in &handlers {
                        h.update(a.name.as_bytes());
                        h.update(b"=");
                        h.update(a.value.as_bytes());
                        h.update(b"\n");
                    }
                    hex::encode(h.finalize())[..16].to_string()
                });
                (InteractiveKind::HandlerElement, format!("handler:{name}:{id}"))
            }
            _ => return,
        };
        self.elements.push(InteractiveElement {
            kind,
            identity_key: key,
            handler_fn_names,
        });
    }
}

/// Builds the resource graph for a page's root document.
pub fn parse_page(page: &ArchivedPage) -> Result<ResourceGraph, PageModelError> {
    let root_ex = page
        .root()
        .ok_or_else(|| PageModelError::NoRootDocument(page.root_url.clone()))?;
    if root_ex.body.is_empty() {
        return Err(PageModelError::EmptyDocument);
    }
    let (text, encoding) = decode_document(&root_ex.body);
    let tokens = html::tokenize(&text);

    let mut b = Builder {
        page,
        offsets: OffsetMap {
            text: &text,
            encoding,
        },
        next_index: 0,
        resources: Vec::new(),
        text_blocks: Vec::new(),
        run: None,
        ordinals: BTreeMap::new(),
        elements: Vec::new(),
    };
    let mut body_tags: BTreeMap<String, u64> = BTreeMap::new();
    let mut in_head = false;
    let mut undercounted = false;

    let mut i = 0;
    while i < tokens.len() {
        match &tokens[i] {
            Token::Text { span } => {
                if !in_head {
                    let decoded = html::decode_entities(&text[span.clone()]);
                    b.push_text(&decoded, span.end);
                }
            }
            Token::RawText { .. } | Token::Comment { .. } => {}
            Token::EndTag { name, .. } => {
                if name == "head" {
                    in_head = false;
                }
                if !INLINE_TAGS.contains(&name.as_str()) {
                    b.flush_text();
                }
            }
            Token::StartTag {
                name, attrs, span, ..
            } => {
                match name.as_str() {
                    "head" => in_head = true,
                    "body" => in_head = false,
                    n if in_head && !HEAD_ONLY.contains(&n) && !matches!(n, "script" | "link" | "style" | "noscript") => {
                        in_head = false
                    }
                    _ => {}
                }
                if !INLINE_TAGS.contains(&name.as_str()) {
                    b.flush_text();
                }
                if !in_head && !HEAD_ONLY.contains(&name.as_str()) {
                    *body_tags.entry(name.clone()).or_insert(0) += 1;
                }
                b.interactive(name, attrs);
                match name.as_str() {
                    "script" => {
                        let script_type = is_executable_script_type(attr(attrs, "type"));
                        let raw = match tokens.get(i + 1) {
                            Some(Token::RawText { span }) => Some(span.clone()),
                            _ => None,
                        };
                        match (attr(attrs, "src"), script_type) {
                            (_, None) => {}
                            (Some(src), Some(classic)) => {
                                let kind = if html::has_attr(attrs, "async") {
                                    ResourceKind::ScriptAsync
                                } else if html::has_attr(attrs, "defer") || !classic {
                                    ResourceKind::ScriptDefer
                                } else {
                                    ResourceKind::ScriptSync
                                };
                                b.add_resource(src, kind, span.end);
                            }
                            (None, Some(_)) => {
                                let (len, end) = match &raw {
                                    Some(r) => (r.len(), r.end),
                                    None => (0, span.end),
                                };
                                let body = raw.as_ref().map(|r| &text[r.clone()]).unwrap_or("");
                                if UNDERCOUNT_MARKERS.iter().any(|m| body.contains(m)) {
                                    undercounted = true;
                                }
                                let len = match encoding {
                                    TextEncoding::Utf8 => len,
                                    TextEncoding::Latin1 => body.chars().count(),
                                };
                                b.add_inline_script(len, end);
                            }
                        }
                    }
                    "link" => {
                        let rel = attr(attrs, "rel").unwrap_or("").to_ascii_lowercase();
                        if rel.split_whitespace().any(|t| t == "stylesheet") {
                            if let Some(href) = attr(attrs, "href") {
                                b.add_resource(href, ResourceKind::Stylesheet, span.end);
                            }
                        }
                    }
                    "img" => {
                        if let Some(src) = attr(attrs, "src") {
                            b.add_resource(src, ResourceKind::Image, span.end);
                        }
                    }
                    "iframe" => {
                        if let Some(src) = attr(attrs, "src") {
                            b.add_resource(src, ResourceKind::Iframe, span.end);
                        }
                    }
                    _ => {}
                }
            }
        }
        i += 1;
    }
    b.flush_text();

    for r in b.resources.iter().filter(|r| r.kind.is_script() && r.kind != ResourceKind::ScriptInline) {
        if let Some(ex) = page.get(&r.url) {
            let body = String::from_utf8_lossy(&ex.body);
            if UNDERCOUNT_MARKERS.iter().any(|m| body.contains(m)) {
                undercounted = true;
            }
        }
    }

    Ok(ResourceGraph {
        root: Resource {
            url: page.root_url.clone(),
            kind: ResourceKind::Html,
            bytes: root_ex.body.len() as u64,
            discovery_index: 0,
            visual_weight: 0.0,
            render_blocking: false,
            missing: false,
            offset: 0,
        },
        resources: b.resources,
        text_blocks: b.text_blocks,
        interactive_elements: b.elements,
        body_tags,
        potentially_undercounted: undercounted,
    })
}

/// A script the page would execute, with its source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptSource {
    /// `None` for inline scripts.
    pub url: Option<String>,
    pub text: String,
}

/// Sources of every executable script the root document references and the archive holds.
pub fn collect_scripts(page: &ArchivedPage) -> Vec<ScriptSource> {
    let Some(root) = page.root() else {
        return Vec::new();
    };
    let (text, _) = decode_document(&root.body);
    let tokens = html::tokenize(&text);
    let mut out = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        let Token::StartTag { name, attrs, .. } = tok else { continue };
        if name != "script" || is_executable_script_type(attr(attrs, "type")).is_none() {
            continue;
        }
        match attr(attrs, "src") {
            Some(src) => {
                let Ok(url) = normalize_url_with_base(src, &page.root_url) else { continue };
                if let Some(ex) = page.get(&url) {
                    out.push(ScriptSource {
                        url: Some(url),
                        text: String::from_utf8_lossy(&ex.body).into_owned(),
                    });
                }
            }
            None => {
                if let Some(Token::RawText { span }) = tokens.get(i + 1) {
                    out.push(ScriptSource {
                        url: None,
                        text: text[span.clone()].to_string(),
                    });
                }
            }
        }
    }
    out
}

/// Text of every inline `on*` event-handler attribute in the root document.
pub fn handler_attributes(page: &ArchivedPage) -> Vec<String> {
    let Some(root) = page.root() else {
        return Vec::new();
    };
    let (text, _) = decode_document(&root.body);
    html::tokenize(&text)
        .into_iter()
        .filter_map(|t| match t {
            Token::StartTag { attrs, .. } => Some(attrs),
            _ => None,
        })
        .flatten()
        .filter(|a| a.name.starts_with("on") && a.name.len() > 2)
        .map(|a| a.value)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "index")]
pub enum VisualElement {
    /// Index into `ResourceGraph::resources`.
    Image(usize),
    /// Index into `ResourceGraph::text_blocks`.
    Text(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisualWeights {
    pub weights: Vec<(VisualElement, f64)>,
    pub total: f64,
    /// Nothing visible: speed index is defined as FCP.
    pub zero_visual: bool,
}

impl VisualWeights {
    pub fn get(&self, element: VisualElement) -> f64 {
        self.weights
            .iter()
            .find(|(e, _)| *e == element)
            .map(|(_, w)| *w)
            .unwrap_or(0.0)
    }
}

pub fn visual_weights(graph: &ResourceGraph) -> VisualWeights {
    visual_weights_with(graph, TEXT_WEIGHT_PER_CHAR)
}

/// Images weigh their byte size; text blocks weigh `char_count * text_weight_per_char`.
pub fn visual_weights_with(graph: &ResourceGraph, text_weight_per_char: f64) -> VisualWeights {
    let mut weights = Vec::new();
    for (i, r) in graph.resources.iter().enumerate() {
        if r.kind == ResourceKind::Image && r.bytes > 0 {
            weights.push((VisualElement::Image(i), r.bytes as f64));
        }
    }
    for (i, t) in graph.text_blocks.iter().enumerate() {
        weights.push((VisualElement::Text(i), t.char_count as f64 * text_weight_per_char));
    }
    weights.sort_by_key(|(e, _)| *e);
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    VisualWeights {
        weights,
        total,
        zero_visual: total <= 0.0,
    }
}
