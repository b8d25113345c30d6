//! Frozen page archives.
//!
//! A page is a set of HTTP exchanges keyed by `(method, url)` plus the URL of
//! its root HTML document. Pages are ingested from HAR 1.2 files and stored as
//! a directory holding `manifest.json` and one body file per exchange, each
//! body guarded by a SHA-256 digest.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use base64::Engine as _;
use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use url::Url;

/// Timestamp stamped on synthetic pages so that generated corpora are byte-stable.
pub const SYNTHETIC_RECORDED_AT: &str = "2021-01-01T00:00:00Z";

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("malformed URL: {0:?}")]
    MalformedUrl(String),
    #[error("no HTML root document found")]
    NoRootDocument,
    #[error("cannot decode body of HAR entry {index}: {reason}")]
    BodyDecodeError { index: usize, reason: String },
    #[error("invalid HAR: {0}")]
    InvalidHar(String),
    #[error("storage error at {path}: {source}")]
    StorageError {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt archive: {0}")]
    CorruptArchive(String),
    #[error("checksum mismatch for {file}: manifest {expected}, on disk {actual}")]
    ChecksumMismatch {
        file: String,
        expected: String,
        actual: String,
    },
}

impl ArchiveError {
    fn storage(path: &Path, source: io::Error) -> Self {
        ArchiveError::StorageError {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Canonicalizes an absolute URL: lowercase scheme and host, no default port,
/// no fragment. Query and existing percent-encoding are kept.
pub fn normalize_url(raw: &str) -> Result<String, ArchiveError> {
    let url = Url::parse(raw.trim()).map_err(|_| ArchiveError::MalformedUrl(raw.to_string()))?;
    finish_normalize(url, raw)
}

/// Resolves `raw` against `base` (RFC 3986 reference resolution) and normalizes the result.
pub fn normalize_url_with_base(raw: &str, base: &str) -> Result<String, ArchiveError> {
    let base = Url::parse(base).map_err(|_| ArchiveError::MalformedUrl(base.to_string()))?;
    let url = base
        .join(raw.trim())
        .map_err(|_| ArchiveError::MalformedUrl(raw.to_string()))?;
    finish_normalize(url, raw)
}

fn finish_normalize(mut url: Url, raw: &str) -> Result<String, ArchiveError> {
    if url.cannot_be_a_base() || url.host_str().is_none() {
        return Err(ArchiveError::MalformedUrl(raw.to_string()));
    }
    url.set_fragment(None);
    Ok(url.to_string())
}

/// Host part of a normalized URL, if any.
pub fn url_host(url: &str) -> Option<String> {
    Url::parse(url).ok().and_then(|u| u.host_str().map(str::to_string))
}

/// Lowercased media type of a `Content-Type` value with parameters stripped.
pub fn media_type(content_type: &str) -> String {
    content_type
        .split(';')
        .next()
        .unwrap_or("")
        .trim()
        .to_ascii_lowercase()
}

pub fn is_html_type(content_type: &str) -> bool {
    matches!(content_type, "text/html" | "application/xhtml+xml")
}

pub fn is_script_type(content_type: &str) -> bool {
    matches!(
        content_type,
        "application/javascript"
            | "text/javascript"
            | "application/x-javascript"
            | "application/ecmascript"
            | "text/ecmascript"
    )
}

pub fn is_image_type(content_type: &str) -> bool {
    content_type.starts_with("image/")
}

/// Stable page identifier: a filesystem-safe slug of the host plus a digest of the root URL.
pub fn page_id_for(root_url: &str) -> String {
    let host = url_host(root_url).unwrap_or_default();
    let mut slug: String = host
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect();
    slug.truncate(40);
    let digest = hex::encode(Sha256::digest(root_url.as_bytes()));
    format!("{}-{}", slug, &digest[..12])
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchivedExchange {
    pub method: String,
    pub url: String,
    pub status: u16,
    pub headers: Vec<(String, String)>,
    #[serde(skip)]
    pub body: Vec<u8>,
    pub content_type: String,
}

impl ArchivedExchange {
    /// Builds an exchange, deriving `content_type` from the headers.
    pub fn new(
        method: &str,
        url: String,
        status: u16,
        headers: Vec<(String, String)>,
        body: Vec<u8>,
    ) -> Self {
        let content_type = headers
            .iter()
            .find(|(name, _)| name.eq_ignore_ascii_case("content-type"))
            .map(|(_, v)| media_type(v))
            .unwrap_or_default();
        ArchivedExchange {
            method: method.to_ascii_uppercase(),
            url,
            status,
            headers,
            body,
            content_type,
        }
    }

    /// Replaces the body, keeping any `Content-Length` header consistent.
    pub fn set_body(&mut self, body: Vec<u8>) {
        for (name, value) in &mut self.headers {
            if name.eq_ignore_ascii_case("content-length") {
                *value = body.len().to_string();
            }
        }
        self.body = body;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageSource {
    HarImport,
    Synthetic,
    Recorded,
}

pub type ExchangeKey = (String, String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchivedPage {
    pub page_id: String,
    pub root_url: String,
    pub exchanges: BTreeMap<ExchangeKey, ArchivedExchange>,
    pub recorded_at: String,
    pub source: PageSource,
}

impl ArchivedPage {
    /// Assembles a page from exchanges; the first exchange for a `(method, url)` key wins.
    pub fn from_exchanges(
        root_url: &str,
        exchanges: impl IntoIterator<Item = ArchivedExchange>,
        recorded_at: &str,
        source: PageSource,
    ) -> Result<Self, ArchiveError> {
        let root_url = normalize_url(root_url)?;
        let mut map = BTreeMap::new();
        for ex in exchanges {
            map.entry((ex.method.clone(), ex.url.clone())).or_insert(ex);
        }
        let page = ArchivedPage {
            page_id: page_id_for(&root_url),
            root_url,
            exchanges: map,
            recorded_at: recorded_at.to_string(),
            source,
        };
        page.validate()?;
        Ok(page)
    }

    pub fn validate(&self) -> Result<(), ArchiveError> {
        match self.root() {
            Some(root) if is_html_type(&root.content_type) => Ok(()),
            _ => Err(ArchiveError::NoRootDocument),
        }
    }

    pub fn root(&self) -> Option<&ArchivedExchange> {
        self.get(&self.root_url)
    }

    /// GET lookup by normalized URL.
    pub fn get(&self, url: &str) -> Option<&ArchivedExchange> {
        self.exchanges.get(&("GET".to_string(), url.to_string()))
    }

    pub fn get_mut(&mut self, url: &str) -> Option<&mut ArchivedExchange> {
        self.exchanges.get_mut(&("GET".to_string(), url.to_string()))
    }

    pub fn total_bytes(&self) -> u64 {
        self.exchanges.values().map(|e| e.body.len() as u64).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub pages: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_labels: Option<BTreeMap<String, String>>,
}

impl Corpus {
    pub fn group_of(&self, page_id: &str) -> Option<&str> {
        self.group_labels
            .as_ref()
            .and_then(|g| g.get(page_id))
            .map(String::as_str)
    }
}

pub fn store_corpus(corpus: &Corpus, root_dir: &Path) -> Result<PathBuf, ArchiveError> {
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = corpus.pages.iter().find(|p| !seen.insert(p.as_str())) {
        return Err(ArchiveError::CorruptArchive(format!(
            "corpus {} lists page {} twice",
            corpus.name, dup
        )));
    }
    let dir = root_dir.join("corpora");
    fs::create_dir_all(&dir).map_err(|e| ArchiveError::storage(&dir, e))?;
    let path = dir.join(format!("{}.json", corpus.name));
    let json = serde_json::to_vec_pretty(corpus).expect("corpus serializes");
    fs::write(&path, json).map_err(|e| ArchiveError::storage(&path, e))?;
    Ok(path)
}

/// Loads a named corpus and checks that every page resolves in the store.
pub fn load_corpus(name: &str, root_dir: &Path) -> Result<Corpus, ArchiveError> {
    let path = root_dir.join("corpora").join(format!("{name}.json"));
    let bytes = fs::read(&path).map_err(|e| ArchiveError::storage(&path, e))?;
    let corpus: Corpus = serde_json::from_slice(&bytes)
        .map_err(|e| ArchiveError::CorruptArchive(format!("{}: {e}", path.display())))?;
    for page_id in &corpus.pages {
        if !root_dir.join(page_id).join("manifest.json").is_file() {
            return Err(ArchiveError::CorruptArchive(format!(
                "corpus {name} references missing page {page_id}"
            )));
        }
    }
    Ok(corpus)
}

// ---------------------------------------------------------------------------
// HAR ingest

#[derive(Deserialize)]
struct Har {
    log: HarLog,
}

#[derive(Deserialize)]
struct HarLog {
    entries: Vec<HarEntry>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct HarEntry {
    #[serde(default)]
    started_date_time: Option<String>,
    request: HarRequest,
    response: HarResponse,
}

#[derive(Deserialize)]
struct HarRequest {
    method: String,
    url: String,
}

#[derive(Deserialize)]
struct HarResponse {
    status: u16,
    #[serde(default)]
    headers: Vec<HarHeader>,
    content: HarContent,
}

#[derive(Deserialize)]
struct HarHeader {
    name: String,
    value: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct HarContent {
    #[serde(default)]
    mime_type: Option<String>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    encoding: Option<String>,
}

/// Converts a HAR 1.2 log into an archived page.
pub fn import_har(har_text: &[u8], root_url_hint: Option<&str>) -> Result<ArchivedPage, ArchiveError> {
    let har: Har =
        serde_json::from_slice(har_text).map_err(|e| ArchiveError::InvalidHar(e.to_string()))?;
    let mut exchanges = Vec::new();
    let mut recorded_at = None;
    for (index, entry) in har.log.entries.into_iter().enumerate() {
        let method = entry.request.method.to_ascii_uppercase();
        if method != "GET" && method != "POST" {
            warn!("dropping HAR entry {index}: unsupported method {method}");
            continue;
        }
        if recorded_at.is_none() {
            recorded_at = entry.started_date_time.clone();
        }
        let url = normalize_url(&entry.request.url)?;
        let body = match (entry.response.content.text, entry.response.content.encoding.as_deref()) {
            (None, _) => Vec::new(),
            (Some(text), Some(enc)) if enc.eq_ignore_ascii_case("base64") => {
                base64::engine::general_purpose::STANDARD
                    .decode(text.trim())
                    .map_err(|e| ArchiveError::BodyDecodeError {
                        index,
                        reason: e.to_string(),
                    })?
            }
            (Some(_), Some(enc)) => {
                return Err(ArchiveError::BodyDecodeError {
                    index,
                    reason: format!("unsupported content encoding {enc:?}"),
                })
            }
            (Some(text), None) => text.into_bytes(),
        };
        let mut headers: Vec<(String, String)> = entry
            .response
            .headers
            .into_iter()
            .map(|h| (h.name, h.value))
            .collect();
        if !headers.iter().any(|(n, _)| n.eq_ignore_ascii_case("content-type")) {
            if let Some(mime) = entry.response.content.mime_type.filter(|m| !m.is_empty()) {
                headers.push(("Content-Type".to_string(), mime));
            }
        }
        exchanges.push(ArchivedExchange::new(
            &method,
            url,
            entry.response.status,
            headers,
            body,
        ));
    }

    let root_url = match root_url_hint {
        Some(hint) => normalize_url(hint)?,
        None => exchanges
            .iter()
            .find(|e| e.status == 200 && is_html_type(&e.content_type))
            .map(|e| e.url.clone())
            .ok_or(ArchiveError::NoRootDocument)?,
    };
    let recorded_at =
        recorded_at.unwrap_or_else(|| chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string());
    ArchivedPage::from_exchanges(&root_url, exchanges, &recorded_at, PageSource::HarImport)
}

// ---------------------------------------------------------------------------
// On-disk layout

#[derive(Serialize, Deserialize)]
struct Manifest {
    page_id: String,
    root_url: String,
    recorded_at: String,
    source: PageSource,
    exchanges: Vec<ManifestExchange>,
}

#[derive(Serialize, Deserialize)]
struct ManifestExchange {
    method: String,
    url: String,
    status: u16,
    headers: Vec<(String, String)>,
    content_type: String,
    body_file: String,
    body_sha256: String,
    body_len: u64,
}

/// Writes `page` under `root_dir/<page_id>/`, replacing any previous copy.
pub fn store_page(page: &ArchivedPage, root_dir: &Path) -> Result<String, ArchiveError> {
    store_page_at(page, &root_dir.join(&page.page_id))?;
    Ok(page.page_id.clone())
}

/// Writes `page` into an explicit directory.
pub fn store_page_at(page: &ArchivedPage, dir: &Path) -> Result<(), ArchiveError> {
    let bodies = dir.join("bodies");
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| ArchiveError::storage(dir, e))?;
    }
    fs::create_dir_all(&bodies).map_err(|e| ArchiveError::storage(&bodies, e))?;

    let mut entries = Vec::with_capacity(page.exchanges.len());
    for (n, ex) in page.exchanges.values().enumerate() {
        let body_file = format!("bodies/{n}.bin");
        let path = dir.join(&body_file);
        fs::write(&path, &ex.body).map_err(|e| ArchiveError::storage(&path, e))?;
        entries.push(ManifestExchange {
            method: ex.method.clone(),
            url: ex.url.clone(),
            status: ex.status,
            headers: ex.headers.clone(),
            content_type: ex.content_type.clone(),
            body_file,
            body_sha256: sha256_hex(&ex.body),
            body_len: ex.body.len() as u64,
        });
    }
    let manifest = Manifest {
        page_id: page.page_id.clone(),
        root_url: page.root_url.clone(),
        recorded_at: page.recorded_at.clone(),
        source: page.source,
        exchanges: entries,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| ArchiveError::storage(&path, e))
}

pub fn load_page(page_id: &str, root_dir: &Path) -> Result<ArchivedPage, ArchiveError> {
    load_page_at(&root_dir.join(page_id))
}

/// Reads a page directory, failing closed on missing bodies or digest mismatches.
pub fn load_page_at(dir: &Path) -> Result<ArchivedPage, ArchiveError> {
    let manifest_path = dir.join("manifest.json");
    let bytes = fs::read(&manifest_path).map_err(|e| ArchiveError::storage(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| {
        ArchiveError::CorruptArchive(format!("{}: {e}", manifest_path.display()))
    })?;

    let mut exchanges = BTreeMap::new();
    for entry in manifest.exchanges {
        if entry.body_file.contains("..") || Path::new(&entry.body_file).is_absolute() {
            return Err(ArchiveError::CorruptArchive(format!(
                "body path escapes page directory: {}",
                entry.body_file
            )));
        }
        let path = dir.join(&entry.body_file);
        let body = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(ArchiveError::CorruptArchive(format!(
                    "missing body file {}",
                    entry.body_file
                )))
            }
            Err(e) => return Err(ArchiveError::storage(&path, e)),
        };
        let actual = sha256_hex(&body);
        if actual != entry.body_sha256 || body.len() as u64 != entry.body_len {
            return Err(ArchiveError::ChecksumMismatch {
                file: entry.body_file,
                expected: entry.body_sha256,
                actual,
            });
        }
        let key = (entry.method.clone(), entry.url.clone());
        let ex = ArchivedExchange {
            method: entry.method,
            url: entry.url,
            status: entry.status,
            headers: entry.headers,
            body,
            content_type: entry.content_type,
        };
        if exchanges.insert(key, ex).is_some() {
            return Err(ArchiveError::CorruptArchive(
                "duplicate (method, url) in manifest".to_string(),
            ));
        }
    }
    let page = ArchivedPage {
        page_id: manifest.page_id,
        root_url: manifest.root_url,
        exchanges,
        recorded_at: manifest.recorded_at,
        source: manifest.source,
    };
    page.validate()?;
    Ok(page)
}
