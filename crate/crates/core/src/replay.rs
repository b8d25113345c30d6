//! Plain-HTTP replay of an archived page.
//!
//! Requests are answered only from the archive, matched on `(method, host,
//! path + query)` with the scheme ignored. A request whose host is not in the
//! archive (typically `127.0.0.1:port`) is looked up under the root document's
//! host. Misses get a JSON 404 and are logged in arrival order.

use std::collections::{HashMap, HashSet};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::archive::{ArchivedExchange, ArchivedPage};

/// Token-bucket refill interval.
pub const SHAPING_QUANTUM: Duration = Duration::from_millis(10);

const MAX_HEAD_BYTES: usize = 64 * 1024;

const HOP_BY_HOP: &[&str] = &[
    "connection",
    "keep-alive",
    "proxy-connection",
    "te",
    "trailer",
    "transfer-encoding",
    "upgrade",
    "content-length",
    // bodies are archived decoded
    "content-encoding",
];

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot bind {addr}: {source}")]
    BindError {
        addr: String,
        #[source]
        source: io::Error,
    },
    #[error("invalid shaping config: {0}")]
    InvalidShaping(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingConfig {
    pub downlink_bytes_per_sec: f64,
    pub rtt_seconds: f64,
    pub enabled: bool,
}

impl ShapingConfig {
    pub fn disabled() -> Self {
        ShapingConfig {
            downlink_bytes_per_sec: 1.0,
            rtt_seconds: 0.0,
            enabled: false,
        }
    }

    pub fn shaped(downlink_bytes_per_sec: f64, rtt_seconds: f64) -> Self {
        ShapingConfig {
            downlink_bytes_per_sec,
            rtt_seconds,
            enabled: true,
        }
    }

    pub fn validate(&self) -> Result<(), ReplayError> {
        if self.enabled && !(self.downlink_bytes_per_sec > 0.0 && self.downlink_bytes_per_sec.is_finite()) {
            return Err(ReplayError::InvalidShaping("downlink must be positive".into()));
        }
        if !(self.rtt_seconds >= 0.0 && self.rtt_seconds.is_finite()) {
            return Err(ReplayError::InvalidShaping("rtt must be non-negative".into()));
        }
        Ok(())
    }
}

type LookupKey = (String, String, String);

struct Archive {
    exchanges: Vec<ArchivedExchange>,
    index: HashMap<LookupKey, usize>,
    hosts: HashSet<String>,
    root_host: String,
    root_scheme: String,
}

fn host_port(url: &Url) -> String {
    match (url.host_str(), url.port()) {
        (Some(h), Some(p)) => format!("{h}:{p}"),
        (Some(h), None) => h.to_string(),
        _ => String::new(),
    }
}

fn path_query(url: &Url) -> String {
    match url.query() {
        Some(q) => format!("{}?{}", url.path(), q),
        None => url.path().to_string(),
    }
}

impl Archive {
    fn new(page: &ArchivedPage) -> Self {
        let mut exchanges = Vec::new();
        let mut index = HashMap::new();
        let mut hosts = HashSet::new();
        for ex in page.exchanges.values() {
            let Ok(url) = Url::parse(&ex.url) else { continue };
            let host = host_port(&url);
            hosts.insert(host.clone());
            // http and https variants of one URL collapse; the first in key order wins
            index
                .entry((ex.method.clone(), host, path_query(&url)))
                .or_insert(exchanges.len());
            exchanges.push(ex.clone());
        }
        let root = Url::parse(&page.root_url).expect("root URL is normalized");
        Archive {
            exchanges,
            index,
            hosts,
            root_host: host_port(&root),
            root_scheme: root.scheme().to_string(),
        }
    }

    /// Resolves a request target to `(absolute URL used for lookup, hit)`.
    fn lookup(&self, method: &str, target: &str, host_header: Option<&str>) -> (String, Option<&ArchivedExchange>) {
        let absolute = if target.starts_with("http://") || target.starts_with("https://") {
            Url::parse(target).ok()
        } else {
            let host = host_header.unwrap_or(&self.root_host).trim().to_ascii_lowercase();
            let host = if self.hosts.contains(&host) { host } else { self.root_host.clone() };
            Url::parse(&format!("{}://{}{}", self.root_scheme, host, target)).ok()
        };
        let Some(mut url) = absolute else {
            return (target.to_string(), None);
        };
        let mut host = host_port(&url);
        if !self.hosts.contains(&host) {
            host = self.root_host.clone();
            let _ = url.set_host(Some(self.root_host.split(':').next().unwrap_or_default()));
        }
        url.set_fragment(None);
        let mut method = method.to_ascii_uppercase();
        if method == "HEAD" {
            method = "GET".to_string();
        }
        let key = (method, host, path_query(&url));
        let hit = self.index.get(&key).map(|&i| &self.exchanges[i]);
        (url.to_string(), hit)
    }
}

struct Shared {
    archive: Archive,
    shaping: ShapingConfig,
    misses: Mutex<Vec<String>>,
    stop: AtomicBool,
}

/// A running replay server. Dropping the handle stops it.
pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    accept: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// URLs answered with 404, one entry per request, in arrival order.
    pub fn miss_log(&self) -> Vec<String> {
        self.shared.misses.lock().expect("miss log lock").clone()
    }

    pub fn stop(mut self) -> Vec<String> {
        self.shutdown();
        self.miss_log()
    }

    /// Blocks until the accept loop exits.
    pub fn wait(mut self) {
        if let Some(t) = self.accept.take() {
            let _ = t.join();
        }
    }

    fn shutdown(&mut self) {
        if let Some(t) = self.accept.take() {
            self.shared.stop.store(true, Ordering::SeqCst);
            let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

pub fn miss_log(handle: &ServerHandle) -> Vec<String> {
    handle.miss_log()
}

/// Starts serving `page` on `bind_address` (use port 0 for an ephemeral port).
pub fn serve(page: &ArchivedPage, bind_address: &str, shaping: ShapingConfig) -> Result<ServerHandle, ReplayError> {
    shaping.validate()?;
    let bind_err = |source| ReplayError::BindError {
        addr: bind_address.to_string(),
        source,
    };
    let addrs: Vec<SocketAddr> = bind_address.to_socket_addrs().map_err(bind_err)?.collect();
    let listener = TcpListener::bind(&addrs[..]).map_err(bind_err)?;
    let addr = listener.local_addr().map_err(bind_err)?;
    let shared = Arc::new(Shared {
        archive: Archive::new(page),
        shaping,
        misses: Mutex::new(Vec::new()),
        stop: AtomicBool::new(false),
    });
    let accept_shared = Arc::clone(&shared);
    let accept = thread::Builder::new()
        .name("wasef-replay-accept".into())
        .spawn(move || {
            for stream in listener.incoming() {
                if accept_shared.stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let conn_shared = Arc::clone(&accept_shared);
                thread::spawn(move || {
                    if let Err(e) = handle_connection(stream, &conn_shared) {
                        debug!("connection closed: {e}");
                    }
                });
            }
        })
        .map_err(bind_err)?;
    Ok(ServerHandle {
        addr,
        shared,
        accept: Some(accept),
    })
}

struct Request {
    method: String,
    target: String,
    host: Option<String>,
    close: bool,
}

enum ReadOutcome {
    Request(Request),
    Malformed,
    Closed,
}

fn read_request(reader: &mut BufReader<TcpStream>) -> io::Result<ReadOutcome> {
    let mut head = Vec::new();
    loop {
        let n = reader.read_until(b'\n', &mut head)?;
        if n == 0 {
            return Ok(if head.is_empty() { ReadOutcome::Closed } else { ReadOutcome::Malformed });
        }
        if head.len() > MAX_HEAD_BYTES {
            return Ok(ReadOutcome::Malformed);
        }
        if head == b"\r\n" || head == b"\n" {
            // tolerate stray blank lines between requests
            head.clear();
            continue;
        }
        if head.ends_with(b"\r\n\r\n") || head.ends_with(b"\n\n") {
            break;
        }
    }
    let mut headers = [httparse::EMPTY_HEADER; 64];
    let mut req = httparse::Request::new(&mut headers);
    match req.parse(&head) {
        Ok(httparse::Status::Complete(_)) => {}
        _ => return Ok(ReadOutcome::Malformed),
    }
    let (Some(method), Some(target)) = (req.method, req.path) else {
        return Ok(ReadOutcome::Malformed);
    };
    let header = |name: &str| {
        req.headers
            .iter()
            .find(|h| h.name.eq_ignore_ascii_case(name))
            .and_then(|h| std::str::from_utf8(h.value).ok())
            .map(str::to_string)
    };
    let close = header("connection").is_some_and(|v| v.eq_ignore_ascii_case("close")) || req.version == Some(0);
    if header("transfer-encoding").is_some() {
        return Ok(ReadOutcome::Malformed);
    }
    let content_length = match header("content-length") {
        Some(v) => match v.trim().parse::<u64>() {
            Ok(n) => n,
            Err(_) => return Ok(ReadOutcome::Malformed),
        },
        None => 0,
    };
    let request = Request {
        method: method.to_string(),
        target: target.to_string(),
        host: header("host"),
        close,
    };
    io::copy(&mut reader.by_ref().take(content_length), &mut io::sink())?;
    Ok(ReadOutcome::Request(request))
}

fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        201 => "Created",
        204 => "No Content",
        301 => "Moved Permanently",
        302 => "Found",
        304 => "Not Modified",
        307 => "Temporary Redirect",
        308 => "Permanent Redirect",
        400 => "Bad Request",
        403 => "Forbidden",
        404 => "Not Found",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    }
}

fn handle_connection(stream: TcpStream, shared: &Shared) -> io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(30)))?;
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    loop {
        let req = match read_request(&mut reader)? {
            ReadOutcome::Closed => return Ok(()),
            ReadOutcome::Malformed => {
                let body = b"bad request";
                write!(
                    writer,
                    "HTTP/1.1 400 Bad Request\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                    body.len()
                )?;
                writer.write_all(body)?;
                return writer.flush();
            }
            ReadOutcome::Request(r) => r,
        };
        let (url, hit) = shared.archive.lookup(&req.method, &req.target, req.host.as_deref());
        let (status, headers, body): (u16, Vec<(String, String)>, Vec<u8>) = match hit {
            Some(ex) => (
                ex.status,
                ex.headers
                    .iter()
                    .filter(|(n, _)| !HOP_BY_HOP.contains(&n.to_ascii_lowercase().as_str()))
                    .cloned()
                    .collect(),
                ex.body.clone(),
            ),
            None => {
                shared.misses.lock().expect("miss log lock").push(url.clone());
                (
                    404,
                    vec![("Content-Type".to_string(), "application/json".to_string())],
                    serde_json::to_vec(&serde_json::json!({ "miss": url })).expect("json"),
                )
            }
        };

        if shared.shaping.enabled && shared.shaping.rtt_seconds > 0.0 {
            thread::sleep(Duration::from_secs_f64(shared.shaping.rtt_seconds / 2.0));
        }
        let mut head = format!("HTTP/1.1 {} {}\r\n", status, reason(status));
        for (n, v) in &headers {
            head.push_str(&format!("{n}: {v}\r\n"));
        }
        head.push_str(&format!("Content-Length: {}\r\n", body.len()));
        if req.close {
            head.push_str("Connection: close\r\n");
        }
        head.push_str("\r\n");
        writer.write_all(head.as_bytes())?;
        if req.method.eq_ignore_ascii_case("HEAD") {
            // no body
        } else if shared.shaping.enabled {
            write_throttled(&mut writer, &body, shared.shaping.downlink_bytes_per_sec)?;
        } else {
            writer.write_all(&body)?;
        }
        writer.flush()?;
        if req.close {
            return Ok(());
        }
    }
}

/// Releases `rate * quantum` bytes per quantum; the final byte leaves no earlier than `len / rate`.
fn write_throttled(w: &mut impl Write, body: &[u8], rate: f64) -> io::Result<()> {
    let per_quantum = rate * SHAPING_QUANTUM.as_secs_f64();
    let start = Instant::now();
    let mut sent = 0usize;
    let mut ticks: u32 = 0;
    while sent < body.len() {
        ticks += 1;
        let due = start + SHAPING_QUANTUM * ticks;
        let now = Instant::now();
        if due > now {
            thread::sleep(due - now);
        }
        let allowed = ((per_quantum * ticks as f64).floor() as usize).min(body.len());
        if allowed > sent {
            w.write_all(&body[sent..allowed])?;
            w.flush()?;
            sent = allowed;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn throttled_writer_respects_rate() {
        let mut out = Vec::new();
        let start = Instant::now();
        write_throttled(&mut out, &[7u8; 5000], 100_000.0).unwrap();
        assert!(start.elapsed() >= Duration::from_millis(50));
        assert_eq!(out.len(), 5000);
    }

    #[test]
    fn shaping_validation() {
        assert!(ShapingConfig::shaped(0.0, 0.1).validate().is_err());
        assert!(ShapingConfig::shaped(10.0, -1.0).validate().is_err());
        assert!(ShapingConfig::disabled().validate().is_ok());
    }
}
