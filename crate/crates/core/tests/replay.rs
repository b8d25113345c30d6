mod common;

use std::io::{Read, Write};
use std::net::TcpStream;
use std::time::{Duration, Instant};

use common::*;
use wasef::archive::{ArchivedPage, PageSource, SYNTHETIC_RECORDED_AT};
use wasef::replay::{serve, ReplayError, ShapingConfig};

struct Response {
    status: u16,
    headers: Vec<(String, String)>,
    body: Vec<u8>,
}

impl Response {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }
}

fn split_response(raw: &[u8]) -> (Response, usize) {
    let head_end = raw.windows(4).position(|w| w == b"\r\n\r\n").expect("complete head") + 4;
    let head = std::str::from_utf8(&raw[..head_end]).unwrap();
    let mut lines = head.split("\r\n");
    let status = lines.next().unwrap().split(' ').nth(1).unwrap().parse().unwrap();
    let headers: Vec<(String, String)> = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (n, v) = l.split_once(':').unwrap();
            (n.trim().to_string(), v.trim().to_string())
        })
        .collect();
    let len: usize = headers
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case("content-length"))
        .map_or(0, |(_, v)| v.parse().unwrap());
    let body = raw[head_end..head_end + len].to_vec();
    (Response { status, headers, body }, head_end + len)
}

fn request(addr: std::net::SocketAddr, raw: &str) -> Response {
    let mut s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    s.write_all(raw.as_bytes()).unwrap();
    let mut buf = Vec::new();
    s.read_to_end(&mut buf).unwrap();
    split_response(&buf).0
}

fn get(addr: std::net::SocketAddr, target: &str, host: &str) -> Response {
    request(addr, &format!("GET {target} HTTP/1.1\r\nHost: {host}\r\nConnection: close\r\n\r\n"))
}

fn fixture() -> ArchivedPage {
    let exchanges = vec![
        exchange(ROOT, "text/html", b"<html><body><img src=\"/blob.bin\"></body></html>".to_vec()),
        exchange("https://a.test/blob.bin", "application/octet-stream", (0..=255u8).cycle().take(5_000).collect()),
        exchange("https://cdn.other.test/lib.js?v=2", "text/javascript", b"var lib = 1;".to_vec()),
    ];
    ArchivedPage::from_exchanges(ROOT, exchanges, SYNTHETIC_RECORDED_AT, PageSource::Synthetic).unwrap()
}

#[test]
fn hits_return_archived_bytes() {
    let page = fixture();
    let server = serve(&page, "127.0.0.1:0", ShapingConfig::disabled()).unwrap();
    let addr = server.local_addr();

    let blob = get(addr, "/blob.bin", "a.test");
    assert_eq!(blob.status, 200);
    assert_eq!(blob.body, page.get("https://a.test/blob.bin").unwrap().body);
    assert_eq!(blob.header("content-type"), Some("application/octet-stream"));

    let root = get(addr, "/", "a.test");
    assert_eq!(root.body, page.root().unwrap().body);

    // Other archived hosts are reachable through the Host header or an absolute target.
    let lib = get(addr, "/lib.js?v=2", "cdn.other.test");
    assert_eq!(lib.body, b"var lib = 1;");
    let lib_abs = get(addr, "https://cdn.other.test/lib.js?v=2", "ignored");
    assert_eq!(lib_abs.body, b"var lib = 1;");

    assert!(server.stop().is_empty());
}

#[test]
fn misses_are_404_json_and_logged_in_order() {
    let server = serve(&fixture(), "127.0.0.1:0", ShapingConfig::disabled()).unwrap();
    let addr = server.local_addr();
    let first = get(addr, "/nope.css", "a.test");
    assert_eq!(first.status, 404);
    let json: serde_json::Value = serde_json::from_slice(&first.body).unwrap();
    assert_eq!(json, serde_json::json!({ "miss": "https://a.test/nope.css" }));

    get(addr, "/lib.js?v=3", "cdn.other.test");
    get(addr, "/nope.css", "a.test");
    assert_eq!(
        server.miss_log(),
        ["https://a.test/nope.css", "https://cdn.other.test/lib.js?v=3", "https://a.test/nope.css"]
    );
    assert_eq!(server.stop().len(), 3);
}

#[test]
fn keep_alive_serves_sequential_requests() {
    let server = serve(&fixture(), "127.0.0.1:0", ShapingConfig::disabled()).unwrap();
    let mut s = TcpStream::connect(server.local_addr()).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    s.write_all(b"GET / HTTP/1.1\r\nHost: a.test\r\n\r\nGET /blob.bin HTTP/1.1\r\nHost: a.test\r\nConnection: close\r\n\r\n")
        .unwrap();
    let mut buf = Vec::new();
    s.read_to_end(&mut buf).unwrap();
    let (first, used) = split_response(&buf);
    let (second, rest) = split_response(&buf[used..]);
    assert_eq!(first.status, 200);
    assert_eq!(second.body.len(), 5_000);
    assert_eq!(used + rest, buf.len());
}

#[test]
fn head_has_no_body_and_garbage_is_400() {
    let server = serve(&fixture(), "127.0.0.1:0", ShapingConfig::disabled()).unwrap();
    let addr = server.local_addr();
    let mut s = TcpStream::connect(addr).unwrap();
    s.write_all(b"HEAD /blob.bin HTTP/1.1\r\nHost: a.test\r\nConnection: close\r\n\r\n").unwrap();
    let mut buf = Vec::new();
    s.read_to_end(&mut buf).unwrap();
    let text = String::from_utf8_lossy(&buf);
    assert!(text.starts_with("HTTP/1.1 200"));
    assert!(text.contains("Content-Length: 5000"));
    assert!(text.ends_with("\r\n\r\n"));

    let bad = request(addr, "this is not http\r\n\r\n");
    assert_eq!(bad.status, 400);
}

#[test]
fn shaping_delays_delivery_and_validates() {
    let server = serve(&fixture(), "127.0.0.1:0", ShapingConfig::shaped(10_000.0, 0.2)).unwrap();
    let start = Instant::now();
    let blob = get(server.local_addr(), "/blob.bin", "a.test");
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(blob.body.len(), 5_000);
    // Half an RTT before the head, then 5000 B at 10000 B/s.
    assert!(elapsed >= 0.6, "took {elapsed}");
    assert!(elapsed < 1.5, "took {elapsed}");

    let err = serve(&fixture(), "127.0.0.1:0", ShapingConfig::shaped(0.0, 0.1)).err().unwrap();
    assert!(matches!(err, ReplayError::InvalidShaping(_)));
}

#[test]
fn occupied_port_is_a_bind_error() {
    let first = serve(&fixture(), "127.0.0.1:0", ShapingConfig::disabled()).unwrap();
    let taken = first.local_addr().to_string();
    let err = serve(&fixture(), &taken, ShapingConfig::disabled()).err().unwrap();
    assert!(matches!(err, ReplayError::BindError { .. }));
}
