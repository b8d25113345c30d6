//! Deterministic event-driven page-load simulator.
//!
//! Network model: every fetch first spends one RTT in request latency, then
//! transfers on a downlink shared fairly among all responses currently
//! transferring. At most `max_connections_per_host` fetches are active per
//! host; the rest wait in a per-host FIFO.
//!
//! Document model: parsing starts once the root HTML has fully arrived and
//! proceeds at a fixed byte rate. Synchronous and inline scripts block the
//! parser until executed; async scripts run when fetched and the main thread
//! is free; deferred scripts run in document order after parsing ends.
//! Script execution is serialized on a single main thread.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::url_host;
use crate::pagemodel::{self, ResourceGraph, ResourceKind, VisualElement};

/// Bytes still in flight below this are treated as delivered.
const BYTE_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkProfile {
    pub name: String,
    pub bandwidth_bytes_per_sec: f64,
    pub rtt_seconds: f64,
    #[serde(default = "default_connections")]
    pub max_connections_per_host: usize,
}

fn default_connections() -> usize {
    6
}

impl NetworkProfile {
    /// 1.6 Mbps downlink, 400 ms RTT.
    pub fn three_g() -> Self {
        NetworkProfile {
            name: "3g".to_string(),
            bandwidth_bytes_per_sec: 200_000.0,
            rtt_seconds: 0.4,
            max_connections_per_host: 6,
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "3g" => Some(Self::three_g()),
            "4g" => Some(NetworkProfile {
                name: "4g".to_string(),
                bandwidth_bytes_per_sec: 1_125_000.0,
                rtt_seconds: 0.17,
                max_connections_per_host: 6,
            }),
            "cable" => Some(NetworkProfile {
                name: "cable".to_string(),
                bandwidth_bytes_per_sec: 625_000.0,
                rtt_seconds: 0.028,
                max_connections_per_host: 6,
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.bandwidth_bytes_per_sec > 0.0 && self.bandwidth_bytes_per_sec.is_finite()) {
            return Err(SimError::InvalidProfile(format!(
                "network {}: bandwidth must be positive",
                self.name
            )));
        }
        if !(self.rtt_seconds >= 0.0 && self.rtt_seconds.is_finite()) {
            return Err(SimError::InvalidProfile(format!(
                "network {}: rtt must be non-negative",
                self.name
            )));
        }
        if self.max_connections_per_host == 0 {
            return Err(SimError::InvalidProfile(format!(
                "network {}: max_connections_per_host must be positive",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostCoefficients {
    pub alpha_cpu: f64,
    pub beta_bytes: f64,
}

impl Default for CostCoefficients {
    fn default() -> Self {
        CostCoefficients {
            alpha_cpu: 1.0,
            beta_bytes: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    pub js_exec_bytes_per_sec: f64,
    pub html_parse_bytes_per_sec: f64,
    #[serde(default)]
    pub cost_coefficients: CostCoefficients,
}

impl DeviceProfile {
    pub fn lowend() -> Self {
        DeviceProfile {
            name: "lowend".to_string(),
            js_exec_bytes_per_sec: 100_000.0,
            html_parse_bytes_per_sec: 2_000_000.0,
            cost_coefficients: CostCoefficients::default(),
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "lowend" => Some(Self::lowend()),
            "desktop" => Some(DeviceProfile {
                name: "desktop".to_string(),
                js_exec_bytes_per_sec: 1_000_000.0,
                html_parse_bytes_per_sec: 20_000_000.0,
                cost_coefficients: CostCoefficients::default(),
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.js_exec_bytes_per_sec) || !ok(self.html_parse_bytes_per_sec) {
            return Err(SimError::InvalidProfile(format!(
                "device {}: rates must be positive",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageMetrics {
    pub fcp_seconds: f64,
    pub plt_seconds: f64,
    pub speed_index_seconds: f64,
    pub js_processing_seconds: f64,
    pub page_size_bytes: u64,
    pub request_count: u64,
    pub cpu_proxy_seconds: f64,
    pub energy_proxy_units: f64,
    pub memory_proxy_bytes: u64,
    /// `(time, visual completeness)` after each paint.
    pub paint_timeline: Vec<(f64, f64)>,
    pub zero_visual: bool,
}

impl PageMetrics {
    /// Value of one of the six compared metrics by name.
    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "fcp" => self.fcp_seconds,
            "speed_index" => self.speed_index_seconds,
            "plt" => self.plt_seconds,
            "page_size" => self.page_size_bytes as f64,
            "request_count" => self.request_count as f64,
            "js_processing" => self.js_processing_seconds,
            _ => return None,
        })
    }
}

/// Anything that can turn a page graph into measurements. The simulator is the
/// built-in agent; device-backed agents plug in here.
pub trait MeasurementAgent: Send + Sync {
    fn measure(&self, graph: &ResourceGraph, net: &NetworkProfile, dev: &DeviceProfile) -> Result<PageMetrics, SimError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Simulator;

impl MeasurementAgent for Simulator {
    fn measure(&self, graph: &ResourceGraph, net: &NetworkProfile, dev: &DeviceProfile) -> Result<PageMetrics, SimError> {
        simulate_load(graph, net, dev)
    }
}

/// Area above a right-continuous visual-completeness step function up to the last paint.
/// An empty timeline is a zero-visual page, whose speed index is `fcp`.
pub fn speed_index(paint_timeline: &[(f64, f64)], fcp: f64) -> f64 {
    if paint_timeline.is_empty() {
        return fcp;
    }
    let mut area = 0.0;
    let (mut prev_t, mut prev_vc) = (0.0, 0.0);
    for &(t, vc) in paint_timeline {
        area += (1.0 - prev_vc) * (t - prev_t);
        prev_t = t;
        prev_vc = vc;
    }
    area
}

// ---------------------------------------------------------------------------
// Network

#[derive(Debug, Clone, Copy, PartialEq)]
enum FetchState {
    Queued,
    Latency { until: f64 },
    Transfer { remaining: f64 },
    Done,
}

#[derive(Debug)]
struct Fetch {
    host: String,
    bytes: u64,
    state: FetchState,
    transfer_at: Option<f64>,
    done_at: Option<f64>,
}

struct Network<'a> {
    profile: &'a NetworkProfile,
    fetches: Vec<Fetch>,
    by_url: HashMap<String, usize>,
    active: BTreeMap<String, usize>,
    queued: BTreeMap<String, VecDeque<usize>>,
}

impl<'a> Network<'a> {
    fn new(profile: &'a NetworkProfile) -> Self {
        Network {
            profile,
            fetches: Vec::new(),
            by_url: HashMap::new(),
            active: BTreeMap::new(),
            queued: BTreeMap::new(),
        }
    }

    /// Issues a fetch unless this URL was already requested; returns the fetch id.
    fn issue(&mut self, url: &str, bytes: u64, now: f64) -> usize {
        if let Some(&id) = self.by_url.get(url) {
            return id;
        }
        let id = self.fetches.len();
        let host = url_host(url).unwrap_or_default();
        self.fetches.push(Fetch {
            host: host.clone(),
            bytes,
            state: FetchState::Queued,
            transfer_at: None,
            done_at: None,
        });
        self.by_url.insert(url.to_string(), id);
        let active = self.active.entry(host.clone()).or_insert(0);
        if *active < self.profile.max_connections_per_host {
            *active += 1;
            self.fetches[id].state = FetchState::Latency {
                until: now + self.profile.rtt_seconds,
            };
        } else {
            self.queued.entry(host).or_default().push_back(id);
        }
        id
    }

    fn transferring(&self) -> usize {
        self.fetches
            .iter()
            .filter(|f| matches!(f.state, FetchState::Transfer { .. }))
            .count()
    }

    fn share(&self) -> f64 {
        self.profile.bandwidth_bytes_per_sec / self.transferring().max(1) as f64
    }

    fn next_event(&self, now: f64) -> Option<f64> {
        let share = self.share();
        self.fetches
            .iter()
            .filter_map(|f| match f.state {
                FetchState::Latency { until } => Some(until),
                FetchState::Transfer { remaining } => Some(now + remaining / share),
                _ => None,
            })
            .min_by(f64::total_cmp)
    }

    fn advance(&mut self, dt: f64) {
        if dt <= 0.0 {
            return;
        }
        let delivered = self.share() * dt;
        for f in &mut self.fetches {
            if let FetchState::Transfer { remaining } = &mut f.state {
                *remaining = (*remaining - delivered).max(0.0);
            }
        }
    }

    /// Moves due fetches between phases; returns ids completed at `now` in id order.
    fn settle(&mut self, now: f64) -> Vec<usize> {
        let mut completed = Vec::new();
        for id in 0..self.fetches.len() {
            let f = &mut self.fetches[id];
            match f.state {
                FetchState::Latency { until } if until <= now => {
                    f.transfer_at = Some(now);
                    if f.bytes == 0 {
                        f.state = FetchState::Done;
                        completed.push(id);
                    } else {
                        f.state = FetchState::Transfer {
                            remaining: f.bytes as f64,
                        };
                    }
                }
                FetchState::Transfer { remaining } if remaining <= BYTE_EPSILON => {
                    f.state = FetchState::Done;
                    completed.push(id);
                }
                _ => {}
            }
        }
        for &id in &completed {
            self.fetches[id].done_at = Some(now);
            let host = self.fetches[id].host.clone();
            let next = self.queued.get_mut(&host).and_then(VecDeque::pop_front);
            match next {
                Some(next) => {
                    self.fetches[next].state = FetchState::Latency {
                        until: now + self.profile.rtt_seconds,
                    };
                }
                None => *self.active.get_mut(&host).expect("active host") -= 1,
            }
        }
        completed
    }
}

// ---------------------------------------------------------------------------
// Simulation

#[derive(Debug, Clone, Copy, PartialEq)]
enum ParseItem {
    Resource(usize),
    Text(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Parser {
    WaitingForRoot,
    Running { pos: u64, since: f64 },
    Blocked { resource: usize },
    Finished,
}

#[derive(Debug, Clone, Copy)]
struct Task {
    resource: usize,
    duration: f64,
    deferred: bool,
}

struct Sim<'a> {
    graph: &'a ResourceGraph,
    dev: &'a DeviceProfile,
    net: Network<'a>,
    now: f64,
    items: Vec<(u64, usize, ParseItem)>,
    next_item: usize,
    parser: Parser,
    parse_end: Option<f64>,
    /// Resource index → fetch id.
    fetch_of: Vec<Option<usize>>,
    /// Fetch id → scripts waiting on it to become runnable.
    waiting: HashMap<usize, Vec<usize>>,
    pass_time: Vec<Option<f64>>,
    text_pass: Vec<Option<f64>>,
    exec_start: Vec<Option<f64>>,
    exec_end: Vec<Option<f64>>,
    ready: VecDeque<Task>,
    running: Option<(f64, Task)>,
    deferred: VecDeque<usize>,
    defer_in_flight: bool,
    js_total: f64,
}

impl<'a> Sim<'a> {
    fn new(graph: &'a ResourceGraph, net: &'a NetworkProfile, dev: &'a DeviceProfile) -> Self {
        let mut items: Vec<(u64, usize, ParseItem)> = graph
            .resources
            .iter()
            .enumerate()
            .map(|(i, r)| (r.offset.min(graph.root.bytes), r.discovery_index, ParseItem::Resource(i)))
            .chain(
                graph
                    .text_blocks
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (t.offset.min(graph.root.bytes), t.discovery_index, ParseItem::Text(i))),
            )
            .collect();
        items.sort_by_key(|&(offset, index, _)| (offset, index));
        // A later item never sits at an earlier offset than its predecessor.
        let mut floor = 0;
        for item in &mut items {
            item.0 = item.0.max(floor);
            floor = item.0;
        }
        let n = graph.resources.len();
        Sim {
            graph,
            dev,
            net: Network::new(net),
            now: 0.0,
            items,
            next_item: 0,
            parser: Parser::WaitingForRoot,
            parse_end: None,
            fetch_of: vec![None; n],
            waiting: HashMap::new(),
            pass_time: vec![None; n],
            text_pass: vec![None; graph.text_blocks.len()],
            exec_start: vec![None; n],
            exec_end: vec![None; n],
            ready: VecDeque::new(),
            running: None,
            deferred: VecDeque::new(),
            defer_in_flight: false,
            js_total: 0.0,
        }
    }

    fn exec_duration(&self, resource: usize) -> f64 {
        self.graph.resources[resource].bytes as f64 / self.dev.js_exec_bytes_per_sec
    }

    fn parser_next(&self) -> Option<f64> {
        let Parser::Running { pos, since } = self.parser else {
            return None;
        };
        let target = match self.items.get(self.next_item) {
            Some(&(offset, _, _)) => offset,
            None => self.graph.root.bytes,
        };
        Some(since + target.saturating_sub(pos) as f64 / self.dev.html_parse_bytes_per_sec)
    }

    fn fetch_done(&self, resource: usize) -> bool {
        self.fetch_of[resource]
            .map(|f| self.net.fetches[f].done_at.is_some())
            .unwrap_or(false)
    }

    fn make_runnable(&mut self, resource: usize, deferred: bool) {
        let duration = self.exec_duration(resource);
        self.ready.push_back(Task {
            resource,
            duration,
            deferred,
        });
    }

    fn run(mut self) -> Outcome {
        let root_fetch = self.net.issue(&self.graph.root.url, self.graph.root.bytes, 0.0);
        loop {
            self.step(root_fetch);
            let next = [
                self.net.next_event(self.now),
                self.parser_next(),
                self.running.map(|(end, _)| end),
            ]
            .into_iter()
            .flatten()
            .min_by(f64::total_cmp);
            let Some(next) = next else { break };
            let next = next.max(self.now);
            self.net.advance(next - self.now);
            self.now = next;
        }
        self.finish()
    }

    /// Processes everything due at `self.now`.
    fn step(&mut self, root_fetch: usize) {
        let now = self.now;
        for id in self.net.settle(now) {
            if id == root_fetch && self.parser == Parser::WaitingForRoot {
                self.parser = Parser::Running { pos: 0, since: now };
            }
            for resource in self.waiting.remove(&id).unwrap_or_default() {
                self.make_runnable(resource, false);
            }
        }

        if let Some((end, task)) = self.running {
            if end <= now {
                self.running = None;
                self.exec_end[task.resource] = Some(end);
                if task.deferred {
                    self.defer_in_flight = false;
                }
                if self.parser == (Parser::Blocked { resource: task.resource }) {
                    self.parser = Parser::Running {
                        pos: self.graph.resources[task.resource].offset.min(self.graph.root.bytes),
                        since: end,
                    };
                }
            }
        }

        while let Some(t) = self.parser_next() {
            if t > now {
                break;
            }
            self.parser_advance(now);
        }

        if self.parse_end.is_some() && !self.defer_in_flight {
            if let Some(&next) = self.deferred.front() {
                if self.fetch_done(next) {
                    self.deferred.pop_front();
                    self.defer_in_flight = true;
                    self.make_runnable(next, true);
                }
            }
        }

        if self.running.is_none() {
            if let Some(task) = self.ready.pop_front() {
                self.js_total += task.duration;
                self.exec_start[task.resource] = Some(now);
                self.running = Some((now + task.duration, task));
            }
        }
    }

    fn parser_advance(&mut self, now: f64) {
        let Some(&(offset, _, item)) = self.items.get(self.next_item) else {
            self.parser = Parser::Finished;
            self.parse_end = Some(now);
            return;
        };
        self.next_item += 1;
        self.parser = Parser::Running { pos: offset, since: now };
        let resource = match item {
            ParseItem::Text(t) => {
                self.text_pass[t] = Some(now);
                return;
            }
            ParseItem::Resource(r) => r,
        };
        self.pass_time[resource] = Some(now);
        let res = &self.graph.resources[resource];
        if res.kind == ResourceKind::ScriptInline {
            self.make_runnable(resource, false);
            self.parser = Parser::Blocked { resource };
            return;
        }
        let fetch = self.net.issue(&res.url, res.bytes, now);
        self.fetch_of[resource] = Some(fetch);
        let fetched = self.net.fetches[fetch].done_at.is_some();
        match res.kind {
            ResourceKind::ScriptSync | ResourceKind::ScriptAsync => {
                if res.kind == ResourceKind::ScriptSync {
                    self.parser = Parser::Blocked { resource };
                }
                if fetched {
                    self.make_runnable(resource, false);
                } else {
                    self.waiting.entry(fetch).or_default().push(resource);
                }
            }
            ResourceKind::ScriptDefer => self.deferred.push_back(resource),
            _ => {}
        }
    }

    fn finish(self) -> Outcome {
        let fetch_done: Vec<Option<f64>> = self
            .fetch_of
            .iter()
            .map(|f| f.and_then(|id| self.net.fetches[id].done_at))
            .collect();
        let transfer_at = self
            .fetch_of
            .iter()
            .map(|f| f.and_then(|id| self.net.fetches[id].transfer_at))
            .collect();
        Outcome {
            transfer_at,
            exec_start: self.exec_start,
            fetch_done,
            pass_time: self.pass_time,
            text_pass: self.text_pass,
            exec_end: self.exec_end,
            all_fetch_done: self.net.fetches.iter().filter_map(|f| f.done_at).collect(),
            fetched_bytes: self.net.fetches.iter().map(|f| f.bytes).sum(),
            request_count: self.net.fetches.len() as u64,
            parse_end: self.parse_end,
            js_total: self.js_total,
        }
    }
}

struct Outcome {
    transfer_at: Vec<Option<f64>>,
    exec_start: Vec<Option<f64>>,
    fetch_done: Vec<Option<f64>>,
    pass_time: Vec<Option<f64>>,
    text_pass: Vec<Option<f64>>,
    exec_end: Vec<Option<f64>>,
    all_fetch_done: Vec<f64>,
    fetched_bytes: u64,
    request_count: u64,
    parse_end: Option<f64>,
    js_total: f64,
}

/// When each sub-resource was reached, transferred and executed during one simulated load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceTiming {
    pub url: String,
    pub kind: ResourceKind,
    /// Parser reached the element.
    pub discovered: Option<f64>,
    /// Latency phase ended and bytes started flowing.
    pub transfer_start: Option<f64>,
    pub fetched: Option<f64>,
    pub exec_start: Option<f64>,
    pub exec_end: Option<f64>,
}

/// Simulates one page load and derives its timing, size and cost metrics.
pub fn simulate_load(graph: &ResourceGraph, net: &NetworkProfile, dev: &DeviceProfile) -> Result<PageMetrics, SimError> {
    trace_load(graph, net, dev).map(|(m, _)| m)
}

/// [`simulate_load`] plus the per-resource timeline, in graph order.
pub fn trace_load(
    graph: &ResourceGraph,
    net: &NetworkProfile,
    dev: &DeviceProfile,
) -> Result<(PageMetrics, Vec<ResourceTiming>), SimError> {
    net.validate()?;
    dev.validate()?;
    let out = Sim::new(graph, net, dev).run();

    let plt = out
        .all_fetch_done
        .iter()
        .chain(out.exec_end.iter().flatten())
        .chain(out.parse_end.iter())
        .copied()
        .fold(0.0, f64::max);

    // Latest completion among render-blocking resources discovered before each item.
    let mut blockers: Vec<(usize, f64)> = graph
        .resources
        .iter()
        .enumerate()
        .filter(|(_, r)| r.render_blocking)
        .map(|(i, r)| {
            let done = match r.kind {
                ResourceKind::ScriptSync => out.exec_end[i],
                _ => out.fetch_done[i],
            };
            (r.discovery_index, done.unwrap_or(plt))
        })
        .collect();
    blockers.sort_by_key(|&(d, _)| d);
    let gate = |discovery_index: usize| {
        blockers
            .iter()
            .take_while(|&&(d, _)| d < discovery_index)
            .map(|&(_, t)| t)
            .fold(0.0, f64::max)
    };

    let weights = pagemodel::visual_weights(graph);
    let mut paints: Vec<(f64, f64)> = weights
        .weights
        .iter()
        .map(|&(element, w)| {
            let t = match element {
                VisualElement::Text(i) => {
                    let block = &graph.text_blocks[i];
                    out.text_pass[i].unwrap_or(plt).max(gate(block.discovery_index))
                }
                VisualElement::Image(i) => {
                    let r = &graph.resources[i];
                    out.pass_time[i]
                        .unwrap_or(plt)
                        .max(out.fetch_done[i].unwrap_or(plt))
                        .max(gate(r.discovery_index))
                }
            };
            (t, w)
        })
        .collect();
    paints.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut timeline: Vec<(f64, f64)> = Vec::new();
    let mut painted = 0.0;
    for (t, w) in paints {
        painted += w;
        let vc = (painted / weights.total).min(1.0);
        match timeline.last_mut() {
            Some(last) if last.0 == t => last.1 = vc,
            _ => timeline.push((t, vc)),
        }
    }
    if let Some(last) = timeline.last_mut() {
        last.1 = 1.0;
    }

    let (fcp, si) = if weights.zero_visual {
        (plt, plt)
    } else {
        let fcp = timeline[0].0;
        (fcp, speed_index(&timeline, fcp))
    };

    let cpu = out.js_total + graph.root.bytes as f64 / dev.html_parse_bytes_per_sec;
    let coeffs = dev.cost_coefficients;
    let metrics = PageMetrics {
        fcp_seconds: fcp,
        plt_seconds: plt,
        speed_index_seconds: si,
        js_processing_seconds: out.js_total,
        page_size_bytes: out.fetched_bytes,
        request_count: out.request_count,
        cpu_proxy_seconds: cpu,
        energy_proxy_units: coeffs.alpha_cpu * cpu + coeffs.beta_bytes * out.fetched_bytes as f64,
        memory_proxy_bytes: out.fetched_bytes,
        paint_timeline: timeline,
        zero_visual: weights.zero_visual,
    };
    let trace = graph
        .resources
        .iter()
        .enumerate()
        .map(|(i, r)| ResourceTiming {
            url: r.url.clone(),
            kind: r.kind,
            discovered: out.pass_time[i],
            transfer_start: out.transfer_at[i],
            fetched: out.fetch_done[i],
            exec_start: out.exec_start[i],
            exec_end: out.exec_end[i],
        })
        .collect();
    Ok((metrics, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_index_examples() {
        assert_eq!(speed_index(&[(2.0, 1.0)], 2.0), 2.0);
        assert_eq!(speed_index(&[(1.0, 0.5), (3.0, 1.0)], 1.0), 2.0);
        assert_eq!(speed_index(&[(0.0, 1.0)], 0.0), 0.0);
        assert_eq!(speed_index(&[], 0.7), 0.7);
    }

    #[test]
    fn three_g_profile() {
        let p = NetworkProfile::builtin("3g").unwrap();
        assert_eq!(p.bandwidth_bytes_per_sec, 1.6e6 / 8.0);
        assert_eq!(p.rtt_seconds, 0.4);
        assert_eq!(p.max_connections_per_host, 6);
    }

    #[test]
    fn invalid_profiles_rejected() {
        let mut net = NetworkProfile::three_g();
        net.bandwidth_bytes_per_sec = 0.0;
        assert!(net.validate().is_err());
        let mut dev = DeviceProfile::lowend();
        dev.js_exec_bytes_per_sec = -1.0;
        assert!(dev.validate().is_err());
    }
}
