//! Minimal SVG chart builders. Output depends only on the input values.

use std::fmt::Write;

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 300.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 44.0;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick label with at most 4 significant decimals, trailing zeros trimmed.
pub fn tick_label(v: f64) -> String {
    let s = if v.abs() >= 1e5 || (v != 0.0 && v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    };
    if s.contains('.') && !s.contains('e') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" { "0".to_string() } else { t.to_string() }
    } else {
        s
    }
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        let (x_min, x_max) = widen(x_min, x_max);
        let (y_min, y_max) = widen(y_min, y_max);
        Frame { x_min, x_max, y_min, y_max }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str, x_ticks: bool) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = write!(
            out,
            r##"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="#333"/><line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="#333"/>"##
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            if x_ticks {
                let v = self.x_min + f * (self.x_max - self.x_min);
                let x = self.px(v);
                let _ = write!(
                    out,
                    r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"##,
                    y0 + 4.0,
                    y0 + 16.0,
                    tick_label(v)
                );
            }
            let v = self.y_min + f * (self.y_max - self.y_min);
            let y = self.py(v);
            let _ = write!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"##,
                x0 - 4.0,
                x0 - 6.0,
                y + 3.0,
                tick_label(v)
            );
        }
        let _ = write!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text><text x="12" y="{:.2}" font-size="11" text-anchor="middle" transform="rotate(-90 12 {:.2})">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 8.0,
            escape(x_label),
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
    }
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo > 0.0 {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    }
}

fn legend(out: &mut String, labels: &[String]) {
    for (i, label) in labels.iter().enumerate() {
        let y = TOP + 6.0 + i as f64 * 16.0;
        let x = WIDTH - RIGHT + 12.0;
        let _ = write!(
            out,
            r#"<rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            y - 8.0,
            PALETTE[i % PALETTE.len()],
            x + 14.0,
            y + 1.0,
            escape(label)
        );
    }
}

pub struct Series<'a> {
    pub label: String,
    pub ecdf: &'a [(f64, f64)],
}

/// One step polyline per series.
pub fn ecdf_chart(id: &str, x_label: &str, series: &[Series<'_>]) -> String {
    let xs = series.iter().flat_map(|s| s.ecdf.iter().map(|p| p.0));
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let frame = Frame::new(lo, hi, 0.0, 1.0);
    let mut out = format!(
        r#"<svg class="ecdf" data-metric="{}" xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#,
        escape(id)
    );
    frame.axes(&mut out, x_label, "CDF", true);
    for (i, s) in series.iter().enumerate() {
        let mut points = Vec::new();
        let mut prev = 0.0;
        points.push(format!("{:.2},{:.2}", frame.px(frame.x_min), frame.py(0.0)));
        for &(v, p) in s.ecdf {
            points.push(format!("{:.2},{:.2}", frame.px(v), frame.py(prev)));
            points.push(format!("{:.2},{:.2}", frame.px(v), frame.py(p)));
            prev = p;
        }
        points.push(format!("{:.2},{:.2}", frame.px(frame.x_max), frame.py(prev)));
        let _ = write!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" data-series="{}" points="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            escape(&s.label),
            points.join(" ")
        );
    }
    legend(&mut out, &series.iter().map(|s| s.label.clone()).collect::<Vec<_>>());
    out.push_str("</svg>");
    out
}

pub struct Bar {
    pub label: String,
    pub mean: f64,
    pub ci: (f64, f64),
}

/// Bars of the mean with a CI error bar each; zero-width intervals draw a flat bar.
pub fn bar_chart(id: &str, y_label: &str, bars: &[Bar]) -> String {
    let lo = bars.iter().map(|b| b.ci.0.min(b.mean)).fold(0.0, f64::min);
    let hi = bars.iter().map(|b| b.ci.1.max(b.mean)).fold(0.0, f64::max);
    let frame = Frame::new(0.0, 1.0, lo, hi);
    let mut out = format!(
        r#"<svg class="bars" data-metric="{}" xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#,
        escape(id)
    );
    frame.axes(&mut out, "", y_label, false);
    let slot = (WIDTH - LEFT - RIGHT) / bars.len().max(1) as f64;
    let zero = frame.py(0.0);
    for (i, b) in bars.iter().enumerate() {
        let x = LEFT + slot * i as f64 + slot * 0.2;
        let w = slot * 0.6;
        let y = frame.py(b.mean);
        let (top, height) = if y < zero { (y, zero - y) } else { (zero, y - zero) };
        let cx = x + w / 2.0;
        let (e_lo, e_hi) = (frame.py(b.ci.0), frame.py(b.ci.1));
        let _ = write!(
            out,
            r##"<rect x="{x:.2}" y="{top:.2}" width="{w:.2}" height="{height:.2}" fill="{}" data-label="{}"/><line class="errorbar" x1="{cx:.2}" y1="{e_lo:.2}" x2="{cx:.2}" y2="{e_hi:.2}" stroke="#000" data-height="{:.2}"/><line x1="{:.2}" y1="{e_lo:.2}" x2="{:.2}" y2="{e_lo:.2}" stroke="#000"/><line x1="{:.2}" y1="{e_hi:.2}" x2="{:.2}" y2="{e_hi:.2}" stroke="#000"/><text x="{cx:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"##,
            PALETTE[i % PALETTE.len()],
            escape(&b.label),
            (e_lo - e_hi).abs(),
            cx - 4.0,
            cx + 4.0,
            cx - 4.0,
            cx + 4.0,
            HEIGHT - BOTTOM + 14.0,
            escape(&b.label)
        );
    }
    out.push_str("</svg>");
    out
}
