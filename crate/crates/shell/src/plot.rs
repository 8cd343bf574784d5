//! Standalone SVG line and bar charts.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { name: name.into(), points }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

// Pads a degenerate range so that flat data still gets an axis.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

struct Frame {
    svg: String,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let mut svg = String::new();
        let _ = write!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = write!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = write!(
            svg,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            (LEFT + WIDTH - RIGHT) / 2.0,
            escape(title)
        );
        let (x0, y0, x1, y1) = (LEFT, HEIGHT - BOTTOM, WIDTH - RIGHT, TOP);
        let _ = write!(svg, r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#);
        let _ = write!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            escape(x_label)
        );
        let _ = write!(
            svg,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
        let mut frame = Frame { svg, x, y };
        for k in 0..=TICKS {
            let v = y.0 + (y.1 - y.0) * k as f64 / TICKS as f64;
            let py = frame.py(v);
            let _ = write!(
                frame.svg,
                r#"<path d="M{} {py:.2} L{x0} {py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                x0 - 7.0,
                py + 4.0,
                tick_label(v)
            );
        }
        frame
    }

    fn px(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn x_ticks(&mut self) {
        for k in 0..=TICKS {
            let v = self.x.0 + (self.x.1 - self.x.0) * k as f64 / TICKS as f64;
            let px = self.px(v);
            let y0 = HEIGHT - BOTTOM;
            let _ = write!(
                self.svg,
                r#"<path d="M{px:.2} {y0} L{px:.2} {}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
                y0 + 4.0,
                y0 + 18.0,
                tick_label(v)
            );
        }
    }

    fn legend(&mut self, k: usize, name: &str) {
        let y = TOP + 18.0 * k as f64;
        let x = WIDTH - RIGHT + 12.0;
        let _ = write!(
            self.svg,
            r#"<rect x="{x}" y="{y}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            COLORS[k % COLORS.len()],
            x + 18.0,
            y + 10.0,
            escape(name)
        );
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

/// One polyline per series, with markers at the data points.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let x = range(all().map(|p| p.0));
    let mut y = range(all().map(|p| p.1));
    if y.0 > 0.0 && y.0 < 0.5 * y.1 {
        y.0 = 0.0;
    }
    let mut frame = Frame::new(title, x_label, y_label, x, y);
    frame.x_ticks();
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        for (i, &(px, py)) in s.points.iter().enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if i == 0 { 'M' } else { 'L' }, frame.px(px), frame.py(py));
        }
        let _ = write!(frame.svg, r#"<path d="{}" stroke="{color}" stroke-width="2" fill="none"/>"#, d.trim_end());
        for &(px, py) in &s.points {
            let _ = write!(
                frame.svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                frame.px(px),
                frame.py(py)
            );
        }
        frame.legend(k, &s.name);
    }
    frame.finish()
}

/// Vertical bars, one group per label and one bar per series within a group.
pub fn bar_chart(title: &str, y_label: &str, labels: &[String], series: &[(String, Vec<f64>)]) -> String {
    let values = series.iter().flat_map(|s| s.1.iter().copied());
    let (lo, hi) = range(values.chain(std::iter::once(0.0)));
    let mut frame = Frame::new(title, "", y_label, (0.0, labels.len().max(1) as f64), (lo.min(0.0), hi));
    let group = frame.px(1.0) - frame.px(0.0);
    let bar = 0.8 * group / series.len().max(1) as f64;
    let zero = frame.py(0.0);
    for (i, label) in labels.iter().enumerate() {
        let left = frame.px(i as f64) + 0.1 * group;
        for (k, (_, vals)) in series.iter().enumerate() {
            let v = vals.get(i).copied().unwrap_or(0.0);
            let top = frame.py(v).min(zero);
            let h = (frame.py(v) - zero).abs();
            let _ = write!(
                frame.svg,
                r#"<rect x="{:.2}" y="{top:.2}" width="{bar:.2}" height="{h:.2}" fill="{}"/>"#,
                left + bar * k as f64,
                COLORS[k % COLORS.len()]
            );
        }
        let _ = write!(
            frame.svg,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            frame.px(i as f64 + 0.5),
            HEIGHT - BOTTOM + 18.0,
            escape(label)
        );
    }
    if series.len() > 1 {
        for (k, (name, _)) in series.iter().enumerate() {
            frame.legend(k, name);
        }
    }
    frame.finish()
}
