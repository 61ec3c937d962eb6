//! Minimal SVG charts: axes, points, lines, bars and labels.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

pub const GROUND: &str = "#1f77b4";
pub const FLIGHT: &str = "#d62728";
pub const NEUTRAL: &str = "#7f7f7f";
pub const PALETTE: [&str; 7] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn tick_label(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(t);
        t += step;
    }
    out
}

pub struct Chart {
    body: String,
    x: (f64, f64),
    y: (f64, f64),
}

impl Chart {
    /// Chart with data ranges padded by 5 % and axes drawn.
    pub fn new(title: &str, xlabel: &str, ylabel: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| {
            let (lo, hi) = if lo.is_finite() && hi.is_finite() { (lo, hi) } else { (0.0, 1.0) };
            let span = if hi > lo { hi - lo } else { 1.0 };
            (lo - 0.05 * span, hi + 0.05 * span)
        };
        let mut c = Chart {
            body: String::new(),
            x: pad(x),
            y: pad(y),
        };
        c.axes(title, xlabel, ylabel);
        c
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }

    fn axes(&mut self, title: &str, xlabel: &str, ylabel: &str) {
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
        let _ = write!(
            self.body,
            r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for t in nice_ticks(self.x.0, self.x.1) {
            let p = num(self.px(t));
            let _ = write!(
                self.body,
                r#"<line x1="{p}" y1="{y0}" x2="{p}" y2="{}" stroke="black"/><text x="{p}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
                y0 + 5.0,
                y0 + 18.0,
                tick_label(t)
            );
        }
        for t in nice_ticks(self.y.0, self.y.1) {
            let p = num(self.py(t));
            let _ = write!(
                self.body,
                r#"<line x1="{}" y1="{p}" x2="{x0}" y2="{p}" stroke="black"/><text x="{}" y="{p}" font-size="11" text-anchor="end" dominant-baseline="middle">{}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                tick_label(t)
            );
        }
        let _ = write!(
            self.body,
            r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text><text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text><text x="16" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            W / 2.0,
            esc(title),
            (x0 + x1) / 2.0,
            H - 12.0,
            esc(xlabel),
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            esc(ylabel)
        );
    }

    pub fn point(&mut self, x: f64, y: f64, color: &str) {
        let _ = write!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="4" fill="{color}" fill-opacity="0.8"/>"#,
            num(self.px(x)),
            num(self.py(y))
        );
    }

    pub fn label(&mut self, x: f64, y: f64, text: &str) {
        let _ = write!(
            self.body,
            r#"<text x="{}" y="{}" font-size="10">{}</text>"#,
            num(self.px(x) + 5.0),
            num(self.py(y) - 5.0),
            esc(text)
        );
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{},{}", num(self.px(x)), num(self.py(y))))
            .collect();
        let dash = if dashed { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = write!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            coords.join(" ")
        );
    }

    pub fn vline(&mut self, x: f64) {
        let (lo, hi) = self.y;
        self.polyline(&[(x, lo), (x, hi)], NEUTRAL, true);
    }

    pub fn hline(&mut self, y: f64) {
        let (lo, hi) = self.x;
        self.polyline(&[(lo, y), (hi, y)], NEUTRAL, true);
    }

    /// Legend entries stacked in the top-left corner of the plot area.
    pub fn legend(&mut self, entries: &[(&str, &str)]) {
        for (i, (text, color)) in entries.iter().enumerate() {
            let y = TOP + 16.0 + 16.0 * i as f64;
            let _ = write!(
                self.body,
                r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}" font-size="11">{}</text>"#,
                LEFT + 10.0,
                y - 9.0,
                LEFT + 25.0,
                y,
                esc(text)
            );
        }
    }

    pub fn finish(self) -> String {
        wrap(&self.body)
    }
}

fn wrap(body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}\n</svg>\n"
    )
}

/// Horizontal bar chart, first entry on top.
pub fn bar_chart(title: &str, xlabel: &str, bars: &[(String, f64)]) -> String {
    let mut body = String::new();
    let n = bars.len().max(1) as f64;
    let max = bars.iter().map(|b| b.1).fold(0.0, f64::max).max(1e-300);
    let left = 110.0;
    let width = W - left - 40.0;
    let row = (H - TOP - BOTTOM) / n;
    let _ = write!(
        body,
        r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text><text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        W / 2.0,
        esc(title),
        left + width / 2.0,
        H - 12.0,
        esc(xlabel)
    );
    for (i, (name, v)) in bars.iter().enumerate() {
        let y = TOP + row * i as f64;
        let w = (v / max).max(0.0) * width;
        let _ = write!(
            body,
            r#"<rect x="{left}" y="{}" width="{}" height="{}" fill="{GROUND}"/><text x="{}" y="{}" font-size="11" text-anchor="end" dominant-baseline="middle">{}</text><text x="{}" y="{}" font-size="10" dominant-baseline="middle">{}</text>"#,
            num(y + row * 0.1),
            num(w),
            num(row * 0.8),
            left - 6.0,
            num(y + row / 2.0),
            esc(name),
            num(left + w + 4.0),
            num(y + row / 2.0),
            crate::format::sig6(*v)
        );
    }
    wrap(&body)
}

/// Circular network layout; edge width follows |r|, colour its sign.
pub fn network(title: &str, nodes: &[String], edges: &[(usize, usize, f64)]) -> String {
    let mut body = String::new();
    let (cx, cy, rad) = (W / 2.0, (H + TOP) / 2.0 - 10.0, (H - TOP) / 2.0 - 50.0);
    let n = nodes.len().max(1) as f64;
    let pos: Vec<(f64, f64)> = (0..nodes.len())
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n - std::f64::consts::FRAC_PI_2;
            (cx + rad * a.cos(), cy + rad * a.sin())
        })
        .collect();
    let _ = write!(
        body,
        r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
        W / 2.0,
        esc(title)
    );
    for &(a, b, r) in edges {
        let color = if r >= 0.0 { FLIGHT } else { GROUND };
        let _ = write!(
            body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-opacity="0.6" stroke-width="{}"/>"#,
            num(pos[a].0),
            num(pos[a].1),
            num(pos[b].0),
            num(pos[b].1),
            num(0.5 + 3.0 * r.abs())
        );
    }
    for (name, (x, y)) in nodes.iter().zip(&pos) {
        let _ = write!(
            body,
            r#"<circle cx="{}" cy="{}" r="6" fill="{NEUTRAL}"/><text x="{}" y="{}" font-size="10" text-anchor="middle">{}</text>"#,
            num(*x),
            num(*y),
            num(*x),
            num(y - 9.0),
            esc(name)
        );
    }
    wrap(&body)
}
