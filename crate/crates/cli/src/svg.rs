//! Minimal dependency-free SVG charts.

use std::fmt::Write;

use crate::output::fmt_num;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Linear map of a data range onto the plot area.
struct Scale {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, a, b }
    }

    fn at(&self, v: f64) -> String {
        fmt_num(self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a))
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

struct Canvas {
    body: String,
}

impl Canvas {
    fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(body, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#);
        let _ = writeln!(body, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(body, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
        let _ = writeln!(body, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 8.0, escape(x_label));
        let _ = writeln!(body, r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#, H / 2.0, H / 2.0, escape(y_label));
        let _ = writeln!(
            body,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * MARGIN,
            H - 2.0 * MARGIN
        );
        Self { body }
    }

    fn y_ticks(&mut self, ys: &Scale) {
        for i in 0..=4 {
            let v = ys.lo + (ys.hi - ys.lo) * i as f64 / 4.0;
            let _ = writeln!(self.body, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, MARGIN - 4.0, ys.at(v), fmt_num(v));
        }
    }

    fn legend(&mut self, names: &[String]) {
        for (i, n) in names.iter().enumerate() {
            let y = MARGIN + 12.0 + 14.0 * i as f64;
            let _ = writeln!(self.body, r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/>"#, W - MARGIN - 120.0, y - 9.0, color(i));
            let _ = writeln!(self.body, r#"<text x="{}" y="{y}">{}</text>"#, W - MARGIN - 106.0, escape(n));
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

/// Polylines sharing one pair of axes.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut c = Canvas::new(title, x_label, y_label);
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    if x0.is_finite() {
        let xs = Scale::new(x0, x1, MARGIN, W - MARGIN);
        let ys = Scale::new(y0.min(0.0), y1, H - MARGIN, MARGIN);
        c.y_ticks(&ys);
        for (i, (_, pts)) in series.iter().enumerate() {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", xs.at(x), ys.at(y))).collect();
            let _ = writeln!(c.body, r#"<polyline fill="none" stroke="{}" points="{}"/>"#, color(i), path.join(" "));
        }
    }
    c.legend(&series.iter().map(|s| s.0.clone()).collect::<Vec<_>>());
    c.finish()
}

/// ROC curves on the unit square with the chance diagonal.
pub fn roc_chart(title: &str, curves: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut c = Canvas::new(title, "false positive rate", "true positive rate");
    let s = Scale::new(0.0, 1.0, MARGIN, W - MARGIN);
    let ys = Scale::new(0.0, 1.0, H - MARGIN, MARGIN);
    c.y_ticks(&ys);
    let _ = writeln!(
        c.body,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4"/>"##,
        s.at(0.0),
        ys.at(0.0),
        s.at(1.0),
        ys.at(1.0)
    );
    for (i, (_, pts)) in curves.iter().enumerate() {
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", s.at(x), ys.at(y))).collect();
        let _ = writeln!(c.body, r#"<polyline fill="none" stroke="{}" points="{}"/>"#, color(i), path.join(" "));
    }
    c.legend(&curves.iter().map(|s| s.0.clone()).collect::<Vec<_>>());
    c.finish()
}

/// Horizontal bars, drawn in the given order.
pub fn bar_chart(title: &str, x_label: &str, bars: &[(String, f64)]) -> String {
    let mut c = Canvas::new(title, x_label, "");
    let (_, hi) = bounds(bars.iter().map(|b| b.1));
    let xs = Scale::new(0.0, if hi > 0.0 { hi } else { 1.0 }, MARGIN + 60.0, W - MARGIN);
    let step = (H - 2.0 * MARGIN) / bars.len().max(1) as f64;
    for (i, (name, v)) in bars.iter().enumerate() {
        let y = MARGIN + step * i as f64;
        let _ = writeln!(
            c.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            xs.at(0.0),
            fmt_num(y + step * 0.15),
            fmt_num(xs.at(*v).parse::<f64>().unwrap_or(0.0) - (MARGIN + 60.0)),
            fmt_num(step * 0.7),
            color(0)
        );
        let _ = writeln!(c.body, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, MARGIN + 56.0, fmt_num(y + step * 0.6), escape(name));
    }
    c.finish()
}

/// Five-number summary for one box.
pub struct BoxStats {
    pub name: String,
    pub min: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub max: f64,
}

/// Box-and-whisker plot, one box per group; colour by `series` index.
pub fn box_chart(title: &str, y_label: &str, boxes: &[(usize, BoxStats)]) -> String {
    let mut c = Canvas::new(title, "", y_label);
    let (lo, hi) = bounds(boxes.iter().flat_map(|b| [b.1.min, b.1.max]));
    if lo.is_finite() {
        let ys = Scale::new(lo, hi, H - MARGIN, MARGIN);
        c.y_ticks(&ys);
        let step = (W - 2.0 * MARGIN) / boxes.len().max(1) as f64;
        for (i, (series, b)) in boxes.iter().enumerate() {
            let x = MARGIN + step * (i as f64 + 0.5);
            let (l, r) = (fmt_num(x - step * 0.3), fmt_num(x + step * 0.3));
            let xm = fmt_num(x);
            let col = color(*series);
            let _ = writeln!(c.body, r#"<line x1="{xm}" y1="{}" x2="{xm}" y2="{}" stroke="{col}"/>"#, ys.at(b.min), ys.at(b.max));
            let top = ys.at(b.q3);
            let height = fmt_num(ys.at(b.q1).parse::<f64>().unwrap_or(0.0) - top.parse::<f64>().unwrap_or(0.0));
            let _ = writeln!(c.body, r#"<rect x="{l}" y="{top}" width="{}" height="{height}" fill="white" stroke="{col}"/>"#, fmt_num(step * 0.6));
            let _ = writeln!(c.body, r#"<line x1="{l}" y1="{m}" x2="{r}" y2="{m}" stroke="{col}" stroke-width="2"/>"#, m = ys.at(b.q2));
            let _ = writeln!(
                c.body,
                r#"<text x="{xm}" y="{}" text-anchor="end" transform="rotate(-45 {xm} {})">{}</text>"#,
                H - MARGIN + 12.0,
                H - MARGIN + 12.0,
                escape(&b.name)
            );
        }
    }
    c.finish()
}
