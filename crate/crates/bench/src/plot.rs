//! Self-contained SVG rendering of an [`AggregateCurve`]: one mean line and
//! one ±1 std band per algorithm.

use std::fmt::Write as _;
use std::path::Path;

use crate::aggregate::AggregateCurve;
use crate::error::{BenchError, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotOptions {
    pub log_y: bool,
    pub title: String,
    pub x_label: String,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn map(&self, v: f64, px_lo: f64, px_hi: f64) -> f64 {
        let (v, lo, hi) = if self.log {
            (v.max(f64::MIN_POSITIVE).log10(), self.lo.log10(), self.hi.log10())
        } else {
            (v, self.lo, self.hi)
        };
        let span = if hi > lo { hi - lo } else { 1.0 };
        px_lo + (v - lo) / span * (px_hi - px_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.log10().floor() as i32, self.hi.log10().ceil() as i32);
            (a..=b).map(|e| 10f64.powi(e)).filter(|&t| t >= self.lo && t <= self.hi).collect()
        } else {
            (0..=5).map(|k| self.lo + (self.hi - self.lo) * k as f64 / 5.0).collect()
        }
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

/// The SVG document as a string. Errors when there is nothing to draw.
pub fn render_svg(curve: &AggregateCurve, opts: &PlotOptions) -> Result<String> {
    if curve.is_empty() {
        return Err(BenchError::EmptyCurve("no bins or no algorithms".into()));
    }
    let finite = |v: &f64| v.is_finite();
    let x_hi = curve.bins.iter().copied().filter(finite).fold(0.0, f64::max);
    let x = Axis {
        lo: 0.0,
        hi: if x_hi > 0.0 { x_hi } else { 1.0 },
        log: false,
    };
    let uppers = curve
        .curves
        .iter()
        .flat_map(|c| c.mean.iter().zip(&c.std).map(|(m, s)| m + s))
        .filter(finite);
    let y_hi = uppers.fold(0.0, f64::max);
    let y = if opts.log_y {
        let lows = curve
            .curves
            .iter()
            .flat_map(|c| c.mean.iter().zip(&c.std).map(|(m, s)| if m - s > 0.0 { m - s } else { *m }))
            .filter(|v| v.is_finite() && *v > 0.0);
        let lo = lows.fold(f64::INFINITY, f64::min);
        let lo = if lo.is_finite() { 10f64.powf(lo.log10().floor()) } else { 1e-3 };
        let hi = if y_hi > lo { 10f64.powf(y_hi.log10().ceil()) } else { lo * 10.0 };
        Axis { lo, hi, log: true }
    } else {
        Axis {
            lo: 0.0,
            hi: if y_hi > 0.0 { y_hi * 1.05 } else { 1.0 },
            log: false,
        }
    };
    let (px0, px1) = (LEFT, WIDTH - RIGHT);
    let (py0, py1) = (HEIGHT - BOTTOM, TOP);
    let clamp_y = |v: f64| if y.log { v.max(y.lo) } else { v.max(0.0) };

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    if !opts.title.is_empty() {
        writeln!(
            s,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            (px0 + px1) / 2.0,
            escape(&opts.title)
        )
        .unwrap();
    }
    // axes
    writeln!(s, r#"<line x1="{px0}" y1="{py0}" x2="{px1}" y2="{py0}" stroke="black"/>"#).unwrap();
    writeln!(s, r#"<line x1="{px0}" y1="{py0}" x2="{px0}" y2="{py1}" stroke="black"/>"#).unwrap();
    for t in x.ticks() {
        let px = x.map(t, px0, px1);
        writeln!(s, r#"<line x1="{px:.2}" y1="{py0}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, py0 + 5.0).unwrap();
        writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, py0 + 20.0, label(t)).unwrap();
    }
    for t in y.ticks() {
        let py = y.map(t, py0, py1);
        writeln!(s, r#"<line x1="{:.2}" y1="{py:.2}" x2="{px0}" y2="{py:.2}" stroke="black"/>"#, px0 - 5.0).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, px0 - 8.0, py + 4.0, label(t)).unwrap();
    }
    let x_label = if opts.x_label.is_empty() { "elapsed time (s)" } else { &opts.x_label };
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (px0 + px1) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">reconstruction error{}</text>"#,
        (py0 + py1) / 2.0,
        (py0 + py1) / 2.0,
        if y.log { " (log)" } else { "" }
    )
    .unwrap();

    for (k, c) in curve.curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64, f64)> = curve
            .bins
            .iter()
            .zip(c.mean.iter().zip(&c.std))
            .filter(|(_, (m, _))| m.is_finite())
            .map(|(&t, (&m, &sd))| (t, m, sd))
            .collect();
        let mut band = String::new();
        for &(t, m, sd) in &pts {
            write!(band, "{:.2},{:.2} ", x.map(t, px0, px1), y.map(clamp_y(m + sd), py0, py1)).unwrap();
        }
        for &(t, m, sd) in pts.iter().rev() {
            write!(band, "{:.2},{:.2} ", x.map(t, px0, px1), y.map(clamp_y(m - sd), py0, py1)).unwrap();
        }
        writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end()
        )
        .unwrap();
        let line: Vec<String> = pts
            .iter()
            .map(|&(t, m, _)| format!("{:.2},{:.2}", x.map(t, px0, px1), y.map(clamp_y(m), py0, py1)))
            .collect();
        writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        )
        .unwrap();
    }

    // legend
    let lx = WIDTH - RIGHT + 20.0;
    for (k, c) in curve.curves.iter().enumerate() {
        let ly = TOP + 10.0 + 22.0 * k as f64;
        let color = PALETTE[k % PALETTE.len()];
        writeln!(s, r#"<rect x="{lx}" y="{:.1}" width="18" height="10" fill="{color}"/>"#, ly - 9.0).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, lx + 24.0, escape(&c.algorithm)).unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders and writes the plot. Nothing is written when the curve is empty.
pub fn emit_svg_plot(curve: &AggregateCurve, path: &Path, opts: &PlotOptions) -> Result<()> {
    let svg = render_svg(curve, opts)?;
    std::fs::write(path, svg).map_err(|e| BenchError::io(path, e))
}
