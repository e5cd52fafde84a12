//! Minimal self-contained SVG line/scatter charts.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { name: name.into(), points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Scatter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub mark: Mark,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotStyle {
    fn default() -> Self {
        PlotStyle {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            mark: Mark::Line,
            width: 720.0,
            height: 480.0,
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Data range padded by 5 % on each side; degenerate ranges get ±0.5.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    }
}

/// Renders the series as one SVG document. Output depends only on the
/// input, so identical inputs give identical bytes.
pub fn emit_svg(series: &[Series], style: &PlotStyle) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Input("no series to plot".into()));
    }
    if let Some(s) = series.iter().find(|s| s.points.len() < 2) {
        return Err(Error::Input(format!("series {:?} needs at least 2 points", s.name)));
    }
    let all = series.iter().flat_map(|s| s.points.iter());
    if all.clone().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Input("non-finite plot coordinates".into()));
    }
    let fold = |f: fn(&(f64, f64)) -> f64| {
        all.clone()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (x0, x1) = { let (a, b) = fold(|p| p.0); padded(a, b) };
    let (y0, y1) = { let (a, b) = fold(|p| p.1); padded(a, b) };

    let (w, h) = (style.width, style.height);
    let pw = w - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = h - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        let bottom = MARGIN_TOP + ph;
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{bottom:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN_LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    if !style.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            escape(&style.title)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        h - 12.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_TOP + ph / 2.0,
        MARGIN_TOP + ph / 2.0,
        escape(&style.y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        match style.mark {
            Mark::Line => {
                let mut pts = String::new();
                for (j, &(x, y)) in s.points.iter().enumerate() {
                    if j > 0 {
                        pts.push(' ');
                    }
                    let _ = write!(pts, "{:.2},{:.2}", sx(x), sy(y));
                }
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>"#
                );
            }
            Mark::Scatter => {
                let _ = writeln!(svg, r#"<g fill="{color}">"#);
                for &(x, y) in &s.points {
                    let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5"/>"#, sx(x), sy(y));
                }
                svg.push_str("</g>\n");
            }
        }
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = w - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
