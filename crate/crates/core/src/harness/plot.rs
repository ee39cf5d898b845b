use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::summary::Summary;
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 120.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Axis ranges of a plot: `d` linear, queries in decades.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotAxes {
    pub d_min: f64,
    pub d_max: f64,
    pub log10_min: f64,
    pub log10_max: f64,
}

type Series = BTreeMap<String, Vec<(usize, f64, bool)>>;

fn series(summary: &Summary) -> Series {
    let mut out: Series = BTreeMap::new();
    for c in &summary.cells {
        if let Some(m) = c.median_queries {
            out.entry(c.algo.clone())
                .or_default()
                .push((c.dim, m.max(1.0), c.exhausted > 0));
        }
    }
    for pts in out.values_mut() {
        pts.sort_by_key(|p| p.0);
    }
    out
}

/// Ranges covering every plotted median.
pub fn plot_axes(summary: &Summary) -> Result<PlotAxes> {
    let s = series(summary);
    let pts: Vec<&(usize, f64, bool)> = s.values().flatten().collect();
    if pts.is_empty() {
        return Err(Error::invalid("nothing to plot: no cell has a median"));
    }
    let d_min = pts.iter().map(|p| p.0).min().unwrap_or(0) as f64;
    let mut d_max = pts.iter().map(|p| p.0).max().unwrap_or(0) as f64;
    if d_max == d_min {
        d_max = d_min + 1.0;
    }
    let lo = pts
        .iter()
        .map(|p| p.1.log10())
        .fold(f64::INFINITY, f64::min);
    let hi = pts
        .iter()
        .map(|p| p.1.log10())
        .fold(f64::NEG_INFINITY, f64::max);
    let log10_min = lo.floor();
    let mut log10_max = hi.ceil();
    if log10_max <= log10_min {
        log10_max = log10_min + 1.0;
    }
    Ok(PlotAxes {
        d_min,
        d_max,
        log10_min,
        log10_max,
    })
}

/// SVG of median queries against `d`, one polyline per algorithm. Cells
/// with at least one budget-exhausted trial get a hollow square marker.
pub fn render_svg(summary: &Summary) -> Result<String> {
    let axes = plot_axes(summary)?;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |d: f64| LEFT + (d - axes.d_min) / (axes.d_max - axes.d_min) * pw;
    let y =
        |q: f64| TOP + ph - (q.log10() - axes.log10_min) / (axes.log10_max - axes.log10_min) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for e in axes.log10_min as i64..=axes.log10_max as i64 {
        let yy = y(10f64.powi(e as i32));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            yy + 4.0
        );
    }
    let step = ((axes.d_max - axes.d_min) / 10.0).ceil().max(1.0) as usize;
    let mut d = axes.d_min as usize;
    while d as f64 <= axes.d_max {
        let xx = x(d as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{xx:.2}" y1="{:.2}" x2="{xx:.2}" y2="{:.2}" stroke="black"/><text x="{xx:.2}" y="{:.2}" text-anchor="middle">{d}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0
        );
        d += step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">dimension d</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">median gradient queries</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for (i, (algo, pts)) in series(summary).iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(d, q, _)| format!("{:.2},{:.2}", x(d as f64), y(q)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-algo="{algo}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for &(d, q, exhausted) in pts {
            let (cx, cy) = (x(d as f64), y(q));
            let _ = writeln!(
                s,
                r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{color}"/>"#
            );
            if exhausted {
                let _ = writeln!(
                    s,
                    r#"<rect class="exhausted" data-algo="{algo}" data-dim="{d}" x="{:.2}" y="{:.2}" width="12" height="12" fill="none" stroke="black"/>"#,
                    cx - 6.0,
                    cy - 6.0
                );
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{algo}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    let ly = TOP + 10.0 + 18.0 * series(summary).len() as f64;
    let lx = LEFT + pw + 12.0;
    let _ = writeln!(
        s,
        r#"<rect x="{:.2}" y="{:.2}" width="12" height="12" fill="none" stroke="black"/><text x="{:.2}" y="{:.2}">exhausted</text>"#,
        lx + 4.0,
        ly - 6.0,
        lx + 26.0,
        ly + 4.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes [`render_svg`] to `path`.
pub fn emit_plot(summary: &Summary, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(summary)?)?;
    Ok(())
}
