use std::fmt::Write;

use anyhow::{bail, Result};
use mracrl::sim::Trajectory;

pub struct Series {
    pub label: String,
    pub source: String,
    pub trajectory: Trajectory,
}

const COLORS: [&str; 6] = ["#222222", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];
const PANELS: [(usize, &str); 3] = [(0, "x [m]"), (1, "y [m]"), (2, "z [m]")];
const WIDTH: f64 = 720.0;
const PANEL_H: f64 = 200.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 20.0;
const GAP: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo < 1e-9 { (lo - 0.5, hi + 0.5) } else { (lo, hi) }
}

/// Stacked position-versus-time panels, one polyline per series and panel.
pub fn render(series: &[Series]) -> Result<String> {
    if series.is_empty() {
        bail!("no trajectories to plot");
    }
    for s in series {
        if s.trajectory.is_empty() || s.trajectory.state_dim() < 3 {
            bail!("{} needs at least one sample with three position components", s.source);
        }
    }
    let height = TOP + PANELS.len() as f64 * (PANEL_H + GAP);
    let plot_w = WIDTH - LEFT - RIGHT;
    let (t0, t1) = range(series.iter().flat_map(|s| s.trajectory.times().iter().copied()));
    let mut svg = String::new();
    let sources: Vec<String> = series.iter().map(|s| s.source.replace("--", "-\u{2010}")).collect();
    writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(svg, "<!-- data: {} -->", sources.join(", "))?;
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    )?;
    for (p, &(col, name)) in PANELS.iter().enumerate() {
        let top = TOP + p as f64 * (PANEL_H + GAP);
        let (lo, hi) = range(series.iter().flat_map(|s| s.trajectory.states().iter().map(move |x| x[col])));
        let sx = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;
        let sy = |v: f64| top + PANEL_H - (v - lo) / (hi - lo) * PANEL_H;
        writeln!(svg, r#"<g class="panel" data-axis="{name}">"#)?;
        writeln!(svg, r##"<rect x="{LEFT}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#999999"/>"##)?;
        writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">{}</text>"#, 20.0, top + PANEL_H / 2.0, 20.0, top + PANEL_H / 2.0, escape(name))?;
        writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, LEFT - 4.0, top + 10.0, hi)?;
        writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, LEFT - 4.0, top + PANEL_H, lo)?;
        writeln!(svg, r#"<text x="{LEFT}" y="{}">{t0:.2} s</text>"#, top + PANEL_H + 15.0)?;
        writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{t1:.2} s</text>"#, LEFT + plot_w, top + PANEL_H + 15.0)?;
        for (i, s) in series.iter().enumerate() {
            let mut points = String::new();
            for (t, x) in s.trajectory.times().iter().zip(s.trajectory.states()) {
                write!(points, "{:.3},{:.3} ", sx(*t), sy(x[col]))?;
            }
            writeln!(
                svg,
                r#"<polyline class="series" data-label="{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                escape(&s.label),
                COLORS[i % COLORS.len()],
                points.trim_end()
            )?;
        }
        writeln!(svg, "</g>")?;
    }
    for (i, s) in series.iter().enumerate() {
        let y = TOP + 15.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 10.0;
        writeln!(svg, r#"<line x1="{x}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>"#, y - 4.0, x + 20.0, y - 4.0, COLORS[i % COLORS.len()])?;
        writeln!(svg, r#"<text x="{}" y="{y}">{}</text>"#, x + 26.0, escape(&s.label))?;
    }
    writeln!(svg, "</svg>")?;
    Ok(svg)
}
