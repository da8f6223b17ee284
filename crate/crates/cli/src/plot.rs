//! Telemetry to SVG: one stacked panel per column, time on the x axis.

use std::fmt::Write as _;

use anahita_core::telemetry::{columns, parse_csv, TelemetryRow};

use crate::{read_text, write_file, CliError, CliResult, PlotArgs};

const WIDTH: f64 = 800.0;
const PANEL_HEIGHT: f64 = 160.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 28.0;

/// Numeric value of a named column; `None` for an absent depth reading.
fn value(row: &TelemetryRow, col: usize) -> Option<f64> {
    match col {
        0 => Some(row.t),
        1..=6 => Some(row.pose[col - 1]),
        7..=12 => Some(row.velocity[col - 7]),
        13..=20 => Some(row.thrust[col - 13]),
        21..=28 => {
            let (v, i) = row.rails[(col - 21) / 2];
            Some(if (col - 21).is_multiple_of(2) { v } else { i })
        }
        29 => row.depth_reading,
        _ => None,
    }
}

fn column_index(name: &str) -> CliResult<usize> {
    let cols = columns();
    match cols.iter().position(|c| c == name) {
        Some(i) if i < cols.len() - 1 => Ok(i),
        Some(_) => Err(CliError::input(format!("column `{name}` is not numeric"))),
        None => Err(CliError::input(format!("unknown column `{name}`"))),
    }
}

/// Padded `(lo, hi)` covering `values`.
fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn render_svg(rows: &[TelemetryRow], cols: &[(String, usize)]) -> String {
    let height = PANEL_HEIGHT * cols.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (t0, t1) = span(rows.iter().map(|r| r.t));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    for (k, (name, col)) in cols.iter().enumerate() {
        let top = k as f64 * PANEL_HEIGHT + MARGIN_TOP;
        let (lo, hi) = span(rows.iter().filter_map(|r| value(r, *col)));
        let sx = |t: f64| MARGIN_LEFT + (t - t0) / (t1 - t0) * plot_w;
        let sy = |v: f64| top + (hi - v) / (hi - lo) * plot_h;
        let _ = writeln!(
            svg,
            r##"<rect x="{MARGIN_LEFT}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#999"/>"##
        );
        let _ = writeln!(svg, r#"<text x="{MARGIN_LEFT}" y="{:.1}">{name}</text>"#, top - 6.0);
        let _ = writeln!(svg, r#"<text x="4" y="{:.1}">{hi:.3}</text>"#, top + 10.0);
        let _ = writeln!(svg, r#"<text x="4" y="{:.1}">{lo:.3}</text>"#, top + plot_h);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">t = {t1:.1} s</text>"#,
            WIDTH - MARGIN_RIGHT,
            top + plot_h + 16.0
        );
        // Missing samples split the trace into separate polylines.
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for r in rows {
            match value(r, *col) {
                Some(v) => runs.last_mut().unwrap().push((sx(r.t), sy(v))),
                None if !runs.last().unwrap().is_empty() => runs.push(Vec::new()),
                None => {}
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                svg,
                r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="1.2" points="{}"/>"##,
                pts.join(" ")
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn run(args: &PlotArgs) -> CliResult {
    let text = read_text(&args.telemetry)?;
    let rows = parse_csv(&text).map_err(|e| CliError::input(format!("{}: {e}", args.telemetry.display())))?;
    let cols = args
        .columns
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|n| column_index(n).map(|i| (n.to_string(), i)))
        .collect::<CliResult<Vec<_>>>()?;
    if cols.is_empty() {
        return Err(CliError::input("no columns selected"));
    }
    write_file(&args.out, render_svg(&rows, &cols))
}
