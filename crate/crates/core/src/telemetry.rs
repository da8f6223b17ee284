//! Fixed-column telemetry CSV: writer and parser.

use std::fmt::Write as _;

use thiserror::Error;

use crate::power::{Rail, RailState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TelemetryError {
    #[error("telemetry header does not match the expected column list")]
    Header,
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRow {
    pub t: f64,
    /// x y z phi theta psi.
    pub pose: [f64; 6],
    /// u v w p q r.
    pub velocity: [f64; 6],
    pub thrust: [f64; 8],
    /// (voltage, current) per rail, ordered like [`Rail::ALL`].
    pub rails: [(f64, f64); 4],
    pub depth_reading: Option<f64>,
    /// `;`-joined event labels; empty for none.
    pub event: String,
}

impl TelemetryRow {
    pub fn rails_from(state: &RailState) -> [(f64, f64); 4] {
        std::array::from_fn(|i| (state.rails[i].voltage, state.rails[i].current))
    }
}

pub fn columns() -> Vec<String> {
    let mut c: Vec<String> = ["t", "x", "y", "z", "phi", "theta", "psi", "u", "v", "w", "p", "q", "r"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    c.extend((1..=8).map(|i| format!("T{i}")));
    for rail in Rail::ALL {
        c.push(format!("v_{}", rail.name()));
        c.push(format!("i_{}", rail.name()));
    }
    c.push("depth_reading".into());
    c.push("event".into());
    c
}

pub fn header() -> String {
    columns().join(",")
}

/// Formats `v` with `decimals` places, never printing `-0`.
fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn format_row(row: &TelemetryRow) -> String {
    let mut s = fixed(row.t, 3);
    let mut push = |v: f64, d: usize| {
        s.push(',');
        s.push_str(&fixed(v, d));
    };
    for v in row.pose {
        push(v, 6);
    }
    for v in row.velocity {
        push(v, 6);
    }
    for v in row.thrust {
        push(v, 4);
    }
    for (v, i) in row.rails {
        push(v, 3);
        push(i, 3);
    }
    s.push(',');
    match row.depth_reading {
        Some(d) => s.push_str(&fixed(d, 3)),
        None => s.push('-'),
    }
    s.push(',');
    if row.event.is_empty() {
        s.push('-');
    } else {
        s.push_str(&row.event.replace([',', '\n'], " "));
    }
    s
}

pub fn write_csv(rows: &[TelemetryRow]) -> String {
    let mut out = header();
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", format_row(r));
    }
    out
}

/// Parses text produced by [`write_csv`]; `t` must increase strictly.
pub fn parse_csv(text: &str) -> Result<Vec<TelemetryRow>, TelemetryError> {
    let mut lines = text.lines();
    if lines.next() != Some(header().as_str()) {
        return Err(TelemetryError::Header);
    }
    let n = columns().len();
    let mut rows: Vec<TelemetryRow> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let row = idx + 1;
        let err = |msg: String| TelemetryError::Row { row, msg };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n {
            return Err(err(format!("expected {n} fields, got {}", fields.len())));
        }
        let num = |i: usize| -> Result<f64, TelemetryError> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| err(format!("column {} `{}` is not a number", i + 1, fields[i])))
        };
        let t = num(0)?;
        let pose = [num(1)?, num(2)?, num(3)?, num(4)?, num(5)?, num(6)?];
        let velocity = [num(7)?, num(8)?, num(9)?, num(10)?, num(11)?, num(12)?];
        let mut thrust = [0.0; 8];
        for (k, v) in thrust.iter_mut().enumerate() {
            *v = num(13 + k)?;
        }
        let mut rails = [(0.0, 0.0); 4];
        for (k, r) in rails.iter_mut().enumerate() {
            *r = (num(21 + 2 * k)?, num(22 + 2 * k)?);
        }
        let depth_reading = match fields[29] {
            "-" => None,
            _ => Some(num(29)?),
        };
        let event = match fields[30] {
            "-" => String::new(),
            e => e.to_string(),
        };
        if let Some(prev) = rows.last() {
            if !(t > prev.t) {
                return Err(err(format!("time {t} does not increase past {}", prev.t)));
            }
        }
        rows.push(TelemetryRow {
            t,
            pose,
            velocity,
            thrust,
            rails,
            depth_reading,
            event,
        });
    }
    Ok(rows)
}
