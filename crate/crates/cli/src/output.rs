//! CSV, JSON and SVG artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use magband::experiments::FluxSweep;
use magband::ProbeReport;
use serde::Serialize;

use crate::config::{RunConfig, SCHEMA_VERSION};

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table::with_header(header.iter().map(|s| s.to_string()).collect())
    }

    pub fn with_header(header: Vec<String>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, cfg: &RunConfig) -> String {
        let mut s = format!("# schema_version={SCHEMA_VERSION}\n");
        for (k, v) in cfg.entries() {
            let _ = writeln!(s, "# {k}={v}");
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    schema_version: u32,
    command: crate::config::Command,
    config: &'a RunConfig,
    reports: &'a [ProbeReport],
    pass: bool,
}

pub fn run_json(cfg: &RunConfig, reports: &[ProbeReport], pass: bool) -> String {
    let record = RunRecord {
        schema_version: SCHEMA_VERSION,
        command: cfg.command,
        config: cfg,
        reports,
        pass,
    };
    let mut s = serde_json::to_string_pretty(&record).expect("run record serializes");
    s.push('\n');
    s
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 40.0;

/// Scatter of `(b, λ)` over every eigenvalue of the sweep.
pub fn scatter_svg(sweep: &FluxSweep) -> String {
    let (b_lo, b_hi) = range(sweep.b_values.iter().copied());
    let (e_lo, e_hi) = range(
        sweep
            .rows
            .iter()
            .flat_map(|r| r.eigenvalues.iter().copied()),
    );
    let sx = (WIDTH - 2.0 * MARGIN) / (b_hi - b_lo);
    let sy = (HEIGHT - 2.0 * MARGIN) / (e_hi - e_lo);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <g fill=\"black\">\n"
    );
    for (b, row) in sweep.b_values.iter().zip(&sweep.rows) {
        let x = MARGIN + (b - b_lo) * sx;
        for e in &row.eigenvalues {
            let y = HEIGHT - MARGIN - (e - e_lo) * sy;
            let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"0.8\"/>");
        }
    }
    let _ = write!(
        s,
        "</g>\n<text x=\"{MARGIN}\" y=\"{}\" font-size=\"12\">b from {b_lo} to {b_hi}; \
         eigenvalues from {e_lo:.4} to {e_hi:.4}</text>\n</svg>\n",
        HEIGHT - 10.0
    );
    s
}

/// Min and max, widened to a unit interval when they coincide.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
        (l.min(v), h.max(v))
    });
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

pub fn write(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, contents)
}
