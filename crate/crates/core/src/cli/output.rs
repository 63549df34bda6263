use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Setting;
use crate::diagnostics::DiagnosticsReport;
use crate::error::Result;
use crate::radial::TraceRecord;

/// Bumped whenever the report layout changes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Floats as 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV cell.
pub enum Cell {
    F(f64),
    I(usize),
    B(bool),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn float_rows<const K: usize>(rows: &[[f64; K]]) -> impl Iterator<Item = Vec<Cell>> + '_ {
    rows.iter().map(|r| r.iter().map(|x| Cell::F(*x)).collect())
}

/// Append one solve's iteration history to the trace log.
pub fn write_trace(w: &mut impl Write, label: &str, trace: &[TraceRecord]) -> Result<()> {
    writeln!(w, "# {label}")?;
    writeln!(w, "iteration residual c_v w0 damping")?;
    for t in trace {
        writeln!(
            w,
            "{} {} {} {} {}",
            t.iteration,
            fmt_f64(t.residual),
            fmt_f64(t.c_v),
            fmt_f64(t.w0),
            fmt_f64(t.damping)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    NotConverged,
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsEcho {
    pub n: u32,
    pub gamma_n: f64,
    pub lambda_1: f64,
    /// `Λ_1(1+α)`.
    pub critical_lambda: f64,
    pub lambda: f64,
    /// `Λ / Λ_1(1+α)`.
    pub lambda_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub residual_sup: f64,
    pub w0: f64,
    pub c_v: f64,
    pub volume: f64,
    /// `|volume - Λ| / Λ`.
    pub volume_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub status: Status,
    pub converged: bool,
    pub reason_code: Option<String>,
    pub message: Option<String>,
    pub config: BTreeMap<String, Setting>,
    pub constants: ConstantsEcho,
    pub solver: Option<SolverSummary>,
    pub diagnostics: Option<DiagnosticsReport>,
    /// Command-specific results.
    pub details: serde_json::Map<String, serde_json::Value>,
    pub timing: Timing,
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| crate::error::Error::Io(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, std::f64::consts::PI] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_csv(&p, &["r", "ok"], vec![vec![Cell::F(0.5), Cell::B(true)], vec![Cell::F(2.0), Cell::B(false)]]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "r,ok\n5.0000000000000000e-1,true\n2.0000000000000000e0,false\n");
    }
}
