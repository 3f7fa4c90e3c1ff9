use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::Epsilon;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "n_flux,n_tht,epsilon,factor_bytes,ratio,facto_flops,solve_flops,gmres_iters,nbr_factorisations,converged,wall_time_s";

/// One (resolution, ε) cell of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n_flux: usize,
    pub n_tht: usize,
    pub epsilon: Epsilon,
    pub factor_bytes: usize,
    /// Factor bytes over the uncompressed factor bytes; absent for failed cells.
    pub ratio: Option<f64>,
    pub facto_flops: u64,
    pub solve_flops: u64,
    /// Total GMRES iterations over the cell's steps.
    pub gmres_iters: usize,
    pub nbr_factorisations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

impl ScanReport {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let ratio = r.ratio.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.n_flux,
                r.n_tht,
                r.epsilon,
                r.factor_bytes,
                ratio,
                r.facto_flops,
                r.solve_flops,
                r.gmres_iters,
                r.nbr_factorisations,
                r.converged,
                r.wall_time_s
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing or unexpected CSV header".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (k, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: k + 1, msg };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 11 {
                return Err(perr(format!("expected 11 fields, found {}", f.len())));
            }
            fn num<T: FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
                s.trim().parse().map_err(|_| format!("invalid {name} `{s}`"))
            }
            let row = (|| -> std::result::Result<ScanRow, String> {
                Ok(ScanRow {
                    n_flux: num(f[0], "n_flux")?,
                    n_tht: num(f[1], "n_tht")?,
                    epsilon: f[2].parse().map_err(|e: Error| e.to_string())?,
                    factor_bytes: num(f[3], "factor_bytes")?,
                    ratio: if f[4].trim().is_empty() { None } else { Some(num(f[4], "ratio")?) },
                    facto_flops: num(f[5], "facto_flops")?,
                    solve_flops: num(f[6], "solve_flops")?,
                    gmres_iters: num(f[7], "gmres_iters")?,
                    nbr_factorisations: num(f[8], "nbr_factorisations")?,
                    converged: num(f[9], "converged")?,
                    wall_time_s: num(f[10], "wall_time_s")?,
                })
            })()
            .map_err(perr)?;
            rows.push(row);
        }
        Ok(ScanReport { rows })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(ScanReport {
            rows: serde_json::from_str(text)?,
        })
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json(),
        }
    }

    /// Reads a report, choosing the parser from the content.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('[') {
            Self::from_json(text)
        } else {
            Self::from_csv(text)
        }
    }
}

pub fn emit_report(report: &ScanReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, report.render(format))?;
    Ok(())
}
