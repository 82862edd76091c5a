//! Report and table formats.
//!
//! Floats in CSV files are written with 17 significant digits and read back
//! bit for bit; `report.json` uses the shortest representation that parses
//! back to the same value.

use std::fs;
use std::path::Path;

use nrlevy_core::diagnostics::ConvergenceReport;
use nrlevy_core::noise::PathSample;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Outcome of a verdict-bearing experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strictly_decreasing: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub rule: String,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub params: Value,
    pub schedule: Vec<usize>,
    pub distances: Vec<f64>,
    pub stderr: Vec<f64>,
    pub verdict: Option<VerdictRecord>,
    pub details: Value,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdict.as_ref().map_or(true, |v| v.pass)
    }
}

pub fn write_report(path: &Path, report: &Report) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Report, CliError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Fixed 17-significant-digit rendering.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::Config(format!("not a number: `{s}`")))
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(parse_f64).collect()
}

/// One `(n, query)` cell of a convergence report.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub n: usize,
    pub query: usize,
    pub times: Vec<f64>,
    pub thetas: Vec<f64>,
    pub ecf_re: f64,
    pub ecf_im: f64,
    pub reference_re: f64,
    pub reference_im: f64,
    pub distance: f64,
    pub stderr: f64,
}

pub const PLOT_HEADER: [&str; 10] =
    ["n", "query", "times", "thetas", "ecf_re", "ecf_im", "reference_re", "reference_im", "distance", "stderr"];

pub fn plot_rows(report: &ConvergenceReport) -> Vec<PlotRow> {
    let mut rows = Vec::with_capacity(report.schedule.len() * report.queries.len());
    for (i, &n) in report.schedule.iter().enumerate() {
        for (q, query) in report.queries.iter().enumerate() {
            let e = report.ecf[i][q];
            let r = report.reference[q];
            rows.push(PlotRow {
                n,
                query: q,
                times: query.times.clone(),
                thetas: query.thetas.clone(),
                ecf_re: e.re,
                ecf_im: e.im,
                reference_re: r.re,
                reference_im: r.im,
                distance: report.per_query[i][q],
                stderr: report.stderr[i],
            });
        }
    }
    rows
}

/// Writes one row per `(n, query)` pair.
pub fn emit_plotdata(report: &ConvergenceReport, path: &Path) -> Result<(), CliError> {
    write_plot_rows(&plot_rows(report), path)
}

pub fn write_plot_rows(rows: &[PlotRow], path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PLOT_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.query.to_string(),
            fmt_list(&r.times),
            fmt_list(&r.thetas),
            fmt_f64(r.ecf_re),
            fmt_f64(r.ecf_im),
            fmt_f64(r.reference_re),
            fmt_f64(r.reference_im),
            fmt_f64(r.distance),
            fmt_f64(r.stderr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_plotdata(path: &Path) -> Result<Vec<PlotRow>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != PLOT_HEADER {
        return Err(CliError::Config(format!("unexpected plot data header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let rec = record?;
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| CliError::Config(format!("not an integer: `{}`", &rec[i])));
        rows.push(PlotRow {
            n: int(0)?,
            query: int(1)?,
            times: parse_list(&rec[2])?,
            thetas: parse_list(&rec[3])?,
            ecf_re: parse_f64(&rec[4])?,
            ecf_im: parse_f64(&rec[5])?,
            reference_re: parse_f64(&rec[6])?,
            reference_im: parse_f64(&rec[7])?,
            distance: parse_f64(&rec[8])?,
            stderr: parse_f64(&rec[9])?,
        });
    }
    Ok(rows)
}

/// Generic table writer: a header and rows of already formatted fields.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Sample paths as `(replica, time, x_1..x_d)` rows.
pub fn write_paths(path: &Path, samples: &[PathSample]) -> Result<(), CliError> {
    let dim = samples.first().map_or(1, PathSample::dim);
    let names: Vec<String> = (1..=dim).map(|c| format!("x{c}")).collect();
    let mut header = vec!["replica", "time"];
    header.extend(names.iter().map(String::as_str));
    let rows = samples.iter().enumerate().flat_map(|(r, s)| {
        (0..s.len()).map(move |i| {
            let mut row = vec![r.to_string(), fmt_f64(s.times()[i])];
            row.extend(s.value(i).iter().map(|x| fmt_f64(*x)));
            row
        })
    });
    write_table(path, &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(parse_f64(&fmt_f64(x)).unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(parse_list(&fmt_list(&[0.5, 1.0])).unwrap(), vec![0.5, 1.0]);
        assert!(parse_list("").unwrap().is_empty());
    }

    #[test]
    fn missing_verdict_counts_as_pass() {
        let r = Report {
            experiment: "simulate-ys".into(),
            params: Value::Null,
            schedule: vec![],
            distances: vec![],
            stderr: vec![],
            verdict: None,
            details: Value::Null,
        };
        assert!(r.passed());
    }
}
