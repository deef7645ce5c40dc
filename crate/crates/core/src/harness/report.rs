//! Experiment reports: per-slot rows, per-algorithm aggregates, and the CSV
//! and JSON emitters.
//!
//! CSV columns are fixed:
//! `frame,slot,algorithm,total_latency_s,edge_latency_s,cloud_latency_s,cost_total,feasible,iters_placement,iters_schedule`
//! with floats printed to nine significant digits, UTF-8, LF line endings.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One (frame, slot, algorithm) measurement. Infeasible rows carry NaN
/// latencies and zero cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub frame: usize,
    pub slot: usize,
    pub algorithm: String,
    pub total_latency_s: f64,
    pub edge_latency_s: f64,
    pub cloud_latency_s: f64,
    pub cost_total: f64,
    pub feasible: bool,
    pub iters_placement: u64,
    pub iters_schedule: u64,
}

/// Per-algorithm aggregate over the feasible rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub mean_latency_s: f64,
    pub p95_latency_s: f64,
    pub slots: usize,
    pub infeasible_slots: usize,
}

/// Full result of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub rows: Vec<SlotRecord>,
    pub summaries: Vec<AlgorithmSummary>,
}

/// Format a float with nine significant digits in plain positional
/// notation: 20.0 prints as "20.0000000".
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.00000000".into();
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (8 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Recompute the per-algorithm summaries from rows, preserving first-seen
/// algorithm order. Infeasible rows are excluded from the latency stats.
pub fn summarize(rows: &[SlotRecord]) -> Vec<AlgorithmSummary> {
    let mut order: Vec<&str> = Vec::new();
    for row in rows {
        if !order.contains(&row.algorithm.as_str()) {
            order.push(&row.algorithm);
        }
    }
    order
        .into_iter()
        .map(|algo| {
            let mut latencies: Vec<f64> = rows
                .iter()
                .filter(|r| r.algorithm == algo && r.feasible)
                .map(|r| r.total_latency_s)
                .collect();
            let slots = rows.iter().filter(|r| r.algorithm == algo).count();
            let infeasible = slots - latencies.len();
            latencies.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (mean, p95) = if latencies.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let mean = latencies.iter().sum::<f64>() / latencies.len() as f64;
                let idx = ((latencies.len() as f64 * 0.95).ceil() as usize).max(1) - 1;
                (mean, latencies[idx.min(latencies.len() - 1)])
            };
            AlgorithmSummary {
                algorithm: algo.to_string(),
                mean_latency_s: mean,
                p95_latency_s: p95,
                slots,
                infeasible_slots: infeasible,
            }
        })
        .collect()
}

impl ExperimentReport {
    pub fn new(seed: u64, rows: Vec<SlotRecord>) -> Self {
        let summaries = summarize(&rows);
        ExperimentReport { seed, rows, summaries }
    }

    pub fn mean_latency(&self, algorithm: &str) -> Option<f64> {
        self.summaries
            .iter()
            .find(|s| s.algorithm == algorithm)
            .map(|s| s.mean_latency_s)
    }

    /// Rows as CSV with the fixed column contract.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "frame,slot,algorithm,total_latency_s,edge_latency_s,cloud_latency_s,cost_total,feasible,iters_placement,iters_schedule\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.frame,
                r.slot,
                r.algorithm,
                format_sig9(r.total_latency_s),
                format_sig9(r.edge_latency_s),
                format_sig9(r.cloud_latency_s),
                format_sig9(r.cost_total),
                r.feasible,
                r.iters_placement,
                r.iters_schedule,
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Json { path: "<report>".into(), source: e })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json { path: "<report>".into(), source: e })
    }
}

/// Output encodings for reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format: {other}"))),
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

/// Write a report to `path` in the requested format.
pub fn emit_report(report: &ExperimentReport, path: &Path, format: ReportFormat) -> Result<()> {
    let payload = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json()?,
    };
    let mut file =
        fs::File::create(path).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    file.write_all(payload.as_bytes())
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(20.0), "20.0000000");
        assert_eq!(format_sig9(0.0), "0.00000000");
        assert_eq!(format_sig9(0.5), "0.500000000");
        assert_eq!(format_sig9(123456789.0), "123456789");
        assert_eq!(format_sig9(f64::NAN), "NaN");
        assert_eq!(format_sig9(-20.0), "-20.0000000");
    }

    fn sample_rows() -> Vec<SlotRecord> {
        vec![
            SlotRecord {
                frame: 0,
                slot: 0,
                algorithm: "cpo".into(),
                total_latency_s: 240.0,
                edge_latency_s: 0.0,
                cloud_latency_s: 240.0,
                cost_total: 0.0,
                feasible: true,
                iters_placement: 0,
                iters_schedule: 0,
            },
            SlotRecord {
                frame: 0,
                slot: 1,
                algorithm: "cpo".into(),
                total_latency_s: 250.0,
                edge_latency_s: 0.0,
                cloud_latency_s: 250.0,
                cost_total: 0.0,
                feasible: true,
                iters_placement: 0,
                iters_schedule: 0,
            },
        ]
    }

    #[test]
    fn empty_report_is_header_only() {
        let report = ExperimentReport::new(0, vec![]);
        assert_eq!(report.to_csv().lines().count(), 1);
        assert!(report.summaries.is_empty());
    }

    #[test]
    fn json_round_trip() {
        let report = ExperimentReport::new(7, sample_rows());
        let text = report.to_json().unwrap();
        let back = ExperimentReport::from_json(&text).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn summaries_match_rows() {
        let report = ExperimentReport::new(7, sample_rows());
        assert_eq!(report.summaries.len(), 1);
        let s = &report.summaries[0];
        assert!((s.mean_latency_s - 245.0).abs() < 1e-12);
        assert_eq!(s.p95_latency_s, 250.0);
        assert_eq!(s.slots, 2);
        assert_eq!(s.infeasible_slots, 0);
        // Aggregates are recomputable from the rows.
        assert_eq!(report.summaries, summarize(&report.rows));
    }

    #[test]
    fn infeasible_rows_are_excluded_from_means() {
        let mut rows = sample_rows();
        rows.push(SlotRecord {
            frame: 0,
            slot: 2,
            algorithm: "cpo".into(),
            total_latency_s: f64::NAN,
            edge_latency_s: f64::NAN,
            cloud_latency_s: f64::NAN,
            cost_total: 0.0,
            feasible: false,
            iters_placement: 0,
            iters_schedule: 0,
        });
        let report = ExperimentReport::new(7, rows);
        let s = &report.summaries[0];
        assert!((s.mean_latency_s - 245.0).abs() < 1e-12);
        assert_eq!(s.infeasible_slots, 1);
    }
}
