//! Parameter sweeps: run the experiment grid (value x seed) and summarize
//! mean latency per algorithm per value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;

use super::experiment::{run_experiment, AlgorithmKind, RunOptions};
use super::report::{format_sig9, ExperimentReport};
use super::scenario::{ScenarioSpec, SweepParameter};

/// One sweep: vary `parameter` over `values`, replicated over `seeds`.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub base: ScenarioSpec,
    pub algorithms: Vec<AlgorithmKind>,
    pub seeds: Vec<u64>,
}

/// Report for one (value, seed) grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub value: f64,
    pub seed: u64,
    pub report: ExperimentReport,
}

/// One summary line: mean latency of `algorithm` at `value`, averaged over
/// the seeds whose runs produced feasible slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummaryRow {
    pub parameter: String,
    pub value: f64,
    pub algorithm: String,
    pub mean_latency_s: f64,
}

/// Run the full grid; cells are independent and run in parallel.
pub fn run_sweep(spec: &SweepSpec, opts: &RunOptions) -> Result<(Vec<SweepOutcome>, Vec<SweepSummaryRow>)> {
    if spec.values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if spec.seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let cells: Vec<(f64, u64)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.seeds.iter().map(move |&s| (v, s)))
        .collect();

    let outcomes: Vec<Result<SweepOutcome>> = exec::map_range(cells.len(), |k| {
        let (value, seed) = cells[k];
        let scenario = spec.parameter.apply(&spec.base, value)?;
        let cfg = scenario.materialize(seed)?;
        let run_opts = RunOptions { algorithms: spec.algorithms.clone(), ..opts.clone() };
        let report = run_experiment(&cfg, &run_opts)?;
        Ok(SweepOutcome { value, seed, report })
    });
    let outcomes: Vec<SweepOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let mut summary = Vec::new();
    for &value in &spec.values {
        for algo in &spec.algorithms {
            let name = algo.name();
            let means: Vec<f64> = outcomes
                .iter()
                .filter(|o| o.value == value)
                .filter_map(|o| o.report.mean_latency(name))
                .filter(|m| m.is_finite())
                .collect();
            let mean = if means.is_empty() {
                f64::NAN
            } else {
                means.iter().sum::<f64>() / means.len() as f64
            };
            summary.push(SweepSummaryRow {
                parameter: spec.parameter.name().to_string(),
                value,
                algorithm: name.to_string(),
                mean_latency_s: mean,
            });
        }
    }
    Ok((outcomes, summary))
}

/// Summary rows as CSV: `parameter,value,algorithm,mean_latency_s`.
pub fn sweep_summary_csv(rows: &[SweepSummaryRow]) -> String {
    let mut out = String::from("parameter,value,algorithm,mean_latency_s\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.parameter,
            format_sig9(r.value),
            r.algorithm,
            format_sig9(r.mean_latency_s)
        ));
    }
    out
}
