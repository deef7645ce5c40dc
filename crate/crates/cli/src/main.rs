//! Command-line driver: run experiments, sweep parameters, run the
//! verification probes, or export a workload trace.
//!
//! Exit codes: 0 on success, 1 when `--strict` is set and any slot was
//! flagged infeasible (or any probe failed), 2 on configuration errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;

use mecsim_core::harness::{
    emit_report, run_experiment, run_sweep, sweep_summary_csv, AlgorithmKind, ExperimentReport,
    ReportFormat, RunOptions, ScenarioSpec, SweepParameter, SweepSpec,
};
use mecsim_core::verification::run_probe_suite;
use mecsim_core::workload::generate_trace;
use mecsim_core::{derive_seed, Error};

#[derive(Parser)]
#[command(name = "mecsim", about = "Two-timescale edge/cloud placement and scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario JSON (schema 1); defaults to the built-in setup.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment over all frames and slots.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated algorithms (default: all seven).
        #[arg(long, value_delimiter = ',')]
        algo: Vec<String>,
        /// Report format.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Exit with code 1 if any slot is flagged infeasible.
        #[arg(long)]
        strict: bool,
    },
    /// Sweep one parameter over a value grid, replicated over seeds.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Parameter to vary: budget-coefficient, service-count,
        /// storage-capacity-scale, compute-capacity-scale,
        /// service-storage-scale, service-compute-scale.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Comma-separated replication seeds (default: 1..=5).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        algo: Vec<String>,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        strict: bool,
    },
    /// Run the numeric verification probes and emit a JSON report.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate the workload trace and export it as CSV.
    GenTrace {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn load_scenario(common: &CommonArgs) -> Result<(ScenarioSpec, u64), Error> {
    let spec = match &common.config {
        Some(path) => ScenarioSpec::load(path)?,
        None => ScenarioSpec::default(),
    };
    let seed = common.seed.unwrap_or(spec.seed);
    Ok((spec, seed))
}

fn parse_algorithms(names: &[String]) -> Result<Vec<AlgorithmKind>, Error> {
    if names.is_empty() {
        return Ok(AlgorithmKind::ALL.to_vec());
    }
    names.iter().map(|n| AlgorithmKind::parse(n.trim())).collect()
}

fn ensure_out_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.display().to_string(), source: e })
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

fn print_summaries(report: &ExperimentReport) {
    println!("algorithm    mean_latency_s    p95_latency_s    infeasible");
    for s in &report.summaries {
        println!(
            "{:<12} {:<17.6} {:<16.6} {}/{}",
            s.algorithm, s.mean_latency_s, s.p95_latency_s, s.infeasible_slots, s.slots
        );
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run { common, algo, format, strict } => {
            let (spec, seed) = load_scenario(&common)?;
            let cfg = spec.materialize(seed)?;
            let format = ReportFormat::parse(&format)?;
            let opts = RunOptions { algorithms: parse_algorithms(&algo)?, ..RunOptions::default() };
            let report = run_experiment(&cfg, &opts)?;
            ensure_out_dir(&common.out)?;
            let path = common.out.join(format!("report.{}", format.extension()));
            emit_report(&report, &path, format)?;
            print_summaries(&report);
            println!("report written to {}", path.display());
            let infeasible = report.rows.iter().any(|r| !r.feasible);
            Ok(strict && infeasible)
        }
        Command::Sweep { common, param, values, seeds, algo, format, strict } => {
            let (spec, seed) = load_scenario(&common)?;
            let parameter = SweepParameter::parse(&param)?;
            let seeds = if seeds.is_empty() {
                (1..=5).map(|k| derive_seed(seed, k)).collect()
            } else {
                seeds
            };
            let sweep = SweepSpec {
                parameter,
                values,
                base: spec,
                algorithms: parse_algorithms(&algo)?,
                seeds,
            };
            let format = ReportFormat::parse(&format)?;
            let (outcomes, summary) = run_sweep(&sweep, &RunOptions::default())?;
            ensure_out_dir(&common.out)?;
            let mut infeasible = false;
            for outcome in &outcomes {
                let path = common.out.join(format!(
                    "sweep_{}_{}_{}.{}",
                    parameter.name(),
                    outcome.value,
                    outcome.seed,
                    format.extension()
                ));
                emit_report(&outcome.report, &path, format)?;
                infeasible |= outcome.report.rows.iter().any(|r| !r.feasible);
            }
            let summary_path = common.out.join("sweep_summary.csv");
            write_text(&summary_path, &sweep_summary_csv(&summary))?;
            for row in &summary {
                println!(
                    "{}={:<8} {:<8} mean {:.6} s",
                    row.parameter, row.value, row.algorithm, row.mean_latency_s
                );
            }
            println!("summary written to {}", summary_path.display());
            Ok(strict && infeasible)
        }
        Command::Verify { common } => {
            let (_, seed) = load_scenario(&common)?;
            let reports = run_probe_suite(seed, &Default::default())?;
            ensure_out_dir(&common.out)?;
            let path = common.out.join("probes.json");
            let text = serde_json::to_string_pretty(&reports)
                .map_err(|e| Error::Json { path: path.display().to_string(), source: e })?;
            write_text(&path, &text)?;
            let mut any_failed = false;
            for probe in &reports {
                println!(
                    "{:<26} samples {:<7} violations {:<5} worst {:<12.3e} {}",
                    probe.probe,
                    probe.samples,
                    probe.violations,
                    probe.worst_margin,
                    if probe.pass { "PASS" } else { "FAIL" }
                );
                any_failed |= !probe.pass;
            }
            println!("probe report written to {}", path.display());
            Ok(any_failed)
        }
        Command::GenTrace { common } => {
            let (spec, seed) = load_scenario(&common)?;
            let cfg = spec.materialize(seed)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
            let trace = generate_trace(&cfg, &mut rng);
            ensure_out_dir(&common.out)?;
            let path = common.out.join("trace.csv");
            let mut buf = Vec::new();
            trace
                .to_csv(&mut buf)
                .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
            fs::write(&path, buf)
                .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
            println!("trace written to {}", path.display());
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e @ (Error::Config(_) | Error::Io { .. } | Error::Json { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
