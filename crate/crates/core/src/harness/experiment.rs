//! Two-timescale experiment driver.
//!
//! Per frame: forecast demand, fix each algorithm's placement and allocation
//! against the forecast, then re-solve only the routing at every slot against
//! realized demand. Placement and allocation are immutable within a frame;
//! the frame-level shadow schedule is never executed.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_frame_decision, baseline_slot_schedule, BaselineKind};
use crate::domain::{
    check_constraints, edge_cloud_latency, total_cost, PlacementMatrix,
    SystemConfig, WorkloadSnapshot,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::placement::{gibbs_optimize_cached, GibbsConfig, ScoreCache};
use crate::scheduling::{solve_schedule, SolverConfig};
use crate::workload::{frame_forecast, generate_trace, ForecastMode, WorkloadTrace};

use super::report::{ExperimentReport, SlotRecord};

/// The method under study plus the six baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgorithmKind {
    /// Two-timescale joint optimization (placement search + KKT allocation
    /// + sub-gradient scheduling).
    Rmws,
    Baseline(BaselineKind),
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 7] = [
        AlgorithmKind::Rmws,
        AlgorithmKind::Baseline(BaselineKind::Cpo),
        AlgorithmKind::Baseline(BaselineKind::Fsp),
        AlgorithmKind::Baseline(BaselineKind::Nsp),
        AlgorithmKind::Baseline(BaselineKind::Psp),
        AlgorithmKind::Baseline(BaselineKind::Eera),
        AlgorithmKind::Baseline(BaselineKind::Eceera),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Rmws => "rmws",
            AlgorithmKind::Baseline(kind) => kind.name(),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "rmws" => Ok(AlgorithmKind::Rmws),
            "cpo" => Ok(AlgorithmKind::Baseline(BaselineKind::Cpo)),
            "fsp" => Ok(AlgorithmKind::Baseline(BaselineKind::Fsp)),
            "nsp" => Ok(AlgorithmKind::Baseline(BaselineKind::Nsp)),
            "psp" => Ok(AlgorithmKind::Baseline(BaselineKind::Psp)),
            "eera" => Ok(AlgorithmKind::Baseline(BaselineKind::Eera)),
            "eceera" => Ok(AlgorithmKind::Baseline(BaselineKind::Eceera)),
            other => Err(Error::Config(format!("unknown algorithm: {other}"))),
        }
    }
}

/// Experiment settings.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub algorithms: Vec<AlgorithmKind>,
    pub gibbs: GibbsConfig,
    pub solver: SolverConfig,
    /// Score frames against realized totals instead of the mean forecast
    /// (ablation only; the default predictor never sees the future).
    pub oracle_forecast: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            algorithms: AlgorithmKind::ALL.to_vec(),
            gibbs: GibbsConfig::default(),
            solver: SolverConfig::default(),
            oracle_forecast: false,
        }
    }
}

/// Outcome of one algorithm over one frame: the fixed decision plus one
/// record per slot.
struct FrameOutcome {
    rows: Vec<SlotRecord>,
    rmws_best: Option<PlacementMatrix>,
}

fn infeasible_row(frame: usize, slot: usize, algorithm: &str) -> SlotRecord {
    SlotRecord {
        frame,
        slot,
        algorithm: algorithm.to_string(),
        total_latency_s: f64::NAN,
        edge_latency_s: f64::NAN,
        cloud_latency_s: f64::NAN,
        cost_total: f64::NAN,
        feasible: false,
        iters_placement: 0,
        iters_schedule: 0,
    }
}

#[allow(clippy::too_many_arguments)]
fn run_algorithm_frame(
    algo: AlgorithmKind,
    cfg: &SystemConfig,
    frame: usize,
    forecast: &WorkloadSnapshot,
    trace: &WorkloadTrace,
    opts: &RunOptions,
    cache: &ScoreCache,
    rmws_warm: Option<&PlacementMatrix>,
) -> Result<FrameOutcome> {
    let name = algo.name();

    // Frame decision; solver-level infeasibility flags the whole frame.
    let decided = match algo {
        AlgorithmKind::Rmws => {
            let gibbs = GibbsConfig {
                rng_seed: crate::derive_seed(cfg.rng_seed, 0x6B00 + frame as u64),
                ..opts.gibbs.clone()
            };
            let trace_g =
                gibbs_optimize_cached(cfg, forecast, rmws_warm, &gibbs, &opts.solver, cache)?;
            Ok((trace_g.x_best, trace_g.y_best, trace_g.steps.len() as u64))
        }
        AlgorithmKind::Baseline(kind) => {
            match baseline_frame_decision(kind, cfg, forecast, &opts.solver) {
                Ok(d) => Ok((d.x, d.y, 0)),
                Err(
                    e @ (Error::UnroutableService { .. }
                    | Error::InfeasibleDemand { .. }
                    | Error::NegativeGamma { .. }),
                ) => Err(e),
                Err(e) => return Err(e),
            }
        }
    };

    let (x, y, placement_iters) = match decided {
        Ok(d) => d,
        Err(_) => {
            let rows = (0..cfg.slots_per_frame)
                .map(|slot| infeasible_row(frame, slot, name))
                .collect();
            return Ok(FrameOutcome { rows, rmws_best: None });
        }
    };

    // The frame decision must not move while slots are being scheduled.
    let x_frozen = x.clone();
    let y_frozen = y.clone();

    let mut rows = Vec::with_capacity(cfg.slots_per_frame);
    for slot in 0..cfg.slots_per_frame {
        let w_slot = trace.snapshot(frame, slot);
        let solved = match algo {
            AlgorithmKind::Rmws => solve_schedule(cfg, &x, &y, w_slot, &opts.solver),
            AlgorithmKind::Baseline(kind) => {
                baseline_slot_schedule(kind, cfg, &x, &y, w_slot, &opts.solver)
            }
        };
        let row = match solved {
            Ok(sol) => {
                let (edge, cloud) = edge_cloud_latency(cfg, &x, &y, &sol.z, w_slot)?;
                let report = check_constraints(cfg, &x, &y, &sol.z, w_slot);
                assert!(
                    report.all_satisfied(),
                    "{name} emitted a constraint-violating decision: {report:?}"
                );
                SlotRecord {
                    frame,
                    slot,
                    algorithm: name.to_string(),
                    total_latency_s: edge + cloud,
                    edge_latency_s: edge,
                    cloud_latency_s: cloud,
                    cost_total: total_cost(cfg, &x, &y),
                    feasible: true,
                    iters_placement: placement_iters,
                    iters_schedule: sol.iterations as u64,
                }
            }
            Err(
                Error::UnroutableService { .. }
                | Error::InfeasibleDemand { .. }
                | Error::QueueUnstable { .. },
            ) => infeasible_row(frame, slot, name),
            Err(e) => return Err(e),
        };
        rows.push(row);
    }

    assert_eq!(x, x_frozen, "placement changed within a frame");
    assert_eq!(y, y_frozen, "allocation changed within a frame");

    Ok(FrameOutcome {
        rows,
        rmws_best: (algo == AlgorithmKind::Rmws).then_some(x),
    })
}

/// Run every requested algorithm over the full trace of `cfg`.
pub fn run_experiment(cfg: &SystemConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    cfg.validate()?;
    opts.solver.validate()?;
    if opts.algorithms.is_empty() {
        return Err(Error::Config("need at least one algorithm".into()));
    }

    let mut trace_rng = rand_chacha::ChaCha8Rng::seed_from_u64(crate::derive_seed(cfg.rng_seed, 1));
    let trace = generate_trace(cfg, &mut trace_rng);

    // Placement-score caches, one per distinct forecast seen.
    let mut caches: Vec<(Vec<u64>, ScoreCache)> = Vec::new();
    let mut rmws_warm: Option<PlacementMatrix> = None;
    let mut rows_by_frame: Vec<Vec<Vec<SlotRecord>>> = Vec::with_capacity(cfg.frames);

    for frame in 0..cfg.frames {
        let forecast = if opts.oracle_forecast {
            frame_forecast(cfg, frame, ForecastMode::Oracle(&trace))
        } else {
            frame_forecast(cfg, frame, ForecastMode::Mean)
        };
        let fkey = forecast.bit_key();
        if !caches.iter().any(|(k, _)| *k == fkey) {
            caches.push((fkey.clone(), ScoreCache::new()));
        }
        let cache = &caches.iter().find(|(k, _)| *k == fkey).unwrap().1;

        let outcomes: Vec<Result<FrameOutcome>> = exec::map_range(opts.algorithms.len(), |ai| {
            run_algorithm_frame(
                opts.algorithms[ai],
                cfg,
                frame,
                &forecast,
                &trace,
                opts,
                cache,
                rmws_warm.as_ref(),
            )
        });

        let mut frame_rows = Vec::with_capacity(opts.algorithms.len());
        for outcome in outcomes {
            let outcome = outcome?;
            if let Some(best) = outcome.rmws_best {
                rmws_warm = Some(best);
            }
            frame_rows.push(outcome.rows);
        }
        rows_by_frame.push(frame_rows);
    }

    // Emit rows ordered by (frame, slot, algorithm).
    let mut rows = Vec::with_capacity(cfg.frames * cfg.slots_per_frame * opts.algorithms.len());
    for (frame, frame_rows) in rows_by_frame.iter().enumerate() {
        for slot in 0..cfg.slots_per_frame {
            for algo_rows in frame_rows {
                rows.push(algo_rows[slot].clone());
            }
        }
        debug_assert!(frame_rows.iter().all(|r| r.iter().all(|row| row.frame == frame)));
    }

    Ok(ExperimentReport::new(cfg.rng_seed, rows))
}
