//! Alternating solver for the joint allocation/scheduling problem at a fixed
//! placement.
//!
//! The joint problem is non-convex, but each block is tractable: allocation
//! has a closed form for a fixed schedule, and scheduling is convex for a
//! fixed allocation. Rounds alternate the exact allocation step with a
//! warm-started scheduling solve, so the objective never increases; the
//! optimum value is what the placement search uses to score a candidate.

use serde::{Deserialize, Serialize};

use crate::domain::{
    total_latency, AllocationMatrix, PlacementMatrix, ScheduleMatrix, SystemConfig,
    WorkloadSnapshot,
};
use crate::error::{Error, Result};
use crate::provisioning::optimal_allocation;
use crate::scheduling::{solve_schedule_routes, RouteSet, SolverConfig};

/// Maximum alternation rounds.
pub const MAX_ROUNDS: usize = 100;
/// Stop when the objective changes by at most this much between rounds, s.
pub const ROUND_EPS: f64 = 1e-6;
/// Retries shifting workload cloudward when allocation reports infeasible
/// demand before falling back to a cloud-only schedule.
const CLOUD_SHIFT_RETRIES: usize = 3;

/// Converged allocation and shadow schedule for one placement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerSolution {
    pub y: AllocationMatrix,
    /// Evaluation-only schedule; never executed on the small timescale.
    pub z_shadow: ScheduleMatrix,
    /// Total latency of `(y, z_shadow)`, seconds.
    pub objective_theta: f64,
    /// Alternation rounds performed.
    pub iterations: usize,
    pub converged: bool,
}

/// Capacity-proportional starting schedule: each server carries a share of
/// every hosted service proportional to its budget-usable capacity, scaled
/// to keep aggregate demand strictly inside stability; the cloud takes the
/// remainder.
fn initial_schedule(cfg: &SystemConfig, x: &PlacementMatrix, w: &WorkloadSnapshot) -> ScheduleMatrix {
    let (l, s_count) = (cfg.num_servers(), cfg.num_services());
    let mut z = ScheduleMatrix::zeros(l, s_count);

    // Fraction of its placed demand each server could absorb.
    let mut server_frac = vec![0.0; l];
    for i in 0..l {
        let placed_demand: f64 = x
            .services_on(i)
            .map(|s| w.total(s) * cfg.services[s].compute_req)
            .sum();
        if placed_demand <= 0.0 {
            continue;
        }
        let g = crate::provisioning::gamma(cfg, i, x);
        if g <= 0.0 {
            continue;
        }
        let usable = 0.9 * g.min(1.0) * cfg.servers[i].compute_capacity * w.interval;
        server_frac[i] = (usable / placed_demand).min(1.0);
    }

    for s in 0..s_count {
        let mut edge_total = 0.0;
        let raw: Vec<(usize, f64)> = (0..l)
            .filter(|&i| x.placed(i, s))
            .map(|i| (i, server_frac[i]))
            .collect();
        let sum_raw: f64 = raw.iter().map(|&(_, f)| f).sum();
        let scale = if sum_raw > 1.0 { 1.0 / sum_raw } else { 1.0 };
        for (i, f) in raw {
            let share = f * scale;
            z.set(i, s, share);
            edge_total += share;
        }
        z.set(l, s, (1.0 - edge_total).max(0.0));
    }
    z
}

/// Move half of every edge share to the cloud, in place.
fn shift_cloudward(z: &mut ScheduleMatrix) {
    let l = z.servers();
    for s in 0..z.services() {
        let mut moved = 0.0;
        for i in 0..l {
            let v = z.ratio(i, s);
            z.set(i, s, v * 0.5);
            moved += v * 0.5;
        }
        z.set(l, s, z.cloud_ratio(s) + moved);
    }
}

/// Solve the inner problem for placement `x` against the frame forecast.
///
/// Requires every hosting server to keep a positive compute budget after
/// storage. If even repeated cloud shifts cannot make allocation feasible
/// the solver returns the cloud-only fallback with `converged = false`.
pub fn solve_inner(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    w_frame: &WorkloadSnapshot,
    solver: &SolverConfig,
) -> Result<InnerSolution> {
    let (l, s_count) = (cfg.num_servers(), cfg.num_services());

    // No placements: the only feasible point is all-cloud.
    if !x.any_placed() || w_frame.grand_total() == 0.0 {
        let y = AllocationMatrix::zeros(l, s_count);
        let z = ScheduleMatrix::cloud_only(l, s_count);
        let theta = total_latency(cfg, x, &y, &z, w_frame)?;
        return Ok(InnerSolution {
            y,
            z_shadow: z,
            objective_theta: theta,
            iterations: 1,
            converged: true,
        });
    }

    // Allocation step with the documented cloud-shift retry ladder.
    let mut z = initial_schedule(cfg, x, w_frame);
    let mut attempt = 0;
    let mut y = loop {
        match optimal_allocation(cfg, x, &z, w_frame) {
            Ok(sol) => break sol.y,
            Err(Error::InfeasibleDemand { .. }) => {
                attempt += 1;
                if attempt > CLOUD_SHIFT_RETRIES {
                    let y = AllocationMatrix::zeros(l, s_count);
                    let z = ScheduleMatrix::cloud_only(l, s_count);
                    let theta = total_latency(cfg, x, &y, &z, w_frame)?;
                    return Ok(InnerSolution {
                        y,
                        z_shadow: z,
                        objective_theta: theta,
                        iterations: 1,
                        converged: false,
                    });
                }
                shift_cloudward(&mut z);
            }
            Err(e) => return Err(e),
        }
    };

    let mut objective = f64::INFINITY;
    let mut rounds = 0;
    let mut converged = false;
    loop {
        rounds += 1;
        let sched = solve_schedule_routes(
            cfg,
            x,
            &y,
            w_frame,
            RouteSet::EdgeAndCloud,
            Some(&z),
            solver,
        )?;
        z = sched.z;
        // Re-provision for the updated schedule; the schedule stays stable
        // under the new allocation, so this step only improves.
        y = optimal_allocation(cfg, x, &z, w_frame)?.y;
        let f = total_latency(cfg, x, &y, &z, w_frame)?;
        assert!(
            f <= objective + 1e-9 * objective.abs().max(1.0),
            "alternation must not increase the objective: {f} after {objective}"
        );
        if objective - f <= ROUND_EPS {
            objective = f.min(objective);
            converged = true;
            break;
        }
        objective = f;
        if rounds >= MAX_ROUNDS {
            break;
        }
    }

    Ok(InnerSolution { y, z_shadow: z, objective_theta: objective, iterations: rounds, converged })
}
