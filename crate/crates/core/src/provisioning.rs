//! Closed-form optimal compute allocation for a fixed placement and schedule.
//!
//! With the schedule fixed, the per-server allocation problem is convex and
//! the KKT conditions give a closed form. Writing `w_s = z_s * n_s * c_s`
//! (giga-cycles routed to the server for service `s` over the interval) and
//! `B = min(1, gamma)`:
//!
//! ```text
//! y_s = sqrt(w_s) * (B*F*dt - sum(w)) / (sum(sqrt(w)) * F*dt) + w_s / (F*dt)
//! ```
//!
//! Each service gets its stability floor `w_s/(F*dt)` plus a share of the
//! remaining capacity proportional to `sqrt(w_s)`; shares sum exactly to `B`.
//! Which of the two capacity constraints binds is decided by `gamma`, the
//! compute budget left after storage costs, in full-capacity units.

use serde::{Deserialize, Serialize};

use crate::domain::{AllocationMatrix, PlacementMatrix, ScheduleMatrix, SystemConfig, WorkloadSnapshot};
use crate::error::{Error, Result};

/// Which constraint binds for a server in the closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BudgetCase {
    /// `gamma < 1`: the budget binds, shares sum to `gamma`.
    BudgetLimited,
    /// `gamma >= 1`: the capacity binds, shares sum to one.
    CapacityLimited,
}

/// Closed-form allocation with its multipliers and active cases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktSolution {
    pub y: AllocationMatrix,
    /// Per-server multiplier on the capacity constraint (`sum y <= 1`).
    pub lambda: Vec<f64>,
    /// Per-server multiplier on the budget constraint.
    pub mu: Vec<f64>,
    pub case: Vec<BudgetCase>,
}

/// Compute-budget headroom of `server` after the storage cost of its placed
/// services, in units of full-capacity fractions. May be negative when
/// storage alone exceeds the budget; callers treat that as infeasible.
pub fn gamma(cfg: &SystemConfig, server: usize, x: &PlacementMatrix) -> f64 {
    let srv = &cfg.servers[server];
    let storage_cost: f64 = x
        .services_on(server)
        .map(|s| cfg.services[s].storage_req / srv.storage_capacity * srv.storage_price)
        .sum();
    (srv.budget - storage_cost) / srv.compute_price
}

/// Optimal allocation for every server given the schedule `z` and demand `w`.
///
/// Servers without routed demand get zero allocation. Errors when a server
/// hosting services has no compute budget left, or when its routed demand
/// cannot be stabilized within `min(1, gamma)` of its capacity.
pub fn optimal_allocation(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    z: &ScheduleMatrix,
    w: &WorkloadSnapshot,
) -> Result<KktSolution> {
    let (l, s_count) = (cfg.num_servers(), cfg.num_services());
    let mut y = AllocationMatrix::zeros(l, s_count);
    let mut lambda = vec![0.0; l];
    let mut mu = vec![0.0; l];
    let mut case = Vec::with_capacity(l);

    for i in 0..l {
        let g = gamma(cfg, i, x);
        case.push(if g < 1.0 { BudgetCase::BudgetLimited } else { BudgetCase::CapacityLimited });

        let placed: Vec<usize> = x.services_on(i).collect();
        if placed.is_empty() {
            continue;
        }
        if g <= 0.0 {
            return Err(Error::NegativeGamma { server: i, gamma: g });
        }

        // w_s = z*n*c per placed service; zero-demand services stay at y = 0
        // and are excluded from the weighting.
        let demands: Vec<(usize, f64)> = placed
            .iter()
            .map(|&s| (s, z.ratio(i, s) * w.total(s) * cfg.services[s].compute_req))
            .filter(|&(_, d)| d > 0.0)
            .collect();
        if demands.is_empty() {
            continue;
        }

        let bound = g.min(1.0);
        let f_dt = cfg.servers[i].compute_capacity * w.interval;
        let capacity = bound * f_dt;
        let total_demand: f64 = demands.iter().map(|&(_, d)| d).sum();
        if total_demand >= capacity {
            return Err(Error::InfeasibleDemand { server: i, demand: total_demand, capacity });
        }

        let sum_sqrt: f64 = demands.iter().map(|&(_, d)| d.sqrt()).sum();
        let slack = capacity - total_demand;
        for &(s, d) in &demands {
            let share = d.sqrt() * slack / (sum_sqrt * f_dt) + d / f_dt;
            assert!(share >= 0.0, "closed form produced a negative share");
            y.set(i, s, share);
        }

        // Multiplier of the binding constraint, from the stationarity line
        // (y*F*dt - w)^2 = w*F*dt^2 / (lambda + mu*P^f).
        let dual = f_dt * w.interval * sum_sqrt * sum_sqrt / (slack * slack);
        match case[i] {
            BudgetCase::BudgetLimited => mu[i] = dual / cfg.servers[i].compute_price,
            BudgetCase::CapacityLimited => lambda[i] = dual,
        }
    }

    Ok(KktSolution { y, lambda, mu, case })
}
