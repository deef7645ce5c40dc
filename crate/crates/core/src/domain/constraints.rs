//! Feasibility checking for a full (X, Y, Z) decision against a workload.
//!
//! Eight checks, reported rather than thrown:
//! 1. per-server placed storage within capacity,
//! 2. per-server allocation shares summing to at most one,
//! 3. per-service routing ratios summing to exactly one (tolerance 1e-9),
//! 4. per-server cost within budget,
//! 5. strict queue stability wherever workload is routed,
//! 6. placement entries binary (guaranteed by the type),
//! 7. allocation shares in [0, 1],
//! 8. routing ratios in [0, 1].

use serde::{Deserialize, Serialize};

use super::config::SystemConfig;
use super::latency::server_cost;
use super::matrices::{AllocationMatrix, PlacementMatrix, ScheduleMatrix, WorkloadSnapshot};

/// Tolerance on the routing-sum equality.
pub const ROUTING_SUM_TOL: f64 = 1e-9;
/// Queue stability is strict: the demand must stay below capacity by at
/// least this relative margin.
pub const STABILITY_REL_MARGIN: f64 = 1e-9;
/// Numeric slack for resource inequalities the optimal solutions make
/// exactly tight (budget, allocation sum), relative to the bound.
pub const TIGHT_BOUND_REL_TOL: f64 = 1e-9;

/// Outcome of one constraint: pass flag plus the worst breach magnitude in
/// the constraint's natural units (zero when satisfied).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub satisfied: bool,
    pub worst_violation: f64,
}

impl ConstraintCheck {
    fn from_violation(v: f64) -> Self {
        Self::with_tolerance(v, 0.0)
    }

    fn with_tolerance(v: f64, tol: f64) -> Self {
        let satisfied = v <= tol;
        ConstraintCheck { satisfied, worst_violation: if satisfied { 0.0 } else { v } }
    }
}

/// Per-constraint verdicts for a full decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub storage: ConstraintCheck,
    pub allocation_sum: ConstraintCheck,
    pub routing_sum: ConstraintCheck,
    pub budget: ConstraintCheck,
    pub stability: ConstraintCheck,
    pub binary_placement: ConstraintCheck,
    pub allocation_bounds: ConstraintCheck,
    pub routing_bounds: ConstraintCheck,
}

impl ConstraintReport {
    pub fn all_satisfied(&self) -> bool {
        self.storage.satisfied
            && self.allocation_sum.satisfied
            && self.routing_sum.satisfied
            && self.budget.satisfied
            && self.stability.satisfied
            && self.binary_placement.satisfied
            && self.allocation_bounds.satisfied
            && self.routing_bounds.satisfied
    }
}

/// Evaluate all eight constraints; violations are reported, never thrown.
pub fn check_constraints(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    y: &AllocationMatrix,
    z: &ScheduleMatrix,
    w: &WorkloadSnapshot,
) -> ConstraintReport {
    let l = cfg.num_servers();
    let s_count = cfg.num_services();

    let mut storage_v: f64 = 0.0;
    let mut alloc_sum_v: f64 = 0.0;
    let mut budget_v: f64 = 0.0;
    let mut budget_tol: f64 = 0.0;
    for i in 0..l {
        let used: f64 = x.services_on(i).map(|s| cfg.services[s].storage_req).sum();
        storage_v = storage_v.max(used - cfg.servers[i].storage_capacity);
        alloc_sum_v = alloc_sum_v.max(y.server_sum(i) - 1.0);
        budget_v = budget_v.max(server_cost(cfg, i, x, y) - cfg.servers[i].budget);
        budget_tol = budget_tol.max(TIGHT_BOUND_REL_TOL * cfg.servers[i].budget.max(1.0));
    }

    let mut routing_sum_v: f64 = 0.0;
    for s in 0..s_count {
        let sum = z.0.col_sum(s);
        let breach = (sum - 1.0).abs() - ROUTING_SUM_TOL;
        routing_sum_v = routing_sum_v.max(breach);
    }

    let mut stability_v: f64 = 0.0;
    for i in 0..l {
        for s in 0..s_count {
            let demand = z.ratio(i, s) * w.total(s) * cfg.services[s].compute_req;
            if demand <= 0.0 {
                continue;
            }
            let capacity = y.share(i, s) * cfg.servers[i].compute_capacity * w.interval;
            stability_v = stability_v.max(demand - (1.0 - STABILITY_REL_MARGIN) * capacity);
        }
    }

    let mut alloc_bounds_v: f64 = 0.0;
    for i in 0..l {
        for s in 0..s_count {
            let v = y.share(i, s);
            alloc_bounds_v = alloc_bounds_v.max((-v).max(v - 1.0));
        }
    }
    let mut routing_bounds_v: f64 = 0.0;
    for r in 0..=l {
        for s in 0..s_count {
            let v = z.ratio(r, s);
            routing_bounds_v = routing_bounds_v.max((-v).max(v - 1.0));
        }
    }

    ConstraintReport {
        storage: ConstraintCheck::from_violation(storage_v),
        allocation_sum: ConstraintCheck::with_tolerance(alloc_sum_v, TIGHT_BOUND_REL_TOL),
        routing_sum: ConstraintCheck::from_violation(routing_sum_v),
        budget: ConstraintCheck::with_tolerance(budget_v, budget_tol),
        stability: ConstraintCheck::from_violation(stability_v),
        // Binary by construction of PlacementMatrix.
        binary_placement: ConstraintCheck::from_violation(0.0),
        allocation_bounds: ConstraintCheck::with_tolerance(alloc_bounds_v, TIGHT_BOUND_REL_TOL),
        routing_bounds: ConstraintCheck::with_tolerance(routing_bounds_v, TIGHT_BOUND_REL_TOL),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::test_support::two_server_config;

    #[test]
    fn cloud_only_is_always_feasible() {
        let cfg = two_server_config();
        let w = WorkloadSnapshot::new(vec![vec![100.0, 50.0], vec![80.0, 60.0]], 60.0);
        let x = PlacementMatrix::zeros(2, 2);
        let y = AllocationMatrix::zeros(2, 2);
        let z = ScheduleMatrix::cloud_only(2, 2);
        let report = check_constraints(&cfg, &x, &y, &z, &w);
        assert!(report.all_satisfied(), "{report:?}");
    }

    #[test]
    fn storage_violation_magnitude() {
        let mut cfg = two_server_config();
        cfg.servers[0].storage_capacity = 15.0;
        cfg.services[0].storage_req = 10.0;
        cfg.services[1].storage_req = 10.0;
        let mut x = PlacementMatrix::zeros(2, 2);
        x.set(0, 0, true);
        x.set(0, 1, true);
        let y = AllocationMatrix::zeros(2, 2);
        let z = ScheduleMatrix::cloud_only(2, 2);
        let w = WorkloadSnapshot::zeros(2, 2, 60.0);
        let report = check_constraints(&cfg, &x, &y, &z, &w);
        assert!(!report.storage.satisfied);
        assert!((report.storage.worst_violation - 5.0).abs() < 1e-12);
    }

    #[test]
    fn routing_sum_violation_magnitude() {
        let cfg = two_server_config();
        let w = WorkloadSnapshot::new(vec![vec![10.0, 10.0], vec![10.0, 10.0]], 60.0);
        let mut z = ScheduleMatrix::zeros(2, 2);
        z.set(2, 0, 0.9);
        z.set(2, 1, 1.0);
        let x = PlacementMatrix::zeros(2, 2);
        let y = AllocationMatrix::zeros(2, 2);
        let report = check_constraints(&cfg, &x, &y, &z, &w);
        assert!(!report.routing_sum.satisfied);
        assert!((report.routing_sum.worst_violation - 0.1).abs() < 1e-6);
    }

    #[test]
    fn stability_checked_only_where_routed() {
        // Unplaced/unrouted entries with zero allocation must not trip the
        // stability check; a routed entry with no allocation must.
        let cfg = two_server_config();
        let w = WorkloadSnapshot::new(vec![vec![10.0, 0.0], vec![10.0, 0.0]], 60.0);
        let mut x = PlacementMatrix::zeros(2, 2);
        x.set(0, 0, true);
        let y = AllocationMatrix::zeros(2, 2);
        let mut z = ScheduleMatrix::cloud_only(2, 2);
        let report = check_constraints(&cfg, &x, &y, &z, &w);
        assert!(report.stability.satisfied);

        z.set(0, 0, 0.5);
        z.set(2, 0, 0.5);
        let report = check_constraints(&cfg, &x, &y, &z, &w);
        assert!(!report.stability.satisfied);
    }
}
