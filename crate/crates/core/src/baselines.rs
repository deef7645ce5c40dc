//! The six comparison policies, sharing the main method's sub-solvers
//! wherever their definitions permit so that only the disabled mechanism
//! differs.

use serde::{Deserialize, Serialize};

use crate::domain::{
    AllocationMatrix, EdgeServer, PlacementMatrix, ScheduleMatrix, Service, SystemConfig,
    WorkloadSnapshot,
};
use crate::error::{Error, Result};
use crate::inner::solve_inner;
use crate::placement::is_feasible_placement;
use crate::provisioning::gamma;
use crate::scheduling::{solve_schedule, solve_schedule_routes, RouteSet, ScheduleSolution, SolverConfig};
use crate::workload::zipf_popularity;

/// Baseline policies.
///
/// - `Cpo`: cloud processing only; nothing on the edge.
/// - `Fsp`: placement frozen to a popularity fill of the base ranking.
/// - `Nsp`: per-server placement, local-or-cloud routing (no edge-edge).
/// - `Psp`: popularity placement, allocation and scheduling fully optimized.
/// - `Eera`: edge-only routing with equal allocation (no cloud).
/// - `Eceera`: full routing with equal allocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    Cpo,
    Fsp,
    Nsp,
    Psp,
    Eera,
    Eceera,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [
        BaselineKind::Cpo,
        BaselineKind::Fsp,
        BaselineKind::Nsp,
        BaselineKind::Psp,
        BaselineKind::Eera,
        BaselineKind::Eceera,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Cpo => "cpo",
            BaselineKind::Fsp => "fsp",
            BaselineKind::Nsp => "nsp",
            BaselineKind::Psp => "psp",
            BaselineKind::Eera => "eera",
            BaselineKind::Eceera => "eceera",
        }
    }
}

/// Frame-level decision of a policy: placement plus allocation.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameDecision {
    pub x: PlacementMatrix,
    pub y: AllocationMatrix,
}

/// Service indices ordered by forecast demand, ties by index.
fn demand_order(w: &WorkloadSnapshot) -> Vec<usize> {
    let mut order: Vec<usize> = (0..w.services()).collect();
    order.sort_by(|&a, &b| w.total(b).partial_cmp(&w.total(a)).unwrap().then(a.cmp(&b)));
    order
}

/// Service indices ordered by the config's base Zipf popularity (frame
/// independent, used by the frozen-placement policy).
fn base_popularity_order(cfg: &SystemConfig) -> Vec<usize> {
    let p = zipf_popularity(cfg.num_services(), cfg.zipf_exponent);
    let mut order: Vec<usize> = (0..cfg.num_services()).collect();
    order.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap().then(a.cmp(&b)));
    order
}

/// Fill every server with the most popular services that keep its row
/// feasible (storage fits, compute budget stays positive).
fn popularity_fill(cfg: &SystemConfig, order: &[usize]) -> PlacementMatrix {
    let mut x = PlacementMatrix::zeros(cfg.num_servers(), cfg.num_services());
    for i in 0..cfg.num_servers() {
        let mut row = vec![false; cfg.num_services()];
        for &s in order {
            row[s] = true;
            if !is_feasible_placement(cfg, &row, i) {
                row[s] = false;
            }
        }
        for (s, &b) in row.iter().enumerate() {
            x.set(i, s, b);
        }
    }
    x
}

/// Coverage-first fill: walk services by popularity and place each on the
/// feasible server with the most free storage, then top up every server with
/// further popular services. Edge-only policies need every service hosted
/// somewhere, which the plain per-server fill does not provide.
fn coverage_fill(cfg: &SystemConfig, order: &[usize]) -> PlacementMatrix {
    let l = cfg.num_servers();
    let mut x = PlacementMatrix::zeros(l, cfg.num_services());
    let mut free: Vec<f64> = cfg.servers.iter().map(|srv| srv.storage_capacity).collect();
    for &s in order {
        let mut candidate: Option<usize> = None;
        for i in 0..l {
            let mut row = x.row(i).to_vec();
            row[s] = true;
            if !is_feasible_placement(cfg, &row, i) {
                continue;
            }
            if candidate.is_none_or(|c| free[i] > free[c]) {
                candidate = Some(i);
            }
        }
        if let Some(i) = candidate {
            x.set(i, s, true);
            free[i] -= cfg.services[s].storage_req;
        }
    }
    // Second pass: use leftover storage for popular duplicates.
    for i in 0..l {
        for &s in order {
            if x.placed(i, s) {
                continue;
            }
            let mut row = x.row(i).to_vec();
            row[s] = true;
            if is_feasible_placement(cfg, &row, i) {
                x.set(i, s, true);
                free[i] -= cfg.services[s].storage_req;
            }
        }
    }
    x
}

/// Equal allocation: each hosted service gets `min(1, gamma) / |hosted|`.
fn equal_allocation(cfg: &SystemConfig, x: &PlacementMatrix) -> AllocationMatrix {
    let mut y = AllocationMatrix::zeros(cfg.num_servers(), cfg.num_services());
    for i in 0..cfg.num_servers() {
        let hosted = x.placed_count(i);
        if hosted == 0 {
            continue;
        }
        let share = gamma(cfg, i, x).clamp(0.0, 1.0) / hosted as f64;
        for s in x.services_on(i).collect::<Vec<_>>() {
            y.set(i, s, share);
        }
    }
    y
}

/// View of a single server (plus cloud) as its own one-server system, used
/// by the no-cooperation policy.
fn server_sub_config(cfg: &SystemConfig, server: usize) -> SystemConfig {
    SystemConfig {
        servers: vec![EdgeServer { id: 0, ..cfg.servers[server].clone() }],
        services: cfg.services.iter().map(|s| Service { ..s.clone() }).collect(),
        ..cfg.clone()
    }
}

fn server_sub_snapshot(w: &WorkloadSnapshot, server: usize) -> WorkloadSnapshot {
    let row: Vec<f64> = (0..w.services()).map(|s| w.count(server, s)).collect();
    WorkloadSnapshot::new(vec![row], w.interval)
}

/// Frame-level placement and allocation for `kind`.
pub fn baseline_frame_decision(
    kind: BaselineKind,
    cfg: &SystemConfig,
    w_frame: &WorkloadSnapshot,
    solver: &SolverConfig,
) -> Result<FrameDecision> {
    let (l, s_count) = (cfg.num_servers(), cfg.num_services());
    match kind {
        BaselineKind::Cpo => Ok(FrameDecision {
            x: PlacementMatrix::zeros(l, s_count),
            y: AllocationMatrix::zeros(l, s_count),
        }),
        BaselineKind::Fsp => {
            let x = popularity_fill(cfg, &base_popularity_order(cfg));
            let y = solve_inner(cfg, &x, w_frame, solver)?.y;
            Ok(FrameDecision { x, y })
        }
        BaselineKind::Psp => {
            let x = popularity_fill(cfg, &demand_order(w_frame));
            let y = solve_inner(cfg, &x, w_frame, solver)?.y;
            Ok(FrameDecision { x, y })
        }
        BaselineKind::Nsp => {
            // Each server plans in isolation against its own region.
            let x = popularity_fill(cfg, &demand_order(w_frame));
            let mut y = AllocationMatrix::zeros(l, s_count);
            for i in 0..l {
                let sub_cfg = server_sub_config(cfg, i);
                let sub_w = server_sub_snapshot(w_frame, i);
                let mut sub_x = PlacementMatrix::zeros(1, s_count);
                for s in x.services_on(i).collect::<Vec<_>>() {
                    sub_x.set(0, s, true);
                }
                let sub = solve_inner(&sub_cfg, &sub_x, &sub_w, solver)?;
                for s in 0..s_count {
                    y.set(i, s, sub.y.share(0, s));
                }
            }
            Ok(FrameDecision { x, y })
        }
        BaselineKind::Eera => {
            let x = coverage_fill(cfg, &demand_order(w_frame));
            // Every service must live on some edge server; otherwise the
            // cloudless policy has no feasible route.
            for s in 0..s_count {
                if (0..l).all(|i| !x.placed(i, s)) && w_frame.total(s) > 0.0 {
                    return Err(Error::UnroutableService { service: s, demand: 1.0, capacity: 0.0 });
                }
            }
            let y = equal_allocation(cfg, &x);
            Ok(FrameDecision { x, y })
        }
        BaselineKind::Eceera => {
            let x = popularity_fill(cfg, &demand_order(w_frame));
            let y = equal_allocation(cfg, &x);
            Ok(FrameDecision { x, y })
        }
    }
}

/// Slot-level schedule for `kind` under its frame decision.
pub fn baseline_slot_schedule(
    kind: BaselineKind,
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    y: &AllocationMatrix,
    w_slot: &WorkloadSnapshot,
    solver: &SolverConfig,
) -> Result<ScheduleSolution> {
    let (l, s_count) = (cfg.num_servers(), cfg.num_services());
    match kind {
        BaselineKind::Cpo => {
            let z = ScheduleMatrix::cloud_only(l, s_count);
            let objective: f64 = (0..s_count)
                .map(|s| w_slot.total(s) * cfg.services[s].cloud_delay)
                .sum();
            Ok(ScheduleSolution { z, objective, iterations: 0, converged: true })
        }
        BaselineKind::Nsp => {
            // Independent local-or-cloud split per server; a region's demand
            // never reaches another server's queue.
            let mut z = ScheduleMatrix::zeros(l, s_count);
            let mut iterations = 0;
            let mut converged = true;
            let mut edge_share = vec![0.0; s_count];
            for i in 0..l {
                let sub_cfg = server_sub_config(cfg, i);
                let sub_w = server_sub_snapshot(w_slot, i);
                let mut sub_x = PlacementMatrix::zeros(1, s_count);
                for s in x.services_on(i).collect::<Vec<_>>() {
                    sub_x.set(0, s, true);
                }
                let mut sub_y = AllocationMatrix::zeros(1, s_count);
                for s in 0..s_count {
                    sub_y.set(0, s, y.share(i, s));
                }
                let sub = solve_schedule(&sub_cfg, &sub_x, &sub_y, &sub_w, solver)?;
                iterations = iterations.max(sub.iterations);
                converged &= sub.converged;
                for s in 0..s_count {
                    let n_total = w_slot.total(s);
                    if n_total == 0.0 {
                        continue;
                    }
                    // Sub-instance ratios are of the local arrivals.
                    let share = sub.z.ratio(0, s) * sub_w.count(0, s) / n_total;
                    z.set(i, s, share);
                    edge_share[s] += share;
                }
            }
            for s in 0..s_count {
                z.set(l, s, (1.0 - edge_share[s]).max(0.0));
            }
            let objective = crate::domain::total_latency(cfg, x, y, &z, w_slot)?;
            Ok(ScheduleSolution { z, objective, iterations, converged })
        }
        BaselineKind::Eera => {
            solve_schedule_routes(cfg, x, y, w_slot, RouteSet::EdgeOnly, None, solver)
        }
        BaselineKind::Fsp | BaselineKind::Psp | BaselineKind::Eceera => {
            solve_schedule(cfg, x, y, w_slot, solver)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::check_constraints;
    use crate::domain::test_support::two_server_config;
    use crate::workload::{frame_forecast, ForecastMode};

    fn four_service_config() -> SystemConfig {
        let mut cfg = two_server_config();
        cfg.servers[0].budget = 60.0;
        cfg.servers[1].budget = 60.0;
        cfg.servers[0].storage_capacity = 70.0;
        cfg.servers[1].storage_capacity = 70.0;
        cfg.services = (0..4)
            .map(|id| Service {
                id,
                storage_req: 25.0,
                compute_req: 0.2,
                edge_delay: 0.01,
                cloud_delay: 0.1,
            })
            .collect();
        cfg
    }

    #[test]
    fn cpo_places_nothing_and_routes_to_cloud() {
        let cfg = four_service_config();
        let w = frame_forecast(&cfg, 0, ForecastMode::Mean);
        let d = baseline_frame_decision(BaselineKind::Cpo, &cfg, &w, &SolverConfig::default())
            .unwrap();
        assert!(!d.x.any_placed());
        let slot = WorkloadSnapshot::new(vec![vec![10.0; 4], vec![20.0; 4]], 60.0);
        let sol = baseline_slot_schedule(
            BaselineKind::Cpo,
            &cfg,
            &d.x,
            &d.y,
            &slot,
            &SolverConfig::default(),
        )
        .unwrap();
        for s in 0..4 {
            assert_eq!(sol.z.cloud_ratio(s), 1.0);
        }
    }

    #[test]
    fn psp_places_by_popularity_rank() {
        // Two services fit per server: ranks 1 and 2 go on.
        let cfg = four_service_config();
        let w = frame_forecast(&cfg, 0, ForecastMode::Mean);
        let d = baseline_frame_decision(BaselineKind::Psp, &cfg, &w, &SolverConfig::default())
            .unwrap();
        for i in 0..2 {
            assert!(d.x.placed(i, 0) && d.x.placed(i, 1), "top-2 services expected");
            assert!(!d.x.placed(i, 2) && !d.x.placed(i, 3));
        }
    }

    #[test]
    fn eceera_splits_allocation_equally_under_budget() {
        let cfg = four_service_config();
        let w = frame_forecast(&cfg, 0, ForecastMode::Mean);
        let d =
            baseline_frame_decision(BaselineKind::Eceera, &cfg, &w, &SolverConfig::default())
                .unwrap();
        for i in 0..2 {
            let hosted: Vec<usize> = d.x.services_on(i).collect();
            let expected = gamma(&cfg, i, &d.x).min(1.0) / hosted.len() as f64;
            for s in hosted {
                assert!((d.y.share(i, s) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nsp_never_transfers_between_regions() {
        let cfg = four_service_config();
        let w = frame_forecast(&cfg, 0, ForecastMode::Mean);
        let d = baseline_frame_decision(BaselineKind::Nsp, &cfg, &w, &SolverConfig::default())
            .unwrap();
        let slot = WorkloadSnapshot::new(
            vec![vec![150.0, 120.0, 40.0, 20.0], vec![130.0, 100.0, 50.0, 30.0]],
            60.0,
        );
        let sol = baseline_slot_schedule(
            BaselineKind::Nsp,
            &cfg,
            &d.x,
            &d.y,
            &slot,
            &SolverConfig::default(),
        )
        .unwrap();
        for i in 0..2 {
            for s in 0..4 {
                let routed = sol.z.ratio(i, s) * slot.total(s);
                assert!(
                    routed <= slot.count(i, s) + 1e-9,
                    "server {i} took foreign demand for service {s}"
                );
            }
        }
        let report = check_constraints(&cfg, &d.x, &d.y, &sol.z, &slot);
        assert!(report.all_satisfied(), "{report:?}");
    }

    #[test]
    fn eera_covers_every_service_and_avoids_cloud() {
        let mut cfg = four_service_config();
        // Plenty of compute so the edge can absorb everything.
        cfg.servers[0].compute_capacity = 300.0;
        cfg.servers[1].compute_capacity = 300.0;
        let w = frame_forecast(&cfg, 0, ForecastMode::Mean);
        let d = baseline_frame_decision(BaselineKind::Eera, &cfg, &w, &SolverConfig::default())
            .unwrap();
        for s in 0..4 {
            assert!((0..2).any(|i| d.x.placed(i, s)), "service {s} not hosted");
        }
        let slot = WorkloadSnapshot::new(
            vec![vec![150.0, 120.0, 40.0, 20.0], vec![130.0, 100.0, 50.0, 30.0]],
            60.0,
        );
        let sol = baseline_slot_schedule(
            BaselineKind::Eera,
            &cfg,
            &d.x,
            &d.y,
            &slot,
            &SolverConfig::default(),
        )
        .unwrap();
        for s in 0..4 {
            assert_eq!(sol.z.cloud_ratio(s), 0.0);
        }
        let report = check_constraints(&cfg, &d.x, &d.y, &sol.z, &slot);
        assert!(report.all_satisfied(), "{report:?}");
    }

    #[test]
    fn eera_zero_workload_spreads_uniformly() {
        let mut cfg = four_service_config();
        cfg.servers[0].compute_capacity = 300.0;
        cfg.servers[1].compute_capacity = 300.0;
        let w = frame_forecast(&cfg, 0, ForecastMode::Mean);
        let d = baseline_frame_decision(BaselineKind::Eera, &cfg, &w, &SolverConfig::default())
            .unwrap();
        let slot = WorkloadSnapshot::zeros(2, 4, 60.0);
        let sol = baseline_slot_schedule(
            BaselineKind::Eera,
            &cfg,
            &d.x,
            &d.y,
            &slot,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(sol.objective, 0.0);
        for s in 0..4 {
            let hosts: Vec<usize> =
                (0..2).filter(|&i| d.x.placed(i, s) && d.y.share(i, s) > 0.0).collect();
            for &i in &hosts {
                assert!((sol.z.ratio(i, s) - 1.0 / hosts.len() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eera_infeasible_when_edge_cannot_host_everything() {
        let mut cfg = four_service_config();
        // Tiny storage: only one service fits in total.
        cfg.servers[0].storage_capacity = 25.0;
        cfg.servers[1].storage_capacity = 10.0;
        let w = frame_forecast(&cfg, 0, ForecastMode::Mean);
        let err = baseline_frame_decision(BaselineKind::Eera, &cfg, &w, &SolverConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::UnroutableService { .. }));
    }

    #[test]
    fn fsp_ignores_per_frame_popularity() {
        let mut cfg = four_service_config();
        cfg.frames = 2;
        // Frame 1 flips popularity; the frozen policy must not care.
        cfg.popularity_frame_schedule = Some(vec![vec![0, 1, 2, 3], vec![3, 2, 1, 0]]);
        let w0 = frame_forecast(&cfg, 0, ForecastMode::Mean);
        let w1 = frame_forecast(&cfg, 1, ForecastMode::Mean);
        let solver = SolverConfig::default();
        let d0 = baseline_frame_decision(BaselineKind::Fsp, &cfg, &w0, &solver).unwrap();
        let d1 = baseline_frame_decision(BaselineKind::Fsp, &cfg, &w1, &solver).unwrap();
        assert_eq!(d0.x, d1.x, "frozen placement changed across frames");
        // The adaptive popularity policy does follow the flip.
        let p0 = baseline_frame_decision(BaselineKind::Psp, &cfg, &w0, &solver).unwrap();
        let p1 = baseline_frame_decision(BaselineKind::Psp, &cfg, &w1, &solver).unwrap();
        assert_ne!(p0.x, p1.x);
    }
}
