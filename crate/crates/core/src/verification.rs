//! Independent numeric oracles: exhaustive placement search, convexity
//! probes, KKT residuals, a projected-gradient allocation solver, and a
//! stationary-distribution check for the placement chain.
//!
//! The oracles deliberately avoid the production solvers' algorithmic paths:
//! enumeration instead of sampling, finite differences and gradient descent
//! instead of closed forms. They share only the objective definition.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    project_simplex, total_latency, AllocationMatrix, PlacementMatrix, ScheduleMatrix,
    SystemConfig, WorkloadSnapshot,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::inner::solve_inner;
use crate::placement::{is_feasible_placement, GibbsTrace};
use crate::provisioning::gamma;
use crate::scheduling::SolverConfig;

/// Outcome of one probe. For "expect violations" probes (joint
/// non-convexity) `pass` means at least one violation was found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probe: String,
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub pass: bool,
}

/// Guard for exhaustive enumeration.
pub const BRUTE_FORCE_LIMIT: u128 = 4096;

/// All placements whose rows individually pass the feasibility gate.
fn feasible_placements(cfg: &SystemConfig) -> Result<Vec<PlacementMatrix>> {
    let (l, s_count) = (cfg.num_servers(), cfg.num_services());
    let states: u128 = 1u128
        .checked_shl((l * s_count) as u32)
        .ok_or(Error::TooLarge { states: u128::MAX, limit: BRUTE_FORCE_LIMIT })?;
    if states > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { states, limit: BRUTE_FORCE_LIMIT });
    }

    let mut row_spaces: Vec<Vec<Vec<bool>>> = Vec::with_capacity(l);
    for i in 0..l {
        let mut rows = Vec::new();
        for bits in 0u32..(1 << s_count) {
            let row: Vec<bool> = (0..s_count).map(|s| bits & (1 << s) != 0).collect();
            if is_feasible_placement(cfg, &row, i) {
                rows.push(row);
            }
        }
        row_spaces.push(rows);
    }

    let mut placements = vec![PlacementMatrix::zeros(l, s_count)];
    for (i, rows) in row_spaces.iter().enumerate() {
        let mut next = Vec::with_capacity(placements.len() * rows.len());
        for base in &placements {
            for row in rows {
                next.push(base.with_row(i, row));
            }
        }
        placements = next;
    }
    Ok(placements)
}

/// Enumerate every feasible placement, score each with the inner solver and
/// return the minimizer (ties broken by lexicographically smallest bits).
pub fn brute_force_placement(
    cfg: &SystemConfig,
    w_frame: &WorkloadSnapshot,
    solver: &SolverConfig,
) -> Result<(PlacementMatrix, f64)> {
    let placements = feasible_placements(cfg)?;
    let scored: Vec<Result<f64>> = exec::map_range(placements.len(), |k| {
        solve_inner(cfg, &placements[k], w_frame, solver).map(|sol| sol.objective_theta)
    });
    let mut best: Option<(usize, f64)> = None;
    for (k, theta) in scored.into_iter().enumerate() {
        let theta = theta?;
        let better = match best {
            None => true,
            Some((bk, bt)) => {
                theta < bt || (theta == bt && placements[k].key() < placements[bk].key())
            }
        };
        if better {
            best = Some((k, theta));
        }
    }
    let (k, theta) = best.expect("cloud-only placement always enumerated");
    Ok((placements[k].clone(), theta))
}

/// Which objective block a convexity probe exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvexityTarget {
    /// Allocation for a fixed schedule: expected convex.
    AllocationGivenSchedule,
    /// Schedule for a fixed allocation: expected convex.
    ScheduleGivenAllocation,
    /// Allocation and schedule jointly: expected NON-convex, the probe
    /// passes when it finds a midpoint violation.
    JointAllocationScheduling,
}

/// Convexity tolerance for the midpoint tests.
const MIDPOINT_TOL: f64 = 1e-9;

/// Fraction of a server's usable capacity the random points may load.
const PROBE_LOAD: f64 = 0.7;

/// Random schedule routing only to placed servers, loading each server to at
/// most [`PROBE_LOAD`] of its usable capacity.
fn random_feasible_schedule(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    w: &WorkloadSnapshot,
    rng: &mut ChaCha8Rng,
) -> ScheduleMatrix {
    let (l, s_count) = (cfg.num_servers(), cfg.num_services());
    let mut z = ScheduleMatrix::zeros(l, s_count);
    for s in 0..s_count {
        let hosts: Vec<usize> = (0..l).filter(|&i| x.placed(i, s)).collect();
        let mut weights: Vec<f64> = (0..hosts.len() + 1).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        for v in weights.iter_mut() {
            *v /= total;
        }
        for (j, &i) in hosts.iter().enumerate() {
            z.set(i, s, weights[j]);
        }
        z.set(l, s, weights[hosts.len()]);
    }
    // Scale each server's aggregate demand inside its usable capacity.
    for i in 0..l {
        let usable = PROBE_LOAD * gamma(cfg, i, x).clamp(0.0, 1.0)
            * cfg.servers[i].compute_capacity
            * w.interval;
        let load: f64 = (0..s_count)
            .map(|s| z.ratio(i, s) * w.total(s) * cfg.services[s].compute_req)
            .sum();
        if load > usable && load > 0.0 {
            let scale = usable / load;
            for s in 0..s_count {
                let v = z.ratio(i, s);
                z.set(i, s, v * scale);
                z.set(l, s, z.cloud_ratio(s) + v * (1.0 - scale));
            }
        }
    }
    z
}

/// Random allocation dominating the stability floors for the given schedule,
/// spending a random fraction of each server's remaining bound.
fn random_feasible_allocation(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    z: &ScheduleMatrix,
    w: &WorkloadSnapshot,
    rng: &mut ChaCha8Rng,
) -> Option<AllocationMatrix> {
    let (l, s_count) = (cfg.num_servers(), cfg.num_services());
    let mut y = AllocationMatrix::zeros(l, s_count);
    for i in 0..l {
        let hosts: Vec<usize> = x.services_on(i).collect();
        if hosts.is_empty() {
            continue;
        }
        let bound = gamma(cfg, i, x).min(1.0);
        if bound <= 0.0 {
            return None;
        }
        let f_dt = cfg.servers[i].compute_capacity * w.interval;
        let floors: Vec<f64> = hosts
            .iter()
            .map(|&s| z.ratio(i, s) * w.total(s) * cfg.services[s].compute_req / f_dt)
            .collect();
        let floor_sum: f64 = floors.iter().sum();
        if floor_sum >= bound {
            return None;
        }
        // Keep a stability margin, then split a random share of the slack.
        let slack = (bound - floor_sum) * rng.gen_range(0.3..0.9);
        let mut weights: Vec<f64> = hosts.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
        let wsum: f64 = weights.iter().sum();
        for v in weights.iter_mut() {
            *v /= wsum;
        }
        for ((&s, &floor), &wgt) in hosts.iter().zip(&floors).zip(&weights) {
            let margin = 0.05 * slack / hosts.len() as f64;
            y.set(i, s, floor + margin + wgt * (slack - margin * hosts.len() as f64));
        }
    }
    Some(y)
}

/// Midpoint-convexity probe over random feasible pairs.
pub fn convexity_probe(
    target: ConvexityTarget,
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    w: &WorkloadSnapshot,
    seed: u64,
    n_pairs: usize,
) -> Result<ProbeReport> {
    if !x.any_placed() || w.grand_total() == 0.0 {
        return Err(Error::DegenerateInstance("probe needs placements and demand".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // A reference point for the fixed block.
    let z_ref = random_feasible_schedule(cfg, x, w, &mut rng);
    let y_ref = random_feasible_allocation(cfg, x, &z_ref, w, &mut rng)
        .ok_or_else(|| Error::DegenerateInstance("no interior allocation".into()))?;

    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    let mut samples = 0usize;

    for _ in 0..n_pairs {
        let (fa, fb, fm) = match target {
            ConvexityTarget::AllocationGivenSchedule => {
                let ya = match random_feasible_allocation(cfg, x, &z_ref, w, &mut rng) {
                    Some(y) => y,
                    None => continue,
                };
                let yb = match random_feasible_allocation(cfg, x, &z_ref, w, &mut rng) {
                    Some(y) => y,
                    None => continue,
                };
                let mut ym = AllocationMatrix::zeros(cfg.num_servers(), cfg.num_services());
                for i in 0..cfg.num_servers() {
                    for s in 0..cfg.num_services() {
                        ym.set(i, s, 0.5 * (ya.share(i, s) + yb.share(i, s)));
                    }
                }
                (
                    total_latency(cfg, x, &ya, &z_ref, w)?,
                    total_latency(cfg, x, &yb, &z_ref, w)?,
                    total_latency(cfg, x, &ym, &z_ref, w)?,
                )
            }
            ConvexityTarget::ScheduleGivenAllocation => {
                // Fixed allocation must dominate both schedules: draw the
                // schedules first from the allocation's stable region.
                let za = random_schedule_under_allocation(cfg, x, &y_ref, w, &mut rng);
                let zb = random_schedule_under_allocation(cfg, x, &y_ref, w, &mut rng);
                let zm = midpoint_schedule(&za, &zb);
                (
                    total_latency(cfg, x, &y_ref, &za, w)?,
                    total_latency(cfg, x, &y_ref, &zb, w)?,
                    total_latency(cfg, x, &y_ref, &zm, w)?,
                )
            }
            ConvexityTarget::JointAllocationScheduling => {
                let za = random_feasible_schedule(cfg, x, w, &mut rng);
                let ya = match random_feasible_allocation(cfg, x, &za, w, &mut rng) {
                    Some(y) => y,
                    None => continue,
                };
                let zb = random_feasible_schedule(cfg, x, w, &mut rng);
                let yb = match random_feasible_allocation(cfg, x, &zb, w, &mut rng) {
                    Some(y) => y,
                    None => continue,
                };
                let zm = midpoint_schedule(&za, &zb);
                let mut ym = AllocationMatrix::zeros(cfg.num_servers(), cfg.num_services());
                for i in 0..cfg.num_servers() {
                    for s in 0..cfg.num_services() {
                        ym.set(i, s, 0.5 * (ya.share(i, s) + yb.share(i, s)));
                    }
                }
                (
                    total_latency(cfg, x, &ya, &za, w)?,
                    total_latency(cfg, x, &yb, &zb, w)?,
                    total_latency(cfg, x, &ym, &zm, w)?,
                )
            }
        };
        samples += 1;
        let gap = fm - 0.5 * (fa + fb);
        if gap > MIDPOINT_TOL {
            violations += 1;
            worst = worst.max(gap);
            if target == ConvexityTarget::JointAllocationScheduling {
                break; // one counterexample settles non-convexity
            }
        }
    }

    if samples == 0 {
        return Err(Error::DegenerateInstance("no feasible pairs drawn".into()));
    }
    let pass = match target {
        ConvexityTarget::JointAllocationScheduling => violations >= 1,
        _ => violations == 0,
    };
    let probe = match target {
        ConvexityTarget::AllocationGivenSchedule => "allocation_convexity",
        ConvexityTarget::ScheduleGivenAllocation => "scheduling_convexity",
        ConvexityTarget::JointAllocationScheduling => "joint_nonconvexity",
    };
    Ok(ProbeReport { probe: probe.into(), samples, violations, worst_margin: worst, pass })
}

fn midpoint_schedule(a: &ScheduleMatrix, b: &ScheduleMatrix) -> ScheduleMatrix {
    let mut m = ScheduleMatrix::zeros(a.servers(), a.services());
    for r in 0..=a.servers() {
        for s in 0..a.services() {
            m.set(r, s, 0.5 * (a.ratio(r, s) + b.ratio(r, s)));
        }
    }
    m
}

/// Random schedule keeping every entry strictly inside the stability region
/// of a FIXED allocation.
fn random_schedule_under_allocation(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    y: &AllocationMatrix,
    w: &WorkloadSnapshot,
    rng: &mut ChaCha8Rng,
) -> ScheduleMatrix {
    let (l, s_count) = (cfg.num_servers(), cfg.num_services());
    let mut z = ScheduleMatrix::zeros(l, s_count);
    for s in 0..s_count {
        let hosts: Vec<usize> =
            (0..l).filter(|&i| x.placed(i, s) && y.share(i, s) > 0.0).collect();
        let nc = w.total(s) * cfg.services[s].compute_req;
        let mut col = vec![0.0; hosts.len() + 1];
        loop {
            for v in col.iter_mut() {
                *v = rng.gen::<f64>();
            }
            project_simplex(&mut col, 1.0);
            let ok = hosts.iter().enumerate().all(|(j, &i)| {
                nc == 0.0
                    || col[j] * nc
                        < 0.9 * y.share(i, s) * cfg.servers[i].compute_capacity * w.interval
            });
            if ok {
                break;
            }
        }
        for (j, &i) in hosts.iter().enumerate() {
            z.set(i, s, col[j]);
        }
        z.set(l, s, col[hosts.len()]);
    }
    z
}

/// Analytic allocation-objective derivative: `-w*F*dt^2 / (y*F*dt - w)^2`.
fn allocation_gradient(
    cfg: &SystemConfig,
    server: usize,
    demand: f64,
    y: f64,
    interval: f64,
) -> f64 {
    let f_dt = cfg.servers[server].compute_capacity * interval;
    let margin = y * f_dt - demand;
    -demand * f_dt * interval / (margin * margin)
}

/// Stationarity and complementary-slackness residual of an allocation,
/// reconstructing the multipliers from the closed-form case split.
pub fn kkt_residual(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    z: &ScheduleMatrix,
    y_star: &AllocationMatrix,
    w: &WorkloadSnapshot,
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..cfg.num_servers() {
        let demands: Vec<(usize, f64)> = x
            .services_on(i)
            .map(|s| (s, z.ratio(i, s) * w.total(s) * cfg.services[s].compute_req))
            .filter(|&(_, d)| d > 0.0)
            .collect();
        if demands.is_empty() {
            continue;
        }
        let g = gamma(cfg, i, x);
        let f_dt = cfg.servers[i].compute_capacity * w.interval;
        let sum_sqrt: f64 = demands.iter().map(|&(_, d)| d.sqrt()).sum();
        let total_demand: f64 = demands.iter().map(|&(_, d)| d).sum();
        let bound = g.min(1.0);
        let slack = bound * f_dt - total_demand;
        let dual = f_dt * w.interval * sum_sqrt * sum_sqrt / (slack * slack);
        let (lambda, mu) =
            if g < 1.0 { (0.0, dual / cfg.servers[i].compute_price) } else { (dual, 0.0) };

        // Stationarity per loaded service.
        for &(s, d) in &demands {
            let grad = allocation_gradient(cfg, i, d, y_star.share(i, s), w.interval);
            let r = (grad + lambda + mu * cfg.servers[i].compute_price).abs();
            worst = worst.max(r);
        }
        // Complementary slackness.
        let share_sum = y_star.server_sum(i);
        worst = worst.max((lambda * (share_sum - 1.0)).abs());
        let cost = crate::domain::server_cost(cfg, i, x, y_star);
        worst = worst.max((mu * (cost - cfg.servers[i].budget)).abs());
    }
    worst
}

/// Independent allocation oracle: projected gradient descent on each
/// server's allocation block, run to a small projected-gradient residual.
///
/// Steps are sized from the analytic curvature of the latency objective
/// (`2*d*F^2*dt^3 / margin^3`), so the iteration works purely in allocation
/// space and is not limited by the float resolution of objective
/// comparisons. Test/verification use only.
pub fn numeric_allocation_solver(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    z: &ScheduleMatrix,
    w: &WorkloadSnapshot,
) -> Result<AllocationMatrix> {
    const MAX_ITERS: usize = 1_000_000;
    let (l, s_count) = (cfg.num_servers(), cfg.num_services());
    let mut y = AllocationMatrix::zeros(l, s_count);

    for i in 0..l {
        let demands: Vec<(usize, f64)> = x
            .services_on(i)
            .map(|s| (s, z.ratio(i, s) * w.total(s) * cfg.services[s].compute_req))
            .filter(|&(_, d)| d > 0.0)
            .collect();
        if demands.is_empty() {
            continue;
        }
        let g = gamma(cfg, i, x);
        if g <= 0.0 {
            return Err(Error::NegativeGamma { server: i, gamma: g });
        }
        let bound = g.min(1.0);
        let f_dt = cfg.servers[i].compute_capacity * w.interval;
        let floors: Vec<f64> = demands.iter().map(|&(_, d)| d / f_dt).collect();
        let floor_sum: f64 = floors.iter().sum();
        let mass = bound - floor_sum;
        if mass <= 0.0 {
            return Err(Error::InfeasibleDemand {
                server: i,
                demand: floor_sum * f_dt,
                capacity: bound * f_dt,
            });
        }

        // Slack shares above the stability floors, living on a scaled
        // simplex of total `mass`. Margins in cycles are `u * F * dt`.
        let k = demands.len();
        let mut u = vec![mass / k as f64; k];
        let mut grad = vec![0.0; k];
        let mut converged = false;
        let mut iters = 0usize;
        let mut residual = f64::INFINITY;
        while iters < MAX_ITERS {
            iters += 1;
            let mut gmax: f64 = 0.0;
            let mut curv_max: f64 = 0.0;
            for (j, &(_, d)) in demands.iter().enumerate() {
                let margin = u[j] * f_dt;
                grad[j] = -d * f_dt * w.interval / (margin * margin);
                gmax = gmax.max(grad[j].abs());
                // d^2/dy^2 of the block objective.
                curv_max = curv_max.max(2.0 * d * f_dt * f_dt * w.interval / margin.powi(3));
            }

            // Scaled projected-gradient residual.
            let tau = 1e-3 * mass / (1.0 + gmax);
            let mut probe: Vec<f64> = u.iter().zip(&grad).map(|(&ui, &gi)| ui - tau * gi).collect();
            project_simplex(&mut probe, mass);
            residual = u
                .iter()
                .zip(&probe)
                .map(|(&a, &b)| (a - b).abs())
                .fold(0.0, f64::max)
                / tau;
            if residual <= 1e-9 * (1.0 + gmax) {
                converged = true;
                break;
            }

            // Curvature-bounded step, also capped so no margin can collapse.
            let u_min = u.iter().cloned().fold(f64::INFINITY, f64::min);
            let step = (0.9 / curv_max).min(u_min / (4.0 * gmax));
            for (uj, &gj) in u.iter_mut().zip(&grad) {
                *uj -= step * gj;
            }
            project_simplex(&mut u, mass);
            // The projection may zero a slack entry; pull it back inside.
            if u.iter().any(|&c| c <= 0.0) {
                let eps = 1e-12 * mass;
                for c in u.iter_mut() {
                    *c = c.max(eps);
                }
                let total: f64 = u.iter().sum();
                for c in u.iter_mut() {
                    *c *= mass / total;
                }
            }
        }
        if !converged {
            return Err(Error::NonConvergence { iterations: iters, residual });
        }
        for ((&(s, d), &ui), _) in demands.iter().zip(&u).zip(&floors) {
            y.set(i, s, d / f_dt + ui);
        }
    }
    Ok(y)
}

/// Compare the chain's empirical state occupancy against the Boltzmann law
/// `pi(X) proportional to exp(-theta(X)/omega)` on a fully enumerable
/// instance, with `theta` and `omega` both on the total-latency scale.
///
/// The chain itself runs on per-task energies; a chain configured with
/// temperature `omega / per_task_scale(w_frame)` has exactly this law.
/// The trace must come from a pure chain on `cfg`/`w_frame`.
pub fn stationarity_check(
    trace: &GibbsTrace,
    cfg: &SystemConfig,
    w_frame: &WorkloadSnapshot,
    solver: &SolverConfig,
    omega: f64,
    burn_in: usize,
) -> Result<ProbeReport> {
    let placements = feasible_placements(cfg)?;
    if placements.len() > 16 {
        return Err(Error::TooLarge { states: placements.len() as u128, limit: 16 });
    }
    let thetas: Vec<f64> = placements
        .iter()
        .map(|x| solve_inner(cfg, x, w_frame, solver).map(|s| s.objective_theta))
        .collect::<Result<_>>()?;
    let theta_min = thetas.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = thetas.iter().map(|t| (-(t - theta_min) / omega).exp()).collect();
    let weight_sum: f64 = weights.iter().sum();
    let pi: Vec<f64> = weights.iter().map(|v| v / weight_sum).collect();

    let keys: Vec<Vec<u64>> = placements.iter().map(PlacementMatrix::key).collect();
    let mut counts = vec![0usize; placements.len()];
    let steps = &trace.steps[burn_in.min(trace.steps.len())..];
    for step in steps {
        if let Some(idx) = keys.iter().position(|k| *k == step.state_key) {
            counts[idx] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::DegenerateInstance("empty chain after burn-in".into()));
    }
    let tv: f64 = pi
        .iter()
        .zip(&counts)
        .map(|(&p, &c)| (p - c as f64 / total as f64).abs())
        .sum::<f64>()
        / 2.0;

    Ok(ProbeReport {
        probe: "gibbs_stationarity".into(),
        samples: total,
        violations: usize::from(tv > 0.05),
        worst_margin: tv,
        pass: tv <= 0.05,
    })
}

/// Empirical occupancy of one placement in a chain trace.
pub fn state_occupancy(trace: &GibbsTrace, x: &PlacementMatrix, burn_in: usize) -> f64 {
    let key = x.key();
    let steps = &trace.steps[burn_in.min(trace.steps.len())..];
    if steps.is_empty() {
        return 0.0;
    }
    let hits = steps.iter().filter(|s| s.state_key == key).count();
    hits as f64 / steps.len() as f64
}

/// Small random instance for oracle batteries: Table-style parameter ranges
/// at slot scale.
pub fn random_oracle_instance(
    seed: u64,
) -> (SystemConfig, PlacementMatrix, ScheduleMatrix, WorkloadSnapshot) {
    use crate::domain::{EdgeServer, Service};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = rng.gen_range(2..=3);
    let s_count = rng.gen_range(2..=4);
    let servers: Vec<EdgeServer> = (0..l)
        .map(|id| {
            let storage_price = rng.gen_range(10.0..40.0);
            let compute_price = rng.gen_range(10.0..50.0);
            EdgeServer {
                id,
                compute_capacity: rng.gen_range(50.0..150.0),
                storage_capacity: rng.gen_range(50.0..200.0),
                storage_price,
                compute_price,
                budget: 0.7 * (storage_price + compute_price),
            }
        })
        .collect();
    let services: Vec<Service> = (0..s_count)
        .map(|id| Service {
            id,
            storage_req: rng.gen_range(10.0..40.0),
            compute_req: rng.gen_range(0.1..0.5),
            edge_delay: 0.01,
            cloud_delay: 0.1,
        })
        .collect();
    let cfg = SystemConfig {
        servers,
        services,
        slot_length: 60.0,
        slots_per_frame: 30,
        frames: 1,
        zipf_exponent: 0.6,
        arrival_mean: 600.0,
        arrival_spread: 20.0,
        budget_coefficient: 0.7,
        rng_seed: seed,
        zipf_frame_schedule: None,
        popularity_frame_schedule: None,
    };

    // Random feasible placement with at least one hosted service.
    let mut x = PlacementMatrix::zeros(l, s_count);
    loop {
        for i in 0..l {
            loop {
                let row: Vec<bool> = (0..s_count).map(|_| rng.gen()).collect();
                if is_feasible_placement(&cfg, &row, i) {
                    for (s, &b) in row.iter().enumerate() {
                        x.set(i, s, b);
                    }
                    break;
                }
            }
        }
        if x.any_placed() {
            break;
        }
    }

    let rows: Vec<Vec<f64>> =
        (0..l).map(|_| (0..s_count).map(|_| rng.gen_range(50.0..1000.0)).collect()).collect();
    let w = WorkloadSnapshot::new(rows, 60.0);
    let z = random_feasible_schedule(&cfg, &x, &w, &mut rng);
    (cfg, x, z, w)
}

/// The probe battery behind the CLI `verify` subcommand.
pub fn run_probe_suite(seed: u64, solver: &SolverConfig) -> Result<Vec<ProbeReport>> {
    let mut reports = Vec::new();

    // Convexity of the two blocks, non-convexity of the joint problem.
    let (cfg, x, _, w) = random_oracle_instance(crate::derive_seed(seed, 1));
    reports.push(convexity_probe(ConvexityTarget::AllocationGivenSchedule, &cfg, &x, &w, seed, 1000)?);
    reports.push(convexity_probe(ConvexityTarget::ScheduleGivenAllocation, &cfg, &x, &w, seed, 1000)?);
    let mut joint_found = false;
    let mut joint_report = None;
    for k in 0..5 {
        let (cfg, x, _, w) = random_oracle_instance(crate::derive_seed(seed, 100 + k));
        let r = convexity_probe(
            ConvexityTarget::JointAllocationScheduling,
            &cfg,
            &x,
            &w,
            crate::derive_seed(seed, 200 + k),
            10_000,
        )?;
        let done = r.pass;
        joint_found |= done;
        joint_report = Some(r);
        if done {
            break;
        }
    }
    let mut joint_report = joint_report.expect("at least one joint probe ran");
    joint_report.pass = joint_found;
    reports.push(joint_report);

    // Closed form vs the independent gradient oracle, plus KKT residuals.
    let mut worst_gap: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut mismatches = 0usize;
    let n_instances = 50;
    for k in 0..n_instances {
        let (cfg, x, z, w) = random_oracle_instance(crate::derive_seed(seed, 300 + k));
        let closed = match crate::provisioning::optimal_allocation(&cfg, &x, &z, &w) {
            Ok(sol) => sol,
            Err(_) => continue,
        };
        let numeric = numeric_allocation_solver(&cfg, &x, &z, &w)?;
        for i in 0..cfg.num_servers() {
            for s in 0..cfg.num_services() {
                let gap = (closed.y.share(i, s) - numeric.share(i, s)).abs();
                worst_gap = worst_gap.max(gap);
                if gap > 1e-6 {
                    mismatches += 1;
                }
            }
        }
        worst_res = worst_res.max(kkt_residual(&cfg, &x, &z, &closed.y, &w));
    }
    reports.push(ProbeReport {
        probe: "allocation_oracle_match".into(),
        samples: n_instances as usize,
        violations: mismatches,
        worst_margin: worst_gap,
        pass: mismatches == 0,
    });
    reports.push(ProbeReport {
        probe: "allocation_kkt_residual".into(),
        samples: n_instances as usize,
        violations: usize::from(worst_res > 1e-8),
        worst_margin: worst_res,
        pass: worst_res <= 1e-8,
    });

    // Stationary distribution on a tiny instance. The chain's temperature
    // lives on the per-task scale; the check's temperature on the
    // total-latency scale.
    let (tiny_cfg, tiny_w) = tiny_chain_instance(seed);
    let placements = feasible_placements(&tiny_cfg)?;
    let thetas: Vec<f64> = placements
        .iter()
        .map(|x| solve_inner(&tiny_cfg, x, &tiny_w, solver).map(|s| s.objective_theta))
        .collect::<Result<_>>()?;
    let sigma = spread(&thetas);
    let gibbs = crate::placement::GibbsConfig {
        omega: sigma / crate::placement::per_task_scale(&tiny_w),
        max_iters: 100_000,
        pure_chain: true,
        rng_seed: crate::derive_seed(seed, 7),
        ..Default::default()
    };
    let trace = crate::placement::gibbs_optimize(&tiny_cfg, &tiny_w, &gibbs, solver)?;
    reports.push(stationarity_check(&trace, &tiny_cfg, &tiny_w, solver, sigma, 10_000)?);

    Ok(reports)
}

/// Objective spread (max minus min) over enumerated states.
pub fn spread(thetas: &[f64]) -> f64 {
    let max = thetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = thetas.iter().cloned().fold(f64::INFINITY, f64::min);
    (max - min).max(1e-12)
}

/// One server, two services: a four-state chain whose objectives differ.
pub fn tiny_chain_instance(seed: u64) -> (SystemConfig, WorkloadSnapshot) {
    use crate::domain::{EdgeServer, Service};
    let cfg = SystemConfig {
        servers: vec![EdgeServer {
            id: 0,
            compute_capacity: 20.0,
            storage_capacity: 100.0,
            storage_price: 10.0,
            compute_price: 10.0,
            budget: 14.0,
        }],
        services: vec![
            Service { id: 0, storage_req: 20.0, compute_req: 0.3, edge_delay: 0.01, cloud_delay: 0.1 },
            Service { id: 1, storage_req: 25.0, compute_req: 0.2, edge_delay: 0.01, cloud_delay: 0.12 },
        ],
        slot_length: 60.0,
        slots_per_frame: 30,
        frames: 1,
        zipf_exponent: 0.6,
        arrival_mean: 600.0,
        arrival_spread: 20.0,
        budget_coefficient: 0.7,
        rng_seed: seed,
        zipf_frame_schedule: None,
        popularity_frame_schedule: None,
    };
    let w = WorkloadSnapshot::new(vec![vec![420.0, 180.0]], 60.0);
    (cfg, w)
}
