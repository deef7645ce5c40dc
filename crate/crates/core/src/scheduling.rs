//! Workload scheduling by projected sub-gradient descent.
//!
//! For fixed placement and allocation the total-latency objective is convex
//! in the routing matrix but non-smooth at `z*n_s = n_{i,s}`, where the edge
//! transfer term kicks in. Each service column lives on its own simplex
//! (ratios sum to one over admissible rows), so one iteration takes a
//! sub-gradient step on every column, substitutes the constraint gradient
//! for entries that broke queue stability (pulling them back inside), and
//! projects each column back onto its simplex. The best feasible iterate is
//! returned; sub-gradient descent is not monotone.

use serde::{Deserialize, Serialize};

use crate::domain::{
    project_simplex_with, AllocationMatrix, Grid, PlacementMatrix, ScheduleMatrix, SystemConfig,
    WorkloadSnapshot,
};
use crate::error::{Error, Result};

/// Sub-gradient solver settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Initial step size; `None` picks `1 / (max_s n_s * phi_cloud + 1)`.
    pub step0_alpha: Option<f64>,
    /// Diminishing-step exponent: the n-th step is `alpha0 / n^decay`.
    pub step_decay: f64,
    /// Stop when the objective changes by at most this much between
    /// consecutive feasible iterates, in seconds.
    pub tolerance_eps: f64,
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { step0_alpha: None, step_decay: 0.5, tolerance_eps: 1e-7, max_iters: 3000 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.step0_alpha {
            if a <= 0.0 {
                return Err(Error::Config("step size must be positive".into()));
            }
        }
        if self.tolerance_eps <= 0.0 {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("need at least one iteration".into()));
        }
        Ok(())
    }
}

/// Admissible routing targets for a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouteSet {
    /// Placed edge servers plus the cloud.
    EdgeAndCloud,
    /// Placed edge servers only (cloud cooperation disabled).
    EdgeOnly,
}

/// Result of one scheduling solve.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleSolution {
    pub z: ScheduleMatrix,
    /// Total latency of `z`, seconds.
    pub objective: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before the objective settled.
    pub converged: bool,
}

/// Backoff factor pulling an unstable entry back strictly inside its cap.
const CAP_BACKOFF: f64 = 0.999;
/// Iterations without meaningful best-objective improvement before the
/// solver settles for the best iterate found.
const STALL_WINDOW: usize = 100;

/// Sub-gradient of the total-latency objective at `z`, one entry per
/// schedule cell. Entries for servers not hosting the service are zero; the
/// cloud row is the constant `n_s * phi_cloud`. Entries that violate queue
/// stability (or have no allocated rate) report the constraint gradient
/// `n_s * c_s` instead.
pub fn subgradient(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    y: &AllocationMatrix,
    z: &ScheduleMatrix,
    w: &WorkloadSnapshot,
) -> Grid {
    let (l, s_count) = (cfg.num_servers(), cfg.num_services());
    let mut g = Grid::zeros(l + 1, s_count);
    for s in 0..s_count {
        let n = w.total(s);
        let svc = &cfg.services[s];
        g.set(l, s, n * svc.cloud_delay);
        if n == 0.0 {
            continue;
        }
        for i in 0..l {
            if !x.placed(i, s) {
                continue;
            }
            let rate = y.share(i, s) * cfg.servers[i].compute_capacity * w.interval;
            let routed_cycles = z.ratio(i, s) * n * svc.compute_req;
            let entry = if rate - routed_cycles <= 0.0 {
                n * svc.compute_req
            } else {
                let margin = rate - routed_cycles;
                let base = n * svc.compute_req * rate * w.interval / (margin * margin);
                let routed_tasks = z.ratio(i, s) * n;
                let local = w.count(i, s);
                if routed_tasks > local {
                    base + n * svc.edge_delay
                } else if routed_tasks == local {
                    // Kink: midpoint of the sub-differential interval.
                    base + n * svc.edge_delay / 2.0
                } else {
                    base
                }
            };
            g.set(i, s, entry);
        }
    }
    g
}

/// Repair one schedule column: zero out inadmissible rows, clamp negatives,
/// and rescale the rest to sum to one. The cloud row (last entry) counts as
/// admissible regardless of the mask; if nothing is left the whole column
/// routes to the cloud.
pub fn project_schedule(column: &[f64], mask: &[bool]) -> Vec<f64> {
    assert_eq!(column.len(), mask.len());
    let cloud = column.len() - 1;
    let mut out: Vec<f64> = column
        .iter()
        .enumerate()
        .map(|(r, &v)| if (mask[r] || r == cloud) && v > 0.0 { v } else { 0.0 })
        .collect();
    let sum: f64 = out.iter().sum();
    if sum == 0.0 {
        out[cloud] = 1.0;
        return out;
    }
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// One service column restricted to its admissible rows. Entry order is the
/// admissible edges followed by the cloud (when enabled).
struct Column {
    service: usize,
    /// Total demand `n_s`, tasks.
    n: f64,
    /// Interval length, seconds.
    interval: f64,
    /// Admissible edge server indices.
    edges: Vec<usize>,
    /// Local arrivals `n_{i,s}` per admissible edge.
    local: Vec<f64>,
    /// Allocated cycle capacity `y*F*dt` per admissible edge, giga-cycles.
    rate: Vec<f64>,
    /// Stability cap per admissible edge in share units: `rate / (n*c)`.
    cap: Vec<f64>,
    /// Cycles demanded per unit share: `n_s * c_s`.
    cycles_per_share: f64,
    edge_delay: f64,
    cloud_delay: f64,
    cloud: bool,
}

impl Column {
    fn len(&self) -> usize {
        self.edges.len() + usize::from(self.cloud)
    }

    /// Latency contributed by this column, or `None` if any entry is
    /// unstable.
    fn objective(&self, zv: &[f64]) -> Option<f64> {
        let mut f = 0.0;
        for (j, &zj) in zv[..self.edges.len()].iter().enumerate() {
            let cycles = zj * self.cycles_per_share;
            if cycles > 0.0 {
                let margin = self.rate[j] - cycles;
                if margin <= 0.0 {
                    return None;
                }
                f += cycles * self.interval / margin;
            }
            let excess = zj * self.n - self.local[j];
            if excess > 0.0 {
                f += excess * self.edge_delay;
            }
        }
        if self.cloud {
            f += zv[self.edges.len()] * self.n * self.cloud_delay;
        }
        Some(f)
    }

    /// One sub-gradient step plus simplex projection, in place.
    fn step(&self, zv: &mut [f64], alpha: f64, scratch: &mut Vec<f64>) {
        for j in 0..self.edges.len() {
            let cycles = zv[j] * self.cycles_per_share;
            if self.rate[j] - cycles <= 0.0 {
                // Obstacle branch: descend the constraint gradient, then
                // pull the entry strictly back inside its cap.
                zv[j] = (zv[j] - alpha * self.cycles_per_share).min(CAP_BACKOFF * self.cap[j]);
            } else {
                let margin = self.rate[j] - cycles;
                let mut g =
                    self.cycles_per_share * self.rate[j] * self.interval / (margin * margin);
                let routed_tasks = zv[j] * self.n;
                if routed_tasks > self.local[j] {
                    g += self.n * self.edge_delay;
                } else if routed_tasks == self.local[j] {
                    g += self.n * self.edge_delay / 2.0;
                }
                zv[j] -= alpha * g;
            }
        }
        if self.cloud {
            let c = self.edges.len();
            zv[c] -= alpha * self.n * self.cloud_delay;
        }
        project_simplex_with(zv, 1.0, scratch);
    }

    /// Feasible start: each edge proportional to its stable capacity, the
    /// cloud taking the remainder. For edge-only columns the start spreads
    /// the full share across edges, which must jointly cover it.
    fn initial(&self) -> Result<Vec<f64>> {
        let budget: Vec<f64> =
            self.cap.iter().map(|&c| (CAP_BACKOFF * c).min(1.0)).collect();
        let total: f64 = budget.iter().sum();
        let mut zv = vec![0.0; self.len()];
        if self.cloud {
            if total <= 1.0 {
                zv[..self.edges.len()].copy_from_slice(&budget);
                zv[self.edges.len()] = 1.0 - total;
            } else {
                for (v, b) in zv.iter_mut().zip(&budget) {
                    *v = b / total;
                }
            }
        } else {
            if total < 1.0 {
                return Err(Error::UnroutableService {
                    service: self.service,
                    demand: 1.0,
                    capacity: total,
                });
            }
            for (v, b) in zv.iter_mut().zip(&budget) {
                *v = b / total;
            }
        }
        Ok(zv)
    }

    /// Column of an existing schedule restricted to the admissible entries,
    /// repaired to sum to one.
    fn restrict(&self, z: &ScheduleMatrix) -> Vec<f64> {
        let mut zv: Vec<f64> = self.edges.iter().map(|&i| z.ratio(i, self.service)).collect();
        if self.cloud {
            zv.push(z.cloud_ratio(self.service));
        }
        let sum: f64 = zv.iter().map(|&v| v.max(0.0)).sum();
        if sum <= 0.0 {
            return self.initial().unwrap_or_else(|_| vec![0.0; self.len()]);
        }
        for v in zv.iter_mut() {
            *v = v.max(0.0) / sum;
        }
        zv
    }
}

/// Build the per-service column problems. Admissible edges host the service
/// and have a positive allocated rate; anything else cannot carry load.
fn build_columns(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    y: &AllocationMatrix,
    w: &WorkloadSnapshot,
    routes: RouteSet,
) -> Vec<Column> {
    (0..cfg.num_services())
        .map(|s| {
            let svc = &cfg.services[s];
            let n = w.total(s);
            let mut edges = Vec::new();
            let mut local = Vec::new();
            let mut rate = Vec::new();
            let mut cap = Vec::new();
            let cycles_per_share = n * svc.compute_req;
            for i in 0..cfg.num_servers() {
                if !x.placed(i, s) {
                    continue;
                }
                let r = y.share(i, s) * cfg.servers[i].compute_capacity * w.interval;
                if r <= 0.0 {
                    continue;
                }
                edges.push(i);
                local.push(w.count(i, s));
                rate.push(r);
                cap.push(if cycles_per_share > 0.0 { r / cycles_per_share } else { f64::INFINITY });
            }
            Column {
                service: s,
                n,
                interval: w.interval,
                edges,
                local,
                rate,
                cap,
                cycles_per_share,
                edge_delay: svc.edge_delay,
                cloud_delay: svc.cloud_delay,
                cloud: routes == RouteSet::EdgeAndCloud,
            }
        })
        .collect()
}

/// Solve the scheduling problem for fixed `(x, y)` against workload `w`,
/// routing to placed servers and the cloud.
pub fn solve_schedule(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    y: &AllocationMatrix,
    w: &WorkloadSnapshot,
    solver: &SolverConfig,
) -> Result<ScheduleSolution> {
    solve_schedule_routes(cfg, x, y, w, RouteSet::EdgeAndCloud, None, solver)
}

/// [`solve_schedule`] with an explicit route set and optional warm start.
pub fn solve_schedule_routes(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    y: &AllocationMatrix,
    w: &WorkloadSnapshot,
    routes: RouteSet,
    warm_start: Option<&ScheduleMatrix>,
    solver: &SolverConfig,
) -> Result<ScheduleSolution> {
    solver.validate()?;
    let (l, s_count) = (cfg.num_servers(), cfg.num_services());
    let columns = build_columns(cfg, x, y, w, routes);

    // Zero-demand columns are fixed up front: cloud when available,
    // uniform over placed servers otherwise (any split is optimal).
    let mut fixed: Vec<Option<Vec<f64>>> = vec![None; s_count];
    let mut active: Vec<usize> = Vec::new();
    for (s, col) in columns.iter().enumerate() {
        if col.n == 0.0 {
            let mut zv = vec![0.0; col.len()];
            if col.cloud {
                zv[col.edges.len()] = 1.0;
            } else if !zv.is_empty() {
                let share = 1.0 / col.edges.len() as f64;
                zv[..col.edges.len()].fill(share);
            }
            fixed[s] = Some(zv);
        } else if col.edges.is_empty() {
            if !col.cloud {
                return Err(Error::UnroutableService {
                    service: s,
                    demand: 1.0,
                    capacity: 0.0,
                });
            }
            fixed[s] = Some(vec![1.0]);
        } else {
            active.push(s);
        }
    }

    // Initial iterate (checks edge-only coverage).
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(active.len());
    for &s in &active {
        let col = &columns[s];
        let zv = match warm_start {
            Some(z0) => col.restrict(z0),
            None => col.initial()?,
        };
        states.push(zv);
    }

    let alpha0 = solver.step0_alpha.unwrap_or_else(|| {
        let worst = (0..s_count)
            .map(|s| w.total(s) * cfg.services[s].cloud_delay)
            .fold(0.0, f64::max);
        1.0 / (worst + 1.0)
    });

    // Track the best feasible iterate per column.
    let mut best: Vec<(Vec<f64>, f64)> = Vec::with_capacity(active.len());
    let mut prev_total = 0.0;
    let mut all_feasible = true;
    for (k, &s) in active.iter().enumerate() {
        match columns[s].objective(&states[k]) {
            Some(f) => {
                best.push((states[k].clone(), f));
                prev_total += f;
            }
            None => {
                // Warm starts are repaired but may still be unstable; fall
                // back to the capacity-proportional start.
                let zv = columns[s].initial()?;
                let f = columns[s].objective(&zv).expect("fresh start is feasible");
                states[k] = zv.clone();
                best.push((zv, f));
                prev_total += f;
            }
        }
        // The all-cloud column is always feasible; the answer must never be
        // worse than routing everything there.
        let col = &columns[s];
        if col.cloud {
            let mut cloud_only = vec![0.0; col.len()];
            cloud_only[col.edges.len()] = 1.0;
            let f_cloud = col.objective(&cloud_only).expect("cloud column is feasible");
            if f_cloud < best[k].1 {
                best[k] = (cloud_only, f_cloud);
            }
        }
    }
    let mut prev_feasible = all_feasible;
    let mut best_total: f64 = best.iter().map(|(_, f)| f).sum();
    let mut last_improvement = 0usize;
    let mut scratch: Vec<f64> = Vec::new();

    let mut iterations = 0;
    let mut converged = active.is_empty();
    for iter in 1..=solver.max_iters {
        if active.is_empty() {
            break;
        }
        iterations = iter;
        let alpha = alpha0 / (iter as f64).powf(solver.step_decay);

        let mut total = 0.0;
        all_feasible = true;
        for (k, &s) in active.iter().enumerate() {
            let col = &columns[s];
            col.step(&mut states[k], alpha, &mut scratch);
            match col.objective(&states[k]) {
                Some(f) => {
                    if f < best[k].1 {
                        best[k].0.copy_from_slice(&states[k]);
                        best[k].1 = f;
                    }
                    total += f;
                }
                None => all_feasible = false,
            }
        }

        // Consecutive feasible iterates that barely move: done.
        if all_feasible && prev_feasible && (total - prev_total).abs() <= solver.tolerance_eps {
            converged = true;
            break;
        }
        prev_feasible = all_feasible;
        if all_feasible {
            prev_total = total;
        }

        // Sub-gradient descent is not monotone; also stop when the best
        // point has stopped improving meaningfully for a while.
        let new_best: f64 = best.iter().map(|(_, f)| f).sum();
        let floor = solver.tolerance_eps.max(1e-9 * best_total.abs());
        if best_total - new_best > floor {
            last_improvement = iter;
        }
        best_total = new_best;
        if iter - last_improvement >= STALL_WINDOW {
            converged = true;
            break;
        }
    }

    // Assemble the answer from the per-column best iterates.
    let mut z = ScheduleMatrix::zeros(l, s_count);
    let mut objective = 0.0;
    for (s, zv) in fixed.iter().enumerate() {
        if let Some(zv) = zv {
            let col = &columns[s];
            for (j, &i) in col.edges.iter().enumerate() {
                z.set(i, s, zv[j]);
            }
            if col.cloud {
                z.set(l, s, zv[col.edges.len()]);
            }
            objective += col.objective(zv).expect("fixed columns are feasible");
        }
    }
    for (k, &s) in active.iter().enumerate() {
        let col = &columns[s];
        let (zv, f) = &best[k];
        for (j, &i) in col.edges.iter().enumerate() {
            z.set(i, s, zv[j]);
        }
        if col.cloud {
            z.set(l, s, zv[col.edges.len()]);
        }
        objective += f;
    }

    Ok(ScheduleSolution { z, objective, iterations, converged })
}
