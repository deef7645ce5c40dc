//! Service placement search by Gibbs sampling.
//!
//! The placement matrix evolves as a Markov chain: each iteration redraws one
//! server's row uniformly from its storage-feasible row space and accepts the
//! move with the logistic probability `1 / (1 + exp((theta# - theta)/omega))`,
//! where `theta` is the inner solver's optimum for the placement. Smaller
//! `omega` concentrates the chain's stationary law on low-latency placements.
//!
//! The chain's energy is the *per-task* latency, `theta / total demand`:
//! total latency grows linearly with demand, so a temperature on the
//! per-task scale keeps the acceptance rule meaningful across workload
//! sizes (and matches the default `omega = 0.001` against per-task
//! objective gaps of comparable magnitude). Rescaling energy and
//! temperature together leaves the stationary law over placements intact.
//!
//! Scores are memoized: the inner solve is the expensive part and the chain
//! revisits states constantly.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    AllocationMatrix, PlacementMatrix, ScheduleMatrix, SystemConfig, WorkloadSnapshot,
};
use crate::error::Result;
use crate::inner::solve_inner;
use crate::scheduling::SolverConfig;

/// Chain settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    /// Smoothing temperature of the acceptance rule, on the per-task
    /// latency scale (see [`per_task_scale`]); must be positive.
    pub omega: f64,
    pub max_iters: usize,
    /// Stop after this many iterations without a best-state improvement.
    pub patience: usize,
    pub rng_seed: u64,
    /// Run the bare chain: no patience stop. Used by stationarity probes.
    pub pure_chain: bool,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            omega: 1e-3,
            max_iters: 500,
            patience: 100,
            rng_seed: 0,
            pure_chain: false,
        }
    }
}

/// One chain iteration, recorded for diagnostics and stationarity tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsStep {
    pub server: usize,
    /// Whether the proposal passed the feasibility gate.
    pub feasible: bool,
    pub accepted: bool,
    pub theta_before: f64,
    pub theta_after: f64,
    /// Bit-packed placement occupied after this iteration.
    pub state_key: Vec<u64>,
}

/// Full chain record plus the best state found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsTrace {
    pub steps: Vec<GibbsStep>,
    pub x_best: PlacementMatrix,
    pub y_best: AllocationMatrix,
    pub z_shadow_best: ScheduleMatrix,
    pub theta_best: f64,
    /// Distinct placements scored (inner solves not served from cache).
    pub states_scored: usize,
}

/// Memoized placement scores, shared across chains and frames that use the
/// same forecast. Keyed by the packed placement bits.
pub struct ScoreCache {
    map: Mutex<HashMap<Vec<u64>, f64>>,
}

impl ScoreCache {
    pub fn new() -> Self {
        ScoreCache { map: Mutex::new(HashMap::new()) }
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &[u64]) -> Option<f64> {
        self.map.lock().unwrap().get(key).copied()
    }

    fn insert(&self, key: Vec<u64>, theta: f64) {
        self.map.lock().unwrap().insert(key, theta);
    }
}

impl Default for ScoreCache {
    fn default() -> Self {
        Self::new()
    }
}

/// A placement row is usable when it fits in storage and leaves the server a
/// strictly positive compute budget, so provisioning can allocate a nonzero
/// rate to every hosted service.
pub fn is_feasible_placement(cfg: &SystemConfig, row: &[bool], server: usize) -> bool {
    let srv = &cfg.servers[server];
    let mut storage = 0.0;
    let mut storage_cost = 0.0;
    for (s, &placed) in row.iter().enumerate() {
        if placed {
            storage += cfg.services[s].storage_req;
            storage_cost += cfg.services[s].storage_req / srv.storage_capacity * srv.storage_price;
        }
    }
    storage <= srv.storage_capacity && storage_cost < srv.budget
}

/// Row proposed for one server.
#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    pub server: usize,
    pub row: Vec<bool>,
    /// True when the draw equals the current row (a self-loop).
    pub unchanged: bool,
}

/// Rejection-sampling retries over raw bit rows before falling back to a
/// single-bit flip.
const PROPOSAL_RETRIES: usize = 64;

/// Draw a server uniformly and a row uniformly from its storage-feasible row
/// space. Falls back to a random single-bit flip when rejection sampling
/// fails, and to the current row (flagged unchanged) when even that cannot
/// produce a feasible row.
pub fn propose(cfg: &SystemConfig, x: &PlacementMatrix, rng: &mut ChaCha8Rng) -> Proposal {
    let server = rng.gen_range(0..cfg.num_servers());
    let s_count = cfg.num_services();
    let current = x.row(server);

    for _ in 0..PROPOSAL_RETRIES {
        let row: Vec<bool> = (0..s_count).map(|_| rng.gen::<bool>()).collect();
        if is_storage_feasible(cfg, &row, server) {
            let unchanged = row == current;
            return Proposal { server, row, unchanged };
        }
    }
    // Dense storage constraints: try single-bit flips in random order.
    let mut order: Vec<usize> = (0..s_count).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    for s in order {
        let mut row = current.to_vec();
        row[s] = !row[s];
        if is_storage_feasible(cfg, &row, server) {
            return Proposal { server, row, unchanged: false };
        }
    }
    Proposal { server, row: current.to_vec(), unchanged: true }
}

/// Storage-only feasibility used by the proposal distribution; the budget
/// gate is applied separately by the chain.
fn is_storage_feasible(cfg: &SystemConfig, row: &[bool], server: usize) -> bool {
    let storage: f64 = row
        .iter()
        .enumerate()
        .filter_map(|(s, &placed)| placed.then(|| cfg.services[s].storage_req))
        .sum();
    storage <= cfg.servers[server].storage_capacity
}

/// Logistic acceptance probability, kept strictly inside (0, 1) even for
/// objective gaps that would saturate the exponential.
pub fn acceptance_probability(theta_new: f64, theta_old: f64, omega: f64) -> f64 {
    assert!(omega > 0.0, "omega must be positive");
    let arg = ((theta_new - theta_old) / omega).clamp(-700.0, 700.0);
    let rho = 1.0 / (1.0 + arg.exp());
    rho.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Demand total that converts a latency sum into a per-task energy for the
/// chain's acceptance rule.
pub fn per_task_scale(w: &WorkloadSnapshot) -> f64 {
    w.grand_total().max(1.0)
}

/// Demand-greedy starting placement: rank services by forecast demand and
/// fill each server while its row stays feasible.
pub fn greedy_initial_placement(cfg: &SystemConfig, w_frame: &WorkloadSnapshot) -> PlacementMatrix {
    let mut order: Vec<usize> = (0..cfg.num_services()).collect();
    order.sort_by(|&a, &b| {
        w_frame
            .total(b)
            .partial_cmp(&w_frame.total(a))
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut x = PlacementMatrix::zeros(cfg.num_servers(), cfg.num_services());
    for i in 0..cfg.num_servers() {
        let mut row = vec![false; cfg.num_services()];
        for &s in &order {
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

/// Run the placement chain with a fresh cache and the demand-greedy start.
pub fn gibbs_optimize(
    cfg: &SystemConfig,
    w_frame: &WorkloadSnapshot,
    gibbs: &GibbsConfig,
    solver: &SolverConfig,
) -> Result<GibbsTrace> {
    let cache = ScoreCache::new();
    gibbs_optimize_cached(cfg, w_frame, None, gibbs, solver, &cache)
}

/// Run the placement chain from an optional starting placement, memoizing
/// scores in `cache`. The cache must belong to this exact forecast.
pub fn gibbs_optimize_cached(
    cfg: &SystemConfig,
    w_frame: &WorkloadSnapshot,
    x0: Option<&PlacementMatrix>,
    gibbs: &GibbsConfig,
    solver: &SolverConfig,
    cache: &ScoreCache,
) -> Result<GibbsTrace> {
    assert!(gibbs.omega > 0.0 && gibbs.max_iters >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(gibbs.rng_seed);
    let mut scored = 0usize;

    let score = |x: &PlacementMatrix, scored: &mut usize| -> Result<f64> {
        let key = x.key();
        if let Some(theta) = cache.get(&key) {
            return Ok(theta);
        }
        let theta = solve_inner(cfg, x, w_frame, solver)?.objective_theta;
        cache.insert(key, theta);
        *scored += 1;
        Ok(theta)
    };

    let mut x = match x0 {
        Some(x0) => x0.clone(),
        None => greedy_initial_placement(cfg, w_frame),
    };
    // The start must pass the same gate as every accepted state.
    for i in 0..cfg.num_servers() {
        if !is_feasible_placement(cfg, x.row(i), i) {
            x = PlacementMatrix::zeros(cfg.num_servers(), cfg.num_services());
            break;
        }
    }

    let mut theta = score(&x, &mut scored)?;
    let mut best_x = x.clone();
    let mut best_theta = theta;
    let mut since_improvement = 0usize;
    let mut steps = Vec::with_capacity(gibbs.max_iters);
    let energy_scale = per_task_scale(w_frame);

    for _ in 0..gibbs.max_iters {
        let proposal = propose(cfg, &x, &mut rng);
        let feasible =
            !proposal.unchanged && is_feasible_placement(cfg, &proposal.row, proposal.server);
        let theta_before = theta;
        let mut accepted = false;
        if feasible {
            let candidate = x.with_row(proposal.server, &proposal.row);
            let theta_new = score(&candidate, &mut scored)?;
            let rho =
                acceptance_probability(theta_new / energy_scale, theta / energy_scale, gibbs.omega);
            // The coin is drawn on every gated proposal to keep the chain's
            // transition law intact regardless of caching.
            if rng.gen::<f64>() < rho {
                x = candidate;
                theta = theta_new;
                accepted = true;
            }
        }
        steps.push(GibbsStep {
            server: proposal.server,
            feasible,
            accepted,
            theta_before,
            theta_after: theta,
            state_key: x.key(),
        });

        if accepted && theta < best_theta {
            best_theta = theta;
            best_x = x.clone();
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if !gibbs.pure_chain && since_improvement >= gibbs.patience {
            break;
        }
    }

    // Re-derive the best state's allocation and shadow schedule once.
    let best = solve_inner(cfg, &best_x, w_frame, solver)?;
    Ok(GibbsTrace {
        steps,
        x_best: best_x,
        y_best: best.y,
        z_shadow_best: best.z_shadow,
        theta_best: best_theta,
        states_scored: scored,
    })
}
