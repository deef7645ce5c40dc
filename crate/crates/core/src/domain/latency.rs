//! Latency and cost model.
//!
//! Edge execution is an M/M/1 queue per (server, service): the mean sojourn
//! of `z*n` tasks served at rate `y*F/c` with arrival rate `z*n/dt` is
//! `z*n / (y*F/c - z*n/dt)`. Workload routed to a server beyond its local
//! arrivals pays a per-task edge transfer delay, and workload routed to the
//! cloud pays a per-task cloud transfer delay only.

use super::config::SystemConfig;
use super::matrices::{AllocationMatrix, PlacementMatrix, ScheduleMatrix, WorkloadSnapshot};
use crate::error::{Error, Result};

fn check_dims(
    cfg: &SystemConfig,
    z: Option<&ScheduleMatrix>,
    y: Option<&AllocationMatrix>,
    w: Option<&WorkloadSnapshot>,
) -> Result<()> {
    let (l, s) = (cfg.num_servers(), cfg.num_services());
    if let Some(z) = z {
        if z.servers() != l || z.services() != s {
            return Err(Error::Config(format!(
                "schedule matrix is {}x{}, expected {}x{}",
                z.servers() + 1,
                z.services(),
                l + 1,
                s
            )));
        }
    }
    if let Some(y) = y {
        if y.servers() != l || y.services() != s {
            return Err(Error::Config(format!(
                "allocation matrix is {}x{}, expected {l}x{s}",
                y.servers(),
                y.services()
            )));
        }
    }
    if let Some(w) = w {
        if w.servers() != l || w.services() != s {
            return Err(Error::Config(format!(
                "workload snapshot is {}x{}, expected {l}x{s}",
                w.servers(),
                w.services()
            )));
        }
    }
    Ok(())
}

/// Transfer latency for workload routed into `server` beyond its own
/// arrivals: `max(z*n_s - n_{i,s}, 0) * phi_s`.
pub fn transmission_latency(
    cfg: &SystemConfig,
    server: usize,
    service: usize,
    z: &ScheduleMatrix,
    w: &WorkloadSnapshot,
) -> Result<f64> {
    check_dims(cfg, Some(z), None, Some(w))?;
    if server >= cfg.num_servers() || service >= cfg.num_services() {
        return Err(Error::Config(format!("index ({server}, {service}) out of range")));
    }
    let excess = z.ratio(server, service) * w.total(service) - w.count(server, service);
    Ok(excess.max(0.0) * cfg.services[service].edge_delay)
}

/// M/M/1 queueing latency of `service` on `server`; zero when nothing is
/// routed there, an error when the queue would be unstable.
pub fn computation_latency(
    cfg: &SystemConfig,
    server: usize,
    service: usize,
    y: &AllocationMatrix,
    z: &ScheduleMatrix,
    w: &WorkloadSnapshot,
) -> Result<f64> {
    check_dims(cfg, Some(z), Some(y), Some(w))?;
    let routed = z.ratio(server, service) * w.total(service);
    if routed == 0.0 {
        return Ok(0.0);
    }
    let svc = &cfg.services[service];
    let rate = y.share(server, service) * cfg.servers[server].compute_capacity / svc.compute_req;
    let arrival = routed / w.interval;
    let margin = rate - arrival;
    if margin <= 0.0 {
        return Err(Error::QueueUnstable { server, service, margin });
    }
    Ok(routed / margin)
}

/// Cloud transfer latency for `service`: `z_cloud * n_s * phi_cloud`.
pub fn cloud_latency(cfg: &SystemConfig, service: usize, z: &ScheduleMatrix, w: &WorkloadSnapshot) -> f64 {
    z.cloud_ratio(service) * w.total(service) * cfg.services[service].cloud_delay
}

/// Total response latency: edge computation and transfer over placed
/// services plus the cloud transfer term.
///
/// Panics if workload is routed to a server that does not host the service;
/// such entries are structurally zero for every solver in this crate.
pub fn total_latency(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    y: &AllocationMatrix,
    z: &ScheduleMatrix,
    w: &WorkloadSnapshot,
) -> Result<f64> {
    let (edge, cloud) = edge_cloud_latency(cfg, x, y, z, w)?;
    Ok(edge + cloud)
}

/// Total latency split into its edge and cloud components.
pub fn edge_cloud_latency(
    cfg: &SystemConfig,
    x: &PlacementMatrix,
    y: &AllocationMatrix,
    z: &ScheduleMatrix,
    w: &WorkloadSnapshot,
) -> Result<(f64, f64)> {
    check_dims(cfg, Some(z), Some(y), Some(w))?;
    let mut edge = 0.0;
    for i in 0..cfg.num_servers() {
        for s in 0..cfg.num_services() {
            if !x.placed(i, s) {
                assert!(
                    z.ratio(i, s) == 0.0,
                    "workload routed to server {i} which does not host service {s}"
                );
                continue;
            }
            edge += computation_latency(cfg, i, s, y, z, w)?;
            edge += transmission_latency(cfg, i, s, z, w)?;
        }
    }
    let cloud = (0..cfg.num_services()).map(|s| cloud_latency(cfg, s, z, w)).sum();
    Ok((edge, cloud))
}

/// Hourly cost of `server`: storage share plus compute share of the placed
/// services, at the server's full-capacity prices.
pub fn server_cost(cfg: &SystemConfig, server: usize, x: &PlacementMatrix, y: &AllocationMatrix) -> f64 {
    let srv = &cfg.servers[server];
    let mut cost = 0.0;
    for s in x.services_on(server) {
        cost += cfg.services[s].storage_req / srv.storage_capacity * srv.storage_price;
        cost += y.share(server, s) * srv.compute_price;
    }
    cost
}

/// Sum of [`server_cost`] over all servers.
pub fn total_cost(cfg: &SystemConfig, x: &PlacementMatrix, y: &AllocationMatrix) -> f64 {
    (0..cfg.num_servers()).map(|i| server_cost(cfg, i, x, y)).sum()
}
