//! System description: edge servers, services and global simulation settings.
//!
//! Unit conventions, fixed once for the whole crate:
//! - compute capacity `F` is in giga-cycles per second (GHz),
//! - a service's compute requirement `c` is in giga-cycles per task, so
//!   `y * F / c` is a service rate in tasks per second,
//! - storage is in GB, prices in currency per hour for *full* use of the
//!   resource, delays in seconds per task.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One edge server with its capacities, prices and hourly budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeServer {
    pub id: usize,
    /// Compute capacity `F`, giga-cycles per second.
    pub compute_capacity: f64,
    /// Storage capacity `M`, GB.
    pub storage_capacity: f64,
    /// Price of the full storage capacity, currency per hour.
    pub storage_price: f64,
    /// Price of the full compute capacity, currency per hour.
    pub compute_price: f64,
    /// Hourly spending cap for this server.
    pub budget: f64,
}

/// One service type with its resource footprint and transfer delays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Service {
    pub id: usize,
    /// Storage needed to host the service, GB.
    pub storage_req: f64,
    /// Compute demand per task, giga-cycles.
    pub compute_req: f64,
    /// Per-task transfer delay between edge servers, seconds.
    pub edge_delay: f64,
    /// Per-task transfer delay to the cloud, seconds.
    pub cloud_delay: f64,
}

/// Immutable description of one simulation instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub servers: Vec<EdgeServer>,
    pub services: Vec<Service>,
    /// Small-timescale interval length, seconds.
    pub slot_length: f64,
    pub slots_per_frame: usize,
    pub frames: usize,
    /// Zipf popularity exponent used for demand generation.
    pub zipf_exponent: f64,
    /// Mean arriving tasks per slot per server region.
    pub arrival_mean: f64,
    /// Standard deviation of arriving tasks per slot per server region.
    pub arrival_spread: f64,
    /// Budget as a fraction of full storage-plus-compute price.
    pub budget_coefficient: f64,
    pub rng_seed: u64,
    /// Optional per-frame Zipf exponent override (popularity sweeps).
    #[serde(default)]
    pub zipf_frame_schedule: Option<Vec<f64>>,
    /// Optional per-frame popularity order: entry `f` lists service indices
    /// from most to least popular during frame `f`.
    #[serde(default)]
    pub popularity_frame_schedule: Option<Vec<Vec<usize>>>,
}

impl SystemConfig {
    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn num_services(&self) -> usize {
        self.services.len()
    }

    /// Index of the cloud row in a schedule matrix.
    pub fn cloud_row(&self) -> usize {
        self.servers.len()
    }

    /// Large-timescale interval length: `slot_length * slots_per_frame`.
    pub fn frame_length(&self) -> f64 {
        self.slot_length * self.slots_per_frame as f64
    }

    /// Validate every invariant the rest of the crate relies on.
    pub fn validate(&self) -> Result<()> {
        if self.servers.is_empty() || self.services.is_empty() {
            return Err(Error::Config("need at least one server and one service".into()));
        }
        for srv in &self.servers {
            if srv.compute_capacity <= 0.0 || srv.storage_capacity <= 0.0 {
                return Err(Error::Config(format!(
                    "server {}: capacities must be positive",
                    srv.id
                )));
            }
            if srv.storage_price < 0.0 || srv.compute_price < 0.0 || srv.budget < 0.0 {
                return Err(Error::Config(format!(
                    "server {}: prices and budget must be non-negative",
                    srv.id
                )));
            }
        }
        for svc in &self.services {
            if svc.storage_req <= 0.0 || svc.compute_req <= 0.0 {
                return Err(Error::Config(format!(
                    "service {}: resource requirements must be positive",
                    svc.id
                )));
            }
            if svc.edge_delay < 0.0 || svc.cloud_delay < 0.0 {
                return Err(Error::Config(format!(
                    "service {}: delays must be non-negative",
                    svc.id
                )));
            }
            if svc.cloud_delay < svc.edge_delay {
                return Err(Error::Config(format!(
                    "service {}: cloud delay must be at least the edge delay",
                    svc.id
                )));
            }
        }
        if self.slot_length <= 0.0 {
            return Err(Error::Config("slot length must be positive".into()));
        }
        if self.slots_per_frame < 1 {
            return Err(Error::Config("need at least one slot per frame".into()));
        }
        if self.frames < 1 {
            return Err(Error::Config("need at least one frame".into()));
        }
        if !(self.budget_coefficient > 0.0 && self.budget_coefficient <= 1.0) {
            return Err(Error::Config("budget coefficient must lie in (0, 1]".into()));
        }
        if self.arrival_mean < 0.0 || self.arrival_spread < 0.0 {
            return Err(Error::Config("arrival statistics must be non-negative".into()));
        }
        if self.zipf_exponent < 0.0 {
            return Err(Error::Config("zipf exponent must be non-negative".into()));
        }
        if let Some(sched) = &self.zipf_frame_schedule {
            if sched.len() != self.frames {
                return Err(Error::Config(format!(
                    "zipf frame schedule has {} entries, expected {}",
                    sched.len(),
                    self.frames
                )));
            }
            if sched.iter().any(|e| *e < 0.0) {
                return Err(Error::Config("zipf frame schedule entries must be >= 0".into()));
            }
        }
        if let Some(sched) = &self.popularity_frame_schedule {
            if sched.len() != self.frames {
                return Err(Error::Config(format!(
                    "popularity frame schedule has {} entries, expected {}",
                    sched.len(),
                    self.frames
                )));
            }
            for (f, order) in sched.iter().enumerate() {
                let mut seen = vec![false; self.services.len()];
                if order.len() != self.services.len() {
                    return Err(Error::Config(format!(
                        "popularity order for frame {f} must list every service once"
                    )));
                }
                for &s in order {
                    if s >= self.services.len() || seen[s] {
                        return Err(Error::Config(format!(
                            "popularity order for frame {f} is not a permutation"
                        )));
                    }
                    seen[s] = true;
                }
            }
        }
        Ok(())
    }
}
