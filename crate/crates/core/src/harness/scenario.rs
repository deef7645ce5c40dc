//! Scenario description: the JSON-loadable experiment setup (schema 1).
//!
//! A scenario lists parameter *ranges*; per-server and per-service values
//! are drawn uniformly from those ranges with the run seed, and each
//! server's budget is `budget_coefficient * (storage price + compute
//! price)`. Explicit server/service lists may be given instead, in which
//! case the ranges are ignored.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{EdgeServer, Service, SystemConfig};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Must be [`SCHEMA_VERSION`].
    pub schema: u32,
    pub servers: usize,
    pub services: usize,
    /// [min, max] GB per server.
    pub storage_capacity_range: [f64; 2],
    /// [min, max] GHz per server.
    pub compute_capacity_range: [f64; 2],
    /// [min, max] currency/hour for full storage.
    pub storage_price_range: [f64; 2],
    /// [min, max] currency/hour for full compute.
    pub compute_price_range: [f64; 2],
    /// [min, max] GB per service.
    pub service_storage_range: [f64; 2],
    /// [min, max] giga-cycles per task.
    pub service_compute_range: [f64; 2],
    pub zipf_exponent: f64,
    pub budget_coefficient: f64,
    pub slot_length_s: f64,
    pub slots_per_frame: usize,
    pub frames: usize,
    pub arrival_mean: f64,
    pub arrival_spread: f64,
    /// Per-task transfer delay between edge servers, seconds.
    pub edge_delay_s: f64,
    /// Per-task transfer delay to the cloud, seconds.
    pub cloud_delay_s: f64,
    pub seed: u64,
    #[serde(default)]
    pub zipf_frame_schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub popularity_frame_schedule: Option<Vec<Vec<usize>>>,
    /// Explicit servers; overrides the ranges when present.
    #[serde(default)]
    pub explicit_servers: Option<Vec<EdgeServer>>,
    /// Explicit services; overrides the ranges when present.
    #[serde(default)]
    pub explicit_services: Option<Vec<Service>>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            schema: SCHEMA_VERSION,
            servers: 4,
            services: 10,
            storage_capacity_range: [50.0, 200.0],
            compute_capacity_range: [50.0, 150.0],
            storage_price_range: [10.0, 40.0],
            compute_price_range: [10.0, 50.0],
            service_storage_range: [10.0, 40.0],
            service_compute_range: [0.1, 0.5],
            zipf_exponent: 0.6,
            budget_coefficient: 0.7,
            slot_length_s: 60.0,
            slots_per_frame: 30,
            frames: 10,
            arrival_mean: 600.0,
            arrival_spread: 20.0,
            edge_delay_s: 0.01,
            cloud_delay_s: 0.1,
            seed: 1,
            zipf_frame_schedule: None,
            popularity_frame_schedule: None,
            explicit_servers: None,
            explicit_services: None,
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..range[1])
    }
}

impl ScenarioSpec {
    pub fn load(path: &Path) -> Result<ScenarioSpec> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        let spec: ScenarioSpec = serde_json::from_str(&text)
            .map_err(|e| Error::Json { path: path.display().to_string(), source: e })?;
        if spec.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported scenario schema {} (expected {SCHEMA_VERSION})",
                spec.schema
            )));
        }
        Ok(spec)
    }

    /// Draw the concrete system for `seed`, validate it and return it.
    pub fn materialize(&self, seed: u64) -> Result<SystemConfig> {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(seed, 0xC0FFEE));
        let servers = match &self.explicit_servers {
            Some(list) => list.clone(),
            None => (0..self.servers)
                .map(|id| {
                    let storage_price = draw(&mut rng, self.storage_price_range);
                    let compute_price = draw(&mut rng, self.compute_price_range);
                    EdgeServer {
                        id,
                        compute_capacity: draw(&mut rng, self.compute_capacity_range),
                        storage_capacity: draw(&mut rng, self.storage_capacity_range),
                        storage_price,
                        compute_price,
                        budget: self.budget_coefficient * (storage_price + compute_price),
                    }
                })
                .collect(),
        };
        let services = match &self.explicit_services {
            Some(list) => list.clone(),
            None => (0..self.services)
                .map(|id| Service {
                    id,
                    storage_req: draw(&mut rng, self.service_storage_range),
                    compute_req: draw(&mut rng, self.service_compute_range),
                    edge_delay: self.edge_delay_s,
                    cloud_delay: self.cloud_delay_s,
                })
                .collect(),
        };
        let cfg = SystemConfig {
            servers,
            services,
            slot_length: self.slot_length_s,
            slots_per_frame: self.slots_per_frame,
            frames: self.frames,
            zipf_exponent: self.zipf_exponent,
            arrival_mean: self.arrival_mean,
            arrival_spread: self.arrival_spread,
            budget_coefficient: self.budget_coefficient,
            rng_seed: seed,
            zipf_frame_schedule: self.zipf_frame_schedule.clone(),
            popularity_frame_schedule: self.popularity_frame_schedule.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parameters a sweep may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    /// Budget coefficient itself (values are the coefficient).
    BudgetCoefficient,
    /// Number of service types (values are counts).
    ServiceCount,
    /// Scale on both endpoints of the server storage range.
    StorageCapacityScale,
    /// Scale on both endpoints of the server compute range.
    ComputeCapacityScale,
    /// Scale on both endpoints of the service storage range.
    ServiceStorageScale,
    /// Scale on both endpoints of the service compute range.
    ServiceComputeScale,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::BudgetCoefficient => "budget-coefficient",
            SweepParameter::ServiceCount => "service-count",
            SweepParameter::StorageCapacityScale => "storage-capacity-scale",
            SweepParameter::ComputeCapacityScale => "compute-capacity-scale",
            SweepParameter::ServiceStorageScale => "service-storage-scale",
            SweepParameter::ServiceComputeScale => "service-compute-scale",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "budget-coefficient" => Ok(SweepParameter::BudgetCoefficient),
            "service-count" => Ok(SweepParameter::ServiceCount),
            "storage-capacity-scale" => Ok(SweepParameter::StorageCapacityScale),
            "compute-capacity-scale" => Ok(SweepParameter::ComputeCapacityScale),
            "service-storage-scale" => Ok(SweepParameter::ServiceStorageScale),
            "service-compute-scale" => Ok(SweepParameter::ServiceComputeScale),
            other => Err(Error::Config(format!("unknown sweep parameter: {other}"))),
        }
    }

    /// The scenario with this parameter set to `value`.
    pub fn apply(&self, base: &ScenarioSpec, value: f64) -> Result<ScenarioSpec> {
        let mut spec = base.clone();
        let scale = |range: [f64; 2]| [range[0] * value, range[1] * value];
        match self {
            SweepParameter::BudgetCoefficient => {
                if !(value > 0.0 && value <= 1.0) {
                    return Err(Error::Config(format!("budget coefficient {value} out of (0,1]")));
                }
                spec.budget_coefficient = value;
            }
            SweepParameter::ServiceCount => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("service count {value} must be a positive integer")));
                }
                spec.services = value as usize;
            }
            SweepParameter::StorageCapacityScale => {
                spec.storage_capacity_range = scale(spec.storage_capacity_range)
            }
            SweepParameter::ComputeCapacityScale => {
                spec.compute_capacity_range = scale(spec.compute_capacity_range)
            }
            SweepParameter::ServiceStorageScale => {
                spec.service_storage_range = scale(spec.service_storage_range)
            }
            SweepParameter::ServiceComputeScale => {
                spec.service_compute_range = scale(spec.service_compute_range)
            }
        }
        Ok(spec)
    }
}
