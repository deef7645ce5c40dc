//! Shared domain model: system description, decision matrices, the latency
//! and cost model, and constraint checking.

mod config;
mod constraints;
mod latency;
mod matrices;

pub use config::{EdgeServer, Service, SystemConfig};
pub use constraints::{
    check_constraints, ConstraintCheck, ConstraintReport, ROUTING_SUM_TOL, STABILITY_REL_MARGIN,
    TIGHT_BOUND_REL_TOL,
};
pub use latency::{
    cloud_latency, computation_latency, edge_cloud_latency, server_cost, total_cost,
    total_latency, transmission_latency,
};
pub use matrices::{
    project_simplex, project_simplex_with, AllocationMatrix, FrameForecast, Grid,
    PlacementMatrix, ScheduleMatrix, WorkloadSnapshot,
};
