//! Error type shared across the crate.

use std::fmt;

/// Everything that can go wrong while building or solving an instance.
#[derive(Debug)]
pub enum Error {
    /// Invalid configuration or dimension mismatch between inputs.
    Config(String),
    /// Queue stability is violated for a routed service: the allocated
    /// service rate does not exceed the arrival rate.
    QueueUnstable {
        server: usize,
        service: usize,
        /// Stability margin `y*F/c - z*n/dt` in tasks per second (<= 0 here).
        margin: f64,
    },
    /// Routed demand cannot be stabilized by any allocation on this server.
    InfeasibleDemand {
        server: usize,
        /// Demand in giga-cycles over the interval.
        demand: f64,
        /// Usable capacity `min(1, gamma) * F * dt` in giga-cycles.
        capacity: f64,
    },
    /// A service's demand cannot be carried by the admissible routes
    /// (edge-only scheduling with too little stable edge capacity).
    UnroutableService {
        service: usize,
        /// Required routed share (always 1).
        demand: f64,
        /// Stable share the admissible routes can carry.
        capacity: f64,
    },
    /// Storage cost alone exhausts the server budget, leaving no compute budget.
    NegativeGamma { server: usize, gamma: f64 },
    /// Exhaustive enumeration guard tripped.
    TooLarge { states: u128, limit: u128 },
    /// A probe could not construct a usable instance.
    DegenerateInstance(String),
    /// An iterative oracle failed to reach its residual target.
    NonConvergence { iterations: usize, residual: f64 },
    /// I/O with path context.
    Io { path: String, source: std::io::Error },
    /// JSON (de)serialization with path context.
    Json { path: String, source: serde_json::Error },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::QueueUnstable { server, service, margin } => write!(
                f,
                "unstable queue at server {server}, service {service}: margin {margin:.3e} tasks/s"
            ),
            Error::InfeasibleDemand { server, demand, capacity } => write!(
                f,
                "infeasible demand at server {server}: {demand:.3} giga-cycles routed, {capacity:.3} usable"
            ),
            Error::UnroutableService { service, demand, capacity } => write!(
                f,
                "service {service} cannot be routed: needs share {demand}, stable capacity {capacity:.3}"
            ),
            Error::NegativeGamma { server, gamma } => write!(
                f,
                "server {server} has no compute budget left after storage (gamma = {gamma:.3})"
            ),
            Error::TooLarge { states, limit } => {
                write!(f, "state space too large to enumerate: {states} > {limit}")
            }
            Error::DegenerateInstance(msg) => write!(f, "degenerate probe instance: {msg}"),
            Error::NonConvergence { iterations, residual } => write!(
                f,
                "solver did not converge after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::Io { path, source } => write!(f, "i/o error on {path}: {source}"),
            Error::Json { path, source } => write!(f, "json error on {path}: {source}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            Error::Json { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
