//! Two-timescale optimization of service placement, compute provisioning and
//! workload scheduling for a cloud-assisted edge system, plus a seeded
//! simulator that benchmarks the combined method (`rmws`) against six
//! baseline policies on synthetic Zipf-distributed workloads.
//!
//! On the large timescale (frames) a Gibbs-sampling search picks a service
//! placement; each candidate is scored by an alternating solver that pairs a
//! closed-form KKT compute allocation with a projected sub-gradient workload
//! schedule. On the small timescale (slots) only the schedule is re-solved
//! against realized demand.
//!
//! The `parallel` feature (on by default) runs batch sweeps, enumeration and
//! candidate scoring on rayon; disabling it yields a dependency-free
//! sequential build with identical outputs.

pub mod baselines;
pub mod domain;
pub mod error;
pub mod exec;
pub mod harness;
pub mod inner;
pub mod placement;
pub mod provisioning;
pub mod scheduling;
pub mod verification;
pub mod workload;

pub use error::{Error, Result};

/// Derive an independent sub-seed from a base seed and a salt (splitmix64).
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
