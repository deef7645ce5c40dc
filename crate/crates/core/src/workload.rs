//! Synthetic demand generation and frame-level forecasting.
//!
//! Per slot and server region, the task total is a rounded, non-negative
//! normal draw; the total splits across services multinomially with Zipf
//! popularity weights. Popularity can be re-ranked or re-shaped per frame
//! through the config's frame schedules.

use std::io::{BufRead, Write};

use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{FrameForecast, SystemConfig, WorkloadSnapshot};
use crate::error::{Error, Result};

/// Zipf popularity vector: `p_s = s^-e / H` over ranks `1..=n`.
///
/// Probabilities sum to one and are strictly decreasing in rank for `e > 0`.
pub fn zipf_popularity(services: usize, exponent: f64) -> Vec<f64> {
    assert!(services >= 1, "need at least one service");
    assert!(exponent >= 0.0, "exponent must be non-negative");
    let weights: Vec<f64> = (1..=services).map(|rank| (rank as f64).powf(-exponent)).collect();
    let h: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / h).collect()
}

/// Popularity per service for `frame`, honoring the config's per-frame
/// exponent and ranking schedules. Index `s` is the service id; the most
/// popular service holds the largest probability.
pub fn frame_popularity(cfg: &SystemConfig, frame: usize) -> Vec<f64> {
    let exponent = cfg
        .zipf_frame_schedule
        .as_ref()
        .and_then(|sched| sched.get(frame).copied())
        .unwrap_or(cfg.zipf_exponent);
    let by_rank = zipf_popularity(cfg.num_services(), exponent);
    match cfg.popularity_frame_schedule.as_ref().and_then(|sched| sched.get(frame)) {
        Some(order) => {
            // order[rank] = service holding that rank this frame
            let mut probs = vec![0.0; cfg.num_services()];
            for (rank, &service) in order.iter().enumerate() {
                probs[service] = by_rank[rank];
            }
            probs
        }
        None => by_rank,
    }
}

/// Generation parameters recorded with a trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub seed: u64,
    pub arrival_mean: f64,
    pub arrival_spread: f64,
    pub frame_exponents: Vec<f64>,
    pub frame_rankings: Option<Vec<Vec<usize>>>,
}

/// Full per-slot demand history for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadTrace {
    frames: usize,
    slots_per_frame: usize,
    slots: Vec<WorkloadSnapshot>,
    pub meta: TraceMeta,
}

impl WorkloadTrace {
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn slots_per_frame(&self) -> usize {
        self.slots_per_frame
    }

    pub fn snapshot(&self, frame: usize, slot: usize) -> &WorkloadSnapshot {
        &self.slots[frame * self.slots_per_frame + slot]
    }

    /// Aggregate a frame's slots into one frame-length snapshot.
    pub fn frame_total(&self, frame: usize) -> WorkloadSnapshot {
        let first = self.snapshot(frame, 0);
        let (l, s) = (first.servers(), first.services());
        let mut rows = vec![vec![0.0; s]; l];
        for slot in 0..self.slots_per_frame {
            let snap = self.snapshot(frame, slot);
            for (i, row) in rows.iter_mut().enumerate() {
                for (sv, cell) in row.iter_mut().enumerate() {
                    *cell += snap.count(i, sv);
                }
            }
        }
        WorkloadSnapshot::new(rows, first.interval * self.slots_per_frame as f64)
    }

    /// Write the trace as CSV with columns frame,slot,server,service,count.
    pub fn to_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "frame,slot,server,service,count")?;
        for frame in 0..self.frames {
            for slot in 0..self.slots_per_frame {
                let snap = self.snapshot(frame, slot);
                for server in 0..snap.servers() {
                    for service in 0..snap.services() {
                        writeln!(
                            out,
                            "{frame},{slot},{server},{service},{}",
                            snap.count(server, service) as u64
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Read a trace back from CSV produced by [`WorkloadTrace::to_csv`].
    /// Dimensions must match `cfg`; missing cells default to zero.
    pub fn from_csv<R: BufRead>(cfg: &SystemConfig, input: R) -> Result<WorkloadTrace> {
        let (l, s) = (cfg.num_servers(), cfg.num_services());
        let (frames, spf) = (cfg.frames, cfg.slots_per_frame);
        let mut cells = vec![vec![vec![0.0; s]; l]; frames * spf];
        for (idx, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Io { path: "<trace csv>".into(), source: e })?;
            if idx == 0 {
                if line.trim() != "frame,slot,server,service,count" {
                    return Err(Error::Config(format!("unexpected trace header: {line}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Config(format!("trace line {idx}: expected 5 fields")));
            }
            let parse = |i: usize| -> Result<usize> {
                fields[i]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("trace line {idx}: bad integer field")))
            };
            let (frame, slot, server, service) = (parse(0)?, parse(1)?, parse(2)?, parse(3)?);
            let count: f64 = fields[4]
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("trace line {idx}: bad count")))?;
            if frame >= frames || slot >= spf || server >= l || service >= s {
                return Err(Error::Config(format!("trace line {idx}: index out of range")));
            }
            cells[frame * spf + slot][server][service] = count;
        }
        let slots = cells
            .into_iter()
            .map(|rows| WorkloadSnapshot::new(rows, cfg.slot_length))
            .collect();
        Ok(WorkloadTrace {
            frames,
            slots_per_frame: spf,
            slots,
            meta: TraceMeta {
                seed: cfg.rng_seed,
                arrival_mean: cfg.arrival_mean,
                arrival_spread: cfg.arrival_spread,
                frame_exponents: (0..frames)
                    .map(|f| {
                        cfg.zipf_frame_schedule
                            .as_ref()
                            .and_then(|sc| sc.get(f).copied())
                            .unwrap_or(cfg.zipf_exponent)
                    })
                    .collect(),
                frame_rankings: cfg.popularity_frame_schedule.clone(),
            },
        })
    }
}

/// Split `total` tasks across services with the given probabilities, by
/// chained binomial draws.
fn multinomial_split(total: u64, probs: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut counts = vec![0.0; probs.len()];
    let mut remaining = total;
    let mut rest_p = 1.0;
    for s in 0..probs.len() {
        if remaining == 0 {
            break;
        }
        if s == probs.len() - 1 {
            counts[s] = remaining as f64;
            break;
        }
        let p = (probs[s] / rest_p).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, p).expect("valid binomial").sample(rng);
        counts[s] = draw as f64;
        remaining -= draw;
        rest_p = (rest_p - probs[s]).max(0.0);
    }
    counts
}

/// Generate the full per-slot demand trace for `cfg`, deterministically for a
/// given generator state.
///
/// Slot totals and their per-service splits draw from decoupled substreams,
/// so configurations that differ only in the service mix (count, popularity)
/// see identical demand volume.
pub fn generate_trace(cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> WorkloadTrace {
    use rand::{Rng, SeedableRng};
    let mut totals_rng = ChaCha8Rng::seed_from_u64(rng.gen());
    let mut split_rng = ChaCha8Rng::seed_from_u64(rng.gen());

    let (l, spf, frames) = (cfg.num_servers(), cfg.slots_per_frame, cfg.frames);
    let normal = if cfg.arrival_spread > 0.0 {
        Some(Normal::new(cfg.arrival_mean, cfg.arrival_spread).expect("valid normal"))
    } else {
        None
    };
    let mut slots = Vec::with_capacity(frames * spf);
    let mut frame_exponents = Vec::with_capacity(frames);
    for frame in 0..frames {
        let probs = frame_popularity(cfg, frame);
        frame_exponents.push(
            cfg.zipf_frame_schedule
                .as_ref()
                .and_then(|sc| sc.get(frame).copied())
                .unwrap_or(cfg.zipf_exponent),
        );
        for _ in 0..spf {
            let mut rows = Vec::with_capacity(l);
            for _ in 0..l {
                let total = if cfg.arrival_mean == 0.0 {
                    0
                } else {
                    match normal {
                        Some(n) => n.sample(&mut totals_rng).max(0.0).round() as u64,
                        None => cfg.arrival_mean.round() as u64,
                    }
                };
                rows.push(multinomial_split(total, &probs, &mut split_rng));
            }
            slots.push(WorkloadSnapshot::new(rows, cfg.slot_length));
        }
    }
    WorkloadTrace {
        frames,
        slots_per_frame: spf,
        slots,
        meta: TraceMeta {
            seed: cfg.rng_seed,
            arrival_mean: cfg.arrival_mean,
            arrival_spread: cfg.arrival_spread,
            frame_exponents,
            frame_rankings: cfg.popularity_frame_schedule.clone(),
        },
    }
}

/// Demand prediction used at frame start.
#[derive(Clone, Copy, Debug)]
pub enum ForecastMode<'a> {
    /// Expected demand: `slots_per_frame * arrival_mean * p_s` per region.
    Mean,
    /// Realized frame totals taken from a trace (ablation only).
    Oracle(&'a WorkloadTrace),
}

/// Frame-level demand forecast; interval is the frame length.
pub fn frame_forecast(cfg: &SystemConfig, frame: usize, mode: ForecastMode<'_>) -> FrameForecast {
    match mode {
        ForecastMode::Mean => {
            let probs = frame_popularity(cfg, frame);
            let per_service: Vec<f64> = probs
                .iter()
                .map(|p| cfg.slots_per_frame as f64 * cfg.arrival_mean * p)
                .collect();
            let rows = vec![per_service; cfg.num_servers()];
            WorkloadSnapshot::new(rows, cfg.frame_length())
        }
        ForecastMode::Oracle(trace) => trace.frame_total(frame),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::test_support::two_server_config;
    use rand::SeedableRng;

    #[test]
    fn zipf_single_service() {
        assert_eq!(zipf_popularity(1, 0.6), vec![1.0]);
    }

    #[test]
    fn zipf_two_services_exponent_one() {
        let p = zipf_popularity(2, 1.0);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zipf_rank_ratio_independent_of_h() {
        let p = zipf_popularity(10, 0.6);
        assert!((p[0] / p[1] - 2f64.powf(0.6)).abs() < 1e-12);
        let total: f64 = p.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for pair in p.windows(2) {
            assert!(pair[0] > pair[1]);
        }
    }

    #[test]
    fn zero_mean_gives_all_zero_trace() {
        let mut cfg = two_server_config();
        cfg.arrival_mean = 0.0;
        cfg.frames = 2;
        cfg.slots_per_frame = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trace = generate_trace(&cfg, &mut rng);
        for f in 0..2 {
            for t in 0..3 {
                assert_eq!(trace.snapshot(f, t).grand_total(), 0.0);
            }
        }
    }

    #[test]
    fn trace_is_deterministic_per_seed() {
        let mut cfg = two_server_config();
        cfg.frames = 2;
        cfg.slots_per_frame = 5;
        let a = generate_trace(&cfg, &mut ChaCha8Rng::seed_from_u64(11));
        let b = generate_trace(&cfg, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
        let c = generate_trace(&cfg, &mut ChaCha8Rng::seed_from_u64(12));
        assert_ne!(a, c);
    }

    #[test]
    fn empirical_mean_and_shares_converge() {
        let mut cfg = two_server_config();
        cfg.frames = 1;
        cfg.slots_per_frame = 10_000;
        cfg.servers.truncate(1);
        let trace = generate_trace(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        let mut total = 0.0;
        let mut by_service = vec![0.0; cfg.num_services()];
        for t in 0..cfg.slots_per_frame {
            let snap = trace.snapshot(0, t);
            total += snap.grand_total();
            for (s, acc) in by_service.iter_mut().enumerate() {
                *acc += snap.total(s);
            }
        }
        let mean = total / cfg.slots_per_frame as f64;
        assert!(
            (mean - cfg.arrival_mean).abs() / cfg.arrival_mean < 0.01,
            "empirical mean {mean}"
        );
        let probs = zipf_popularity(cfg.num_services(), cfg.zipf_exponent);
        for (s, p) in probs.iter().enumerate() {
            let share = by_service[s] / total;
            assert!((share - p).abs() < 0.01, "service {s}: {share} vs {p}");
        }
    }

    #[test]
    fn mean_forecast_hand_value() {
        // 30 slots, mean 600, p_0 = 0.25 -> 4500 per region.
        let mut cfg = two_server_config();
        cfg.services = (0..4)
            .map(|id| crate::domain::Service {
                id,
                storage_req: 10.0,
                compute_req: 0.2,
                edge_delay: 0.01,
                cloud_delay: 0.1,
            })
            .collect();
        cfg.zipf_exponent = 0.0; // uniform popularity: p = 1/4
        let f = frame_forecast(&cfg, 0, ForecastMode::Mean);
        assert!((f.count(0, 0) - 4500.0).abs() < 1e-9);
        assert!((f.interval - cfg.frame_length()).abs() < 1e-12);
    }

    #[test]
    fn oracle_forecast_matches_trace_sums_exactly() {
        let mut cfg = two_server_config();
        cfg.frames = 2;
        cfg.slots_per_frame = 4;
        let trace = generate_trace(&cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let f = frame_forecast(&cfg, 1, ForecastMode::Oracle(&trace));
        for i in 0..cfg.num_servers() {
            for s in 0..cfg.num_services() {
                let direct: f64 = (0..4).map(|t| trace.snapshot(1, t).count(i, s)).sum();
                assert_eq!(f.count(i, s), direct);
            }
        }

        // All-zero trace -> all-zero forecast.
        cfg.arrival_mean = 0.0;
        let trace = generate_trace(&cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let f = frame_forecast(&cfg, 0, ForecastMode::Oracle(&trace));
        assert_eq!(f.grand_total(), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let mut cfg = two_server_config();
        cfg.frames = 2;
        cfg.slots_per_frame = 3;
        let trace = generate_trace(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        let mut buf = Vec::new();
        trace.to_csv(&mut buf).unwrap();
        let parsed = WorkloadTrace::from_csv(&cfg, buf.as_slice()).unwrap();
        for f in 0..2 {
            for t in 0..3 {
                assert_eq!(trace.snapshot(f, t), parsed.snapshot(f, t));
            }
        }
    }

    #[test]
    fn per_frame_popularity_reranking() {
        let mut cfg = two_server_config();
        cfg.frames = 1;
        cfg.popularity_frame_schedule = Some(vec![vec![1, 0]]);
        let probs = frame_popularity(&cfg, 0);
        // Service 1 is ranked first, so it takes the larger share.
        assert!(probs[1] > probs[0]);
    }
}
