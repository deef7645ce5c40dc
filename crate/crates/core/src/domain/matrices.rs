//! Decision matrices and workload snapshots.

use serde::{Deserialize, Serialize};

/// Dense row-major grid of `f64`, the backing store for the decision matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Grid { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged grid rows");
        Grid { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col_sum(&self, c: usize) -> f64 {
        (0..self.rows).map(|r| self.get(r, c)).sum()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

/// Binary service-to-server placement, `L x S`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacementMatrix {
    servers: usize,
    services: usize,
    bits: Vec<bool>,
}

impl PlacementMatrix {
    pub fn zeros(servers: usize, services: usize) -> Self {
        PlacementMatrix { servers, services, bits: vec![false; servers * services] }
    }

    pub fn from_rows(rows: Vec<Vec<bool>>) -> Self {
        let servers = rows.len();
        let services = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == services), "ragged placement rows");
        PlacementMatrix { servers, services, bits: rows.into_iter().flatten().collect() }
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn services(&self) -> usize {
        self.services
    }

    #[inline]
    pub fn placed(&self, server: usize, service: usize) -> bool {
        self.bits[server * self.services + service]
    }

    pub fn set(&mut self, server: usize, service: usize, placed: bool) {
        self.bits[server * self.services + service] = placed;
    }

    pub fn row(&self, server: usize) -> &[bool] {
        &self.bits[server * self.services..(server + 1) * self.services]
    }

    /// Replace one server's row, returning the modified copy.
    pub fn with_row(&self, server: usize, row: &[bool]) -> Self {
        assert_eq!(row.len(), self.services);
        let mut out = self.clone();
        out.bits[server * self.services..(server + 1) * self.services].copy_from_slice(row);
        out
    }

    /// Services placed on `server` (the row support).
    pub fn services_on(&self, server: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(server).iter().enumerate().filter_map(|(s, &b)| b.then_some(s))
    }

    pub fn placed_count(&self, server: usize) -> usize {
        self.row(server).iter().filter(|&&b| b).count()
    }

    pub fn any_placed(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    /// Compact bit-packed key, usable for memoization.
    pub fn key(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.bits.len().div_ceil(64)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        words
    }
}

/// Fractional compute allocation per (server, service), `L x S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationMatrix(pub Grid);

impl AllocationMatrix {
    pub fn zeros(servers: usize, services: usize) -> Self {
        AllocationMatrix(Grid::zeros(servers, services))
    }

    #[inline]
    pub fn share(&self, server: usize, service: usize) -> f64 {
        self.0.get(server, service)
    }

    pub fn set(&mut self, server: usize, service: usize, v: f64) {
        self.0.set(server, service, v);
    }

    pub fn servers(&self) -> usize {
        self.0.rows()
    }

    pub fn services(&self) -> usize {
        self.0.cols()
    }

    /// Total capacity share allocated on `server`.
    pub fn server_sum(&self, server: usize) -> f64 {
        self.0.row(server).iter().sum()
    }
}

/// Fractional workload routing per (row, service), `(L+1) x S`; the last row
/// is the cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMatrix(pub Grid);

impl ScheduleMatrix {
    pub fn zeros(servers: usize, services: usize) -> Self {
        ScheduleMatrix(Grid::zeros(servers + 1, services))
    }

    /// All-cloud schedule: every service column routes fully to the cloud.
    pub fn cloud_only(servers: usize, services: usize) -> Self {
        let mut z = Self::zeros(servers, services);
        for s in 0..services {
            z.0.set(servers, s, 1.0);
        }
        z
    }

    #[inline]
    pub fn ratio(&self, row: usize, service: usize) -> f64 {
        self.0.get(row, service)
    }

    pub fn set(&mut self, row: usize, service: usize, v: f64) {
        self.0.set(row, service, v);
    }

    /// Number of edge servers (rows excluding the cloud).
    pub fn servers(&self) -> usize {
        self.0.rows() - 1
    }

    pub fn services(&self) -> usize {
        self.0.cols()
    }

    pub fn cloud_row(&self) -> usize {
        self.0.rows() - 1
    }

    pub fn cloud_ratio(&self, service: usize) -> f64 {
        self.0.get(self.cloud_row(), service)
    }

    pub fn column(&self, service: usize) -> Vec<f64> {
        (0..self.0.rows()).map(|r| self.0.get(r, service)).collect()
    }

    pub fn set_column(&mut self, service: usize, col: &[f64]) {
        assert_eq!(col.len(), self.0.rows());
        for (r, &v) in col.iter().enumerate() {
            self.0.set(r, service, v);
        }
    }
}

/// Observed (or predicted) task counts per (server, service) over one
/// interval. Column totals are precomputed on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSnapshot {
    servers: usize,
    services: usize,
    counts: Vec<f64>,
    totals: Vec<f64>,
    /// Length of the covered interval, seconds.
    pub interval: f64,
}

/// Frame-level prediction: a snapshot whose interval is the frame length.
pub type FrameForecast = WorkloadSnapshot;

impl WorkloadSnapshot {
    pub fn new(rows: Vec<Vec<f64>>, interval: f64) -> Self {
        let servers = rows.len();
        let services = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == services), "ragged workload rows");
        assert!(rows.iter().flatten().all(|&n| n >= 0.0), "negative task count");
        assert!(interval > 0.0, "interval must be positive");
        let counts: Vec<f64> = rows.into_iter().flatten().collect();
        let mut totals = vec![0.0; services];
        for i in 0..servers {
            for (s, t) in totals.iter_mut().enumerate() {
                *t += counts[i * services + s];
            }
        }
        WorkloadSnapshot { servers, services, counts, totals, interval }
    }

    pub fn zeros(servers: usize, services: usize, interval: f64) -> Self {
        Self::new(vec![vec![0.0; services]; servers], interval)
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn services(&self) -> usize {
        self.services
    }

    /// Tasks arriving at `server` for `service` during the interval.
    #[inline]
    pub fn count(&self, server: usize, service: usize) -> f64 {
        self.counts[server * self.services + service]
    }

    /// Total demand for `service` across all servers.
    #[inline]
    pub fn total(&self, service: usize) -> f64 {
        self.totals[service]
    }

    pub fn grand_total(&self) -> f64 {
        self.totals.iter().sum()
    }

    /// Bit-exact identity of the snapshot, usable as a cache key.
    pub fn bit_key(&self) -> Vec<u64> {
        let mut key: Vec<u64> = self.counts.iter().map(|c| c.to_bits()).collect();
        key.push(self.interval.to_bits());
        key.push(self.servers as u64);
        key
    }
}

/// Euclidean projection of `v` onto the simplex `{u >= 0, sum(u) = mass}`.
///
/// Standard sort-and-threshold algorithm; `mass` must be positive.
pub fn project_simplex(v: &mut [f64], mass: f64) {
    let mut scratch = Vec::new();
    project_simplex_with(v, mass, &mut scratch);
}

/// [`project_simplex`] reusing a caller-owned scratch buffer, for hot loops.
pub fn project_simplex_with(v: &mut [f64], mass: f64, scratch: &mut Vec<f64>) {
    assert!(mass > 0.0 && !v.is_empty());
    scratch.clear();
    scratch.extend_from_slice(v);
    scratch.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - mass) / (j + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    for u in v.iter_mut() {
        *u = (*u - tau).max(0.0);
    }
}
