//! Run configuration and feasibility validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Dtype;

/// Storage precision for the spatial distance matrix. Accumulation is always
/// 64-bit; this only controls what gets stored.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Follow the input sequence's dtype (the default: 32-bit input data
    /// keeps the dominant `n x n` buffer at half size).
    Inherit,
    F32,
    F64,
}

impl Precision {
    pub fn resolve(self, input: Dtype) -> Dtype {
        match self {
            Precision::Inherit => input,
            Precision::F32 => Dtype::F32,
            Precision::F64 => Dtype::F64,
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "inherit" => Ok(Precision::Inherit),
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(format!(
                "unknown precision {other:?} (expected inherit, f32 or f64)"
            )),
        }
    }
}

/// Parameters governing one analysis pass.
///
/// `e` is the exclusion-zone radius: trajectories `i` and `j` are candidate
/// neighbors only when `|i - j| > e`. It defaults to `d`, which is the
/// smallest radius guaranteeing candidate trajectories share no field with
/// the query. `k_values` is the set of neighbor counts evaluated from a
/// single pass at `max(k_values)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    /// Trajectory duration in time steps.
    pub d: usize,
    /// Exclusion-zone radius; `None` means `d`.
    pub e: Option<usize>,
    /// Neighbor counts to evaluate; scores for every entry come from one
    /// pass at the maximum.
    pub k_values: Vec<usize>,
    /// Tile edge length for the blocked distance kernel.
    pub b: usize,
    /// Storage precision of the spatial distance matrix.
    pub precision: Precision,
    /// Optional exact-recomputation interval for the row recurrence: every
    /// `refresh`-th row is rebuilt by direct summation instead of updated.
    pub refresh: Option<usize>,
    /// Generator seed, echoed into reports.
    pub seed: Option<u64>,
    /// Thread cap for the engine's internal parallelism; `None` uses the
    /// global default pool.
    pub threads: Option<usize>,
    /// Optional cap, in bytes, on the spatial-distance-matrix allocation.
    pub memory_budget: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: 5,
            e: None,
            k_values: vec![1, 5, 10],
            b: 256,
            precision: Precision::Inherit,
            refresh: None,
            seed: None,
            threads: None,
            memory_budget: None,
        }
    }
}

impl RunConfig {
    /// Effective exclusion-zone radius.
    pub fn exclusion(&self) -> usize {
        self.e.unwrap_or(self.d)
    }

    /// Sorted, deduplicated neighbor counts.
    pub fn k_sorted(&self) -> Vec<usize> {
        let mut ks = self.k_values.clone();
        ks.sort_unstable();
        ks.dedup();
        ks
    }

    pub fn k_max(&self) -> usize {
        self.k_values.iter().copied().max().unwrap_or(0)
    }

    /// Number of trajectories for a sequence of `n` steps.
    pub fn trajectory_count(&self, n: usize) -> usize {
        n - self.d + 1
    }

    /// Validate against a sequence length `n`. Fails fast (before any
    /// computation) when the worst-case trajectory would have fewer than
    /// `k_max` admissible candidates.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.d == 0 || self.d > n {
            return Err(Error::InvalidConfig(format!(
                "duration d={} must satisfy 1 <= d <= n={n}",
                self.d
            )));
        }
        if self.b == 0 {
            return Err(Error::InvalidConfig("batch size b must be >= 1".into()));
        }
        if self.k_values.is_empty() {
            return Err(Error::InvalidConfig("k list must not be empty".into()));
        }
        if self.k_values.iter().any(|&k| k == 0) {
            return Err(Error::InvalidConfig("every k must be >= 1".into()));
        }
        if self.refresh == Some(0) {
            return Err(Error::InvalidConfig(
                "refresh interval must be >= 1 when set".into(),
            ));
        }
        let m = self.trajectory_count(n);
        let e = self.exclusion();
        let k = self.k_max();
        // An interior trajectory loses the 2e+1 indices within the exclusion
        // zone; boundary trajectories lose fewer, so this is the worst case.
        let admissible = m.saturating_sub(2 * e + 1);
        if admissible < k {
            return Err(Error::Infeasible { m, e, k, admissible });
        }
        Ok(())
    }
}
