//! Preprocessing primitives: climatology removal, per-gridpoint
//! standardization, and latitude-based area weighting.
//!
//! All of these are optional transforms applied before scoring; the distance
//! engine itself stays weight- and anomaly-unaware.

use crate::error::{Error, Result};
use crate::field::{FieldSequence, GridWeights};

/// Which long-term mean to subtract.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ClimatologyMode {
    /// Subtract each grid point's mean over all `n` steps (the default).
    PerGridpoint,
    /// Subtract, at step `t`, the mean over all steps congruent to `t`
    /// modulo `period` (a calendar-cycle climatology).
    PerCalendarStep { period: usize },
}

/// Subtract the long-term climatology, turning fields into anomalies.
/// Output dimensions and dtype are unchanged.
pub fn remove_climatology(seq: &FieldSequence, mode: ClimatologyMode) -> Result<FieldSequence> {
    let n = seq.n();
    let hw = seq.hw();
    let values = seq.values();
    let mut out = values.to_vec();
    match mode {
        ClimatologyMode::PerGridpoint => {
            let mut means = vec![0.0f64; hw];
            for t in 0..n {
                let field = &values[t * hw..(t + 1) * hw];
                for (m, &v) in means.iter_mut().zip(field) {
                    *m += v;
                }
            }
            for m in &mut means {
                *m /= n as f64;
            }
            for t in 0..n {
                let field = &mut out[t * hw..(t + 1) * hw];
                for (v, &m) in field.iter_mut().zip(&means) {
                    *v -= m;
                }
            }
        }
        ClimatologyMode::PerCalendarStep { period } => {
            if period == 0 {
                return Err(Error::InvalidConfig("climatology period must be >= 1".into()));
            }
            if n < period {
                return Err(Error::InvalidConfig(format!(
                    "climatology period {period} exceeds sequence length {n}"
                )));
            }
            let mut sums = vec![0.0f64; period * hw];
            let mut counts = vec![0usize; period];
            for t in 0..n {
                let r = t % period;
                counts[r] += 1;
                let field = &values[t * hw..(t + 1) * hw];
                let acc = &mut sums[r * hw..(r + 1) * hw];
                for (m, &v) in acc.iter_mut().zip(field) {
                    *m += v;
                }
            }
            for r in 0..period {
                let c = counts[r] as f64;
                for m in &mut sums[r * hw..(r + 1) * hw] {
                    *m /= c;
                }
            }
            for t in 0..n {
                let r = t % period;
                let field = &mut out[t * hw..(t + 1) * hw];
                let means = &sums[r * hw..(r + 1) * hw];
                for (v, &m) in field.iter_mut().zip(means) {
                    *v -= m;
                }
            }
        }
    }
    seq.with_values(out)
}

/// Per-gridpoint z-scoring: remove the temporal mean and divide by the
/// temporal standard deviation (population form). Grid points with zero
/// variance are left at zero rather than divided.
pub fn standardize(seq: &FieldSequence) -> Result<FieldSequence> {
    let n = seq.n();
    let hw = seq.hw();
    let values = seq.values();
    let mut means = vec![0.0f64; hw];
    for t in 0..n {
        for (m, &v) in means.iter_mut().zip(&values[t * hw..(t + 1) * hw]) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut vars = vec![0.0f64; hw];
    for t in 0..n {
        let field = &values[t * hw..(t + 1) * hw];
        for ((s, &v), &m) in vars.iter_mut().zip(field).zip(&means) {
            let d = v - m;
            *s += d * d;
        }
    }
    let inv_std: Vec<f64> = vars
        .iter()
        .map(|&s| {
            let std = (s / n as f64).sqrt();
            if std > 0.0 {
                1.0 / std
            } else {
                1.0
            }
        })
        .collect();
    let mut out = values.to_vec();
    for t in 0..n {
        let field = &mut out[t * hw..(t + 1) * hw];
        for ((v, &m), &is) in field.iter_mut().zip(&means).zip(&inv_std) {
            *v = (*v - m) * is;
        }
    }
    seq.with_values(out)
}

/// Scale every value by the square root of its grid point's weight, so that
/// squared Euclidean distances between scaled fields equal weighted squared
/// distances between the originals.
pub fn apply_weights(seq: &FieldSequence, gw: &GridWeights) -> Result<FieldSequence> {
    if gw.len() != seq.hw() {
        return Err(Error::InvalidArgument(format!(
            "weight vector has {} entries, grid has {}",
            gw.len(),
            seq.hw()
        )));
    }
    let roots: Vec<f64> = gw
        .weights()
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            if w < 0.0 {
                Err(Error::NegativeWeight { index: i, value: w })
            } else {
                Ok(w.sqrt())
            }
        })
        .collect::<Result<_>>()?;
    let hw = seq.hw();
    let mut out = seq.values().to_vec();
    for t in 0..seq.n() {
        let field = &mut out[t * hw..(t + 1) * hw];
        for (v, &r) in field.iter_mut().zip(&roots) {
            *v *= r;
        }
    }
    seq.with_values(out)
}

/// Cosine-of-latitude area weights: weight at row `r` (any column) is
/// `cos(latitudes[r])` in radians, clamped below at zero.
pub fn cos_lat_weights(latitudes: &[f64], w: usize) -> Result<GridWeights> {
    for &lat in latitudes {
        if !(-90.0..=90.0).contains(&lat) || !lat.is_finite() {
            return Err(Error::LatitudeOutOfRange(lat));
        }
    }
    let mut weights = Vec::with_capacity(latitudes.len() * w);
    for &lat in latitudes {
        let cw = lat.to_radians().cos().max(0.0);
        for _ in 0..w {
            weights.push(cw);
        }
    }
    GridWeights::new(weights)
}
