//! Deterministic synthetic sequence generation.
//!
//! All randomness comes from a ChaCha8 stream seeded explicitly, with
//! standard normal variates produced by the Box-Muller transform of that
//! stream. The generator is a pure function of its arguments: the same
//! `(n, h, w, kind, seed)` always yields the same sequence.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Dtype, FieldSequence};

/// Kind of synthetic sequence.
#[derive(Clone, Debug, PartialEq)]
pub enum SynthKind {
    /// i.i.d. standard Gaussian noise at every grid point and step.
    GaussianNoise,
    /// A smooth superposition of traveling plane waves; no noise.
    SmoothAdvecting,
    /// Gaussian noise with an additive smooth bump of the given peak
    /// amplitude injected into fields `t_star..t_star + duration`.
    PlantedAnomaly {
        t_star: usize,
        amplitude: f64,
        duration: usize,
    },
}

struct BoxMuller {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl BoxMuller {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps ln finite.
        let u1: f64 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// Generate a synthetic sequence (always stored as f64; use
/// [`FieldSequence::cast`] for an f32-tagged copy).
pub fn synth(n: usize, h: usize, w: usize, kind: &SynthKind, seed: u64) -> Result<FieldSequence> {
    if n == 0 || h == 0 || w == 0 {
        return Err(Error::InvalidDims {
            n: n as u64,
            h: h as u64,
            w: w as u64,
        });
    }
    let hw = h * w;
    let values = match kind {
        SynthKind::GaussianNoise => gaussian_values(n * hw, seed),
        SynthKind::SmoothAdvecting => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // A handful of traveling waves with random wavevectors, speeds
            // and phases.
            let waves: Vec<(f64, f64, f64, f64, f64)> = (0..4)
                .map(|_| {
                    let amp = 0.5 + rng.random::<f64>();
                    let kx = rng.random_range(1..=3) as f64;
                    let ky = rng.random_range(1..=3) as f64;
                    let omega = 0.05 + 0.25 * rng.random::<f64>();
                    let phase = TAU * rng.random::<f64>();
                    (amp, kx, ky, omega, phase)
                })
                .collect();
            let mut values = Vec::with_capacity(n * hw);
            for t in 0..n {
                for r in 0..h {
                    for c in 0..w {
                        let x = c as f64 / w as f64;
                        let y = r as f64 / h as f64;
                        let mut v = 0.0;
                        for &(amp, kx, ky, omega, phase) in &waves {
                            v += amp
                                * (TAU * (kx * x + ky * y) - omega * t as f64 + phase).sin();
                        }
                        values.push(v);
                    }
                }
            }
            values
        }
        SynthKind::PlantedAnomaly {
            t_star,
            amplitude,
            duration,
        } => {
            if *duration == 0 {
                return Err(Error::InvalidArgument(
                    "planted anomaly duration must be >= 1".into(),
                ));
            }
            if t_star + duration > n {
                return Err(Error::InvalidArgument(format!(
                    "planted anomaly window {}..{} out of range for n={n}",
                    t_star,
                    t_star + duration
                )));
            }
            let mut values = gaussian_values(n * hw, seed);
            let bump = bump_pattern(h, w, *amplitude);
            for t in *t_star..t_star + duration {
                let field = &mut values[t * hw..(t + 1) * hw];
                for (v, &b) in field.iter_mut().zip(&bump) {
                    *v += b;
                }
            }
            values
        }
    };
    FieldSequence::new(n, h, w, values, Dtype::F64)
}

fn gaussian_values(count: usize, seed: u64) -> Vec<f64> {
    let mut gen = BoxMuller::new(seed);
    (0..count).map(|_| gen.next()).collect()
}

/// Smooth spatial bump: a Gaussian blob centered on the grid with the given
/// peak value.
fn bump_pattern(h: usize, w: usize, amplitude: f64) -> Vec<f64> {
    let cr = (h as f64 - 1.0) / 2.0;
    let cc = (w as f64 - 1.0) / 2.0;
    let sigma = (h.min(w) as f64 / 4.0).max(1.0);
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut bump = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let dr = r as f64 - cr;
            let dc = c as f64 - cc;
            bump.push(amplitude * (-(dr * dr + dc * dc) * inv).exp());
        }
    }
    bump
}
