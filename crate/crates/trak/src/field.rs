//! The spatio-temporal data model: a dense sequence of `h x w` fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element precision of a stored sequence or distance matrix.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u32 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            other => Err(Error::UnsupportedDtype(other)),
        }
    }

    pub fn size_bytes(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dtype::F32 => "f32",
            Dtype::F64 => "f64",
        }
    }
}

impl std::fmt::Display for Dtype {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Scalar element of a distance-matrix store.
pub trait Element: Copy + Send + Sync + 'static {
    const DTYPE: Dtype;
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Element for f32 {
    const DTYPE: Dtype = Dtype::F32;
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Element for f64 {
    const DTYPE: Dtype = Dtype::F64;
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }
}

/// Optional grid descriptor. Purely informational: the distance engine never
/// reads it.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GridMeta {
    pub latitudes: Option<Vec<f64>>,
    pub longitudes: Option<Vec<f64>>,
    pub start_time: Option<String>,
    pub step: Option<String>,
}

/// A validated sequence of `n` dense spatial fields, each `h x w`, stored
/// row-major per field with fields concatenated in time order.
///
/// Values are held as `f64` regardless of the storage dtype; sequences tagged
/// [`Dtype::F32`] are quantized through `f32` at construction, so persisting
/// them and loading them back is bit-exact. No element is NaN or infinite:
/// construction rejects non-finite input instead of letting it propagate into
/// the distance engine.
#[derive(Clone, Debug)]
pub struct FieldSequence {
    n: usize,
    h: usize,
    w: usize,
    values: Vec<f64>,
    dtype: Dtype,
    pub meta: Option<GridMeta>,
}

impl FieldSequence {
    pub fn new(n: usize, h: usize, w: usize, mut values: Vec<f64>, dtype: Dtype) -> Result<Self> {
        if n == 0 || h == 0 || w == 0 {
            return Err(Error::InvalidDims {
                n: n as u64,
                h: h as u64,
                w: w as u64,
            });
        }
        let expected = n
            .checked_mul(h)
            .and_then(|x| x.checked_mul(w))
            .ok_or(Error::InvalidDims {
                n: n as u64,
                h: h as u64,
                w: w as u64,
            })?;
        if values.len() != expected {
            return Err(Error::PayloadMismatch {
                expected: expected as u64,
                actual: values.len() as u64,
            });
        }
        if dtype == Dtype::F32 {
            for v in &mut values {
                *v = *v as f32 as f64;
            }
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i, value: v });
            }
        }
        Ok(Self {
            n,
            h,
            w,
            values,
            dtype,
            meta: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    /// Grid points per field.
    pub fn hw(&self) -> usize {
        self.h * self.w
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The `t`-th field as a contiguous row-major slice of `h * w` values.
    pub fn field(&self, t: usize) -> &[f64] {
        let hw = self.hw();
        &self.values[t * hw..(t + 1) * hw]
    }

    /// Same dimensions, new values (used by the preprocessing primitives).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut seq = Self::new(self.n, self.h, self.w, values, self.dtype)?;
        seq.meta = self.meta.clone();
        Ok(seq)
    }

    /// Re-tag (and if narrowing, re-quantize) the storage dtype.
    pub fn cast(&self, dtype: Dtype) -> Result<Self> {
        let mut seq = Self::new(self.n, self.h, self.w, self.values.clone(), dtype)?;
        seq.meta = self.meta.clone();
        Ok(seq)
    }

    /// In-memory payload size in bytes (values are held as f64).
    pub fn byte_len(&self) -> usize {
        self.values.len() * std::mem::size_of::<f64>()
    }
}

impl PartialEq for FieldSequence {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.h == other.h
            && self.w == other.w
            && self.dtype == other.dtype
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// One nonnegative weight per grid point, applied by pre-scaling values with
/// the square root of the weight so plain squared distances downstream become
/// weighted squared distances.
#[derive(Clone, Debug, PartialEq)]
pub struct GridWeights {
    weights: Vec<f64>,
}

impl GridWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { index: i, value: w });
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { index: i, value: w });
            }
        }
        Ok(Self { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}
