//! Phase 1: the symmetric `n x n` matrix `S` of pairwise squared Euclidean
//! distances between spatial fields.
//!
//! Each entry decomposes as `||x_u - x_v||^2 = N_u + N_v - 2 <x_u, x_v>`
//! over the vectorized fields, so a `b x b` tile of inner products is one
//! dense matrix product over contiguous panels. Only upper-triangle tile
//! pairs are computed; every entry is mirrored to the lower triangle by copy
//! and the diagonal is written as literal zeros. Entries are clamped below at
//! zero because the decomposition can produce tiny negatives through
//! cancellation.
//!
//! Accumulation is 64-bit regardless of storage precision; `S` is stored in
//! the input dtype by default (f32 storage halves the dominant buffer) with
//! a config switch to f64.

use std::io::{Read, Write};
use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::{Dtype, Element, FieldSequence};

/// Precomputed squared Frobenius norms, `norms[i] = ||X_i||^2`.
#[derive(Clone, Debug)]
pub struct NormVector {
    pub norms: Vec<f64>,
}

/// Counters from one matrix assembly.
#[derive(Copy, Clone, Debug, Default, serde::Serialize)]
pub struct SpatialStats {
    /// Tiles actually computed (mirrored writes are not counted). For block
    /// count `nb` this is `nb * (nb + 1) / 2`.
    pub tiles_computed: u64,
    /// Number of tile blocks per side.
    pub blocks_per_side: usize,
}

enum Store {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

/// One row of the matrix, borrowed in storage precision.
#[derive(Copy, Clone)]
pub enum RowRef<'a> {
    F32(&'a [f32]),
    F64(&'a [f64]),
}

/// Dense symmetric matrix of squared field distances.
///
/// Invariants, by construction: `get(i, j) == get(j, i)` bit-exactly,
/// `get(i, i) == 0` bit-exactly, and every entry is nonnegative.
pub struct SpatialDistanceMatrix {
    n: usize,
    store: Store,
}

impl SpatialDistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dtype(&self) -> Dtype {
        match self.store {
            Store::F32(_) => Dtype::F32,
            Store::F64(_) => Dtype::F64,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.store {
            Store::F32(v) => v[i * self.n + j] as f64,
            Store::F64(v) => v[i * self.n + j],
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> RowRef<'_> {
        match &self.store {
            Store::F32(v) => RowRef::F32(&v[i * self.n..(i + 1) * self.n]),
            Store::F64(v) => RowRef::F64(&v[i * self.n..(i + 1) * self.n]),
        }
    }

    /// Payload size in bytes.
    pub fn byte_len(&self) -> usize {
        self.n * self.n * self.dtype().size_bytes()
    }

    /// Build from a dense row-major f64 buffer (tests, format loading).
    pub fn from_raw_f64(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::PayloadMismatch {
                expected: (n * n) as u64,
                actual: data.len() as u64,
            });
        }
        Ok(Self {
            n,
            store: Store::F64(data),
        })
    }

    /// Check entries are finite and nonnegative (used after loading from
    /// disk; freshly computed matrices satisfy this by construction).
    pub fn validate(self) -> Result<Self> {
        let bad = match &self.store {
            Store::F32(v) => v
                .iter()
                .position(|&x| !x.is_finite() || x < 0.0)
                .map(|i| (i, v[i] as f64)),
            Store::F64(v) => v
                .iter()
                .position(|&x| !x.is_finite() || x < 0.0)
                .map(|i| (i, v[i])),
        };
        match bad {
            Some((index, value)) => Err(Error::NonFinite { index, value }),
            None => Ok(self),
        }
    }

    pub(crate) fn write_payload(&self, w: &mut impl Write) -> std::io::Result<()> {
        match &self.store {
            Store::F32(v) => {
                for &x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            Store::F64(v) => {
                for &x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn read_payload(
        r: &mut impl Read,
        n: usize,
        dtype: Dtype,
    ) -> std::io::Result<Self> {
        let count = n * n;
        let mut bytes = vec![0u8; count * dtype.size_bytes()];
        r.read_exact(&mut bytes)?;
        let store = match dtype {
            Dtype::F32 => Store::F32(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            Dtype::F64 => Store::F64(
                bytes
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
        };
        Ok(Self { n, store })
    }
}

/// Squared Frobenius norm of every field, accumulated in f64.
pub fn squared_norms(seq: &FieldSequence) -> NormVector {
    let hw = seq.hw();
    let norms = seq
        .values()
        .chunks_exact(hw)
        .map(|field| field.iter().map(|&v| v * v).sum())
        .collect();
    NormVector { norms }
}

/// One dense tile of `S` over the given index ranges, in f64.
///
/// The tile is `G = B_rows^T B_cols` (one matrix product over the vectorized
/// fields) combined with the precomputed norms and clamped at zero; entries
/// on the global diagonal are written as exact zeros. Row-major,
/// `rows.len() x cols.len()`.
pub fn distance_tile(
    seq: &FieldSequence,
    norms: &NormVector,
    rows: Range<usize>,
    cols: Range<usize>,
) -> Vec<f64> {
    assert!(rows.end <= seq.n() && cols.end <= seq.n(), "tile out of range");
    let mut gram = vec![0.0f64; rows.len() * cols.len()];
    gram_tile(seq, rows.clone(), cols.clone(), &mut gram);
    let mut tile = gram;
    let cl = cols.len();
    for (ui, u) in rows.clone().enumerate() {
        for (vi, v) in cols.clone().enumerate() {
            let idx = ui * cl + vi;
            tile[idx] = if u == v {
                0.0
            } else {
                (norms.norms[u] + norms.norms[v] - 2.0 * tile[idx]).max(0.0)
            };
        }
    }
    tile
}

/// `out[ui * cols.len() + vi] = <x_{rows[ui]}, x_{cols[vi]}>` via one dgemm
/// call on the contiguous field panels.
fn gram_tile(seq: &FieldSequence, rows: Range<usize>, cols: Range<usize>, out: &mut [f64]) {
    let hw = seq.hw();
    let values = seq.values();
    let (rl, cl) = (rows.len(), cols.len());
    debug_assert_eq!(out.len(), rl * cl);
    unsafe {
        // A: rl x hw panel of row vectors; B: hw x cl transposed panel.
        matrixmultiply::dgemm(
            rl,
            hw,
            cl,
            1.0,
            values.as_ptr().add(rows.start * hw),
            hw as isize,
            1,
            values.as_ptr().add(cols.start * hw),
            1,
            hw as isize,
            0.0,
            out.as_mut_ptr(),
            cl as isize,
            1,
        );
    }
}

struct SendPtr<T>(*mut T);
unsafe impl<T> Send for SendPtr<T> {}
unsafe impl<T> Sync for SendPtr<T> {}

/// Assemble the full matrix: upper-triangle tile pairs only, mirrored by
/// copy, diagonal written as exact zeros. The result is deterministic and
/// independent of thread count because every entry is written exactly once,
/// from exactly one tile.
pub fn spatial_distance_matrix(
    seq: &FieldSequence,
    cfg: &RunConfig,
) -> Result<(SpatialDistanceMatrix, SpatialStats)> {
    let norms = squared_norms(seq);
    spatial_distance_matrix_with_norms(seq, &norms, cfg)
}

/// Same as [`spatial_distance_matrix`] but with norms precomputed (lets the
/// pipeline time the two phases separately).
pub fn spatial_distance_matrix_with_norms(
    seq: &FieldSequence,
    norms: &NormVector,
    cfg: &RunConfig,
) -> Result<(SpatialDistanceMatrix, SpatialStats)> {
    let n = seq.n();
    let dtype = cfg.precision.resolve(seq.dtype());
    let required = (n as u64) * (n as u64) * dtype.size_bytes() as u64;
    if let Some(budget) = cfg.memory_budget {
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
    }
    let b = cfg.b.min(n);
    match dtype {
        Dtype::F32 => {
            let (data, stats) = assemble::<f32>(seq, norms, b)?;
            Ok((
                SpatialDistanceMatrix {
                    n,
                    store: Store::F32(data),
                },
                stats,
            ))
        }
        Dtype::F64 => {
            let (data, stats) = assemble::<f64>(seq, norms, b)?;
            Ok((
                SpatialDistanceMatrix {
                    n,
                    store: Store::F64(data),
                },
                stats,
            ))
        }
    }
}

fn assemble<T: Element>(
    seq: &FieldSequence,
    norms: &NormVector,
    b: usize,
) -> Result<(Vec<T>, SpatialStats)> {
    let n = seq.n();
    let count = n * n;
    let mut data: Vec<T> = Vec::new();
    data.try_reserve_exact(count).map_err(|_| Error::Allocation {
        bytes: (count * std::mem::size_of::<T>()) as u64,
    })?;
    data.resize(count, T::from_f64(0.0));

    let nb = n.div_ceil(b);
    let pairs: Vec<(usize, usize)> = (0..nb)
        .flat_map(|bi| (bi..nb).map(move |bj| (bi, bj)))
        .collect();
    let tiles = AtomicU64::new(0);
    let ptr = SendPtr(data.as_mut_ptr());
    let ptr = &ptr;
    let nv = &norms.norms;

    pairs.par_iter().for_each_init(Vec::<f64>::new, |scratch, &(bi, bj)| {
        let rows = bi * b..((bi + 1) * b).min(n);
        let cols = bj * b..((bj + 1) * b).min(n);
        let (rl, cl) = (rows.len(), cols.len());
        scratch.clear();
        scratch.resize(rl * cl, 0.0);
        gram_tile(seq, rows.clone(), cols.clone(), scratch);
        tiles.fetch_add(1, Ordering::Relaxed);

        let base = ptr.0;
        for (ui, u) in rows.clone().enumerate() {
            let v_start = if bi == bj { ui } else { 0 };
            for vi in v_start..cl {
                let v = cols.start + vi;
                let s = if u == v {
                    0.0
                } else {
                    (nv[u] + nv[v] - 2.0 * scratch[ui * cl + vi]).max(0.0)
                };
                let s = T::from_f64(s);
                // Tile pairs own disjoint regions of S (their block plus its
                // mirror), so these raw writes never race.
                unsafe {
                    *base.add(u * n + v) = s;
                    if u != v {
                        *base.add(v * n + u) = s;
                    }
                }
            }
        }
    });

    Ok((
        data,
        SpatialStats {
            tiles_computed: tiles.into_inner(),
            blocks_per_side: nb,
        },
    ))
}


impl std::fmt::Debug for SpatialDistanceMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpatialDistanceMatrix")
            .field("n", &self.n)
            .field("dtype", &self.dtype())
            .finish()
    }
}
