//! Phase 2: trajectory-to-trajectory squared distances, one row at a time.
//!
//! Row `t` holds `D(t, j)` for all `j`, where `D(t, j)` is the sum of the
//! `d` aligned entries `S[t + o][j + o]`. The first row is built by direct
//! summation; every subsequent row comes from the previous one with a single
//! subtract-add per element:
//!
//! ```text
//! D(t, j) = D(t-1, j-1) - S[t-1][j-1] + S[t+d-1][j+d-1]
//! ```
//!
//! which makes per-row cost a function of the row length only, independent
//! of `d`. The boundary column `j = 0` has no predecessor and is filled by
//! symmetry from the retained first row (`D(t, 0) = D(0, t)`, a bit-exact
//! copy). Rows are streamed to a consumer; only the first, previous, and
//! current rows are ever held.
//!
//! Accumulation is 64-bit, entries are clamped at zero, and an optional
//! refresh interval rebuilds every R-th row by direct summation for callers
//! that want drift control on very long sequences.

use crate::config::RunConfig;
use crate::error::Result;
use crate::spatial::{RowRef, SpatialDistanceMatrix};

/// One row of trajectory distances: `values[j] = D(t, j)` for
/// `j in 0..n-d+1`.
#[derive(Clone, Debug)]
pub struct TrajectoryDistanceRow {
    pub t: usize,
    pub values: Vec<f64>,
}

/// Work counters for one streaming pass.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct EngineStats {
    /// Rows handed to the consumer (always `n - d + 1`).
    pub rows_emitted: u64,
    /// Rows produced by the recurrence (excludes the first row and any
    /// refreshed rows).
    pub recurrence_rows: u64,
    /// Element updates performed by the recurrence; exactly
    /// `recurrence_rows * (m - 1)` — one subtract-add per interior element,
    /// with no dependence on `d`.
    pub element_updates: u64,
    /// Boundary entries filled by copy from the first row.
    pub boundary_copies: u64,
    /// Rows rebuilt exactly by direct summation (refresh interval).
    pub refreshed_rows: u64,
}

fn add_row_slice(out: &mut [f64], row: RowRef<'_>, offset: usize) {
    let len = out.len();
    match row {
        RowRef::F64(r) => {
            for (o, &v) in out.iter_mut().zip(&r[offset..offset + len]) {
                *o += v;
            }
        }
        RowRef::F32(r) => {
            for (o, &v) in out.iter_mut().zip(&r[offset..offset + len]) {
                *o += v as f64;
            }
        }
    }
}

/// `out[j] = sum over o of S[t + o][j + o]`, by direct summation in f64.
fn direct_row(s: &SpatialDistanceMatrix, d: usize, t: usize, out: &mut [f64]) {
    out.fill(0.0);
    for o in 0..d {
        add_row_slice(out, s.row(t + o), o);
    }
}

/// Build the first trajectory row by direct summation. Cost `O(d * m)`.
pub fn init_first_row(s: &SpatialDistanceMatrix, d: usize) -> TrajectoryDistanceRow {
    assert!(d >= 1 && d <= s.n(), "duration out of range");
    let m = s.n() - d + 1;
    let mut values = vec![0.0f64; m];
    direct_row(s, d, 0, &mut values);
    TrajectoryDistanceRow { t: 0, values }
}

#[inline]
fn update_interior(prev: &[f64], s_prev: &[impl ElementLike], s_curr: &[impl ElementLike], out: &mut [f64]) {
    for (((o, &p), a), b) in out.iter_mut().zip(prev).zip(s_prev).zip(s_curr) {
        *o = (p - a.as_f64() + b.as_f64()).max(0.0);
    }
}

trait ElementLike: Copy {
    fn as_f64(self) -> f64;
}
impl ElementLike for f32 {
    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
}
impl ElementLike for f64 {
    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
}

fn recurrence_into(
    prev: &[f64],
    first: &[f64],
    s: &SpatialDistanceMatrix,
    d: usize,
    t: usize,
    out: &mut [f64],
) {
    let m = prev.len();
    debug_assert!(t >= 1 && t < m);
    // Boundary column: D(t, 0) = D(0, t) by symmetry, copied bit-exactly.
    out[0] = first[t];
    let departing = s.row(t - 1);
    let arriving = s.row(t + d - 1);
    let interior = &mut out[1..];
    let prev_src = &prev[..m - 1];
    match (departing, arriving) {
        (RowRef::F64(a), RowRef::F64(b)) => {
            update_interior(prev_src, &a[..m - 1], &b[d..d + m - 1], interior)
        }
        (RowRef::F32(a), RowRef::F32(b)) => {
            update_interior(prev_src, &a[..m - 1], &b[d..d + m - 1], interior)
        }
        _ => unreachable!("rows of one matrix share a dtype"),
    }
}

/// One recurrence step: row `t` from row `t - 1`, with the retained first
/// row supplying the boundary column.
pub fn recurrence_step(
    prev: &TrajectoryDistanceRow,
    first: &TrajectoryDistanceRow,
    s: &SpatialDistanceMatrix,
    d: usize,
) -> TrajectoryDistanceRow {
    assert_eq!(first.t, 0, "first row must be row 0");
    let t = prev.t + 1;
    let m = prev.values.len();
    assert!(t < m, "row {t} out of range (m = {m})");
    let mut values = vec![0.0f64; m];
    recurrence_into(&prev.values, &first.values, s, d, t, &mut values);
    TrajectoryDistanceRow { t, values }
}

/// Stream all `m = n - d + 1` rows in ascending `t`, holding only the first,
/// previous, and current rows. The consumer is called once per row, in
/// order, from this thread; its errors propagate.
pub fn stream_rows<F>(
    s: &SpatialDistanceMatrix,
    cfg: &RunConfig,
    mut consumer: F,
) -> Result<EngineStats>
where
    F: FnMut(usize, &[f64]) -> Result<()>,
{
    cfg.validate(s.n())?;
    let d = cfg.d;
    let m = s.n() - d + 1;
    let mut stats = EngineStats::default();

    let mut first = vec![0.0f64; m];
    direct_row(s, d, 0, &mut first);
    stats.rows_emitted += 1;
    consumer(0, &first)?;

    let mut prev = first.clone();
    let mut curr = vec![0.0f64; m];
    for t in 1..m {
        let refresh = cfg.refresh.map(|r| t % r == 0).unwrap_or(false);
        if refresh {
            direct_row(s, d, t, &mut curr);
            stats.refreshed_rows += 1;
        } else {
            recurrence_into(&prev, &first, s, d, t, &mut curr);
            stats.recurrence_rows += 1;
            stats.element_updates += (m - 1) as u64;
            stats.boundary_copies += 1;
        }
        stats.rows_emitted += 1;
        consumer(t, &curr)?;
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(stats)
}
