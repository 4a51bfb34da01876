//! Independent brute-force reference implementations.
//!
//! Everything here recomputes from raw field values with plain loops:
//! no norm decomposition, no distance matrix reuse, no recurrence, and no
//! code shared with [`crate::spatial`] or [`crate::trajectory`]. Deliberately
//! slow and simple enough to audit by eye; intended for `n` up to roughly a
//! thousand. The fast path is tested against this module, never the other
//! way around.

use crate::config::RunConfig;
use crate::error::Result;
use crate::field::FieldSequence;
use crate::rarity::ScoreSet;

/// Squared Euclidean distance between fields `i` and `j`, summed element by
/// element in 64-bit precision with a fixed loop order.
pub fn naive_field_distance(seq: &FieldSequence, i: usize, j: usize) -> f64 {
    let a = seq.field(i);
    let b = seq.field(j);
    let mut acc = 0.0f64;
    for p in 0..seq.h() {
        for q in 0..seq.w() {
            let idx = p * seq.w() + q;
            let diff = a[idx] - b[idx];
            acc += diff * diff;
        }
    }
    acc
}

/// Squared distance between the length-`d` trajectories starting at `i` and
/// `j`: the sum of the `d` aligned field distances.
pub fn naive_trajectory_distance(seq: &FieldSequence, i: usize, j: usize, d: usize) -> f64 {
    assert!(i + d <= seq.n() && j + d <= seq.n(), "trajectory out of range");
    let mut acc = 0.0f64;
    for offset in 0..d {
        acc += naive_field_distance(seq, i + offset, j + offset);
    }
    acc
}

/// Exhaustive rarity scoring: all pairwise trajectory distances, filtered by
/// the exclusion zone, fully sorted, ties broken by smaller index. Scores for
/// every requested `k` are prefix means of the sorted candidate list.
pub fn naive_rarity(seq: &FieldSequence, cfg: &RunConfig) -> Result<ScoreSet> {
    cfg.validate(seq.n())?;
    let d = cfg.d;
    let e = cfg.exclusion();
    let k_values = cfg.k_sorted();
    let k_max = *k_values.last().unwrap();
    let m = cfg.trajectory_count(seq.n());

    let mut neighbors = Vec::with_capacity(m);
    let mut scores = vec![Vec::with_capacity(m); k_values.len()];
    for t in 0..m {
        let mut candidates: Vec<(usize, f64)> = (0..m)
            .filter(|&j| j.abs_diff(t) > e)
            .map(|j| (j, naive_trajectory_distance(seq, t, j, d)))
            .collect();
        candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        candidates.truncate(k_max);

        let mut running = 0.0f64;
        let mut prefix = Vec::with_capacity(k_max);
        for &(_, dist) in &candidates {
            running += dist;
            prefix.push(running);
        }
        for (ki, &k) in k_values.iter().enumerate() {
            scores[ki].push(prefix[k - 1] / k as f64);
        }
        neighbors.push(candidates);
    }

    Ok(ScoreSet {
        m,
        k_values,
        neighbors,
        scores,
    })
}
