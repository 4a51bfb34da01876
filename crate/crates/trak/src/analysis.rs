//! Post-hoc statistics over scoring output: local intrinsic-dimension
//! estimation and rank-agreement measures between score orderings.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rarity::{top_rare, ScoreSet};

/// Macro-averaged local intrinsic dimension estimate.
#[derive(Clone, Debug, Serialize)]
pub struct IdEstimate {
    /// Per-point mean of the finite local IDs across the requested k values
    /// (`None` when every k was degenerate for that point).
    pub per_point: Vec<Option<f64>>,
    /// Macro average over all finite local values, pooled across points and
    /// k values.
    pub mean: f64,
    /// Sample standard deviation over the same pool.
    pub std: f64,
    pub k_values: Vec<usize>,
    /// Finite local values pooled.
    pub pooled: usize,
    /// (point, k) pairs discarded as degenerate (zero or tied distances).
    pub discarded: usize,
}

/// Maximum-likelihood local intrinsic dimension from one point's ascending
/// squared neighbor distances:
///
/// with `T_j = sqrt(nn_sq[j-1])` (Euclidean, 1-based), the estimate is
/// `[ (1/(k-1)) * sum_{j=1}^{k-1} ln(T_k / T_j) ]^{-1}`.
///
/// Square roots happen here and only here; the engine's hot path stays in
/// squared-distance units. A zero distance among the first `k` neighbors
/// makes the estimate undefined and is reported as an error; all-equal
/// distances yield `+inf`, which the aggregator discards as non-finite.
pub fn local_id_mle(nn_sq_distances: &[f64], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidArgument("local id needs k >= 2".into()));
    }
    if nn_sq_distances.len() < k {
        return Err(Error::InvalidArgument(format!(
            "need {k} neighbor distances, have {}",
            nn_sq_distances.len()
        )));
    }
    let window = &nn_sq_distances[..k];
    for pair in window.windows(2) {
        if pair[0] > pair[1] {
            return Err(Error::InvalidArgument(
                "neighbor distances must be ascending".into(),
            ));
        }
    }
    if window[0] < 0.0 {
        return Err(Error::InvalidArgument("negative squared distance".into()));
    }
    if window.iter().any(|&d| d == 0.0) {
        return Err(Error::ZeroNeighborDistance);
    }
    let t_k = window[k - 1].sqrt();
    let mut acc = 0.0f64;
    for &sq in &window[..k - 1] {
        acc += (t_k / sq.sqrt()).ln();
    }
    Ok((k as f64 - 1.0) / acc)
}

/// Local ID per point per k, pooled into macro mean and standard deviation
/// over all finite values. Degenerate (zero-distance or all-tied) local
/// estimates are excluded and counted, never smoothed.
pub fn macro_id(all_rows_knn: &[Vec<f64>], k_values: &[usize]) -> Result<IdEstimate> {
    if k_values.is_empty() {
        return Err(Error::InvalidArgument("empty k list".into()));
    }
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let k_max = *ks.last().unwrap();
    for (i, row) in all_rows_knn.iter().enumerate() {
        if row.len() < k_max {
            return Err(Error::InvalidArgument(format!(
                "point {i} has {} neighbor distances, need {k_max}",
                row.len()
            )));
        }
    }

    let mut pool: Vec<f64> = Vec::new();
    let mut per_point: Vec<Option<f64>> = Vec::with_capacity(all_rows_knn.len());
    let mut discarded = 0usize;
    for row in all_rows_knn {
        let mut local: Vec<f64> = Vec::with_capacity(ks.len());
        for &k in &ks {
            match local_id_mle(row, k) {
                Ok(v) if v.is_finite() => local.push(v),
                Ok(_) | Err(Error::ZeroNeighborDistance) => discarded += 1,
                Err(e) => return Err(e),
            }
        }
        if local.is_empty() {
            per_point.push(None);
        } else {
            per_point.push(Some(local.iter().sum::<f64>() / local.len() as f64));
        }
        pool.extend(local);
    }

    let (mean, std) = if pool.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mean = pool.iter().sum::<f64>() / pool.len() as f64;
        let std = if pool.len() > 1 {
            (pool.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (pool.len() - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        (mean, std)
    };

    Ok(IdEstimate {
        per_point,
        mean,
        std,
        k_values: ks,
        pooled: pool.len(),
        discarded,
    })
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]).then(i.cmp(&j)));
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        // 1-based average rank of the tied run.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            ranks[p] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average-rank vectors,
/// in [-1, 1]. All-tied input has zero rank variance and is reported as
/// undefined rather than patched.
pub fn spearman(scores_a: &[f64], scores_b: &[f64]) -> Result<f64> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::InvalidArgument("length mismatch".into()));
    }
    if scores_a.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 values".into()));
    }
    let ra = average_ranks(scores_a);
    let rb = average_ranks(scores_b);
    let n = ra.len() as f64;
    let mean_a = ra.iter().sum::<f64>() / n;
    let mean_b = rb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (a, b) in ra.iter().zip(&rb) {
        let da = a - mean_a;
        let db = b - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::DegenerateRanks);
    }
    Ok(cov / (var_a * var_b).sqrt())
}

/// Agreement between the top-`count` sets of two score orderings.
#[derive(Clone, Debug, Serialize)]
pub struct TopSetOverlap {
    /// Indices appearing in both top sets.
    pub common: usize,
    /// Spearman correlation of the two score vectors over the common
    /// indices; `None` when undefined (empty or all-tied intersection).
    pub spearman: Option<f64>,
}

/// Intersect the top-`count` trajectory sets of two reports at the same `k`
/// and rank-correlate the scores over the intersection.
pub fn top_set_overlap(
    report_a: &ScoreSet,
    report_b: &ScoreSet,
    k: usize,
    count: usize,
) -> Result<TopSetOverlap> {
    if report_a.m != report_b.m {
        return Err(Error::InvalidArgument(format!(
            "reports cover different trajectory ranges ({} vs {})",
            report_a.m, report_b.m
        )));
    }
    let top_a = top_rare(report_a, k, count)?;
    let top_b = top_rare(report_b, k, count)?;
    let set_b: std::collections::HashSet<usize> = top_b.iter().map(|&(t, _)| t).collect();
    let mut common: Vec<usize> = top_a
        .iter()
        .map(|&(t, _)| t)
        .filter(|t| set_b.contains(t))
        .collect();
    common.sort_unstable();

    let ka = report_a.k_index(k)?;
    let kb = report_b.k_index(k)?;
    let a_scores: Vec<f64> = common.iter().map(|&t| report_a.scores[ka][t]).collect();
    let b_scores: Vec<f64> = common.iter().map(|&t| report_b.scores[kb][t]).collect();
    let rho = if common.len() < 2 {
        None
    } else {
        match spearman(&a_scores, &b_scores) {
            Ok(r) => Some(r),
            Err(Error::DegenerateRanks) => None,
            Err(e) => return Err(e),
        }
    };
    Ok(TopSetOverlap {
        common: common.len(),
        spearman: rho,
    })
}

/// Brute-force ascending squared k-nearest-neighbor distances for a generic
/// point set (self excluded). Quadratic; meant for analysis-scale inputs
/// such as the synthetic-manifold checks.
pub fn knn_sq_distances(points: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let n = points.len();
    assert!(k < n, "need k < number of points");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut dists: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum()
            })
            .collect();
        dists.sort_by(f64::total_cmp);
        dists.truncate(k);
        out.push(dists);
    }
    out
}
