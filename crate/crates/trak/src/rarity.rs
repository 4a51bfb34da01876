//! Phase 3: exact k-nearest-neighbor selection under the exclusion zone and
//! rarity scores.
//!
//! For each streamed row, the `k_max` admissible entries with the smallest
//! distances are kept by a bounded max-heap in one pass. Ordering is total
//! and deterministic: smaller distance first, ties broken by smaller index.
//! Scores for every requested `k` come from the same selection as prefix
//! means, so evaluating several `k` values costs one pass at the largest.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::{Dtype, FieldSequence};
use crate::spatial::{
    spatial_distance_matrix_with_norms, squared_norms, SpatialDistanceMatrix, SpatialStats,
};
use crate::trajectory::{stream_rows, EngineStats};

/// Candidate ordered by (distance, index); the heap keeps the k smallest.
#[derive(Copy, Clone, PartialEq)]
struct Candidate {
    dist: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Select the `k_max` nearest admissible entries of one row: a single pass
/// with a bounded max-heap, admissibility `|t - j| > e`, ties to the smaller
/// index. Returns pairs sorted ascending by (distance, index).
pub fn select_k(
    row: &[f64],
    t: usize,
    k_max: usize,
    e: usize,
) -> Result<Vec<(usize, f64)>> {
    let m = row.len();
    let lo = t.saturating_sub(e);
    let hi = (t + e).min(m.saturating_sub(1));
    let excluded = if m == 0 { 0 } else { hi - lo + 1 };
    let admissible = m - excluded;
    if admissible < k_max {
        return Err(Error::Infeasible {
            m,
            e,
            k: k_max,
            admissible,
        });
    }

    let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k_max + 1);
    // Cached copy of the heap root (the worst kept candidate): the scan
    // rejects most elements with a single float compare and only touches
    // the heap on a genuine improvement, keeping per-row cost essentially
    // independent of k.
    let mut worst = Candidate {
        dist: f64::INFINITY,
        index: usize::MAX,
    };
    let mut scan = |segment: &[f64], start: usize| {
        for (off, &dist) in segment.iter().enumerate() {
            if heap.len() < k_max {
                heap.push(Candidate {
                    dist,
                    index: start + off,
                });
                if heap.len() == k_max {
                    worst = *heap.peek().unwrap();
                }
            } else if dist < worst.dist || (dist == worst.dist && start + off < worst.index) {
                {
                    let mut root = heap.peek_mut().unwrap();
                    *root = Candidate {
                        dist,
                        index: start + off,
                    };
                }
                worst = *heap.peek().unwrap();
            }
        }
    };
    scan(&row[..lo], 0);
    scan(&row[hi + 1..], hi + 1);

    Ok(heap
        .into_sorted_vec()
        .into_iter()
        .map(|c| (c.index, c.dist))
        .collect())
}

/// Neighbor lists and scores from one pass.
///
/// `neighbors[t]` holds the `k_max` nearest admissible trajectories of `t`,
/// ascending by (distance, index); `scores[ki][t]` is the mean of the first
/// `k_values[ki]` of those distances. The length-`k` prefix of any list is
/// exactly the selection a pass at that smaller `k` would have produced.
#[derive(Clone, Debug)]
pub struct ScoreSet {
    pub m: usize,
    pub k_values: Vec<usize>,
    pub neighbors: Vec<Vec<(usize, f64)>>,
    pub scores: Vec<Vec<f64>>,
}

/// One trajectory's result at one `k`: a borrowed view into a [`ScoreSet`].
#[derive(Copy, Clone, Debug)]
pub struct RarityResult<'a> {
    pub t: usize,
    pub k: usize,
    pub score: f64,
    pub neighbors: &'a [(usize, f64)],
}

impl ScoreSet {
    pub fn k_index(&self, k: usize) -> Result<usize> {
        self.k_values
            .iter()
            .position(|&x| x == k)
            .ok_or(Error::KNotInReport(k))
    }

    pub fn result(&self, t: usize, k: usize) -> Result<RarityResult<'_>> {
        let ki = self.k_index(k)?;
        Ok(RarityResult {
            t,
            k,
            score: self.scores[ki][t],
            neighbors: &self.neighbors[t][..k],
        })
    }

    pub fn k_max(&self) -> usize {
        *self.k_values.last().unwrap()
    }
}

/// Stream rows off a precomputed distance matrix and score every trajectory
/// at every requested `k`.
pub fn rarity_scores(
    s: &SpatialDistanceMatrix,
    cfg: &RunConfig,
) -> Result<(ScoreSet, EngineStats)> {
    cfg.validate(s.n())?;
    let k_values = cfg.k_sorted();
    let k_max = *k_values.last().unwrap();
    let e = cfg.exclusion();
    let m = cfg.trajectory_count(s.n());

    let mut neighbors: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
    let mut scores = vec![Vec::with_capacity(m); k_values.len()];
    let stats = stream_rows(s, cfg, |t, row| {
        let selected = select_k(row, t, k_max, e)?;
        let mut running = 0.0f64;
        let mut prefix = Vec::with_capacity(k_max);
        for &(_, dist) in &selected {
            running += dist;
            prefix.push(running);
        }
        for (ki, &k) in k_values.iter().enumerate() {
            scores[ki].push(prefix[k - 1] / k as f64);
        }
        neighbors.push(selected);
        Ok(())
    })?;

    Ok((
        ScoreSet {
            m,
            k_values,
            neighbors,
            scores,
        },
        stats,
    ))
}

/// The `count` highest scores at `k`, descending, ties broken by smaller
/// `t`. `count` is clamped to the number of trajectories.
pub fn top_rare(set: &ScoreSet, k: usize, count: usize) -> Result<Vec<(usize, f64)>> {
    let ki = set.k_index(k)?;
    let scores = &set.scores[ki];
    let mut order: Vec<usize> = (0..set.m).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(count.min(set.m));
    Ok(order.into_iter().map(|t| (t, scores[t])).collect())
}

/// Wall-clock seconds per pipeline phase.
#[derive(Copy, Clone, Debug, Default, Serialize)]
pub struct PhaseTimings {
    pub norms_s: f64,
    pub spatial_s: f64,
    pub stream_knn_s: f64,
}

impl PhaseTimings {
    pub fn total_s(&self) -> f64 {
        self.norms_s + self.spatial_s + self.stream_knn_s
    }
}

/// Everything one full pass produces.
#[derive(Debug)]
pub struct ScoredRun {
    pub set: ScoreSet,
    pub engine: EngineStats,
    pub spatial: SpatialStats,
    pub timings: PhaseTimings,
    pub s_bytes: u64,
    pub s_dtype: Dtype,
    pub threads: usize,
}

/// Full pipeline from a sequence: norms, distance matrix, streamed scoring,
/// with per-phase timings. Runs inside a dedicated thread pool when
/// `cfg.threads` caps parallelism.
pub fn score_sequence(seq: &FieldSequence, cfg: &RunConfig) -> Result<ScoredRun> {
    cfg.validate(seq.n())?;
    match cfg.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| score_sequence_inner(seq, cfg, pool.current_num_threads()))
        }
        None => score_sequence_inner(seq, cfg, rayon::current_num_threads()),
    }
}

fn score_sequence_inner(seq: &FieldSequence, cfg: &RunConfig, threads: usize) -> Result<ScoredRun> {
    let t0 = Instant::now();
    let norms = squared_norms(seq);
    let norms_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let (s, spatial) = spatial_distance_matrix_with_norms(seq, &norms, cfg)?;
    let spatial_s = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let (set, engine) = rarity_scores(&s, cfg)?;
    let stream_knn_s = t2.elapsed().as_secs_f64();

    Ok(ScoredRun {
        set,
        engine,
        spatial,
        timings: PhaseTimings {
            norms_s,
            spatial_s,
            stream_knn_s,
        },
        s_bytes: s.byte_len() as u64,
        s_dtype: s.dtype(),
        threads,
    })
}

/// Scoring from a persisted matrix: skips the norms and matrix phases.
pub fn score_matrix(s: &SpatialDistanceMatrix, cfg: &RunConfig) -> Result<ScoredRun> {
    let t0 = Instant::now();
    let (set, engine) = rarity_scores(s, cfg)?;
    let stream_knn_s = t0.elapsed().as_secs_f64();
    Ok(ScoredRun {
        set,
        engine,
        spatial: SpatialStats::default(),
        timings: PhaseTimings {
            norms_s: 0.0,
            spatial_s: 0.0,
            stream_knn_s,
        },
        s_bytes: s.byte_len() as u64,
        s_dtype: s.dtype(),
        threads: rayon::current_num_threads(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::naive_rarity;
    use crate::spatial::spatial_distance_matrix;
    use crate::synth::{synth, SynthKind};
    use proptest::prelude::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * f64::max(1.0, f64::max(a.abs(), b.abs()))
    }

    /// Quadratic reference selector: filter, full sort, truncate.
    fn select_reference(row: &[f64], t: usize, k: usize, e: usize) -> Vec<(usize, f64)> {
        let mut cands: Vec<(usize, f64)> = row
            .iter()
            .copied()
            .enumerate()
            .filter(|&(j, _)| j.abs_diff(t) > e)
            .collect();
        cands.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        cands.truncate(k);
        cands
    }

    #[test]
    fn tie_break_prefers_smaller_index() {
        // All distances zero, e=0, t=4 (0-based), m=10: self excluded, the
        // three smallest indices win all ties.
        let row = vec![0.0; 10];
        let sel = select_k(&row, 4, 3, 0).unwrap();
        assert_eq!(sel, vec![(0, 0.0), (1, 0.0), (2, 0.0)]);
    }

    #[test]
    fn exclusion_zone_and_tie_break() {
        // Row [9,4,0,4,9] at t=2 with e=1: indices 1..=3 excluded, both
        // remaining candidates are at distance 9, smaller index wins.
        let row = vec![9.0, 4.0, 0.0, 4.0, 9.0];
        let sel = select_k(&row, 2, 1, 1).unwrap();
        assert_eq!(sel, vec![(0, 9.0)]);
    }

    #[test]
    fn select_reports_shortfall() {
        let row = vec![1.0; 5];
        match select_k(&row, 2, 3, 1) {
            Err(Error::Infeasible { admissible: 2, k: 3, .. }) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn select_matches_reference(
            m in 2usize..60,
            t_frac in 0.0f64..1.0,
            k in 1usize..8,
            e in 0usize..4,
            seed in 0u64..1000,
        ) {
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 * 100.0
            };
            // A few deliberate duplicates exercise the tie-break.
            let row: Vec<f64> = (0..m).map(|i| if i % 7 == 3 { 42.0 } else { next() }).collect();
            let t = ((m - 1) as f64 * t_frac) as usize;
            let lo = t.saturating_sub(e);
            let hi = (t + e).min(m - 1);
            let admissible = m - (hi - lo + 1);
            prop_assume!(admissible >= k);
            let got = select_k(&row, t, k, e).unwrap();
            let want = select_reference(&row, t, k, e);
            prop_assert_eq!(got, want);
        }
    }

    fn fast_scores(seq: &crate::field::FieldSequence, cfg: &RunConfig) -> ScoreSet {
        let (s, _) = spatial_distance_matrix(seq, cfg).unwrap();
        rarity_scores(&s, cfg).unwrap().0
    }

    #[test]
    fn identical_fields_score_zero_for_all_k() {
        let seq = crate::field::FieldSequence::new(20, 2, 2, vec![3.0; 80], Dtype::F64).unwrap();
        let cfg = RunConfig {
            d: 3,
            e: Some(3),
            k_values: vec![1, 2, 5],
            ..RunConfig::default()
        };
        let set = fast_scores(&seq, &cfg);
        for ks in &set.scores {
            assert!(ks.iter().all(|&s| s == 0.0));
        }
    }

    #[test]
    fn matches_oracle_on_random_instance() {
        let seq = synth(150, 3, 3, &SynthKind::GaussianNoise, 21).unwrap();
        let cfg = RunConfig {
            d: 4,
            e: Some(4),
            k_values: vec![1, 3, 7],
            ..RunConfig::default()
        };
        let fast = fast_scores(&seq, &cfg);
        let slow = naive_rarity(&seq, &cfg).unwrap();
        assert_eq!(fast.m, slow.m);
        for t in 0..fast.m {
            let fi: Vec<usize> = fast.neighbors[t].iter().map(|&(j, _)| j).collect();
            let si: Vec<usize> = slow.neighbors[t].iter().map(|&(j, _)| j).collect();
            assert_eq!(fi, si, "neighbor set mismatch at t={t}");
            for ((_, a), (_, b)) in fast.neighbors[t].iter().zip(&slow.neighbors[t]) {
                assert!(rel_close(*a, *b, 1e-8));
            }
        }
        for ki in 0..fast.k_values.len() {
            for t in 0..fast.m {
                assert!(rel_close(fast.scores[ki][t], slow.scores[ki][t], 1e-8));
            }
        }
        // Every reported score is the mean of its listed neighbor distances.
        for t in 0..fast.m {
            for &k in &fast.k_values {
                let r = fast.result(t, k).unwrap();
                let mean = r.neighbors.iter().map(|&(_, d)| d).sum::<f64>() / k as f64;
                assert!(rel_close(r.score, mean, 1e-12));
                assert_eq!(r.neighbors.len(), k);
            }
        }
    }

    #[test]
    fn planted_anomaly_is_found_and_oracle_agrees() {
        let d = 3;
        let t_star = 200;
        let seq = synth(
            400,
            3,
            3,
            &SynthKind::PlantedAnomaly {
                t_star,
                amplitude: 50.0,
                duration: d,
            },
            13,
        )
        .unwrap();
        let cfg = RunConfig {
            d,
            e: Some(d),
            k_values: vec![1, 5, 10],
            ..RunConfig::default()
        };
        let fast = fast_scores(&seq, &cfg);
        let slow = naive_rarity(&seq, &cfg).unwrap();
        let ki = fast.k_values.len() - 1;
        let argmax = (0..fast.m)
            .max_by(|&a, &b| fast.scores[ki][a].total_cmp(&fast.scores[ki][b]))
            .unwrap();
        assert!(
            (t_star - d + 1..=t_star).contains(&argmax),
            "argmax {argmax} outside planted window"
        );
        for t in 0..fast.m {
            assert!(rel_close(fast.scores[ki][t], slow.scores[ki][t], 1e-8));
        }
        let top = top_rare(&fast, 10, 1).unwrap();
        assert!((t_star - d + 1..=t_star).contains(&top[0].0));
    }

    #[test]
    fn scores_monotone_and_prefix_consistent_in_k() {
        let seq = synth(120, 2, 2, &SynthKind::GaussianNoise, 31).unwrap();
        let cfg = RunConfig {
            d: 3,
            e: Some(3),
            k_values: vec![2, 5, 9],
            ..RunConfig::default()
        };
        let set = fast_scores(&seq, &cfg);
        let solo = RunConfig {
            k_values: vec![5],
            ..cfg.clone()
        };
        let (s, _) = spatial_distance_matrix(&seq, &solo).unwrap();
        let (small, _) = rarity_scores(&s, &solo).unwrap();
        for t in 0..set.m {
            for ki in 1..set.k_values.len() {
                assert!(set.scores[ki - 1][t] <= set.scores[ki][t] + 1e-15);
            }
            // The k=5 run's list is exactly the length-5 prefix of the k=9 run's.
            assert_eq!(&set.neighbors[t][..5], small.neighbors[t].as_slice());
        }
    }

    #[test]
    fn mutual_twins_suppress_each_other_at_k1() {
        let d = 4;
        let (t1, t2) = (40usize, 160usize);
        let base = synth(240, 3, 3, &SynthKind::GaussianNoise, 55).unwrap();
        let hw = 9;
        let mut values = base.values().to_vec();
        // Plant a strong pattern at t1, then copy the whole region any
        // bump-overlapping trajectory can touch to t2, so every such
        // trajectory has an exact shifted twin.
        for (off, t) in (t1..t1 + d).enumerate() {
            for p in 0..hw {
                values[t * hw + p] += 40.0 * ((off + p) as f64 * 0.7).sin() + 40.0;
            }
        }
        let (ext_lo, ext_len) = (t1 - (d - 1), 3 * d - 2);
        for off in 0..ext_len {
            let (src, dst) = (ext_lo + off, t2 - (d - 1) + off);
            let window: Vec<f64> = values[src * hw..(src + 1) * hw].to_vec();
            values[dst * hw..(dst + 1) * hw].copy_from_slice(&window);
        }
        let seq = crate::field::FieldSequence::new(240, 3, 3, values, Dtype::F64).unwrap();
        let cfg = RunConfig {
            d,
            e: Some(d),
            k_values: vec![1, 10],
            ..RunConfig::default()
        };
        let set = fast_scores(&seq, &cfg);
        let slow = naive_rarity(&seq, &cfg).unwrap();
        // Each twin's nearest neighbor is the other, at (numerically) zero
        // distance; the norm decomposition leaves a tiny cancellation
        // residue where the oracle's direct subtraction gives exact zero.
        assert_eq!(set.neighbors[t1][0].0, t2);
        assert!(set.neighbors[t1][0].1 < 1e-9);
        assert_eq!(set.neighbors[t2][0].0, t1);
        assert!(set.neighbors[t2][0].1 < 1e-9);
        assert_eq!(slow.neighbors[t1][0], (t2, 0.0));
        // At k=1 neither twin tops the list (mutual-analogue suppression)...
        let top1 = top_rare(&set, 1, 1).unwrap();
        let windows = |t: usize| (t1.saturating_sub(d) + 1..=t1 + d).contains(&t)
            || (t2.saturating_sub(d) + 1..=t2 + d).contains(&t);
        assert!(!windows(top1[0].0), "twin dominated k=1 top: {top1:?}");
        // ...while at k=10 the planted pattern dominates.
        let top10 = top_rare(&set, 10, 1).unwrap();
        assert!(windows(top10[0].0));
    }

    #[test]
    fn top_rare_full_sort_and_errors() {
        let seq = synth(60, 2, 2, &SynthKind::GaussianNoise, 8).unwrap();
        let cfg = RunConfig {
            d: 2,
            e: Some(2),
            k_values: vec![3],
            ..RunConfig::default()
        };
        let set = fast_scores(&seq, &cfg);
        let all = top_rare(&set, 3, set.m).unwrap();
        assert_eq!(all.len(), set.m);
        for pair in all.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
        }
        assert!(matches!(top_rare(&set, 4, 5), Err(Error::KNotInReport(4))));

        // All-tied scores: deterministic order by ascending t.
        let constant = crate::field::FieldSequence::new(30, 2, 2, vec![1.0; 120], Dtype::F64)
            .unwrap();
        let set = fast_scores(&constant, &cfg);
        let top = top_rare(&set, 3, 5).unwrap();
        assert_eq!(top, vec![(0, 0.0), (1, 0.0), (2, 0.0), (3, 0.0), (4, 0.0)]);
    }

    #[test]
    fn exclusion_invariant_holds_on_every_reported_neighbor() {
        let seq = synth(100, 2, 2, &SynthKind::GaussianNoise, 12).unwrap();
        for e in [0usize, 2, 5] {
            let cfg = RunConfig {
                d: 2,
                e: Some(e),
                k_values: vec![4],
                ..RunConfig::default()
            };
            let set = fast_scores(&seq, &cfg);
            for (t, nbrs) in set.neighbors.iter().enumerate() {
                for &(j, _) in nbrs {
                    assert!(j.abs_diff(t) > e, "t={t} j={j} e={e}");
                }
            }
        }
    }

    #[test]
    fn matrix_profile_special_case_k1() {
        // With k=1 the score is the squared distance to the single nearest
        // admissible neighbor; check against a direct scan.
        let seq = synth(90, 2, 2, &SynthKind::GaussianNoise, 17).unwrap();
        let d = 3;
        let cfg = RunConfig {
            d,
            e: Some(d),
            k_values: vec![1],
            ..RunConfig::default()
        };
        let set = fast_scores(&seq, &cfg);
        for t in 0..set.m {
            let mut best = f64::INFINITY;
            for j in 0..set.m {
                if j.abs_diff(t) > d {
                    best = best.min(crate::oracle::naive_trajectory_distance(&seq, t, j, d));
                }
            }
            assert!(rel_close(set.scores[0][t], best, 1e-8));
        }
    }
}
