//! Exact k-nearest-neighbor rarity scoring for gridded spatio-temporal
//! sequences.
//!
//! A sequence of `n` spatial fields of shape `h x w` is scanned for
//! geometrically rare trajectories: windows of `d` consecutive fields whose
//! mean squared distance to their `k` nearest non-overlapping counterparts is
//! large. The pipeline is exact (no approximate indexing) and runs in three
//! phases:
//!
//! 1. precompute squared Frobenius norms of every field,
//! 2. assemble the symmetric `n x n` matrix of pairwise squared field
//!    distances from blocked Gram tiles (one dense matrix product per tile,
//!    upper triangle only, mirrored by copy),
//! 3. stream trajectory-distance rows with a constant-time-per-element
//!    recurrence and select the `k` nearest admissible neighbors per row with
//!    a bounded heap.
//!
//! The recurrence makes per-row cost independent of the trajectory duration
//! `d`, and a single pass at the largest requested `k` yields exact scores
//! for every smaller `k` as prefix means.
//!
//! Index convention: everything public is 0-based. Trajectory `t` covers
//! fields `t..t + d - 1`, and reports index trajectories by their start step
//! `t` in `0..n - d + 1`.
//!
//! The [`oracle`] module carries independent brute-force reference
//! implementations of every quantity the fast path computes; it shares no
//! arithmetic with the fast path and is the binding reference for tests.

pub mod analysis;
pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod field;
pub mod io;
pub mod mem;
pub mod oracle;
pub mod preprocess;
pub mod rarity;
pub mod report;
pub mod spatial;
pub mod synth;
pub mod trajectory;

pub use config::{Precision, RunConfig};
pub use error::{Error, Result};
pub use field::{Dtype, FieldSequence, GridWeights};
pub use rarity::{rarity_scores, score_sequence, top_rare, RarityResult, ScoreSet, ScoredRun};
pub use spatial::{spatial_distance_matrix, squared_norms, SpatialDistanceMatrix};
