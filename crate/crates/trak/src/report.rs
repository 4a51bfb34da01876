//! Report serialization.
//!
//! Scores go to a header-less CSV with one row per `(t, k)` pair, ordered by
//! `t` then `k`:
//!
//! ```text
//! t,k,score,neighbor_1,dist_1,...,neighbor_k,dist_k
//! ```
//!
//! Floats are written in shortest round-trip form, so re-parsing a report is
//! value-exact and identical runs produce byte-identical CSVs. Everything
//! else — the fully resolved configuration, input digest, software version,
//! phase timings, engine counters — goes to a JSON sidecar; timing fields
//! are the only part of a report that varies between identical runs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{io_error, Error, Result};
use crate::rarity::{PhaseTimings, ScoreSet};
use crate::spatial::SpatialStats;
use crate::trajectory::EngineStats;

pub const CSV_SCHEMA: &str = "t,k,score,neighbor_1,dist_1,...,neighbor_k,dist_k";

/// Preprocessing switches, echoed into the sidecar.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PreprocessEcho {
    /// "none", "gridpoint" or "period:<p>".
    pub anomaly: String,
    /// Latitude span "<lat0>:<lat1>" when cosine weighting was applied.
    pub cos_lat: Option<String>,
    pub standardize: bool,
}

/// Input file identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub sha256: String,
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub dtype: String,
}

/// The JSON sidecar: everything needed to rerun and audit a report.
#[derive(Clone, Debug, Serialize)]
pub struct Sidecar {
    pub tool: &'static str,
    pub version: &'static str,
    /// "exact" for the streaming engine, "oracle" for the brute-force path.
    pub engine: &'static str,
    pub csv_schema: &'static str,
    /// Fully resolved configuration (defaults expanded).
    pub config: ResolvedConfig,
    pub preprocess: PreprocessEcho,
    pub input: InputInfo,
    pub threads: usize,
    pub timings: PhaseTimings,
    pub spatial: SpatialStats,
    pub engine_stats: EngineStats,
    pub s_bytes: u64,
    pub s_dtype: String,
    /// Set when the distance matrix was loaded from a file instead of
    /// computed.
    pub matrix_path: Option<String>,
}

/// `RunConfig` with every default expanded.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub d: usize,
    pub e: usize,
    pub k_values: Vec<usize>,
    pub b: usize,
    pub precision: String,
    pub refresh: Option<usize>,
    pub seed: Option<u64>,
}

impl ResolvedConfig {
    pub fn from_run(cfg: &RunConfig) -> Self {
        Self {
            d: cfg.d,
            e: cfg.exclusion(),
            k_values: cfg.k_sorted(),
            b: cfg.b,
            precision: format!("{:?}", cfg.precision).to_lowercase(),
            refresh: cfg.refresh,
            seed: cfg.seed,
        }
    }
}

/// Write the scores CSV: rows ordered by `t` ascending, then `k` ascending.
pub fn write_scores_csv(path: impl AsRef<Path>, set: &ScoreSet) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        for t in 0..set.m {
            for (ki, &k) in set.k_values.iter().enumerate() {
                write!(w, "{t},{k},{}", set.scores[ki][t])?;
                for &(j, dist) in &set.neighbors[t][..k] {
                    write!(w, ",{j},{dist}")?;
                }
                w.write_all(b"\n")?;
            }
        }
        w.flush()
    })()
    .map_err(|e| io_error(path, e))
}

pub fn write_sidecar(path: impl AsRef<Path>, sidecar: &Sidecar) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, sidecar)
        .map_err(|e| io_error(path, std::io::Error::other(e)))?;
    w.write_all(b"\n").map_err(|e| io_error(path, e))?;
    w.flush().map_err(|e| io_error(path, e))
}

/// Parse a scores CSV back into a [`ScoreSet`]. Validates that every
/// trajectory appears exactly once per `k`.
pub fn read_scores_csv(path: impl AsRef<Path>) -> Result<ScoreSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let reader = BufReader::new(file);

    struct Row {
        t: usize,
        k: usize,
        score: f64,
        neighbors: Vec<(usize, f64)>,
    }
    let mut rows: Vec<Row> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| io_error(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        let parse_err = |msg: String| Error::ReportParse { line: lineno, msg };
        if fields.len() < 3 {
            return Err(parse_err(format!("expected at least 3 fields, got {}", fields.len())));
        }
        let t: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad t {:?}", fields[0])))?;
        let k: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad k {:?}", fields[1])))?;
        let score: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("bad score {:?}", fields[2])))?;
        if fields.len() != 3 + 2 * k {
            return Err(parse_err(format!(
                "row with k={k} must have {} fields, got {}",
                3 + 2 * k,
                fields.len()
            )));
        }
        let mut neighbors = Vec::with_capacity(k);
        for pair in fields[3..].chunks_exact(2) {
            let j: usize = pair[0]
                .parse()
                .map_err(|_| parse_err(format!("bad neighbor index {:?}", pair[0])))?;
            let dist: f64 = pair[1]
                .parse()
                .map_err(|_| parse_err(format!("bad neighbor distance {:?}", pair[1])))?;
            neighbors.push((j, dist));
        }
        rows.push(Row {
            t,
            k,
            score,
            neighbors,
        });
    }
    if rows.is_empty() {
        return Err(Error::ReportParse {
            line: 1,
            msg: "empty report".into(),
        });
    }

    let mut k_values: Vec<usize> = rows.iter().map(|r| r.k).collect();
    k_values.sort_unstable();
    k_values.dedup();
    let k_max = *k_values.last().unwrap();
    let m = rows.iter().map(|r| r.t).max().unwrap() + 1;

    let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut scores = vec![vec![f64::NAN; m]; k_values.len()];
    let mut seen = vec![vec![false; m]; k_values.len()];
    for row in rows {
        let ki = k_values.binary_search(&row.k).unwrap();
        if row.t >= m || seen[ki][row.t] {
            return Err(Error::ReportParse {
                line: 0,
                msg: format!("duplicate entry for t={}, k={}", row.t, row.k),
            });
        }
        seen[ki][row.t] = true;
        scores[ki][row.t] = row.score;
        if row.k == k_max {
            neighbors[row.t] = row.neighbors;
        }
    }
    for (ki, flags) in seen.iter().enumerate() {
        if let Some(t) = flags.iter().position(|&s| !s) {
            return Err(Error::ReportParse {
                line: 0,
                msg: format!("missing entry for t={t}, k={}", k_values[ki]),
            });
        }
    }

    Ok(ScoreSet {
        m,
        k_values,
        neighbors,
        scores,
    })
}
