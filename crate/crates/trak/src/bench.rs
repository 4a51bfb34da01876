//! Scaling and memory measurements on synthetic data.
//!
//! Sweeps vary one of `{n, hw, d, k}` while holding the rest of the
//! configuration fixed: fresh data per value (seed derived from the base
//! seed and the value), one discarded warm-up run, then `reps` timed runs
//! with medians reported per phase. A checksum of the score vectors is
//! recorded per run and must agree across repetitions; measuring never
//! alters results.
//!
//! Absolute runtimes are hardware-specific; consumers should assert scaling
//! shapes (flat in d, flat in k, quadratic in n, linear in hw), not numbers.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::{Precision, RunConfig};
use crate::error::{io_error, Error, Result};
use crate::field::Dtype;
use crate::mem;
use crate::rarity::{score_sequence, PhaseTimings, ScoredRun};
use crate::synth::{synth, SynthKind};

/// Which dimension a sweep varies. `Hw` sets `h = w = value`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    N,
    Hw,
    D,
    K,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::N => "n",
            SweepVar::Hw => "hw",
            SweepVar::D => "d",
            SweepVar::K => "k",
        }
    }
}

impl std::str::FromStr for SweepVar {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "n" => Ok(SweepVar::N),
            "hw" => Ok(SweepVar::Hw),
            "d" => Ok(SweepVar::D),
            "k" => Ok(SweepVar::K),
            other => Err(format!("unknown sweep variable {other:?} (n, hw, d, k)")),
        }
    }
}

/// Base dimensions and engine configuration for a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct BenchConfig {
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub d: usize,
    pub e: Option<usize>,
    pub k: usize,
    pub b: usize,
    pub precision: Precision,
    pub threads: Option<usize>,
    pub seed: u64,
    pub reps: usize,
    pub memory_budget: Option<u64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            h: 8,
            w: 8,
            d: 5,
            e: None,
            k: 10,
            b: 256,
            precision: Precision::Inherit,
            threads: None,
            seed: 1,
            reps: 3,
            memory_budget: None,
        }
    }
}

impl BenchConfig {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            d: self.d,
            e: self.e,
            k_values: vec![self.k],
            b: self.b,
            precision: self.precision,
            refresh: None,
            seed: Some(self.seed),
            threads: self.threads,
            memory_budget: self.memory_budget,
        }
    }
}

/// One timed repetition.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct RepMeasurement {
    pub rep: usize,
    pub timings: PhaseTimings,
    pub total_s: f64,
    pub peak_bytes: Option<u64>,
    pub checksum: u64,
}

/// Measurements for one sweep value.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRecord {
    pub variable: &'static str,
    pub value: u64,
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub d: usize,
    pub e: usize,
    pub k: usize,
    pub b: usize,
    pub threads: usize,
    pub reps: Vec<RepMeasurement>,
    pub median: PhaseTimings,
    pub median_total_s: f64,
    /// Distance-matrix buffer size: `n^2 * dtype size`, exact.
    pub s_bytes: u64,
    pub checksum: u64,
    pub skipped: bool,
    pub skip_reason: Option<String>,
}

fn fnv1a64(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Order-sensitive checksum over every score vector's bit patterns.
pub fn score_checksum(run: &ScoredRun) -> u64 {
    fnv1a64(
        run.set
            .scores
            .iter()
            .flatten()
            .flat_map(|s| s.to_bits().to_le_bytes()),
    )
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn apply_variable(base: &BenchConfig, var: SweepVar, value: u64) -> BenchConfig {
    let mut cfg = base.clone();
    match var {
        SweepVar::N => cfg.n = value as usize,
        SweepVar::Hw => {
            cfg.h = value as usize;
            cfg.w = value as usize;
        }
        SweepVar::D => cfg.d = value as usize,
        SweepVar::K => cfg.k = value as usize,
    }
    cfg
}

fn run_once(cfg: &BenchConfig, seed: u64) -> Result<(ScoredRun, Option<u64>)> {
    let seq = synth(cfg.n, cfg.h, cfg.w, &SynthKind::GaussianNoise, seed)?;
    let rc = cfg.run_config();
    let (run, peak) = mem::measure_peak(|| score_sequence(&seq, &rc));
    Ok((run?, peak))
}

/// Run a sweep. Configurations that exceed the memory budget are skipped and
/// flagged, never partially timed; infeasible configurations are an error.
pub fn sweep(var: SweepVar, values: &[u64], base: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if base.reps < 1 {
        return Err(Error::InvalidConfig("reps must be >= 1".into()));
    }
    let mut records = Vec::with_capacity(values.len());
    for &value in values {
        let cfg = apply_variable(base, var, value);
        let rc = cfg.run_config();
        let seed = cfg.seed.wrapping_add(value);
        let dtype = cfg.precision.resolve(Dtype::F64);
        let s_bytes = (cfg.n as u64) * (cfg.n as u64) * dtype.size_bytes() as u64;

        if let Some(budget) = cfg.memory_budget {
            if s_bytes > budget {
                records.push(BenchRecord {
                    variable: var.name(),
                    value,
                    n: cfg.n,
                    h: cfg.h,
                    w: cfg.w,
                    d: cfg.d,
                    e: rc.exclusion(),
                    k: cfg.k,
                    b: cfg.b,
                    threads: cfg.threads.unwrap_or_else(rayon::current_num_threads),
                    reps: Vec::new(),
                    median: PhaseTimings::default(),
                    median_total_s: 0.0,
                    s_bytes,
                    checksum: 0,
                    skipped: true,
                    skip_reason: Some(format!(
                        "memory budget exceeded: need {s_bytes} bytes, budget {budget}"
                    )),
                });
                continue;
            }
        }
        rc.validate(cfg.n)?;

        // Warm-up run, discarded.
        let _ = run_once(&cfg, seed)?;

        let mut reps = Vec::with_capacity(cfg.reps);
        let mut checksum = None;
        for rep in 0..cfg.reps {
            let (run, peak) = run_once(&cfg, seed)?;
            let sum = score_checksum(&run);
            match checksum {
                None => checksum = Some(sum),
                Some(prev) => {
                    if prev != sum {
                        return Err(Error::InvalidArgument(format!(
                            "score checksum changed across repetitions \
                             ({prev:#x} vs {sum:#x}) at {}={value}",
                            var.name()
                        )));
                    }
                }
            }
            reps.push(RepMeasurement {
                rep,
                timings: run.timings,
                total_s: run.timings.total_s(),
                peak_bytes: peak,
                checksum: sum,
            });
        }

        let median_timings = PhaseTimings {
            norms_s: median(&mut reps.iter().map(|r| r.timings.norms_s).collect::<Vec<_>>()),
            spatial_s: median(&mut reps.iter().map(|r| r.timings.spatial_s).collect::<Vec<_>>()),
            stream_knn_s: median(
                &mut reps.iter().map(|r| r.timings.stream_knn_s).collect::<Vec<_>>(),
            ),
        };
        let median_total = median(&mut reps.iter().map(|r| r.total_s).collect::<Vec<_>>());

        records.push(BenchRecord {
            variable: var.name(),
            value,
            n: cfg.n,
            h: cfg.h,
            w: cfg.w,
            d: cfg.d,
            e: rc.exclusion(),
            k: cfg.k,
            b: cfg.b,
            threads: cfg.threads.unwrap_or_else(rayon::current_num_threads),
            reps,
            median: median_timings,
            median_total_s: median_total,
            s_bytes,
            checksum: checksum.unwrap(),
            skipped: false,
            skip_reason: None,
        });
    }
    Ok(records)
}

/// Predicted versus measured memory footprint for one configuration.
#[derive(Clone, Debug, Serialize)]
pub struct MemoryReport {
    /// `n^2 * dtype size`, exact.
    pub predicted_s_bytes: u64,
    /// In-memory sequence payload (values are held as f64).
    pub predicted_data_bytes: u64,
    /// Norms, three row buffers, neighbor lists, score vectors.
    pub predicted_aux_bytes: u64,
    pub predicted_total_bytes: u64,
    /// Peak extra heap during the run; `None` (flagged) when no tracking
    /// allocator is installed.
    pub measured_peak_bytes: Option<u64>,
    pub measured_over_predicted: Option<f64>,
    pub instrumented: bool,
}

/// Predict the footprint from the dimensions and, when instrumentation is
/// available, measure a full pass.
pub fn memory_report(cfg: &BenchConfig) -> Result<MemoryReport> {
    let rc = cfg.run_config();
    rc.validate(cfg.n)?;
    let dtype = cfg.precision.resolve(Dtype::F64);
    let n = cfg.n as u64;
    let hw = (cfg.h * cfg.w) as u64;
    let m = (cfg.n - cfg.d + 1) as u64;
    let predicted_s = n * n * dtype.size_bytes() as u64;
    let predicted_data = n * hw * 8;
    let predicted_aux = n * 8            // norms
        + 3 * m * 8                      // first, previous, current rows
        + m * cfg.k as u64 * 16          // neighbor (index, distance) pairs
        + m * 8; // score vector
    let (run, peak) = run_once(cfg, cfg.seed)?;
    let _ = run;
    Ok(MemoryReport {
        predicted_s_bytes: predicted_s,
        predicted_data_bytes: predicted_data,
        predicted_aux_bytes: predicted_aux,
        predicted_total_bytes: predicted_s + predicted_data + predicted_aux,
        measured_peak_bytes: peak,
        measured_over_predicted: peak
            .map(|p| p as f64 / (predicted_s + predicted_data + predicted_aux) as f64),
        instrumented: peak.is_some(),
    })
}

/// CSV output: one row per repetition plus a `median` summary row per value.
pub fn write_bench_csv(path: impl AsRef<Path>, records: &[BenchRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(
            w,
            "variable,value,kind,rep,n,h,w,d,e,k,b,threads,norms_s,spatial_s,stream_knn_s,\
             total_s,peak_bytes,s_bytes,checksum,skipped,skip_reason"
        )?;
        for r in records {
            if r.skipped {
                writeln!(
                    w,
                    "{},{},skipped,,{},{},{},{},{},{},{},{},,,,,,{},,true,{}",
                    r.variable,
                    r.value,
                    r.n,
                    r.h,
                    r.w,
                    r.d,
                    r.e,
                    r.k,
                    r.b,
                    r.threads,
                    r.s_bytes,
                    r.skip_reason.as_deref().unwrap_or(""),
                )?;
                continue;
            }
            for rep in &r.reps {
                writeln!(
                    w,
                    "{},{},rep,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:#x},false,",
                    r.variable,
                    r.value,
                    rep.rep,
                    r.n,
                    r.h,
                    r.w,
                    r.d,
                    r.e,
                    r.k,
                    r.b,
                    r.threads,
                    rep.timings.norms_s,
                    rep.timings.spatial_s,
                    rep.timings.stream_knn_s,
                    rep.total_s,
                    rep.peak_bytes.map(|p| p.to_string()).unwrap_or_default(),
                    r.s_bytes,
                    rep.checksum,
                )?;
            }
            writeln!(
                w,
                "{},{},median,,{},{},{},{},{},{},{},{},{},{},{},{},,{},{:#x},false,",
                r.variable,
                r.value,
                r.n,
                r.h,
                r.w,
                r.d,
                r.e,
                r.k,
                r.b,
                r.threads,
                r.median.norms_s,
                r.median.spatial_s,
                r.median.stream_knn_s,
                r.median_total_s,
                r.s_bytes,
                r.checksum,
            )?;
        }
        w.flush()
    })()
    .map_err(|e| io_error(path, e))
}

/// Host and build description recorded next to measurements.
pub fn env_capture() -> serde_json::Value {
    let cpu_model = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|v| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown".to_string());
    serde_json::json!({
        "tool": "trak",
        "version": env!("CARGO_PKG_VERSION"),
        "os": std::env::consts::OS,
        "arch": std::env::consts::ARCH,
        "cpu_model": cpu_model,
        "cores": std::thread::available_parallelism().map(|n| n.get()).unwrap_or(0),
        "rayon_threads": rayon::current_num_threads(),
        "allocation_tracking": mem::instrumentation_active(),
    })
}

/// Least-squares slope of `ln(y)` against `ln(x)`; the log-log scaling
/// exponent of a sweep.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_structure_and_checksums() {
        let base = BenchConfig {
            n: 80,
            h: 2,
            w: 2,
            d: 2,
            k: 3,
            reps: 3,
            threads: Some(1),
            seed: 5,
            ..BenchConfig::default()
        };
        let records = sweep(SweepVar::D, &[1, 4], &base).unwrap();
        assert_eq!(records.len(), 2);
        for r in &records {
            assert!(!r.skipped);
            assert_eq!(r.reps.len(), 3);
            for rep in &r.reps {
                assert_eq!(rep.checksum, r.checksum);
                assert!(rep.total_s >= 0.0);
            }
            assert_eq!(r.s_bytes, 80 * 80 * 8);
        }
        assert_eq!(records[0].d, 1);
        assert_eq!(records[1].d, 4);
    }

    #[test]
    fn budget_skips_are_flagged() {
        let base = BenchConfig {
            n: 64,
            h: 2,
            w: 2,
            d: 1,
            k: 1,
            reps: 1,
            memory_budget: Some(64 * 64 * 8), // fits n=64 exactly, not n=128
            ..BenchConfig::default()
        };
        let records = sweep(SweepVar::N, &[64, 128], &base).unwrap();
        assert!(!records[0].skipped);
        assert!(records[1].skipped);
        assert!(records[1].skip_reason.as_deref().unwrap().contains("budget"));
        assert!(records[1].reps.is_empty());
    }

    #[test]
    fn memory_prediction_is_exact_for_s() {
        let cfg = BenchConfig {
            n: 100,
            h: 2,
            w: 2,
            d: 1,
            k: 1,
            reps: 1,
            ..BenchConfig::default()
        };
        let report = memory_report(&cfg).unwrap();
        assert_eq!(report.predicted_s_bytes, 100 * 100 * 8);
        assert_eq!(report.predicted_data_bytes, 100 * 4 * 8);
        // Doubling n quadruples the S prediction exactly.
        let big = BenchConfig { n: 200, ..cfg };
        let report2 = memory_report(&big).unwrap();
        assert_eq!(report2.predicted_s_bytes, 4 * report.predicted_s_bytes);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x| (x, 3.0 * x * x))
            .collect();
        let slope = log_log_slope(&pts);
        assert!((slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_writer_produces_rows() {
        let base = BenchConfig {
            n: 60,
            h: 2,
            w: 2,
            d: 1,
            k: 1,
            reps: 2,
            threads: Some(1),
            ..BenchConfig::default()
        };
        let records = sweep(SweepVar::K, &[1, 2], &base).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bench.csv");
        write_bench_csv(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        // Header + (2 reps + 1 median) per value.
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert!(lines[0].starts_with("variable,value,kind"));
    }
}
