//! Command-line interface: every pipeline stage behind one binary with
//! reproducible, config-echoing runs.
//!
//! Data outputs (CSV, JSON results) are machine-clean; human-readable
//! progress goes to stderr. On failure the process prints one
//! machine-readable JSON error line to stderr and exits with the code from
//! [`Error::exit_code`] (clap usage errors exit with 2).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis;
use crate::bench::{self, BenchConfig, SweepVar};
use crate::config::{Precision, RunConfig};
use crate::error::{Error, Result};
use crate::field::{Dtype, FieldSequence};
use crate::io;
use crate::oracle;
use crate::preprocess::{self, ClimatologyMode};
use crate::rarity::{self, ScoredRun};
use crate::report::{self, InputInfo, PreprocessEcho, ResolvedConfig, Sidecar};
use crate::synth::{synth, SynthKind};

#[derive(Parser, Debug)]
#[command(
    name = "trak",
    version,
    about = "Exact kNN rarity scoring for gridded spatio-temporal sequences"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full scoring pass: distance matrix, streamed rows, kNN scores.
    Score(ScoreArgs),
    /// Brute-force scoring pass (small inputs); same report schema.
    Oracle(OracleArgs),
    /// Generate a synthetic sequence.
    Synth(SynthArgs),
    /// Convert between the binary and CSV sequence containers.
    Convert(ConvertArgs),
    /// Macro-averaged local intrinsic dimension from a report or a fresh pass.
    Id(IdArgs),
    /// Top-set overlap and rank correlation between two reports.
    Compare(CompareArgs),
    /// Scaling sweeps and memory accounting on synthetic data.
    Bench(BenchArgs),
    /// Compute and persist the spatial distance matrix for reuse.
    Matrix(MatrixArgs),
}

#[derive(Args, Debug, Clone)]
struct EngineOpts {
    /// Trajectory duration in time steps.
    #[arg(long, default_value_t = 5)]
    d: usize,
    /// Exclusion-zone radius; defaults to d.
    #[arg(long)]
    e: Option<usize>,
    /// Largest neighbor count.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Explicit list of neighbor counts (comma separated); defaults to
    /// {1, 5, k} clipped to k.
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    /// Tile edge length for the blocked distance kernel.
    #[arg(long, default_value_t = 256)]
    b: usize,
    /// Distance-matrix storage precision: inherit, f32 or f64.
    #[arg(long, default_value = "inherit")]
    precision: Precision,
    /// Rebuild every REFRESH-th row exactly instead of using the recurrence.
    #[arg(long)]
    refresh: Option<usize>,
    /// Thread cap for the engine (0 = default pool).
    #[arg(long, env = "TRAK_THREADS")]
    threads: Option<usize>,
    /// Cap, in bytes, on the distance-matrix allocation.
    #[arg(long, env = "TRAK_MEMORY_BUDGET")]
    memory_budget: Option<u64>,
}

impl EngineOpts {
    fn k_values(&self) -> Vec<usize> {
        match &self.ks {
            Some(list) => list.clone(),
            None => {
                let mut ks: Vec<usize> = [1, 5, self.k]
                    .into_iter()
                    .filter(|&x| x >= 1 && x <= self.k)
                    .collect();
                ks.sort_unstable();
                ks.dedup();
                ks
            }
        }
    }

    fn run_config(&self, seed: Option<u64>) -> RunConfig {
        RunConfig {
            d: self.d,
            e: self.e,
            k_values: self.k_values(),
            b: self.b,
            precision: self.precision,
            refresh: self.refresh,
            seed,
            threads: self.threads.filter(|&t| t > 0),
            memory_budget: self.memory_budget,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct PreprocessOpts {
    /// Climatology removal: none, gridpoint, or period:<p>.
    #[arg(long, default_value = "none")]
    anomaly: String,
    /// Cosine-latitude weighting; "<lat0>:<lat1>" spans rows linearly.
    #[arg(long)]
    cos_lat: Option<String>,
    /// Per-gridpoint z-scoring (after anomaly removal and weighting).
    #[arg(long, default_value_t = false)]
    standardize: bool,
}

impl PreprocessOpts {
    fn apply(&self, seq: &FieldSequence) -> Result<FieldSequence> {
        let mut out = match parse_anomaly(&self.anomaly)? {
            None => seq.clone(),
            Some(mode) => preprocess::remove_climatology(seq, mode)?,
        };
        if let Some(span) = &self.cos_lat {
            let (lat0, lat1) = parse_lat_span(span)?;
            let lats = linspace(lat0, lat1, out.h());
            let gw = preprocess::cos_lat_weights(&lats, out.w())?;
            out = preprocess::apply_weights(&out, &gw)?;
        }
        if self.standardize {
            out = preprocess::standardize(&out)?;
        }
        Ok(out)
    }

    fn echo(&self) -> PreprocessEcho {
        PreprocessEcho {
            anomaly: self.anomaly.clone(),
            cos_lat: self.cos_lat.clone(),
            standardize: self.standardize,
        }
    }
}

fn parse_anomaly(spec: &str) -> Result<Option<ClimatologyMode>> {
    match spec {
        "none" => Ok(None),
        "gridpoint" => Ok(Some(ClimatologyMode::PerGridpoint)),
        other => {
            if let Some(p) = other.strip_prefix("period:") {
                let period: usize = p.parse().map_err(|_| {
                    Error::InvalidArgument(format!("bad climatology period {p:?}"))
                })?;
                Ok(Some(ClimatologyMode::PerCalendarStep { period }))
            } else {
                Err(Error::InvalidArgument(format!(
                    "unknown anomaly mode {other:?} (none, gridpoint, period:<p>)"
                )))
            }
        }
    }
}

fn parse_lat_span(span: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = span.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "latitude span must be <lat0>:<lat1>, got {span:?}"
        )));
    }
    let lat0: f64 = parts[0]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad latitude {:?}", parts[0])))?;
    let lat1: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad latitude {:?}", parts[1])))?;
    Ok((lat0, lat1))
}

fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![(a + b) / 2.0];
    }
    (0..count)
        .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
        .collect()
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Input sequence (binary or CSV container).
    #[arg(long)]
    input: PathBuf,
    /// Output CSV report.
    #[arg(long)]
    out: PathBuf,
    /// JSON sidecar path; defaults to the report path with a .json extension.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Reuse a persisted distance matrix instead of computing it.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineOpts,
    #[command(flatten)]
    preprocess: PreprocessOpts,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Trajectory duration in time steps.
    #[arg(long, default_value_t = 5)]
    d: usize,
    /// Exclusion-zone radius; defaults to d.
    #[arg(long)]
    e: Option<usize>,
    /// Largest neighbor count.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Explicit list of neighbor counts (comma separated).
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    #[command(flatten)]
    preprocess: PreprocessOpts,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    h: usize,
    #[arg(long)]
    w: usize,
    /// noise, advect, or planted.
    #[arg(long, default_value = "noise")]
    kind: String,
    /// Start step of the planted anomaly window.
    #[arg(long)]
    t_star: Option<usize>,
    /// Peak amplitude of the planted bump.
    #[arg(long, default_value_t = 10.0)]
    amplitude: f64,
    /// Length of the planted window in steps.
    #[arg(long, default_value_t = 5)]
    anomaly_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Storage dtype: f32 or f64.
    #[arg(long, default_value = "f64")]
    dtype: String,
    /// Output path (.csv writes the text container).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output path; extension picks the container (.csv = text).
    #[arg(long)]
    out: PathBuf,
    /// Optional dtype cast on write: f32 or f64.
    #[arg(long)]
    dtype: Option<String>,
}

#[derive(Args, Debug)]
struct IdArgs {
    /// Existing report CSV to read neighbor distances from.
    #[arg(long, conflicts_with = "input")]
    report: Option<PathBuf>,
    /// Input sequence for a fresh pass.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Neighbor counts for the estimator.
    #[arg(long, value_delimiter = ',', default_values_t = [20usize, 30, 40])]
    ks: Vec<usize>,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trajectory duration for a fresh pass.
    #[arg(long, default_value_t = 5)]
    d: usize,
    /// Exclusion-zone radius for a fresh pass; defaults to d.
    #[arg(long)]
    e: Option<usize>,
    /// Tile edge length for a fresh pass.
    #[arg(long, default_value_t = 256)]
    b: usize,
    #[arg(long, default_value = "inherit")]
    precision: Precision,
    #[arg(long, env = "TRAK_THREADS")]
    threads: Option<usize>,
    #[arg(long, env = "TRAK_MEMORY_BUDGET")]
    memory_budget: Option<u64>,
    #[command(flatten)]
    preprocess: PreprocessOpts,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(subcommand)]
    mode: BenchMode,
}

#[derive(Subcommand, Debug)]
enum BenchMode {
    /// Time the pipeline while varying one dimension.
    Sweep(SweepArgs),
    /// Predicted versus measured memory footprint for one configuration.
    Memory(MemoryArgs),
}

#[derive(Args, Debug)]
struct BenchBaseOpts {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    h: usize,
    #[arg(long, default_value_t = 8)]
    w: usize,
    #[arg(long, default_value_t = 5)]
    d: usize,
    #[arg(long)]
    e: Option<usize>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 256)]
    b: usize,
    #[arg(long, default_value = "inherit")]
    precision: Precision,
    #[arg(long, env = "TRAK_THREADS")]
    threads: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "TRAK_MEMORY_BUDGET")]
    memory_budget: Option<u64>,
}

impl BenchBaseOpts {
    fn bench_config(&self, reps: usize) -> BenchConfig {
        BenchConfig {
            n: self.n,
            h: self.h,
            w: self.w,
            d: self.d,
            e: self.e,
            k: self.k,
            b: self.b,
            precision: self.precision,
            threads: self.threads.filter(|&t| t > 0),
            seed: self.seed,
            reps,
            memory_budget: self.memory_budget,
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Dimension to vary: n, hw, d or k.
    #[arg(long)]
    var: SweepVar,
    /// Values for the swept dimension.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<u64>,
    /// Timed repetitions per value (after one discarded warm-up).
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    /// Host/environment capture JSON; defaults to OUT with .env.json.
    #[arg(long)]
    env_out: Option<PathBuf>,
    #[command(flatten)]
    base: BenchBaseOpts,
}

#[derive(Args, Debug)]
struct MemoryArgs {
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    base: BenchBaseOpts,
}

#[derive(Args, Debug)]
struct MatrixArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output matrix container.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 256)]
    b: usize,
    #[arg(long, default_value = "inherit")]
    precision: Precision,
    #[arg(long, env = "TRAK_THREADS")]
    threads: Option<usize>,
    #[arg(long, env = "TRAK_MEMORY_BUDGET")]
    memory_budget: Option<u64>,
    #[command(flatten)]
    preprocess: PreprocessOpts,
}

/// Entry point used by `main`: parses, dispatches, and maps failures to the
/// documented exit codes with one machine-readable error line on stderr.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            let line = serde_json::json!({
                "error": {
                    "kind": err.kind(),
                    "code": err.exit_code(),
                    "message": err.to_string(),
                }
            });
            eprintln!("{line}");
            err.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Convert(args) => cmd_convert(args),
        Command::Id(args) => cmd_id(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Bench(args) => match args.mode {
            BenchMode::Sweep(s) => cmd_bench_sweep(s),
            BenchMode::Memory(m) => cmd_bench_memory(m),
        },
        Command::Matrix(args) => cmd_matrix(args),
    }
}

fn sidecar_path(out: &Path, json: &Option<PathBuf>) -> PathBuf {
    json.clone()
        .unwrap_or_else(|| out.with_extension("json"))
}

fn input_info(path: &Path, seq: &FieldSequence) -> Result<InputInfo> {
    Ok(InputInfo {
        path: path.display().to_string(),
        sha256: io::sha256_hex(path)?,
        n: seq.n(),
        h: seq.h(),
        w: seq.w(),
        dtype: seq.dtype().name().to_string(),
    })
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let raw = io::load(&args.input)?;
    let seq = args.preprocess.apply(&raw)?;
    let cfg = args.engine.run_config(None);
    cfg.validate(seq.n())?;

    let run: ScoredRun = match &args.matrix {
        Some(matrix_path) => {
            let s = io::load_matrix(matrix_path)?;
            if s.n() != seq.n() {
                return Err(Error::InvalidArgument(format!(
                    "matrix is {}x{} but the input has n={}",
                    s.n(),
                    s.n(),
                    seq.n()
                )));
            }
            rarity::score_matrix(&s, &cfg)?
        }
        None => rarity::score_sequence(&seq, &cfg)?,
    };

    report::write_scores_csv(&args.out, &run.set)?;
    let sidecar = Sidecar {
        tool: "trak",
        version: env!("CARGO_PKG_VERSION"),
        engine: "exact",
        csv_schema: report::CSV_SCHEMA,
        config: ResolvedConfig::from_run(&cfg),
        preprocess: args.preprocess.echo(),
        input: input_info(&args.input, &raw)?,
        threads: run.threads,
        timings: run.timings,
        spatial: run.spatial,
        engine_stats: run.engine,
        s_bytes: run.s_bytes,
        s_dtype: run.s_dtype.name().to_string(),
        matrix_path: args.matrix.as_ref().map(|p| p.display().to_string()),
    };
    report::write_sidecar(sidecar_path(&args.out, &args.json), &sidecar)?;
    eprintln!(
        "scored {} trajectories at k={:?} in {:.3}s",
        run.set.m,
        run.set.k_values,
        run.timings.total_s()
    );
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let raw = io::load(&args.input)?;
    let seq = args.preprocess.apply(&raw)?;
    let k_values = match &args.ks {
        Some(list) => list.clone(),
        None => {
            let mut ks: Vec<usize> = [1, 5, args.k]
                .into_iter()
                .filter(|&x| x >= 1 && x <= args.k)
                .collect();
            ks.sort_unstable();
            ks.dedup();
            ks
        }
    };
    let cfg = RunConfig {
        d: args.d,
        e: args.e,
        k_values,
        ..RunConfig::default()
    };
    let start = std::time::Instant::now();
    let set = oracle::naive_rarity(&seq, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64();

    report::write_scores_csv(&args.out, &set)?;
    let sidecar = Sidecar {
        tool: "trak",
        version: env!("CARGO_PKG_VERSION"),
        engine: "oracle",
        csv_schema: report::CSV_SCHEMA,
        config: ResolvedConfig::from_run(&cfg),
        preprocess: args.preprocess.echo(),
        input: input_info(&args.input, &raw)?,
        threads: 1,
        timings: crate::rarity::PhaseTimings {
            norms_s: 0.0,
            spatial_s: 0.0,
            stream_knn_s: elapsed,
        },
        spatial: Default::default(),
        engine_stats: Default::default(),
        s_bytes: 0,
        s_dtype: "none".to_string(),
        matrix_path: None,
    };
    report::write_sidecar(sidecar_path(&args.out, &args.json), &sidecar)?;
    eprintln!("oracle scored {} trajectories in {elapsed:.3}s", set.m);
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let kind = match args.kind.as_str() {
        "noise" => SynthKind::GaussianNoise,
        "advect" => SynthKind::SmoothAdvecting,
        "planted" => SynthKind::PlantedAnomaly {
            t_star: args.t_star.ok_or_else(|| {
                Error::InvalidArgument("planted kind needs --t-star".into())
            })?,
            amplitude: args.amplitude,
            duration: args.anomaly_len,
        },
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown kind {other:?} (noise, advect, planted)"
            )))
        }
    };
    let seq = synth(args.n, args.h, args.w, &kind, args.seed)?;
    let seq = match args.dtype.as_str() {
        "f64" => seq,
        "f32" => seq.cast(Dtype::F32)?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown dtype {other:?} (f32, f64)"
            )))
        }
    };
    io::save(&seq, &args.out)?;
    eprintln!(
        "wrote {} ({} steps of {}x{}, {})",
        args.out.display(),
        seq.n(),
        seq.h(),
        seq.w(),
        seq.dtype()
    );
    Ok(())
}

fn cmd_convert(args: ConvertArgs) -> Result<()> {
    let seq = io::load(&args.input)?;
    let seq = match args.dtype.as_deref() {
        None => seq,
        Some("f32") => seq.cast(Dtype::F32)?,
        Some("f64") => seq.cast(Dtype::F64)?,
        Some(other) => {
            return Err(Error::InvalidArgument(format!(
                "unknown dtype {other:?} (f32, f64)"
            )))
        }
    };
    io::save(&seq, &args.out)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn write_json_or_stdout(out: &Option<PathBuf>, value: &serde_json::Value) -> Result<()> {
    match out {
        Some(path) => {
            let text = serde_json::to_string_pretty(value).expect("serializable");
            std::fs::write(path, text + "\n").map_err(|e| crate::error::io_error(path, e))
        }
        None => {
            println!(
                "{}",
                serde_json::to_string_pretty(value).expect("serializable")
            );
            Ok(())
        }
    }
}

fn cmd_id(args: IdArgs) -> Result<()> {
    let mut ks = args.ks.clone();
    ks.sort_unstable();
    ks.dedup();
    let k_max = *ks.last().ok_or_else(|| {
        Error::InvalidArgument("id needs at least one k".into())
    })?;

    let (set, source) = match (&args.report, &args.input) {
        (Some(report_path), None) => {
            (report::read_scores_csv(report_path)?, report_path.display().to_string())
        }
        (None, Some(input_path)) => {
            let raw = io::load(input_path)?;
            let seq = args.preprocess.apply(&raw)?;
            let cfg = RunConfig {
                d: args.d,
                e: args.e,
                k_values: vec![k_max],
                b: args.b,
                precision: args.precision,
                threads: args.threads.filter(|&t| t > 0),
                memory_budget: args.memory_budget,
                ..RunConfig::default()
            };
            cfg.validate(seq.n())?;
            let run = rarity::score_sequence(&seq, &cfg)?;
            (run.set, input_path.display().to_string())
        }
        _ => {
            return Err(Error::InvalidArgument(
                "id needs exactly one of --report or --input".into(),
            ))
        }
    };
    if set.k_max() < k_max {
        return Err(Error::KNotInReport(k_max));
    }

    let rows: Vec<Vec<f64>> = set
        .neighbors
        .iter()
        .map(|nbrs| nbrs.iter().map(|&(_, d)| d).collect())
        .collect();
    let est = analysis::macro_id(&rows, &ks)?;
    let value = serde_json::json!({
        "tool": "trak",
        "version": env!("CARGO_PKG_VERSION"),
        "source": source,
        "k_values": est.k_values,
        "mean": est.mean,
        "std": est.std,
        "pooled": est.pooled,
        "discarded": est.discarded,
        "points": est.per_point.len(),
        "per_point": est.per_point,
    });
    write_json_or_stdout(&args.out, &value)
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let a = report::read_scores_csv(&args.a)?;
    let b = report::read_scores_csv(&args.b)?;
    let overlap = analysis::top_set_overlap(&a, &b, args.k, args.count)?;
    let value = serde_json::json!({
        "tool": "trak",
        "version": env!("CARGO_PKG_VERSION"),
        "a": args.a.display().to_string(),
        "b": args.b.display().to_string(),
        "k": args.k,
        "count": args.count,
        "common": overlap.common,
        "spearman": overlap.spearman,
    });
    write_json_or_stdout(&args.out, &value)
}

fn cmd_bench_sweep(args: SweepArgs) -> Result<()> {
    let base = args.base.bench_config(args.reps);
    let records = bench::sweep(args.var, &args.values, &base)?;
    bench::write_bench_csv(&args.out, &records)?;
    let env_path = args
        .env_out
        .unwrap_or_else(|| args.out.with_extension("env.json"));
    let env = bench::env_capture();
    std::fs::write(
        &env_path,
        serde_json::to_string_pretty(&env).expect("serializable") + "\n",
    )
    .map_err(|e| crate::error::io_error(&env_path, e))?;
    for r in &records {
        if r.skipped {
            eprintln!(
                "{}={}: skipped ({})",
                r.variable,
                r.value,
                r.skip_reason.as_deref().unwrap_or("")
            );
        } else {
            eprintln!(
                "{}={}: median total {:.3}s (norms {:.3}s, spatial {:.3}s, stream+knn {:.3}s)",
                r.variable,
                r.value,
                r.median_total_s,
                r.median.norms_s,
                r.median.spatial_s,
                r.median.stream_knn_s
            );
        }
    }
    Ok(())
}

fn cmd_bench_memory(args: MemoryArgs) -> Result<()> {
    let base = args.base.bench_config(1);
    let report = bench::memory_report(&base)?;
    let value = serde_json::to_value(&report).expect("serializable");
    write_json_or_stdout(&args.out, &value)
}

fn cmd_matrix(args: MatrixArgs) -> Result<()> {
    let raw = io::load(&args.input)?;
    let seq = args.preprocess.apply(&raw)?;
    let cfg = RunConfig {
        b: args.b,
        precision: args.precision,
        threads: args.threads.filter(|&t| t > 0),
        memory_budget: args.memory_budget,
        ..RunConfig::default()
    };
    let compute = || crate::spatial::spatial_distance_matrix(&seq, &cfg);
    let (s, stats) = match cfg.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(compute)?
        }
        None => compute()?,
    };
    io::save_matrix(&s, &args.out)?;
    eprintln!(
        "wrote {} ({}x{} {}, {} tiles)",
        args.out.display(),
        s.n(),
        s.n(),
        s.dtype(),
        stats.tiles_computed
    );
    Ok(())
}
