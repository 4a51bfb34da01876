use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Each failure mode the file formats, the
/// configuration validator, and the analysis utilities can hit is a distinct
/// variant so callers (and the CLI exit-code map) can tell them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u32),

    #[error("invalid dimensions n={n}, h={h}, w={w}")]
    InvalidDims { n: u64, h: u64, w: u64 },

    #[error("payload length mismatch: header implies {expected} elements, file carries {actual}")]
    PayloadMismatch { expected: u64, actual: u64 },

    #[error("non-finite value {value} at element {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("csv parse error at line {line}: {msg}")]
    CsvParse { line: usize, msg: String },

    #[error("report parse error at line {line}: {msg}")]
    ReportParse { line: usize, msg: String },

    #[error("negative weight {value} at grid point {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("latitude {0} outside [-90, 90] degrees")]
    LatitudeOutOfRange(f64),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(
        "infeasible config: only {admissible} admissible candidates for k={k} \
         (m={m} trajectories, exclusion zone e={e})"
    )]
    Infeasible {
        m: usize,
        e: usize,
        k: usize,
        admissible: usize,
    },

    #[error("allocation of {bytes} bytes failed")]
    Allocation { bytes: u64 },

    #[error("memory budget exceeded: need {required} bytes, budget is {budget}")]
    BudgetExceeded { required: u64, budget: u64 },

    #[error("k={0} is not present in the report")]
    KNotInReport(usize),

    #[error("rank correlation undefined: zero rank variance")]
    DegenerateRanks,

    #[error("neighbor distance is zero: local intrinsic dimension undefined")]
    ZeroNeighborDistance,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "Io",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::UnsupportedVersion(_) => "UnsupportedVersion",
            Error::UnsupportedDtype(_) => "UnsupportedDtype",
            Error::InvalidDims { .. } => "InvalidDims",
            Error::PayloadMismatch { .. } => "PayloadMismatch",
            Error::NonFinite { .. } => "NonFinite",
            Error::CsvParse { .. } => "CsvParse",
            Error::ReportParse { .. } => "ReportParse",
            Error::NegativeWeight { .. } => "NegativeWeight",
            Error::LatitudeOutOfRange(_) => "LatitudeOutOfRange",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Infeasible { .. } => "Infeasible",
            Error::Allocation { .. } => "Allocation",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::KNotInReport(_) => "KNotInReport",
            Error::DegenerateRanks => "DegenerateRanks",
            Error::ZeroNeighborDistance => "ZeroNeighborDistance",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }

    /// Process exit code for the CLI. Documented in the README.
    ///
    /// 3 = configuration / feasibility, 4 = i/o, 5 = format / parse,
    /// 6 = data validation, 7 = resources, 8 = degenerate analysis input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_)
            | Error::Infeasible { .. }
            | Error::KNotInReport(_)
            | Error::InvalidArgument(_) => 3,
            Error::Io { .. } => 4,
            Error::MalformedHeader(_)
            | Error::UnsupportedVersion(_)
            | Error::UnsupportedDtype(_)
            | Error::InvalidDims { .. }
            | Error::PayloadMismatch { .. }
            | Error::CsvParse { .. }
            | Error::ReportParse { .. } => 5,
            Error::NonFinite { .. }
            | Error::NegativeWeight { .. }
            | Error::LatitudeOutOfRange(_) => 6,
            Error::Allocation { .. } | Error::BudgetExceeded { .. } => 7,
            Error::DegenerateRanks | Error::ZeroNeighborDistance => 8,
        }
    }
}

pub(crate) fn io_error(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
    Error::Io {
        path: path.into(),
        source,
    }
}
