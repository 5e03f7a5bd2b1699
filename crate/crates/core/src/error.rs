use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// Variants split into two families: input/validation problems (bad shape
/// data, schema mismatch, out-of-band heights) and numerical failures
/// (non-converging iterations). The CLI maps them to distinct exit codes via
/// [`Error::is_numerical`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("height {h} outside admissible band [{lo}, {hi}]")]
    Admissibility { h: f64, lo: f64, hi: f64 },

    #[error("point is not on the interface (level-set residual {residual:e})")]
    OffSurface { residual: f64 },

    #[error("closest-point projection did not converge after {iterations} iterations")]
    ProjectionFailure { iterations: usize },

    #[error("inverse transform did not converge (residual {residual:e})")]
    InverseFailure { residual: f64 },

    #[error("meshing failed in {region}: {reason}")]
    Meshing { region: String, reason: String },

    #[error("coefficient field is not symmetric at quadrature point {index}")]
    NonSymmetric { index: usize },

    #[error("linear solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("singular matrix in direct solve")]
    Singular,

    #[error("height band violated at node {node}, t = {time}: h = {h} outside [{lo}, {hi}]")]
    HeightBand {
        node: usize,
        time: f64,
        h: f64,
        lo: f64,
        hi: f64,
    },

    #[error("height band violated in cell {cell}, t = {time}: h = {h} outside [{lo}, {hi}]")]
    CellHeightBand {
        cell: usize,
        time: f64,
        h: f64,
        lo: f64,
        hi: f64,
    },

    #[error("Picard iteration did not converge at t = {time} (last increment {increment:e})")]
    PicardFailure { time: f64, increment: f64 },

    #[error("fixed-point iteration did not converge in {iterations} iterations; increments {history:?}")]
    FixedPointFailure { iterations: usize, history: Vec<f64> },

    #[error("time horizon violated: T = {t_end} exceeds a*/(10 M) = {horizon} (M = {max_velocity})")]
    Horizon {
        t_end: f64,
        horizon: f64,
        max_velocity: f64,
    },

    #[error("table invariant violated: {0}")]
    TableInvariant(String),

    #[error("incompatible table: {0}")]
    TableMismatch(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("output cadence mismatch: {0}")]
    Cadence(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ProjectionFailure { .. }
                | Error::InverseFailure { .. }
                | Error::Meshing { .. }
                | Error::SolverFailure { .. }
                | Error::Singular
                | Error::HeightBand { .. }
                | Error::CellHeightBand { .. }
                | Error::PicardFailure { .. }
                | Error::FixedPointFailure { .. }
                | Error::Horizon { .. }
        )
    }

    /// Short machine-readable tag for structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidShape(_) => "invalid_shape",
            Error::Admissibility { .. } => "admissibility",
            Error::OffSurface { .. } => "off_surface",
            Error::ProjectionFailure { .. } => "projection_failure",
            Error::InverseFailure { .. } => "inverse_failure",
            Error::Meshing { .. } => "meshing",
            Error::NonSymmetric { .. } => "non_symmetric",
            Error::SolverFailure { .. } => "solver_failure",
            Error::Singular => "singular",
            Error::HeightBand { .. } | Error::CellHeightBand { .. } => "height_band",
            Error::PicardFailure { .. } => "picard_failure",
            Error::FixedPointFailure { .. } => "fixed_point_failure",
            Error::Horizon { .. } => "horizon",
            Error::TableInvariant(_) => "table_invariant",
            Error::TableMismatch(_) => "table_mismatch",
            Error::Version { .. } => "version",
            Error::Cadence(_) => "cadence",
            Error::Invalid(_) => "invalid",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
