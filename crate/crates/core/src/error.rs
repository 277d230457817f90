use thiserror::Error;

/// Unified error type for all pipeline stages.
///
/// Every variant carries enough context to be reported without a backtrace,
/// and [`Error::category`] gives a stable machine-readable tag that the CLI
/// maps to exit codes.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input violates a documented precondition (bad geometry, empty mask,
    /// mismatched grids, values out of range).
    #[error("invalid input: {0}")]
    Validation(String),

    /// The request is well-formed but exceeds a hard resource cap.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// An area budget is too small for the requested construction.
    #[error("infeasible budget: {0}")]
    InfeasibleBudget(String),

    /// The grid is too coarse for the requested tolerance; `required_level`
    /// is a best-effort estimate of a sufficient dyadic level.
    #[error("grid too coarse: {message} (estimated sufficient level k = {required_level})")]
    Resolution {
        message: String,
        required_level: u32,
    },

    /// The operation needs an evaluation method the series description
    /// does not carry (e.g. continuation data for a strip evaluation).
    #[error("capability missing: {0}")]
    Capability(String),

    /// Requested accuracy cannot be certified in f64 arithmetic.
    #[error("precision unachievable: {0}")]
    Precision(String),

    /// Evaluation point is within the safety margin of a pole.
    #[error("pole too close: {0}")]
    PoleProximity(String),

    /// Argument tracking along a contour failed (probable zero on or near
    /// the contour). The offending segment endpoints are reported.
    #[error("contour failure between {from} and {to}: {message}")]
    Contour {
        from: num_complex::Complex64,
        to: num_complex::Complex64,
        message: String,
    },

    /// Pointwise dominance |f-g| < |g| fails at a sample.
    #[error("dominance fails at sample {index}: |f-g| = {difference}, |g| = {reference}")]
    Dominance {
        index: usize,
        difference: f64,
        reference: f64,
    },

    /// Sampled contour is too coarse to certify a winding number.
    #[error("undersampled contour: {0}")]
    Undersampled(String),

    /// A geometric construction cannot be realized (margins, coverings).
    #[error("geometry: {0}")]
    Geometry(String),

    /// Polynomial degree or conditioning cap reached before the target
    /// error; carries the best error achieved.
    #[error("degree limit: {message} (best error {best_error})")]
    DegreeLimit { message: String, best_error: f64 },

    /// Malformed serialized artifact.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable category tag for machine-readable error reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::ResourceLimit(_) => "resource-limit",
            Error::InfeasibleBudget(_) => "infeasible-budget",
            Error::Resolution { .. } => "resolution",
            Error::Capability(_) => "capability",
            Error::Precision(_) => "precision",
            Error::PoleProximity(_) => "pole-proximity",
            Error::Contour { .. } => "contour",
            Error::Dominance { .. } => "dominance",
            Error::Undersampled(_) => "undersampled",
            Error::Geometry(_) => "geometry",
            Error::DegreeLimit { .. } => "degree-limit",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
