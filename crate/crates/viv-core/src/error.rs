//! Shared error type for the whole toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pipe model: {0}")]
    InvalidPipe(String),

    #[error("invalid current profile: {0}")]
    InvalidProfile(String),

    #[error("invalid excitation parameter set: {0}")]
    InvalidParameters(String),

    #[error("invalid S-N curve: {0}")]
    InvalidSnCurve(String),

    #[error("invalid case record: {0}")]
    InvalidCase(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no response detected: all sensor signals are zero")]
    NoResponse,

    #[error("no dominant peak: spectrum peak holds {peak_fraction:.4} of total power (< {required:.4})")]
    NoDominantPeak { peak_fraction: f64, required: f64 },

    #[error("band [{band_low:.4}, {band_high:.4}] Hz exceeds Nyquist frequency {nyquist:.4} Hz")]
    NyquistViolation {
        band_low: f64,
        band_high: f64,
        nyquist: f64,
    },

    #[error("zero stress at the fundamental frequency: stress ratio undefined")]
    ZeroFundamental,

    #[error(
        "energy balance failed to converge after {iterations} iterations \
         (bracket [{lo:.6e}, {hi:.6e}], relative residual {residual:.3e})"
    )]
    NotConverged {
        iterations: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("case '{0}' carries no measured fatigue")]
    MissingMeasuredFatigue(String),

    #[error("non-positive damage for case '{0}': measured {1:.3e}, predicted {2:.3e}")]
    NonPositiveDamage(String, f64, f64),

    #[error("case sets differ between reports: {0}")]
    MismatchedCases(String),

    #[error("clustering needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("k = {k} exceeds the number of distinct points ({distinct})")]
    TooManyClusters { k: usize, distinct: usize },

    #[error("singular mixture component {0} (collapsed covariance after regularization)")]
    SingularComponent(usize),

    #[error("affinity graph is disconnected: {components} components for k = {k}")]
    DisconnectedGraph { components: usize, k: usize },

    #[error("model has no fitted mixture: classification requires a gmm model")]
    NotAMixtureModel,

    #[error("no feasible point found within the box constraints")]
    NoFeasiblePoint,

    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
