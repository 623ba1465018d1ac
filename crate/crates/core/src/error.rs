//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size mismatch: expected {expected} nodes, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("component index {j} out of range for M = {m}")]
    ComponentOutOfRange { j: usize, m: usize },

    #[error("domain kind {got} not supported here (need {expected})")]
    DomainKind {
        expected: &'static str,
        got: &'static str,
    },

    #[error("fields live on different domains")]
    DomainMismatch,

    #[error("invalid domain parameter: {0}")]
    InvalidDomain(String),

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("L^p norm requires p >= 1, got {0}")]
    InvalidExponentP(f64),

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("structural form violated: {0}")]
    FormViolation(String),

    #[error("eta_{side} not available analytically for this nonlinearity")]
    EtaUnavailable { side: &'static str },

    #[error("mass threshold condition ({which}) violated: lhs = {lhs}")]
    ThresholdViolated { which: &'static str, lhs: f64 },

    #[error("trial dilation interval empty: [{lower}, {upper}) — mass below the admissible range")]
    TrialIntervalEmpty { lower: f64, upper: f64 },

    #[error("negative-energy scan failed after {tried} dilation samples")]
    TrialScanFailed { tried: usize },

    #[error("shooting bracket not found in w(0) ∈ ({lo}, {hi})")]
    BracketNotFound { lo: f64, hi: f64 },

    #[error("mass components must be positive (a_{j} = {value})")]
    InvalidMass { j: usize, value: f64 },

    #[error("field is identically zero where a nonzero field is required")]
    ZeroField,

    #[error("profile is not nondecreasing on [0, ∞): F({t0}) = {v0} > F({t1}) = {v1}")]
    NotMonotone { t0: f64, v0: f64, t1: f64, v1: f64 },

    #[error("non-finite sample encountered at |u| = {radius}")]
    NonFiniteSample { radius: f64 },

    #[error("radii schedule must be monotone")]
    ScheduleNotMonotone,

    #[error("time step must be positive, got {0}")]
    NonPositiveTimeStep(f64),

    #[error("orbit sample set is empty")]
    EmptyOrbitSet,

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
