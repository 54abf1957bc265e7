//! Error types for each layer of the solver.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("horizontal sample count {axis} = {value} must be even and at least 4")]
    BadHorizontal { axis: &'static str, value: usize },
    #[error("vertical cell count nz = {0} must be at least 3")]
    BadVertical(usize),
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("field has {got} samples, expected {expected}")]
    DimensionMismatch { expected: String, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("co-albedo bounds must satisfy 0 < beta1 < beta2, got beta1 = {beta1}, beta2 = {beta2}")]
    CoAlbedo { beta1: f64, beta2: f64 },
    #[error("solar field must be nonnegative and bounded: q0 = {q0} (>= 0), q1 = {q1} (|q1| < 1)")]
    Solar { q0: f64, q1: f64 },
    #[error("forcing period must be positive and finite, got {0}")]
    Period(f64),
    #[error("forcing mode {index}: {reason}")]
    Mode { index: usize, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("blow-up at t = {t}: L2 norm of {field} reached {norm:e} (threshold {threshold:e})")]
    BlowUp {
        t: f64,
        field: &'static str,
        norm: f64,
        threshold: f64,
    },
    #[error("non-finite value in {field} at t = {t}")]
    NotFinite { t: f64, field: &'static str },
    #[error(
        "reaction step-size guard violated at t = {t}: dt*4*max|rho|^3 = {value:.4} >= 1; reduce dt"
    )]
    ReactionGuard { t: f64, value: f64 },
    #[error("implicit solve residual {residual:e} exceeds 1e-9 (internal error)")]
    Solver { residual: f64 },
    #[error("initial state violates the barotropic constraint: max|div_H vbar| = {0:e}")]
    Constraint(f64),
    #[error("end time {t_end} precedes the state time {t}")]
    EndTime { t: f64, t_end: f64 },
    #[error("state shape does not match the grid")]
    Shape,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("period {period} is not an integer multiple of dt = {dt}")]
    NonIntegerPeriod { period: f64, dt: f64 },
    #[error("invalid orbit configuration: {0}")]
    Config(String),
    #[error("forcing is time dependent; steady-state search needs constant forcing")]
    TimeDependentForcing,
    #[error(transparent)]
    Step(#[from] StepError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("time {0} is not a sample time of the trace")]
    TimeOutsideTrace(f64),
    #[error("interval start {s} is not before end {t}")]
    EmptyInterval { s: f64, t: f64 },
    #[error("trajectories do not match: {0}")]
    Mismatch(String),
    #[error("trace parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a snapshot file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("snapshot checksum mismatch (file truncated or corrupted)")]
    Checksum,
    #[error("snapshot grid {found:?} does not match current grid {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize, usize),
        found: (usize, usize, usize),
    },
}
