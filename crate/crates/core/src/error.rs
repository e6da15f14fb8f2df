use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("non-finite values encountered in {0}")]
    NonFinite(&'static str),

    #[error("metric is singular or not positive definite at point {point}")]
    SingularMetric { point: usize },

    #[error("metric family loses positive definiteness at x = {x:.6e}")]
    LossOfPositivity { x: f64 },

    #[error("operation requires boundary dimension >= 3 (got n = {0})")]
    DimensionTooLow(usize),

    #[error("collar coordinate x = {x:.6e} outside [0, {x_max:.6e}]")]
    OutsideCollar { x: f64, x_max: f64 },

    #[error("Hamilton-Jacobi discriminant non-positive at x = {x:.6e} (gradient too large for collar depth)")]
    DiscriminantFailure { x: f64 },

    #[error("characteristic crossing detected at x = {x:.6e}")]
    CharacteristicCrossing { x: f64 },

    #[error("no level-set bracket inside the ladder for eps = {eps:.6e} (ladder reaches x = {x_top:.6e})")]
    NoBracket { eps: f64, x_top: f64 },

    #[error("finite-difference step-size breakdown: directional derivatives at two steps disagree by {rel:.3e} relative")]
    StepBreakdown { rel: f64 },

    #[error("Newton iteration failed to converge: residual {residual:.3e} after {iters} iterations")]
    NewtonDiverged { residual: f64, iters: usize },

    #[error("eps = {eps:.6e} is resonant or too close to a resonance (min |eig| = {min_eig:.3e} <= gate {gate:.3e})")]
    ResonantEpsilon { eps: f64, min_eig: f64, gate: f64 },

    #[error("eigenvalue solver failed to converge: {0}")]
    EigenFailure(String),

    #[error("linear solver failed: {0}")]
    LinearSolveFailure(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("sign incompatibility: {0}")]
    SignIncompatibility(String),

    #[error("spectral coefficient decay lost during iteration (tail fraction {tail:.3e}); aborting")]
    SpectralBlowup { tail: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("leaves overlap: foliation ordering violated between eps = {eps_a:.6e} and eps = {eps_b:.6e}")]
    OverlappingLeaves { eps_a: f64, eps_b: f64 },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
