use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DnkgError {
    #[error("invalid model parameters: {0}")]
    SubcriticalityViolation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("tail not resolved: {0}")]
    TailNotResolved(String),

    #[error("spectral anomaly: {0}")]
    SpectralAnomaly(String),

    #[error("separation floor reached at t = {t:.6e} (distance {distance:.4})")]
    SeparationFloor { t: f64, distance: f64 },

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("all three signs are equal; no three-soliton interpretation")]
    SignPatternUnsupported,

    #[error("asymptotic fit diverged: {0}")]
    FitDiverged(String),

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("CFL violation: dt = {dt} exceeds 0.8 h = {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("blowup at t = {t:.4}: max |u| = {max_abs:.4e}")]
    Blowup { t: f64, max_abs: f64 },

    #[error("modulation Newton iteration diverged at t = {t:.4} after {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged {
        t: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("smallness precondition violated at t = {t:.4}: distance {distance:.4e} > {threshold}")]
    SmallnessViolated {
        t: f64,
        distance: f64,
        threshold: f64,
    },
}

pub type Result<T> = std::result::Result<T, DnkgError>;
