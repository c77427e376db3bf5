use thiserror::Error;

/// Errors surfaced by the simulation and analysis layers.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resolvent is singular at kappa = 0")]
    SingularResolvent,

    #[error("degenerate potential: F has no nonzero Fourier coefficient")]
    DegeneratePotential,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "phase bracket failure between kappa = {kappa_lo} and kappa = {kappa_hi}: {detail}"
    )]
    BracketFailure {
        kappa_lo: f64,
        kappa_hi: f64,
        detail: String,
    },

    #[error("root finding left the asymptotic regime: {0}")]
    AsymptoticRegime(String),

    #[error("quadrature did not stabilise: {0}")]
    QuadratureDivergence(String),

    #[error("empty sample")]
    EmptySample,

    #[error("phase {0} outside [0, pi)")]
    PhaseOutOfRange(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}
