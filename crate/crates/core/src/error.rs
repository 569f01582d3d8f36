use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A bias or pump current outside the validity range of the
    /// current-dependent inductance model.
    #[error("current {current:.4e} A outside validity range |I| < {limit:.4e} A")]
    CurrentRange { current: f64, limit: f64 },

    /// Pump strength at or above the parametric self-oscillation threshold.
    #[error("pump strength {xi:.6e} rad/s at or above threshold {threshold:.6e} rad/s")]
    PumpThreshold { xi: f64, threshold: f64 },

    /// Reflection denominator too close to a pole for a meaningful value.
    #[error("denominator magnitude {magnitude:.3e} below pole guard {guard:.3e}")]
    Pole { magnitude: f64, guard: f64 },

    /// A frequency target never reached by the transition in the interval.
    #[error("transition does not cross the target frequency in [{lo:.4e}, {hi:.4e}] T")]
    NoCrossing { lo: f64, hi: f64 },

    #[error("eigensolver did not converge after {iterations} sweeps")]
    EigenConvergence { iterations: usize },

    #[error("elliptic integral iteration did not converge")]
    EllipticConvergence,

    #[error("adaptive quadrature did not converge")]
    QuadratureConvergence,

    #[error("amplifier gain is unity; added-noise referral is undefined")]
    DegenerateInput,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("singular Jacobian in least-squares solve")]
    SingularJacobian,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
