use thiserror::Error;

/// Errors produced by the modelling chain.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical or dimensionless parameter violates its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The scalar root find for (Gamma, Delta) did not converge.
    #[error("parameter closure failed: {0}")]
    ClosureFailed(String),

    /// A vector handed to the mode machinery is not a null vector of M(s).
    #[error("not a characteristic root: |det M(s)| = {det_mag:.3e} at s = {s}")]
    NotARoot {
        s: num_complex::Complex64,
        det_mag: f64,
    },

    /// Mode vectors are too close to collinear to build a dual basis.
    #[error("near-degenerate mode vectors (condition number {cond:.3e}); dual basis undefined at double resonance")]
    DegenerateModes { cond: f64 },

    /// The requested modulation drives a quadrature beyond its damping.
    #[error("modulation depth {depth:.6e} at or above parametric threshold m_c = {threshold:.6e}")]
    AboveThreshold { depth: f64, threshold: f64 },

    /// The shifted-frequency linear system is singular at this grid point.
    #[error("singular spectral system at x = {x} (parametric oscillation threshold crossed)")]
    SingularSystem { x: f64 },

    /// Requested demodulation offset overlaps the other sideband.
    #[error("demodulation offset |x| = {x} exceeds the sideband separation limit {limit}")]
    BandOverlap { x: f64, limit: f64 },

    /// The time-domain integration left the stationary regime.
    #[error("simulation blew up at t = {t}: |{quadrature}| grew by more than {factor:.1e}x")]
    BlowUp {
        t: f64,
        quadrature: &'static str,
        factor: f64,
    },

    /// A trajectory is too short for the requested estimate.
    #[error("trajectory too short: {need} samples needed, {have} available")]
    TooShort { need: usize, have: usize },

    /// Scenario configuration is inconsistent or incomplete.
    #[error("config error: {0}")]
    Config(String),

    /// Unknown detector preset name.
    #[error("unknown preset '{0}' (built-ins: aLIGO, ET, GP, AEI, Gingin)")]
    UnknownPreset(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
