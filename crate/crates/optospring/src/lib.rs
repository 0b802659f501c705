//! Parametric squeezing of optomechanical eigenmodes in a detuned
//! Fabry-Perot cavity with an optical spring and derivative feedback.
//!
//! The toolkit models the coupled intracavity-field/mirror system as a
//! linear stochastic system, finds its two optomechanical eigenmodes, and
//! predicts what harmonic pump-power modulation at twice a mode frequency
//! does to the noise in that mode's quadratures and in the light leaving the
//! cavity. A time-domain Monte Carlo integrator provides an independent
//! cross-check of every spectral prediction, and coating Brownian noise
//! budgets quantify how far real detector configurations are from the
//! quantum-dominated regime.
//!
//! Walk through `examples/` for one runnable program per capability:
//!
//! * `modes_survey` -- eigenmodes, dampings, stability, critical depth;
//! * `parameter_closure` -- (Gamma, Delta) from detector data;
//! * `squeezing_spectra` -- internal quadrature PSDs vs modulation depth;
//! * `output_spectra` -- shot-normalized spectra of the demodulated output;
//! * `xi_table` -- thermal-influence factors for the built-in detectors;
//! * `mc_crosscheck` -- the Monte Carlo oracle against the spectral chain.
//!
//! The `optospring` binary wraps the same functionality as four subcommands
//! (`modes`, `spectrum`, `xi`, `oracle`).

// Dense small-matrix code indexes several arrays in lockstep; iterator
// rewrites of those loops read worse. Wide physics signatures are kept
// explicit rather than bundled.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]
#![allow(clippy::manual_is_multiple_of)]

pub mod cli;
pub mod error;
pub mod linalg;
pub mod modes;
pub mod noise;
pub mod oracle;
pub mod params;
pub mod presets;
pub mod readout;
pub mod spectra;

pub use error::{Error, Result};
pub use modes::{mode_set, EigenMode, ModeSet};
pub use noise::{
    forcing_cross_spectrum, thermal_psd, xi_factor, CoatingParams, DetectorPreset, NoiseModel,
    ThermalChannel,
};
pub use params::{
    close_parameters, system_matrix, to_dimensionless, DimensionlessParams, ModulationParams,
    PhysicalParams,
};
pub use readout::{output_psd, OutputSpectrum};
pub use spectra::{decoupled_psd, quadrature_psd, QuadratureSpectrum, SolverOptions};
