//! From internal quadratures to measurable output light.
//!
//! The output phase quadrature is `a2_out = -a2_in - 2 kappa b1`. Demodulating
//! it at the pump half-frequency p forms
//!
//! ```text
//! A^(+-)(x) = [a2_out(x + p) +- a2_out(x - p)] / sqrt(2)
//! ```
//!
//! and the intracavity components at `x +- p` are exactly linear combinations
//! of the four shifted slow amplitudes solved per grid point:
//! `b1(x + p) = V1 U1 + V2 U2`, `b1(x - p) = V1 U1^dag + V2 U2^dag`. The
//! input channel `a2_in` appears both directly and through the cavity, so the
//! chain is evaluated as one linear map over the stacked six-channel noise
//! vector; input-output correlations are exact by construction.
//!
//! All exported spectra are normalized to the shot-noise level (the PSD of a
//! demodulated bare vacuum quadrature, 1/2), which also cancels the kappa
//! bookkeeping scale.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::lu_factor;
use crate::modes::ModeSet;
use crate::noise::{forcing_transfer, NoiseModel};
use crate::params::{system_matrix, DimensionlessParams, ModulationParams};
use crate::spectra::{coupled_transfer, stacked_channel_psd, SolverOptions, SolverWarning};

type C = Complex64;

/// Shot-noise PSD of one demodulated vacuum quadrature.
pub const SHOT_LEVEL: f64 = 0.5;

/// Coefficients of the instantaneous output relation
/// `a2_out = -a2_in - 2 kappa b1`, as (input, cavity).
pub fn output_quadrature_transfer(dp: &DimensionlessParams) -> (f64, f64) {
    (-1.0, -2.0 * dp.kappa)
}

/// Shot-normalized output spectra of the demodulated quadratures.
#[derive(Debug, Clone)]
pub struct OutputSpectrum {
    pub grid: Vec<f64>,
    /// PSD of A^(+), normalized to shot noise.
    pub s_a_plus: Vec<f64>,
    /// PSD of A^(-), normalized to shot noise.
    pub s_a_minus: Vec<f64>,
    /// Which mode the demodulation is tuned to (the resonantly pumped one).
    pub mode_index: usize,
    /// Real mode weight V_j of that mode.
    pub weight: f64,
    pub modulation: ModulationParams,
    pub warnings: Vec<SolverWarning>,
}

/// Linear rows of `a2_out(x + p)` and `a2_out(x - p)` over the stacked noise
/// channels, with per-mode readout weights (normally `[V1, V2]`; zero an
/// entry to drop that mode's contribution for diagnostics).
pub fn output_rows(
    x: f64,
    modes: &ModeSet,
    epsilon: &[[C; 2]; 2],
    dp: &DimensionlessParams,
    p: f64,
    bands: [f64; 2],
    mode_weights: [f64; 2],
) -> Result<([C; 6], [C; 6])> {
    let r = coupled_transfer(x, modes, epsilon, dp, p, bands)?;
    let (input_coeff, cavity_coeff) = output_quadrature_transfer(dp);
    let mut plus = [C::new(0.0, 0.0); 6];
    let mut minus = [C::new(0.0, 0.0); 6];
    // Direct input reflection: a2_in(x + p) is channel 1 of the plus block,
    // a2_in(x - p) channel 1 of the conjugate block.
    plus[1] = C::new(input_coeff, 0.0);
    minus[4] = C::new(input_coeff, 0.0);
    for ch in 0..6 {
        for j in 0..2 {
            plus[ch] += cavity_coeff * mode_weights[j] * r[2 * j][ch];
            minus[ch] += cavity_coeff * mode_weights[j] * r[2 * j + 1][ch];
        }
    }
    Ok((plus, minus))
}

fn quadratic_form_6(row: &[C; 6], sn: &[f64; 6]) -> f64 {
    row.iter()
        .zip(sn.iter())
        .map(|(c, s)| c.norm_sqr() * s)
        .sum()
}

/// Shot-normalized PSD of the demodulated combination
/// `[a2_out(x + p) e^{i phi} + a2_out(x - p) e^{-i phi}] / sqrt(2)`.
/// `phi = 0` gives A^(+), `phi = pi/2` gives A^(-).
pub fn demod_psd_at(
    x: f64,
    phi_m: f64,
    modes: &ModeSet,
    epsilon: &[[C; 2]; 2],
    dp: &DimensionlessParams,
    noise: &NoiseModel,
    p: f64,
    bands: [f64; 2],
) -> Result<f64> {
    let (plus, minus) = output_rows(
        x,
        modes,
        epsilon,
        dp,
        p,
        bands,
        [modes.modes[0].weight(), modes.modes[1].weight()],
    )?;
    let sn = stacked_channel_psd(x, p, noise);
    let e_plus = C::from_polar(1.0, phi_m);
    let e_minus = e_plus.conj();
    let mut row = [C::new(0.0, 0.0); 6];
    for ch in 0..6 {
        row[ch] = (e_plus * plus[ch] + e_minus * minus[ch]) * std::f64::consts::FRAC_1_SQRT_2;
    }
    Ok(quadratic_form_6(&row, &sn) / SHOT_LEVEL)
}

/// Full-chain output spectra for the demodulation tuned to the pump.
pub fn output_psd(
    modes: &ModeSet,
    modulation: &ModulationParams,
    grid: &[f64],
    dp: &DimensionlessParams,
    noise: &NoiseModel,
    options: &SolverOptions,
) -> Result<OutputSpectrum> {
    let epsilon = modes.epsilon_matrix(modulation);
    let p = modulation.pump_half_frequency;
    let bands = [options.band(modes, 0), options.band(modes, 1)];
    let warnings = options.validate_bands(modes);
    // Which mode is the demodulation tuned to?
    let mode_index =
        if (p - modes.modes[0].frequency()).abs() <= (p - modes.modes[1].frequency()).abs() {
            0
        } else {
            1
        };
    let weights = [modes.modes[0].weight(), modes.modes[1].weight()];
    let n = grid.len();
    let mut s_a_plus = vec![0.0; n];
    let mut s_a_minus = vec![0.0; n];
    for (k, &x) in grid.iter().enumerate() {
        let (plus, minus) = output_rows(x, modes, &epsilon, dp, p, bands, weights)?;
        let sn = stacked_channel_psd(x, p, noise);
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let mut row_p = [C::new(0.0, 0.0); 6];
        let mut row_m = [C::new(0.0, 0.0); 6];
        for ch in 0..6 {
            row_p[ch] = (plus[ch] + minus[ch]) * inv;
            row_m[ch] = (plus[ch] - minus[ch]) * inv;
        }
        s_a_plus[k] = quadratic_form_6(&row_p, &sn) / SHOT_LEVEL;
        s_a_minus[k] = quadratic_form_6(&row_m, &sn) / SHOT_LEVEL;
    }
    Ok(OutputSpectrum {
        grid: grid.to_vec(),
        s_a_plus,
        s_a_minus,
        mode_index,
        weight: weights[mode_index],
        modulation: *modulation,
        warnings,
    })
}

/// Shot-normalized PSD of the output field at an absolute dimensionless
/// frequency y (solved through the slow-amplitude chain at x = y - p).
pub fn output_field_psd(
    y: f64,
    modes: &ModeSet,
    epsilon: &[[C; 2]; 2],
    dp: &DimensionlessParams,
    noise: &NoiseModel,
    p: f64,
    bands: [f64; 2],
) -> Result<f64> {
    let x = y - p;
    let (plus, _minus) = output_rows(
        x,
        modes,
        epsilon,
        dp,
        p,
        bands,
        [modes.modes[0].weight(), modes.modes[1].weight()],
    )?;
    let sn = stacked_channel_psd(x, p, noise);
    Ok(quadratic_form_6(&plus, &sn) / SHOT_LEVEL)
}

/// Shot-normalized PSD of the demodulated output for an arbitrary carrier.
///
/// For a carrier at the pump half-frequency the sideband components are
/// correlated through the parametric coupling and the exact resonant route is
/// used. For any other carrier the two sidebands are driven by disjoint
/// noise frequencies, so the PSD is the uncorrelated average
/// `[S_out(carrier + x) + S_out(carrier - x)] / 2`, independent of phi_m.
pub fn demod_combination(
    x: f64,
    carrier: f64,
    phi_m: f64,
    modes: &ModeSet,
    modulation: &ModulationParams,
    dp: &DimensionlessParams,
    noise: &NoiseModel,
    options: &SolverOptions,
) -> Result<f64> {
    let separation = modes.modes[1].frequency() - modes.modes[0].frequency();
    let limit = carrier.min(separation) / 2.0;
    if x.abs() >= limit {
        return Err(Error::BandOverlap { x: x.abs(), limit });
    }
    let epsilon = modes.epsilon_matrix(modulation);
    let p = modulation.pump_half_frequency;
    let bands = [options.band(modes, 0), options.band(modes, 1)];
    if (carrier - p).abs() < 1e-9 {
        demod_psd_at(x, phi_m, modes, &epsilon, dp, noise, p, bands)
    } else {
        let upper = output_field_psd(carrier + x, modes, &epsilon, dp, noise, p, bands)?;
        let lower = output_field_psd(carrier - x, modes, &epsilon, dp, noise, p, bands)?;
        Ok(0.5 * (upper + lower))
    }
}

/// Contribution of the off-resonant mode to the demodulated output at grid
/// point x: shot-normalized PSDs computed with both modes and with the
/// pumped mode only. Used to check that a single summand dominates the
/// readout combination near x = 0.
pub fn mode_contribution_split(
    x: f64,
    modes: &ModeSet,
    modulation: &ModulationParams,
    dp: &DimensionlessParams,
    noise: &NoiseModel,
    options: &SolverOptions,
) -> Result<(f64, f64)> {
    let epsilon = modes.epsilon_matrix(modulation);
    let p = modulation.pump_half_frequency;
    let bands = [options.band(modes, 0), options.band(modes, 1)];
    let sn = stacked_channel_psd(x, p, noise);
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let full_weights = [modes.modes[0].weight(), modes.modes[1].weight()];
    let single_weights = [modes.modes[0].weight(), 0.0];
    let mut out = [0.0; 2];
    for (slot, weights) in [(0usize, full_weights), (1usize, single_weights)] {
        let (plus, minus) = output_rows(x, modes, &epsilon, dp, p, bands, weights)?;
        let mut row = [C::new(0.0, 0.0); 6];
        for ch in 0..6 {
            row[ch] = (plus[ch] + minus[ch]) * inv;
        }
        out[slot] = quadratic_form_6(&row, &sn) / SHOT_LEVEL;
    }
    Ok((out[0], out[1]))
}

/// Exact input-output route, valid at zero modulation: the output PSD at
/// absolute frequency y through the full 2x2 transfer, with no slow-amplitude
/// approximation. Serves as an independent check of the modal chain.
pub fn exact_output_field_psd(y: f64, dp: &DimensionlessParams, noise: &NoiseModel) -> Result<f64> {
    let m = system_matrix(y, dp);
    let lu = lu_factor(m).ok_or(Error::SingularSystem { x: y })?;
    let ct = forcing_transfer(y, dp);
    // b1 response to each scaled channel: first component of M^-1 C(:, ch);
    // the 1/kappa of the forcing cancels the kappa of the output coupling.
    let (input_coeff, cavity_coeff) = output_quadrature_transfer(dp);
    let mut row = [C::new(0.0, 0.0); 3];
    for ch in 0..3 {
        let sol = lu.solve(&[ct[0][ch], ct[1][ch]]);
        row[ch] = (cavity_coeff / dp.kappa) * sol[0];
    }
    row[1] += C::new(input_coeff, 0.0);
    let s = noise.channel_psd(y);
    Ok(row
        .iter()
        .zip(s.iter())
        .map(|(c, sv)| c.norm_sqr() * sv)
        .sum::<f64>()
        / SHOT_LEVEL)
}
