//! Cavity parameters in SI and dimensionless form, and the spectral-domain
//! system matrix.
//!
//! The model is a detuned Fabry-Perot cavity with one movable mirror and a
//! derivative feedback on the measured phase quadrature. In dimensionless
//! variables the equations of motion read
//!
//! ```text
//! b1'' + g b1' + 2 b1 + A z = nu1
//! z''  - A b1  - alpha b1'  = nu2
//! ```
//!
//! with `b1` the intracavity amplitude quadrature and `z` the scaled mirror
//! displacement. In the spectral domain (`d/dt -> -i x`) the left-hand side
//! becomes the 2x2 matrix [`system_matrix`] acting on `(b1, z)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Cavity and pump description in SI units.
///
/// `detuning` is positive for a blue-detuned pump; this sign convention is
/// what makes the optical spring restoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Arm length L, m.
    pub arm_length: f64,
    /// Reduced mass mu of the equivalent movable mirror, kg.
    pub reduced_mass: f64,
    /// Mean circulating power P of the equivalent cavity, W.
    pub circulating_power: f64,
    /// Pump wavelength lambda, m.
    pub wavelength: f64,
    /// Optical relaxation rate Gamma, 1/s.
    pub relaxation_rate: f64,
    /// Pump detuning Delta (> 0), rad/s.
    pub detuning: f64,
    /// Feedback gain alpha_fb, 1/s: the fed-back force is
    /// `f_fb = -mu * alpha_fb * d(a2_out)/dt`.
    pub feedback_gain: f64,
}

impl PhysicalParams {
    /// One-way light travel time tau = L/c, s.
    pub fn one_way_time(&self) -> f64 {
        self.arm_length / SPEED_OF_LIGHT
    }

    /// Pump carrier frequency omega_0 = 2 pi c / lambda, rad/s.
    pub fn pump_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / self.wavelength
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            (self.arm_length, "arm_length"),
            (self.reduced_mass, "reduced_mass"),
            (self.circulating_power, "circulating_power"),
            (self.wavelength, "wavelength"),
            (self.relaxation_rate, "relaxation_rate"),
        ];
        for (v, name) in pos {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if !self.detuning.is_finite() || self.detuning <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "detuning must be > 0 (blue-detuned pump), got {}",
                self.detuning
            )));
        }
        if !self.feedback_gain.is_finite() || self.feedback_gain < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "feedback_gain must be >= 0, got {}",
                self.feedback_gain
            )));
        }
        Ok(())
    }
}

/// The dimensionless parameter set (A, g, alpha) plus the bookkeeping scale
/// kappa = sqrt(Gamma tau).
///
/// Every exported spectrum is either a ratio or normalized to shot noise, so
/// kappa cancels analytically; it is kept as an explicit field (default 1) to
/// document that cancellation and to allow an audit run with kappa != 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    /// Optomechanical coupling A (proportional to pump power).
    pub coupling: f64,
    /// Optical damping g = 2 sqrt(2) Gamma / sqrt(Gamma^2 + Delta^2).
    pub optical_damping: f64,
    /// Feedback coefficient alpha.
    pub feedback: f64,
    /// Bookkeeping scale kappa = sqrt(Gamma tau); default 1.
    pub kappa: f64,
}

pub const G_UPPER_LIMIT: f64 = 2.0 * std::f64::consts::SQRT_2;

impl DimensionlessParams {
    pub fn new(coupling: f64, optical_damping: f64, feedback: f64) -> Result<Self> {
        let dp = Self {
            coupling,
            optical_damping,
            feedback,
            kappa: 1.0,
        };
        dp.validate()?;
        Ok(dp)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kappa must be > 0, got {kappa}"
            )));
        }
        self.kappa = kappa;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.coupling.is_finite() || self.coupling <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coupling A must be > 0, got {}",
                self.coupling
            )));
        }
        // g = 2 sqrt(2) Gamma / sqrt(Gamma^2 + Delta^2) is confined to (0, 2 sqrt 2).
        if !self.optical_damping.is_finite()
            || self.optical_damping <= 0.0
            || self.optical_damping >= G_UPPER_LIMIT
        {
            return Err(Error::InvalidParameter(format!(
                "optical damping g must lie in (0, 2*sqrt(2)), got {}",
                self.optical_damping
            )));
        }
        if !self.feedback.is_finite() || self.feedback < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "feedback alpha must be >= 0, got {}",
                self.feedback
            )));
        }
        if !self.kappa.is_finite() || self.kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kappa must be > 0, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// Harmonic pump-power modulation: A -> A (1 + 2 |m| cos(2 p t + phi)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationParams {
    /// Modulation depth |m| >= 0.
    pub depth: f64,
    /// Modulation phase phi, rad.
    pub phase: f64,
    /// Half the modulation frequency; the pump power oscillates at 2 p.
    pub pump_half_frequency: f64,
}

impl ModulationParams {
    pub fn new(depth: f64, phase: f64, pump_half_frequency: f64) -> Result<Self> {
        if !depth.is_finite() || depth < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "modulation depth must be >= 0, got {depth}"
            )));
        }
        if !pump_half_frequency.is_finite() || pump_half_frequency <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pump half-frequency must be > 0, got {pump_half_frequency}"
            )));
        }
        Ok(Self {
            depth,
            phase,
            pump_half_frequency,
        })
    }

    /// No modulation at the given half-frequency.
    pub fn off(pump_half_frequency: f64) -> Self {
        Self {
            depth: 0.0,
            phase: 0.0,
            pump_half_frequency,
        }
    }
}

/// Map SI parameters onto (A, g, alpha, kappa).
pub fn to_dimensionless(phys: &PhysicalParams) -> Result<DimensionlessParams> {
    phys.validate()?;
    let gamma = phys.relaxation_rate;
    let delta = phys.detuning;
    let norm2 = gamma * gamma + delta * delta;
    let norm = norm2.sqrt();
    let g = 2.0 * std::f64::consts::SQRT_2 * gamma / norm;
    let coupling = 2.0 / norm2
        * (2.0 * phys.circulating_power * phys.pump_frequency() * delta
            / (phys.reduced_mass * phys.arm_length * SPEED_OF_LIGHT))
            .sqrt();
    let alpha = 2.0 * phys.feedback_gain / norm * (phys.reduced_mass * delta * gamma / HBAR).sqrt();
    let kappa = (gamma * phys.one_way_time()).sqrt();
    let dp = DimensionlessParams {
        coupling,
        optical_damping: g,
        feedback: alpha,
        kappa,
    };
    if !dp.coupling.is_finite() || !dp.feedback.is_finite() || !dp.kappa.is_finite() {
        return Err(Error::InvalidParameter(
            "non-finite dimensionless output".into(),
        ));
    }
    dp.validate()?;
    Ok(dp)
}

/// Conversion factor from dimensionless frequency x to SI angular frequency:
/// Omega = x * sqrt(Gamma^2 + Delta^2) / sqrt(2).
pub fn frequency_bridge(gamma: f64, delta: f64) -> f64 {
    (gamma * gamma + delta * delta).sqrt() / std::f64::consts::SQRT_2
}

/// Recover (Gamma, Delta) from detector data and dimensionless targets.
///
/// The dimensionless targets (A, g) do not determine (Gamma, Delta) without
/// detector data; this closure is the declared convention. Eliminating Gamma via
/// `Gamma = Delta q / sqrt(1 - q^2)` with `q = g / (2 sqrt 2)` reduces the
/// system to one scalar equation for Delta, which is monotone on the physical
/// branch; we solve it by bracketed bisection.
pub fn close_parameters(
    arm_length: f64,
    reduced_mass: f64,
    circulating_power: f64,
    wavelength: f64,
    coupling_target: f64,
    damping_target: f64,
) -> Result<(f64, f64)> {
    for (v, name) in [
        (arm_length, "arm_length"),
        (reduced_mass, "reduced_mass"),
        (circulating_power, "circulating_power"),
        (wavelength, "wavelength"),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{name} must be > 0, got {v}"
            )));
        }
    }
    if !coupling_target.is_finite() || coupling_target <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "A target must be > 0, got {coupling_target}"
        )));
    }
    if !damping_target.is_finite() || damping_target <= 0.0 || damping_target >= G_UPPER_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "g target must lie in (0, 2*sqrt(2)), got {damping_target}"
        )));
    }

    let q = damping_target / G_UPPER_LIMIT;
    let gamma_of_delta = |delta: f64| delta * q / (1.0 - q * q).sqrt();
    let omega0 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength;
    // Residual of A(Delta) - A_target with Gamma eliminated; strictly
    // decreasing in Delta, so a sign change brackets the unique root.
    let residual = |delta: f64| {
        let gamma = gamma_of_delta(delta);
        let norm2 = gamma * gamma + delta * delta;
        2.0 / norm2
            * (2.0 * circulating_power * omega0 * delta
                / (reduced_mass * arm_length * SPEED_OF_LIGHT))
                .sqrt()
            - coupling_target
    };

    let mut lo = 1e-9;
    let mut hi = 1.0;
    let mut grow = 0;
    while residual(hi) > 0.0 {
        hi *= 10.0;
        grow += 1;
        if grow > 40 {
            return Err(Error::ClosureFailed("no upper bracket for Delta".into()));
        }
    }
    while residual(lo) < 0.0 {
        lo /= 10.0;
        grow += 1;
        if grow > 80 {
            return Err(Error::ClosureFailed("no lower bracket for Delta".into()));
        }
    }
    let mut iterations = 0;
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 300 {
            return Err(Error::ClosureFailed(format!(
                "bisection stalled at Delta in [{lo}, {hi}]"
            )));
        }
    }
    let delta = 0.5 * (lo + hi);
    let gamma = gamma_of_delta(delta);

    // Verify the round trip to the promised tolerance.
    let phys = PhysicalParams {
        arm_length,
        reduced_mass,
        circulating_power,
        wavelength,
        relaxation_rate: gamma,
        detuning: delta,
        feedback_gain: 0.0,
    };
    let dp = to_dimensionless(&phys)?;
    let rel_a = (dp.coupling - coupling_target).abs() / coupling_target;
    let rel_g = (dp.optical_damping - damping_target).abs() / damping_target;
    if rel_a > 1e-10 || rel_g > 1e-10 {
        return Err(Error::ClosureFailed(format!(
            "residuals too large: dA/A = {rel_a:.3e}, dg/g = {rel_g:.3e}"
        )));
    }
    Ok((gamma, delta))
}

/// The 2x2 spectral system matrix M(x) acting on (b1, z), so that
/// `M(x) (b1, z)^T = (nu1, nu2)^T` with the rule `d/dt -> -i x`.
pub fn system_matrix(x: f64, dp: &DimensionlessParams) -> [[Complex64; 2]; 2] {
    let i = Complex64::I;
    [
        [
            Complex64::new(2.0 - x * x, 0.0) - i * x * dp.optical_damping,
            Complex64::new(dp.coupling, 0.0),
        ],
        [
            Complex64::new(-dp.coupling, 0.0) + i * x * dp.feedback,
            Complex64::new(-x * x, 0.0),
        ],
    ]
}

/// det M(x), which expands to `x^4 + i g x^3 - 2 x^2 - i A alpha x + A^2`.
pub fn system_determinant(x: Complex64, dp: &DimensionlessParams) -> Complex64 {
    let i = Complex64::I;
    let (a, g, al) = (dp.coupling, dp.optical_damping, dp.feedback);
    x.powu(4) + i * g * x.powu(3) - 2.0 * x * x - i * a * al * x + a * a
}

/// Coefficients of the characteristic polynomial, highest power first.
pub fn characteristic_coefficients(dp: &DimensionlessParams) -> [Complex64; 5] {
    let i = Complex64::I;
    let (a, g, al) = (dp.coupling, dp.optical_damping, dp.feedback);
    [
        Complex64::new(1.0, 0.0),
        i * g,
        Complex64::new(-2.0, 0.0),
        -i * a * al,
        Complex64::new(a * a, 0.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_set() -> DimensionlessParams {
        DimensionlessParams::new(0.90, 0.1, 0.1).unwrap()
    }

    #[test]
    fn g_equals_two_when_detuning_equals_relaxation() {
        let phys = PhysicalParams {
            arm_length: 4.0e3,
            reduced_mass: 10.0,
            circulating_power: 1.0e4,
            wavelength: 1.064e-6,
            relaxation_rate: 123.4,
            detuning: 123.4,
            feedback_gain: 0.0,
        };
        let dp = to_dimensionless(&phys).unwrap();
        assert!((dp.optical_damping - 2.0).abs() < 1e-14);
    }

    #[test]
    fn g_decreases_monotonically_with_detuning() {
        let mut prev = f64::INFINITY;
        for k in 1..=12 {
            let phys = PhysicalParams {
                arm_length: 4.0e3,
                reduced_mass: 10.0,
                circulating_power: 1.0e4,
                wavelength: 1.064e-6,
                relaxation_rate: 10.0,
                detuning: 10.0_f64 * (1 << k) as f64,
                feedback_gain: 0.0,
            };
            let dp = to_dimensionless(&phys).unwrap();
            assert!(dp.optical_damping < prev);
            prev = dp.optical_damping;
        }
        assert!(prev < 0.01);
    }

    #[test]
    fn rejects_nonpositive_detuning() {
        let phys = PhysicalParams {
            arm_length: 4.0e3,
            reduced_mass: 10.0,
            circulating_power: 1.0e4,
            wavelength: 1.064e-6,
            relaxation_rate: 10.0,
            detuning: -5.0,
            feedback_gain: 0.0,
        };
        assert!(to_dimensionless(&phys).is_err());
    }

    #[test]
    fn g_is_scale_invariant_in_gamma_delta() {
        for scale in [0.1, 1.0, 7.5, 120.0] {
            let phys = PhysicalParams {
                arm_length: 4.0e3,
                reduced_mass: 10.0,
                circulating_power: 1.0e4,
                wavelength: 1.064e-6,
                relaxation_rate: 8.0 * scale,
                detuning: 250.0 * scale,
                feedback_gain: 0.0,
            };
            let dp = to_dimensionless(&phys).unwrap();
            let reference =
                2.0 * std::f64::consts::SQRT_2 * 8.0 / (8.0f64 * 8.0 + 250.0 * 250.0).sqrt();
            assert!((dp.optical_damping - reference).abs() < 1e-13);
        }
    }

    #[test]
    fn closure_round_trips_to_targets() {
        let (gamma, delta) = close_parameters(4.0e3, 10.0, 1.0e4, 1.064e-6, 0.90, 0.1).unwrap();
        let phys = PhysicalParams {
            arm_length: 4.0e3,
            reduced_mass: 10.0,
            circulating_power: 1.0e4,
            wavelength: 1.064e-6,
            relaxation_rate: gamma,
            detuning: delta,
            feedback_gain: 0.0,
        };
        let dp = to_dimensionless(&phys).unwrap();
        assert!((dp.coupling - 0.90).abs() / 0.90 < 1e-9);
        assert!((dp.optical_damping - 0.1).abs() / 0.1 < 1e-9);
    }

    #[test]
    fn closure_matches_closed_form() {
        // Closed-form oracle for the reduced scalar equation:
        // Delta = [2 (1 - q^2) sqrt(2 P w0 / (mu L c)) / A]^(2/3).
        let (l, mu, p, lam) = (4.0e3, 10.0, 1.0e4, 1.064e-6);
        let (a_t, g_t) = (0.90, 0.1);
        let q = g_t / G_UPPER_LIMIT;
        let omega0 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / lam;
        let delta_oracle =
            (2.0 * (1.0 - q * q) * (2.0 * p * omega0 / (mu * l * SPEED_OF_LIGHT)).sqrt() / a_t)
                .powf(2.0 / 3.0);
        let gamma_oracle = delta_oracle * q / (1.0 - q * q).sqrt();
        let (gamma, delta) = close_parameters(l, mu, p, lam, a_t, g_t).unwrap();
        assert!((delta - delta_oracle).abs() / delta_oracle < 1e-12);
        assert!((gamma - gamma_oracle).abs() / gamma_oracle < 1e-12);
    }

    #[test]
    fn closure_aligo_regression() {
        // Frozen from the bisection oracle on the Table II aLIGO row with
        // P = 2 x 5 kW (equivalent-cavity convention), A = 0.90, g = 0.1.
        let (gamma, delta) = close_parameters(4.0e3, 10.0, 1.0e4, 1.064e-6, 0.90, 0.1).unwrap();
        assert!((gamma - 8.635593901).abs() < 1e-6, "gamma = {gamma}");
        assert!((delta - 244.098775380).abs() < 1e-5, "delta = {delta}");
    }

    #[test]
    fn closure_g_two_gives_delta_equals_gamma() {
        let (gamma, delta) = close_parameters(4.0e3, 10.0, 1.0e4, 1.064e-6, 0.90, 2.0).unwrap();
        assert!((gamma - delta).abs() / delta < 1e-12);
    }

    #[test]
    fn system_matrix_at_zero() {
        let dp = reference_set();
        let m = system_matrix(0.0, &dp);
        assert_eq!(m[0][0], Complex64::new(2.0, 0.0));
        assert_eq!(m[0][1], Complex64::new(0.90, 0.0));
        assert_eq!(m[1][0], Complex64::new(-0.90, 0.0));
        assert_eq!(m[1][1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn decoupled_limit_block_structure() {
        let dp = DimensionlessParams {
            coupling: 1e-300,
            optical_damping: 0.1,
            feedback: 0.1,
            kappa: 1.0,
        };
        let x = 0.7;
        let m = system_matrix(x, &dp);
        assert!(m[0][1].norm() < 1e-200);
        let expect = Complex64::new(2.0 - x * x, -x * 0.1);
        assert!((m[0][0] - expect).norm() < 1e-15);
        assert!((m[1][1] - Complex64::new(-x * x, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn determinant_matches_expansion() {
        let dp = reference_set();
        for &x in &[0.0, 0.3, 1.0, -2.2, 5.7] {
            let m = system_matrix(x, &dp);
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let poly = system_determinant(Complex64::new(x, 0.0), &dp);
            let scale = det.norm().max(1.0);
            assert!((det - poly).norm() / scale < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn determinant_expansion_across_parameter_points() {
        for (a, g, al) in [(0.3, 0.05, 0.02), (1.4, 0.6, 0.4), (0.05, 1.9, 0.9)] {
            let dp = DimensionlessParams {
                coupling: a,
                optical_damping: g,
                feedback: al,
                kappa: 1.0,
            };
            for &x in &[0.0, 0.41, -1.3, 2.9] {
                let m = system_matrix(x, &dp);
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                let poly = system_determinant(Complex64::new(x, 0.0), &dp);
                let scale = det.norm().max(1.0);
                assert!(
                    (det - poly).norm() / scale < 1e-12,
                    "A={a} g={g} alpha={al} x={x}"
                );
            }
        }
    }

    #[test]
    fn determinant_value_at_one() {
        // Direct polynomial evaluation at x = 1 for the reference set:
        // 1 + 0.1 i - 2 - 0.09 i + 0.81 = -0.19 + 0.01 i.
        let dp = reference_set();
        let det = system_determinant(Complex64::new(1.0, 0.0), &dp);
        assert!((det - Complex64::new(-0.19, 0.01)).norm() < 1e-14);
    }

    #[test]
    fn frequency_bridge_value() {
        let b = frequency_bridge(3.0, 4.0);
        assert!((b - 5.0 / std::f64::consts::SQRT_2).abs() < 1e-15);
    }
}
