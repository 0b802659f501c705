//! Property tests over random valid parameter points.

use num_complex::Complex64;
use proptest::prelude::*;

use optospring::modes::{characteristic_roots, mode_set};
use optospring::noise::{forcing_cross_spectrum, NoiseModel};
use optospring::params::{system_determinant, DimensionlessParams, ModulationParams};
use optospring::spectra::{linear_grid, quadrature_psd, SolverOptions};

fn params_strategy() -> impl Strategy<Value = DimensionlessParams> {
    (0.05f64..1.5, 0.005f64..0.5, 0.0f64..0.5).prop_map(|(a, g, alpha)| DimensionlessParams {
        coupling: a,
        optical_damping: g,
        feedback: alpha,
        kappa: 1.0,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn root_pairs_and_residuals(dp in params_strategy()) {
        let roots = characteristic_roots(&dp);
        for &s in &roots {
            // Every root is mirrored by -conj(s).
            let mirror = Complex64::new(-s.re, s.im);
            let closest = roots.iter().map(|r| (*r - mirror).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(closest <= 1e-8, "mirror of {} missing by {:e}", s, closest);
            let resid = system_determinant(s, &dp).norm() / s.norm().max(1.0).powi(4);
            prop_assert!(resid <= 1e-9, "residual {:e} at {}", resid, s);
        }
    }

    #[test]
    fn forcing_matrix_hermitian_psd_and_real(
        dp in params_strategy(),
        x in -5.0f64..5.0,
    ) {
        let s = forcing_cross_spectrum(x, &dp, &NoiseModel::vacuum());
        prop_assert!((s[1][0] - s[0][1].conj()).norm() <= 1e-16);
        prop_assert!(s[0][0].im.abs() <= 1e-18 && s[1][1].im.abs() <= 1e-18);
        let trace = s[0][0].re + s[1][1].re;
        let det = (s[0][0] * s[1][1] - s[0][1] * s[1][0]).re;
        prop_assert!(trace >= -1e-15 && det >= -1e-15, "not PSD at x = {}", x);
        // Reality symmetry S(-x) = conj(S(x)).
        let sm = forcing_cross_spectrum(-x, &dp, &NoiseModel::vacuum());
        for r in 0..2 {
            for c in 0..2 {
                prop_assert!((sm[r][c] - s[r][c].conj()).norm() <= 1e-15);
            }
        }
    }

    #[test]
    fn quadrature_spectra_nonnegative_and_split_correctly(
        dp in params_strategy(),
        depth_fraction in 0.0f64..0.9,
        phase in 0.0f64..std::f64::consts::TAU,
    ) {
        let Ok(ms) = mode_set(&dp) else { return Ok(()) };
        if !ms.stable {
            return Ok(());
        }
        let Ok(mc) = ms.critical_modulation(0) else { return Ok(()) };
        let modulation = ModulationParams {
            depth: depth_fraction * mc,
            phase,
            pump_half_frequency: ms.modes[0].frequency(),
        };
        let grid = linear_grid(6.0 * ms.modes[0].damping(), 31);
        let spectra = quadrature_psd(&ms, &modulation, &grid, &dp, &NoiseModel::vacuum(), &SolverOptions::default());
        let Ok(spectra) = spectra else { return Ok(()) };
        for qs in &spectra {
            for (&p, &m) in qs.s_plus.iter().zip(qs.s_minus.iter()) {
                prop_assert!(p >= 0.0 && m >= 0.0, "negative PSD");
                if modulation.depth == 0.0 && p > 0.0 {
                    prop_assert!((p - m).abs() / p <= 1e-10);
                }
            }
        }
    }
}
