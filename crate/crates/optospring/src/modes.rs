//! Optomechanical eigenmodes of the coupled (b1, z) system.
//!
//! The characteristic polynomial `det M(x) = x^4 + i g x^3 - 2 x^2
//! - i A alpha x + A^2` has four complex roots that come in pairs
//! `{s, -conj(s)}`. The two roots with positive real part are the physical
//! modes, `s_j = omega_j - i gamma_j`.
//!
//! Because the coupled system is not self-adjoint the mode vectors `v_i`
//! are not orthogonal; projections use the dual basis `Pi_j` with
//! `(Pi_j v_i) = delta_ji` (plain bilinear pairing, no conjugation). The
//! modulation coefficients use the conjugated pairing `(Pi_j^* w_i)`
//! instead; both appear exactly in that form in the shortened amplitude
//! equations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::params::{characteristic_coefficients, DimensionlessParams, ModulationParams};

type C = Complex64;

/// One retained eigenmode: root, vectors, and derived rates.
#[derive(Debug, Clone)]
pub struct EigenMode {
    /// Complex characteristic root s = omega - i gamma, Re(s) > 0.
    pub root: C,
    /// Mode vector v (components for b1 and z), unit norm, first component
    /// real and non-negative.
    pub mode_vector: [C; 2],
    /// Dual vector Pi with (Pi_j v_i) = delta_ji.
    pub dual_vector: [C; 2],
    /// Coupling vector w = [[0, A], [-A, 0]] v.
    pub coupling_vector: [C; 2],
}

impl EigenMode {
    /// Eigenfrequency omega = Re(s).
    pub fn frequency(&self) -> f64 {
        self.root.re
    }

    /// Damping rate gamma = -Im(s); positive for a decaying mode.
    pub fn damping(&self) -> f64 {
        -self.root.im
    }

    /// Quality factor omega / (2 gamma).
    pub fn quality(&self) -> f64 {
        self.frequency() / (2.0 * self.damping())
    }

    /// Real mode weight V = (v)_1 entering the readout combinations.
    pub fn weight(&self) -> f64 {
        self.mode_vector[0].re
    }

    /// Residual norm of M(s) v relative to the matrix norm.
    pub fn null_residual(&self, dp: &DimensionlessParams) -> f64 {
        let m = matrix_at(self.root, dp);
        let v = &self.mode_vector;
        let r0 = m[0][0] * v[0] + m[0][1] * v[1];
        let r1 = m[1][0] * v[0] + m[1][1] * v[1];
        let resid = (r0.norm_sqr() + r1.norm_sqr()).sqrt();
        let mnorm = m
            .iter()
            .flat_map(|r| r.iter())
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
        resid / mnorm
    }
}

/// The two retained modes plus modulation data.
#[derive(Debug, Clone)]
pub struct ModeSet {
    /// Modes ordered by ascending eigenfrequency.
    pub modes: [EigenMode; 2],
    /// All four characteristic roots (diagnostics; pairs {s, -conj s}).
    pub all_roots: [C; 4],
    /// True when every root has non-positive imaginary part (all gamma >= 0).
    pub stable: bool,
}

impl ModeSet {
    /// Coupling projections (Pi_j^* w_i) as a 2x2 matrix indexed [j][i].
    pub fn coupling_projections(&self) -> [[C; 2]; 2] {
        let mut out = [[C::new(0.0, 0.0); 2]; 2];
        for j in 0..2 {
            for i in 0..2 {
                let pi = &self.modes[j].dual_vector;
                let w = &self.modes[i].coupling_vector;
                out[j][i] = pi[0].conj() * w[0] + pi[1].conj() * w[1];
            }
        }
        out
    }

    /// Modulation coefficients eps_ji = -i |m| (Pi_j^* w_i) e^{i phi} / (2 omega_j).
    pub fn epsilon_matrix(&self, modulation: &ModulationParams) -> [[C; 2]; 2] {
        let proj = self.coupling_projections();
        let phase = C::from_polar(modulation.depth, modulation.phase);
        let mut out = [[C::new(0.0, 0.0); 2]; 2];
        for j in 0..2 {
            for i in 0..2 {
                out[j][i] = -C::I * phase * proj[j][i] / (2.0 * self.modes[j].frequency());
            }
        }
        out
    }

    /// Critical modulation depth of mode j: the depth at which the
    /// modulation-induced negative damping cancels gamma_j.
    pub fn critical_modulation(&self, j: usize) -> Result<f64> {
        let proj = self.coupling_projections();
        let mag = proj[j][j].norm();
        if mag <= 1e-300 {
            return Err(Error::InvalidParameter(format!(
                "coupling projection (Pi_{j}^* w_{j}) vanishes; no parametric threshold"
            )));
        }
        Ok(2.0 * self.modes[j].frequency() * self.modes[j].damping() / mag)
    }

    /// Modulation phase that makes eps_jj real and positive, so the plus
    /// quadrature of mode j is the squeezed one.
    pub fn squeezing_phase(&self, j: usize) -> f64 {
        let proj = self.coupling_projections();
        -(-C::I * proj[j][j]).arg()
    }
}

/// All four roots of the characteristic polynomial, via eigenvalues of the
/// 4x4 companion matrix, unsorted.
pub fn characteristic_roots(dp: &DimensionlessParams) -> [C; 4] {
    let coeffs = characteristic_coefficients(dp);
    let roots = linalg::polynomial_roots(&coeffs);
    [roots[0], roots[1], roots[2], roots[3]]
}

/// Largest scaled residual |p(s)| / max(1, |s|)^4 over a set of roots.
pub fn root_residual(dp: &DimensionlessParams, roots: &[C]) -> f64 {
    let coeffs = characteristic_coefficients(dp);
    roots
        .iter()
        .map(|&r| linalg::eval_poly(&coeffs, r).norm() / r.norm().max(1.0).powi(4))
        .fold(0.0, f64::max)
}

/// Unit-norm null vector of M(s) with the first component real and
/// non-negative. When the first component is negligible the second is made
/// real positive instead.
pub fn mode_vector(s: C, dp: &DimensionlessParams) -> Result<[C; 2]> {
    let m = matrix_at(s, dp);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .map(|c| c.norm_sqr())
        .fold(0.0f64, f64::max);
    if det.norm() > 1e-8 * scale.max(1.0) {
        return Err(Error::NotARoot {
            s,
            det_mag: det.norm(),
        });
    }
    let mut v = linalg::null_vector_2x2(&m);
    let anchor = if v[0].norm() < 1e-12 { v[1] } else { v[0] };
    let phase = anchor / anchor.norm();
    v[0] /= phase;
    v[1] /= phase;
    Ok(v)
}

fn matrix_at(s: C, dp: &DimensionlessParams) -> [[C; 2]; 2] {
    // system_matrix for a complex argument.
    let i = C::I;
    [
        [
            C::new(2.0, 0.0) - s * s - i * s * dp.optical_damping,
            C::new(dp.coupling, 0.0),
        ],
        [C::new(-dp.coupling, 0.0) + i * s * dp.feedback, -s * s],
    ]
}

/// Dual basis: rows of the inverse of the matrix with columns (v1, v2),
/// so that the unconjugated pairing gives (Pi_j v_i) = delta_ji.
pub fn dual_basis(v1: &[C; 2], v2: &[C; 2]) -> Result<([C; 2], [C; 2])> {
    let m = [[v1[0], v2[0]], [v1[1], v2[1]]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    // Columns are unit norm, so 1/|det| estimates the condition number.
    let cond = if det.norm() > 0.0 {
        1.0 / det.norm()
    } else {
        f64::INFINITY
    };
    if cond > 1e8 {
        return Err(Error::DegenerateModes { cond });
    }
    let inv = linalg::invert_2x2(&m).ok_or(Error::DegenerateModes { cond })?;
    Ok((inv[0], inv[1]))
}

/// Coupling vector w = [[0, A], [-A, 0]] v.
pub fn coupling_w(v: &[C; 2], dp: &DimensionlessParams) -> [C; 2] {
    [dp.coupling * v[1], -dp.coupling * v[0]]
}

/// Build the full mode set for a parameter point.
pub fn mode_set(dp: &DimensionlessParams) -> Result<ModeSet> {
    dp.validate()?;
    let roots = characteristic_roots(dp);
    let stable = roots.iter().all(|r| r.im <= 1e-12);
    let mut degenerate = false;
    for i in 0..4 {
        for j in i + 1..4 {
            if (roots[i] - roots[j]).norm() < 1e-6 {
                degenerate = true;
            }
        }
    }
    let mut positive: Vec<C> = roots.iter().copied().filter(|r| r.re > 0.0).collect();
    if positive.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "expected two positive-frequency roots, found {} in {roots:?}",
            positive.len()
        )));
    }
    // Ascending frequency; ties broken by ascending damping.
    positive.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then((-a.im).partial_cmp(&(-b.im)).unwrap())
    });
    if degenerate {
        return Err(Error::DegenerateModes {
            cond: f64::INFINITY,
        });
    }

    let va = mode_vector(positive[0], dp)?;
    let vb = mode_vector(positive[1], dp)?;
    let (pa, pb) = dual_basis(&va, &vb)?;
    let make = |root: C, v: [C; 2], pi: [C; 2]| EigenMode {
        root,
        coupling_vector: coupling_w(&v, dp),
        mode_vector: v,
        dual_vector: pi,
    };
    Ok(ModeSet {
        modes: [make(positive[0], va, pa), make(positive[1], vb, pb)],
        all_roots: roots,
        stable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_set() -> DimensionlessParams {
        DimensionlessParams::new(0.90, 0.1, 0.1).unwrap()
    }

    #[test]
    fn decoupled_roots_match_closed_form() {
        // A = 0, alpha = 0: the quartic factors into -x^2 and
        // x^2 + i g x - 2, giving {0, 0, +-sqrt(2 - g^2/4) - i g/2}.
        let g = 0.1;
        let dp = DimensionlessParams {
            coupling: 0.0,
            optical_damping: g,
            feedback: 0.0,
            kappa: 1.0,
        };
        let roots = characteristic_roots(&dp);
        let near_zero = roots.iter().filter(|r| r.norm() < 1e-7).count();
        assert_eq!(near_zero, 2, "{roots:?}");
        let opt = C::new((2.0 - g * g / 4.0).sqrt(), -g / 2.0);
        for target in [opt, C::new(-opt.re, opt.im)] {
            assert!(
                roots.iter().any(|r| (*r - target).norm() < 1e-10),
                "missing {target} in {roots:?}"
            );
        }
    }

    #[test]
    fn root_pair_symmetry() {
        let dp = reference_set();
        let roots = characteristic_roots(&dp);
        for &s in &roots {
            let mirror = C::new(-s.re, s.im);
            let closest = roots
                .iter()
                .map(|r| (*r - mirror).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(closest < 1e-10, "mirror of {s} missing");
        }
    }

    #[test]
    fn reference_set_two_stable_modes() {
        let ms = mode_set(&reference_set()).unwrap();
        assert!(ms.stable);
        assert!(ms.modes[0].frequency() > 0.0 && ms.modes[1].frequency() > ms.modes[0].frequency());
        assert!(ms.modes[0].damping() > 0.0 && ms.modes[1].damping() > 0.0);
        // Regression anchors from the companion-matrix oracle, checked by
        // direct polynomial evaluation and by the sign of the damping.
        assert!((ms.modes[0].frequency() - 0.751849822).abs() < 1e-8);
        assert!((ms.modes[0].damping() - 0.019296910).abs() < 1e-8);
        assert!((ms.modes[1].frequency() - 1.196259543).abs() < 1e-8);
        assert!((ms.modes[1].damping() - 0.030703090).abs() < 1e-8);
        assert!(root_residual(&reference_set(), &ms.all_roots) < 1e-10);
    }

    #[test]
    fn no_feedback_is_unstable() {
        // A single detuned pump without feedback always destabilizes one mode.
        let dp = DimensionlessParams {
            coupling: 0.9,
            optical_damping: 0.1,
            feedback: 0.0,
            kappa: 1.0,
        };
        let roots = characteristic_roots(&dp);
        assert!(roots.iter().any(|r| r.im > 1e-6), "{roots:?}");
    }

    #[test]
    fn damping_sum_is_half_g() {
        // Vieta on the cubic coefficient: gamma_1 + gamma_2 = g / 2.
        for (a, g, al) in [(0.9, 0.1, 0.1), (0.5, 0.05, 0.2), (0.3, 0.01, 0.02)] {
            let dp = DimensionlessParams::new(a, g, al).unwrap();
            let ms = mode_set(&dp).unwrap();
            let sum = ms.modes[0].damping() + ms.modes[1].damping();
            assert!((sum - g / 2.0).abs() < 1e-12, "A={a} g={g} alpha={al}");
        }
    }

    #[test]
    fn mode_vector_null_residual() {
        let dp = reference_set();
        let ms = mode_set(&dp).unwrap();
        for mode in &ms.modes {
            let m = super::matrix_at(mode.root, &dp);
            let v = &mode.mode_vector;
            let r0 = m[0][0] * v[0] + m[0][1] * v[1];
            let r1 = m[1][0] * v[0] + m[1][1] * v[1];
            let resid = (r0.norm_sqr() + r1.norm_sqr()).sqrt();
            let mnorm = m
                .iter()
                .flat_map(|r| r.iter())
                .map(|c| c.norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(resid <= 1e-10 * mnorm, "residual {resid}");
            assert!(v[0].im.abs() < 1e-14 && v[0].re >= 0.0);
        }
    }

    #[test]
    fn decoupled_mode_vectors() {
        let g = 0.1;
        let dp = DimensionlessParams {
            coupling: 0.0,
            optical_damping: g,
            feedback: 0.0,
            kappa: 1.0,
        };
        let optical_root = C::new((2.0 - g * g / 4.0).sqrt(), -g / 2.0);
        let v = mode_vector(optical_root, &dp).unwrap();
        assert!(
            v[0].norm() > 1.0 - 1e-10 && v[1].norm() < 1e-10,
            "optical mode: {v:?}"
        );
        let dp2 = DimensionlessParams {
            coupling: 0.0,
            optical_damping: g,
            feedback: 0.0,
            kappa: 1.0,
        };
        let v2 = mode_vector(C::new(0.0, 0.0), &dp2).unwrap();
        assert!(
            v2[1].norm() > 1.0 - 1e-10 && v2[0].norm() < 1e-10,
            "mechanical mode: {v2:?}"
        );
    }

    #[test]
    fn mode_vector_rejects_non_root() {
        let dp = reference_set();
        assert!(matches!(
            mode_vector(C::new(0.5, 0.0), &dp),
            Err(Error::NotARoot { .. })
        ));
    }

    #[test]
    fn dual_basis_identity_cases() {
        let e1 = [C::new(1.0, 0.0), C::new(0.0, 0.0)];
        let e2 = [C::new(0.0, 0.0), C::new(1.0, 0.0)];
        let (p1, p2) = dual_basis(&e1, &e2).unwrap();
        assert_eq!(p1, e1);
        assert_eq!(p2, e2);

        let v1 = [C::new(1.0, 0.0), C::new(1.0, 0.0)];
        let v2 = [C::new(1.0, 0.0), C::new(-1.0, 0.0)];
        let (p1, p2) = dual_basis(&v1, &v2).unwrap();
        assert!(
            (p1[0] - C::new(0.5, 0.0)).norm() < 1e-15 && (p1[1] - C::new(0.5, 0.0)).norm() < 1e-15
        );
        assert!(
            (p2[0] - C::new(0.5, 0.0)).norm() < 1e-15 && (p2[1] - C::new(-0.5, 0.0)).norm() < 1e-15
        );
    }

    #[test]
    fn dual_basis_rejects_collinear() {
        let v1 = [C::new(0.8, 0.0), C::new(0.6, 0.0)];
        let v2 = [C::new(0.8, 1e-12), C::new(0.6, 0.0)];
        assert!(matches!(
            dual_basis(&v1, &v2),
            Err(Error::DegenerateModes { .. })
        ));
    }

    #[test]
    fn biorthogonality_at_reference_set() {
        let ms = mode_set(&reference_set()).unwrap();
        for j in 0..2 {
            for i in 0..2 {
                let pi = &ms.modes[j].dual_vector;
                let v = &ms.modes[i].mode_vector;
                let pairing = pi[0] * v[0] + pi[1] * v[1];
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((pairing - expect).norm() <= 1e-10, "({j},{i}) -> {pairing}");
            }
        }
    }

    #[test]
    fn coupling_vector_cases() {
        let dp = DimensionlessParams::new(1.0, 0.1, 0.1).unwrap();
        let w = coupling_w(&[C::new(1.0, 0.0), C::new(0.0, 0.0)], &dp);
        assert_eq!(w, [C::new(0.0, 0.0), C::new(-1.0, 0.0)]);
        let w2 = coupling_w(&[C::new(0.0, 0.0), C::new(1.0, 0.0)], &dp);
        assert_eq!(w2, [C::new(1.0, 0.0), C::new(0.0, 0.0)]);
    }

    #[test]
    fn coupling_vector_norm_scales_with_a() {
        let dp = DimensionlessParams::new(0.73, 0.1, 0.1).unwrap();
        let v = [C::new(0.6, 0.2), C::new(-0.5, 0.59)];
        let w = coupling_w(&v, &dp);
        let vn = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let wn = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        assert!((wn - 0.73 * vn).abs() < 1e-14);
    }

    #[test]
    fn epsilon_zero_and_linear_in_depth() {
        let ms = mode_set(&reference_set()).unwrap();
        let w1 = ms.modes[0].frequency();
        let off = ModulationParams::off(w1);
        let e0 = ms.epsilon_matrix(&off);
        assert!(e0.iter().flatten().all(|e| e.norm() == 0.0));

        let m1 = ModulationParams::new(0.05, 0.3, w1).unwrap();
        let m2 = ModulationParams::new(0.10, 0.3, w1).unwrap();
        let e1 = ms.epsilon_matrix(&m1);
        let e2 = ms.epsilon_matrix(&m2);
        for j in 0..2 {
            for i in 0..2 {
                assert!((e2[j][i] - 2.0 * e1[j][i]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn squeezing_phase_makes_eps11_real_positive() {
        let ms = mode_set(&reference_set()).unwrap();
        let w1 = ms.modes[0].frequency();
        let phi = ms.squeezing_phase(0);
        let modp = ModulationParams::new(0.1, phi, w1).unwrap();
        let e = ms.epsilon_matrix(&modp);
        assert!(e[0][0].im.abs() <= 1e-12, "Im eps11 = {}", e[0][0].im);
        assert!(e[0][0].re > 0.0);
    }

    #[test]
    fn critical_depth_plugs_back_to_gamma() {
        let ms = mode_set(&reference_set()).unwrap();
        for j in 0..2 {
            let mc = ms.critical_modulation(j).unwrap();
            let phi = ms.squeezing_phase(j);
            let modp = ModulationParams::new(mc, phi, ms.modes[j].frequency()).unwrap();
            let e = ms.epsilon_matrix(&modp);
            assert!((e[j][j].norm() - ms.modes[j].damping()).abs() <= 1e-12);
        }
    }

    #[test]
    fn critical_depth_scales_with_damping() {
        // m_c = 2 omega gamma / |(Pi* w)| is linear in gamma at fixed vectors.
        let ms = mode_set(&reference_set()).unwrap();
        let mc = ms.critical_modulation(0).unwrap();
        let proj = ms.coupling_projections()[0][0].norm();
        assert!((mc - 2.0 * ms.modes[0].frequency() * ms.modes[0].damping() / proj).abs() < 1e-15);
    }
}
