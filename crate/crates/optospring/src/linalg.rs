//! Small dense complex linear algebra: just enough for 2x2 mode algebra,
//! 4x4 spectral solves, and eigenvalues of the 4x4 companion matrix.

use num_complex::Complex64;

type C = Complex64;

/// Evaluate a polynomial (coefficients highest power first) by Horner's rule.
pub fn eval_poly(coeffs: &[C], x: C) -> C {
    coeffs.iter().fold(C::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Derivative evaluation, coefficients highest power first.
pub fn eval_poly_deriv(coeffs: &[C], x: C) -> C {
    let n = coeffs.len();
    coeffs[..n - 1]
        .iter()
        .enumerate()
        .fold(C::new(0.0, 0.0), |acc, (i, &c)| {
            acc * x + c * (n - 1 - i) as f64
        })
}

/// Frobenius companion matrix of a monic polynomial
/// `x^n + c[1] x^(n-1) + ... + c[n]` given `coeffs = [1, c1, ..., cn]`.
pub fn companion_matrix(coeffs: &[C]) -> Vec<Vec<C>> {
    let n = coeffs.len() - 1;
    assert!(n >= 1);
    let lead = coeffs[0];
    let mut m = vec![vec![C::new(0.0, 0.0); n]; n];
    for i in 0..n {
        m[i][n - 1] = -coeffs[n - i] / lead;
        if i > 0 {
            m[i][i - 1] = C::new(1.0, 0.0);
        }
    }
    m
}

/// Complex Givens rotation G with G (a, b)^T = (r, 0)^T.
/// Returns (c, s) for G = [[c, s], [-conj(s), c]] with real c.
fn givens(a: C, b: C) -> (f64, C) {
    if b.norm() == 0.0 {
        return (1.0, C::new(0.0, 0.0));
    }
    if a.norm() == 0.0 {
        return (0.0, b.conj() / b.norm());
    }
    let h = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let c = a.norm() / h;
    let s = (a / a.norm()) * b.conj() / h;
    (c, s)
}

/// Eigenvalues of a small complex upper-Hessenberg matrix by the shifted QR
/// iteration with Givens rotations. Intended for n <= 8.
pub fn hessenberg_eigenvalues(mut h: Vec<Vec<C>>) -> Vec<C> {
    let n = h.len();
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n;
    let mut iter_budget = 120 * n;

    while hi > 0 {
        if hi == 1 {
            eigs.push(h[0][0]);
            hi = 0;
            continue;
        }
        // Deflate converged subdiagonal entries from the bottom.
        let mut lo = hi - 1;
        while lo > 0 {
            let off = h[lo][lo - 1].norm();
            let diag = h[lo - 1][lo - 1].norm() + h[lo][lo].norm();
            if off <= 1e-15 * diag.max(1e-300) {
                h[lo][lo - 1] = C::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            eigs.push(h[hi - 1][hi - 1]);
            hi -= 1;
            continue;
        }

        iter_budget -= 1;
        // Wilkinson shift from the trailing 2x2 of the active block.
        let (a, b) = (h[hi - 2][hi - 2], h[hi - 2][hi - 1]);
        let (c2, d) = (h[hi - 1][hi - 2], h[hi - 1][hi - 1]);
        let tr_half = (a + d) * 0.5;
        let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c2).sqrt();
        let l1 = tr_half + disc;
        let l2 = tr_half - disc;
        let mut shift = if (l1 - d).norm() <= (l2 - d).norm() {
            l1
        } else {
            l2
        };
        if iter_budget % 23 == 0 {
            // Exceptional shift to break rare stagnation cycles.
            shift = d + h[hi - 1][hi - 2] * 1.5;
        }
        if iter_budget == 0 {
            // Give back whatever the diagonal holds; callers polish with
            // Newton and check residuals.
            for i in 0..hi {
                eigs.push(h[i][i]);
            }
            break;
        }

        for i in lo..hi {
            h[i][i] -= shift;
        }
        // QR by Givens on the subdiagonal, then RQ.
        let mut rots = Vec::with_capacity(hi - lo - 1);
        for i in lo..hi - 1 {
            let (c, s) = givens(h[i][i], h[i + 1][i]);
            for j in i..hi {
                let (top, bot) = (h[i][j], h[i + 1][j]);
                h[i][j] = c * top + s * bot;
                h[i + 1][j] = -s.conj() * top + c * bot;
            }
            rots.push((i, c, s));
        }
        for &(i, c, s) in &rots {
            let row_end = (i + 2).min(hi);
            for r in lo..row_end {
                let (left, right) = (h[r][i], h[r][i + 1]);
                h[r][i] = c * left + s.conj() * right;
                h[r][i + 1] = -s * left + c * right;
            }
        }
        for i in lo..hi {
            h[i][i] += shift;
        }
    }
    eigs
}

/// All roots of a polynomial (coefficients highest power first) via the
/// companion matrix, with a Newton polish on each eigenvalue.
pub fn polynomial_roots(coeffs: &[C]) -> Vec<C> {
    assert!(coeffs.len() >= 2, "need at least degree 1");
    assert!(
        coeffs[0].norm() > 0.0,
        "leading coefficient must be nonzero"
    );
    let comp = companion_matrix(coeffs);
    let mut roots = hessenberg_eigenvalues(comp);
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = eval_poly_deriv(coeffs, *r);
            if d.norm() < 1e-300 {
                break;
            }
            let step = eval_poly(coeffs, *r) / d;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            *r -= step;
            if step.norm() < 1e-16 * r.norm().max(1.0) {
                break;
            }
        }
    }
    roots
}

/// Inverse of a 2x2 complex matrix. Returns `None` when the determinant
/// underflows relative to the matrix scale.
pub fn invert_2x2(m: &[[C; 2]; 2]) -> Option<[[C; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m[0][0]
        .norm()
        .max(m[0][1].norm())
        .max(m[1][0].norm())
        .max(m[1][1].norm());
    if det.norm() <= 1e-14 * scale * scale {
        return None;
    }
    Some([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

/// Unit-norm null vector of a (numerically) singular 2x2 matrix: of the two
/// analytic candidates, keep the better-conditioned one.
pub fn null_vector_2x2(m: &[[C; 2]; 2]) -> [C; 2] {
    let cand_a = [m[0][1], -m[0][0]];
    let cand_b = [-m[1][1], m[1][0]];
    let na = (cand_a[0].norm_sqr() + cand_a[1].norm_sqr()).sqrt();
    let nb = (cand_b[0].norm_sqr() + cand_b[1].norm_sqr()).sqrt();
    let (v, n) = if na >= nb { (cand_a, na) } else { (cand_b, nb) };
    [v[0] / n, v[1] / n]
}

/// LU factorization with partial pivoting, in place. Returns the pivot
/// permutation, or `None` if a pivot collapses below `1e-13 * scale`.
pub struct Lu<const N: usize> {
    lu: [[C; N]; N],
    piv: [usize; N],
}

pub fn lu_factor<const N: usize>(mut a: [[C; N]; N]) -> Option<Lu<N>> {
    let mut piv = [0usize; N];
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .map(|c| c.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for k in 0..N {
        let mut best = k;
        let mut best_mag = a[k][k].norm();
        for r in k + 1..N {
            let mag = a[r][k].norm();
            if mag > best_mag {
                best = r;
                best_mag = mag;
            }
        }
        if best_mag <= 1e-13 * scale {
            return None;
        }
        a.swap(k, best);
        piv[k] = best;
        for r in k + 1..N {
            let f = a[r][k] / a[k][k];
            a[r][k] = f;
            for c in k + 1..N {
                let sub = f * a[k][c];
                a[r][c] -= sub;
            }
        }
    }
    Some(Lu { lu: a, piv })
}

impl<const N: usize> Lu<N> {
    pub fn solve(&self, b: &[C; N]) -> [C; N] {
        let mut x = *b;
        // The stored multipliers are in the final (fully pivoted) row order,
        // so the permutation must be applied to the right-hand side in full
        // before the triangular sweeps.
        for k in 0..N {
            x.swap(k, self.piv[k]);
        }
        for k in 0..N {
            for r in k + 1..N {
                let sub = self.lu[r][k] * x[k];
                x[r] -= sub;
            }
        }
        for k in (0..N).rev() {
            for c in k + 1..N {
                let sub = self.lu[k][c] * x[c];
                x[k] -= sub;
            }
            x[k] /= self.lu[k][k];
        }
        x
    }
}
