//! Endpoint characteristic data of the boundary problem.
//!
//! With `Y(x, lambda)` the fundamental matrix and `a = (1/sqrt 2)(I, -I)` the
//! boundary-condition row, the module evaluates
//!
//! * `s(lambda) = a Y(1, lambda) J a*`, whose determinant is the
//!   characteristic function: its zeros are the eigenvalues;
//! * `c(lambda) = a Y(1, lambda) a*`;
//! * `m(lambda) = -s(lambda)^{-1} c(lambda)`, the Weyl function entering the
//!   resolvent and projector kernels;
//! * `d/dlambda det s` via Jacobi's formula and the variational solve.
//!
//! For the free potential these reduce to `sin(lambda) I`, `cos(lambda) I`
//! and `-cot(lambda) I`.

use crate::error::Error;
use crate::linalg::{a_matrix, adjugate, det_small, ja_star, CMat};
use crate::potential::MatrixPotential;
use crate::propagator::endpoint_solution;
use crate::Result;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Relative threshold on the smallest singular value of `s` below which the
/// matrix is flagged singular (an eigenvalue at or near `lambda`).
pub const SINGULAR_THRESHOLD: f64 = 1e-8;

/// Values of the characteristic matrices at one spectral point.
#[derive(Debug, Clone)]
pub struct CharacteristicSample {
    /// Spectral parameter.
    pub lambda: Complex64,
    /// `s(lambda)`, `r x r`.
    pub s: CMat,
    /// `c(lambda)`, `r x r`.
    pub c: CMat,
    /// `det s(lambda)`.
    pub det: Complex64,
    /// `d/dlambda det s(lambda)`; present when the derivative was requested.
    pub det_prime: Option<Complex64>,
    /// `d/dlambda s(lambda)`; present when the derivative was requested.
    pub s_lambda: Option<CMat>,
    /// Operator norm of `s^{-1}`; `None` flags a numerically singular `s`.
    pub s_inv_norm: Option<f64>,
    /// Local-error estimate propagated from the integrator.
    pub estimated_error: f64,
}

impl CharacteristicSample {
    /// Weyl matrix `m(lambda) = -s^{-1} c` by a backward-stable solve.
    pub fn m(&self) -> Result<CMat> {
        if self.s_inv_norm.is_none() {
            return Err(Error::SingularCharacteristicMatrix {
                lambda: self.lambda,
            });
        }
        let lu = self.s.clone().lu();
        lu.solve(&(-&self.c))
            .ok_or(Error::SingularCharacteristicMatrix {
                lambda: self.lambda,
            })
    }
}

/// Evaluates the characteristic sample at `lambda`.
///
/// `want_deriv` additionally propagates the variational system and fills in
/// `det_prime` and `s_lambda`.
pub fn characteristic(
    q: &MatrixPotential,
    lambda: Complex64,
    tol: f64,
    want_deriv: bool,
) -> Result<CharacteristicSample> {
    let r = q.r();
    let sol = endpoint_solution(q, lambda, tol, want_deriv)?;
    let a = a_matrix(r);
    let jas = ja_star(r);
    let a_s = a.adjoint();
    let y1 = sol.y_end();
    let s = &a * y1 * &jas;
    let c = &a * y1 * &a_s;
    let det = det_small(&s);

    let svd = s.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    // The scale is floored at 1 so that a matrix that is small as a whole
    // (r = 1 at an eigenvalue) is still flagged.
    let s_inv_norm = if smin <= SINGULAR_THRESHOLD * smax.max(1.0) {
        None
    } else {
        Some(1.0 / smin)
    };

    let (det_prime, s_lambda) = if want_deriv {
        let v1 = sol.y_lambda_end();
        let sl = &a * v1 * &jas;
        let adj = adjugate(&s);
        let dp = (&adj * &sl).trace();
        (Some(dp), Some(sl))
    } else {
        (None, None)
    };

    Ok(CharacteristicSample {
        lambda,
        s,
        c,
        det,
        det_prime,
        s_lambda,
        s_inv_norm,
        estimated_error: sol.estimated_error,
    })
}

/// `s(lambda)` alone.
pub fn s_matrix(q: &MatrixPotential, lambda: Complex64, tol: f64) -> Result<CMat> {
    Ok(characteristic(q, lambda, tol, false)?.s)
}

/// `c(lambda)` alone.
pub fn c_matrix(q: &MatrixPotential, lambda: Complex64, tol: f64) -> Result<CMat> {
    Ok(characteristic(q, lambda, tol, false)?.c)
}

/// `m(lambda) = -s^{-1} c`, failing when `s` is numerically singular.
pub fn m_matrix(q: &MatrixPotential, lambda: Complex64, tol: f64) -> Result<CMat> {
    characteristic(q, lambda, tol, false)?.m()
}

/// `det s(lambda)`.
pub fn char_det(q: &MatrixPotential, lambda: Complex64, tol: f64) -> Result<Complex64> {
    Ok(characteristic(q, lambda, tol, false)?.det)
}

/// `d/dlambda det s(lambda)` from the variational solve.
pub fn char_det_derivative(q: &MatrixPotential, lambda: Complex64, tol: f64) -> Result<Complex64> {
    Ok(characteristic(q, lambda, tol, true)?
        .det_prime
        .expect("derivative requested"))
}

/// Free-case `s`: `sin(lambda) I`.
pub fn free_s(r: usize, lambda: Complex64) -> CMat {
    CMat::identity(r, r) * lambda.sin()
}

/// Free-case `c`: `cos(lambda) I`.
pub fn free_c(r: usize, lambda: Complex64) -> CMat {
    CMat::identity(r, r) * lambda.cos()
}

/// Free-case Weyl matrix: `-cot(lambda) I`.
pub fn free_m(r: usize, lambda: Complex64) -> CMat {
    CMat::identity(r, r) * (-lambda.cos() / lambda.sin())
}

/// Band-limited certificate for the integral representations of `s` and `c`.
///
/// The differences `g1 = s - sin(lambda) I` and `g2 = c - cos(lambda) I`
/// extend to Fourier transforms of square-integrable matrix densities on
/// `(-1, 1)`. Sampling `g` at `lambda = pi k` recovers the Fourier
/// coefficients of the density in the orthonormal basis `e^{i pi k t}/sqrt 2`,
/// and the induced band-limited interpolant
/// `(A f)(lambda) = sum_k g(pi k) sin(lambda - pi k)/(lambda - pi k)`
/// must reproduce `g` off the sample grid as `K` grows.
#[derive(Debug, Clone)]
pub struct PaleyWienerReport {
    /// Half-width of the sampled frequency window.
    pub k_max: usize,
    /// Coefficients of the `s`-density: entry `k + k_max` holds `g1(pi k)`.
    pub f1_hat: Vec<CMat>,
    /// Coefficients of the `c`-density: entry `k + k_max` holds `g2(pi k)`.
    pub f2_hat: Vec<CMat>,
    /// Max operator-norm interpolation error of `g1` over the half-integer
    /// points `lambda = pi (k + 1/2)`, `|k| <= k_max`.
    pub off_grid_residual_s: f64,
    /// Same for `g2`.
    pub off_grid_residual_c: f64,
}

impl PaleyWienerReport {
    /// `sum_k ||f1_hat(k)||_F^2`, the Parseval energy of the `s`-density.
    pub fn f1_energy(&self) -> f64 {
        self.f1_hat.iter().map(|m| m.norm_squared()).sum()
    }

    /// `sum_k ||f2_hat(k)||_F^2`.
    pub fn f2_energy(&self) -> f64 {
        self.f2_hat.iter().map(|m| m.norm_squared()).sum()
    }
}

/// Normalized interpolation kernel `sin(lambda - pi k)/(lambda - pi k)`.
fn sinc_at(lambda: Complex64, k: i64) -> Complex64 {
    let z = lambda - Complex64::new(PI * k as f64, 0.0);
    if z.norm() < 1e-9 {
        Complex64::new(1.0, 0.0) - z * z / 6.0
    } else {
        z.sin() / z
    }
}

/// Computes the band-limited certificate with window `|k| <= k_max`.
pub fn verify_paley_wiener(
    q: &MatrixPotential,
    k_max: usize,
    tol: f64,
) -> Result<PaleyWienerReport> {
    assert!(k_max >= 8, "window too small to be informative");
    let r = q.r();
    let kk = k_max as i64;

    let mut f1_hat = Vec::with_capacity(2 * k_max + 1);
    let mut f2_hat = Vec::with_capacity(2 * k_max + 1);
    for k in -kk..=kk {
        let lambda = Complex64::new(PI * k as f64, 0.0);
        let cs = characteristic(q, lambda, tol, false)?;
        let g1 = &cs.s - free_s(r, lambda);
        let g2 = &cs.c - free_c(r, lambda);
        f1_hat.push(g1);
        f2_hat.push(g2);
    }

    let mut res_s = 0.0_f64;
    let mut res_c = 0.0_f64;
    for k in -kk..=kk {
        let lambda = Complex64::new(PI * (k as f64 + 0.5), 0.0);
        let cs = characteristic(q, lambda, tol, false)?;
        let g1 = &cs.s - free_s(r, lambda);
        let g2 = &cs.c - free_c(r, lambda);
        let mut interp1 = CMat::zeros(r, r);
        let mut interp2 = CMat::zeros(r, r);
        for j in -kk..=kk {
            let w = sinc_at(lambda, j);
            interp1 += &f1_hat[(j + kk) as usize] * w;
            interp2 += &f2_hat[(j + kk) as usize] * w;
        }
        res_s = res_s.max(crate::linalg::op_norm(&(g1 - interp1)));
        res_c = res_c.max(crate::linalg::op_norm(&(g2 - interp2)));
    }

    Ok(PaleyWienerReport {
        k_max,
        f1_hat,
        f2_hat,
        off_grid_residual_s: res_s,
        off_grid_residual_c: res_c,
    })
}
