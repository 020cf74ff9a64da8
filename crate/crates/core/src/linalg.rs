//! Complex dense linear algebra helpers shared across the pipeline.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMat = DMatrix<Complex64>;
/// Dense complex vector used throughout the crate.
pub type CVec = DVector<Complex64>;

/// Complex zero.
pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Complex one.
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
/// Imaginary unit.
pub const C_I: Complex64 = Complex64::new(0.0, 1.0);

/// Signature matrix `J = diag(-i I_r, i I_r)`.
pub fn j_matrix(r: usize) -> CMat {
    let mut j = CMat::zeros(2 * r, 2 * r);
    for k in 0..r {
        j[(k, k)] = -C_I;
        j[(r + k, r + k)] = C_I;
    }
    j
}

/// Boundary row matrix `a = (1/sqrt(2)) (I_r, -I_r)`, of shape `r x 2r`.
pub fn a_matrix(r: usize) -> CMat {
    let s = Complex64::new(1.0 / 2.0_f64.sqrt(), 0.0);
    let mut a = CMat::zeros(r, 2 * r);
    for k in 0..r {
        a[(k, k)] = s;
        a[(k, r + k)] = -s;
    }
    a
}

/// Conjugate transpose of [`a_matrix`], of shape `2r x r`.
pub fn a_star(r: usize) -> CMat {
    a_matrix(r).adjoint()
}

/// Initial value `J a*` of the phi solution column, of shape `2r x r`.
pub fn ja_star(r: usize) -> CMat {
    j_matrix(r) * a_star(r)
}

/// Largest singular value of a small dense matrix.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values()[0]
}

/// Smallest singular value of a small dense square matrix.
pub fn sigma_min(m: &CMat) -> f64 {
    let sv = m.clone().singular_values();
    sv[sv.len() - 1]
}

/// Adjugate (classical adjoint): `m * adjugate(m) = det(m) * I`, valid at
/// singular `m` as well. Intended for small `r x r` blocks.
pub fn adjugate(m: &CMat) -> CMat {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "adjugate requires a square matrix");
    match n {
        0 => CMat::zeros(0, 0),
        1 => CMat::from_element(1, 1, C_ONE),
        2 => {
            let mut a = CMat::zeros(2, 2);
            a[(0, 0)] = m[(1, 1)];
            a[(0, 1)] = -m[(0, 1)];
            a[(1, 0)] = -m[(1, 0)];
            a[(1, 1)] = m[(0, 0)];
            a
        }
        _ => {
            let mut a = CMat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let minor = minor_det(m, j, i);
                    let sign = if (i + j) % 2 == 0 { C_ONE } else { -C_ONE };
                    a[(i, j)] = sign * minor;
                }
            }
            a
        }
    }
}

/// Determinant of `m` with row `row` and column `col` removed.
fn minor_det(m: &CMat, row: usize, col: usize) -> Complex64 {
    let n = m.nrows();
    let mut sub = CMat::zeros(n - 1, n - 1);
    let mut si = 0;
    for i in 0..n {
        if i == row {
            continue;
        }
        let mut sj = 0;
        for j in 0..n {
            if j == col {
                continue;
            }
            sub[(si, sj)] = m[(i, j)];
            sj += 1;
        }
        si += 1;
    }
    det_small(&sub)
}

/// Determinant of a small dense matrix via LU; direct formulas for n <= 2.
pub fn det_small(m: &CMat) -> Complex64 {
    match m.nrows() {
        0 => C_ONE,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().lu().determinant(),
    }
}

/// Largest singular value of a large matrix by power iteration on `B^H B`.
///
/// Deterministic start vector; converges to the dominant singular value even
/// when it is degenerate. `rel_tol` controls the stop on successive Rayleigh
/// quotients.
pub fn power_sigma_max(b: &CMat, rel_tol: f64, max_iter: usize) -> f64 {
    let n = b.ncols();
    if n == 0 || b.nrows() == 0 {
        return 0.0;
    }
    let mut v = CVec::from_element(n, C_ONE);
    let nv = v.norm();
    v /= Complex64::new(nv, 0.0);
    let mut prev = 0.0_f64;
    for _ in 0..max_iter {
        let bv = b * &v;
        let mut w = b.adjoint() * bv;
        let s2 = w.norm();
        if s2 == 0.0 {
            return 0.0;
        }
        w /= Complex64::new(s2, 0.0);
        v = w;
        let sigma = s2.sqrt();
        if (sigma - prev).abs() <= rel_tol * sigma.max(1e-300) {
            return sigma;
        }
        prev = sigma;
    }
    prev
}
