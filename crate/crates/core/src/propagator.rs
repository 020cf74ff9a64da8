//! Fundamental-matrix Cauchy solver for `J Y' + Q Y = lambda Y`, `Y(0) = I`.
//!
//! The system is integrated in interaction-picture coordinates: writing
//! `Y = E(x) Z` with `E(x) = diag(e^{i lambda x} I, e^{-i lambda x} I)`
//! turns the explicit form `Y' = (-lambda J + J Q) Y` into `Z' = B(x) Z`,
//! `B = [[0, -i q1 e^{-2 i lambda x}], [i q2 e^{2 i lambda x}, 0]]`, which
//! vanishes identically for the free potential: the free case is integrated
//! exactly up to rounding.
//!
//! Smooth potentials use an adaptive Dormand–Prince 5(4) scheme with steps
//! clipped at the requested output nodes (no interpolation error at nodes).
//! Grid-sampled potentials use per-cell midpoint-exponential (Magnus-type)
//! steps in the original coordinates, exact in `lambda` for frozen
//! coefficients, with a Richardson error estimate.
//!
//! The parameter derivative `dY/dlambda` is propagated jointly through the
//! variational system, which in interaction-picture coordinates reads
//! `W' = B W - J Z` with `dY/dlambda = E W`.

use crate::error::Error;
use crate::grid::Grid;
use crate::linalg::{a_star, j_matrix, ja_star, op_norm, CMat, C_I};
use crate::potential::MatrixPotential;
use crate::Result;
use num_complex::Complex64;

/// Samples of the fundamental matrix along a grid, with optional
/// `lambda`-derivative samples.
#[derive(Debug, Clone)]
pub struct SolutionSamples {
    /// Spectral parameter of the solve.
    pub lambda: Complex64,
    /// Output nodes (a subset structure of the requesting grid).
    pub x_grid: Vec<f64>,
    /// Fundamental matrix `Y(x_i, lambda)`, one `2r x 2r` matrix per node.
    pub y: Vec<CMat>,
    /// Derivative `dY/dlambda` per node when requested.
    pub y_lambda: Option<Vec<CMat>>,
    /// Accumulated local-error estimate of the integration.
    pub estimated_error: f64,
    r: usize,
}

impl SolutionSamples {
    /// Block dimension `r`.
    pub fn r(&self) -> usize {
        self.r
    }

    /// `phi(x_i) = Y(x_i) J a*`, the solution column with initial value `J a*`.
    pub fn phi(&self, i: usize) -> CMat {
        &self.y[i] * ja_star(self.r)
    }

    /// `psi(x_i) = Y(x_i) a*`, the solution column with initial value `a*`.
    pub fn psi(&self, i: usize) -> CMat {
        &self.y[i] * a_star(self.r)
    }

    /// `d phi / d lambda` at node `i`; requires derivative samples.
    pub fn phi_lambda(&self, i: usize) -> CMat {
        self.y_lambda.as_ref().expect("derivative not requested")[i].clone() * ja_star(self.r)
    }

    /// Fundamental matrix at the right endpoint.
    pub fn y_end(&self) -> &CMat {
        self.y.last().unwrap()
    }

    /// Derivative of the fundamental matrix at the right endpoint.
    pub fn y_lambda_end(&self) -> &CMat {
        self.y_lambda
            .as_ref()
            .expect("derivative not requested")
            .last()
            .unwrap()
    }
}

/// Integrates the Cauchy problem, returning samples at the grid nodes.
///
/// `want_deriv` also propagates the variational system for `dY/dlambda`.
pub fn fundamental_matrix(
    q: &MatrixPotential,
    lambda: Complex64,
    grid: &Grid,
    tol: f64,
    want_deriv: bool,
) -> Result<SolutionSamples> {
    assert!(tol > 0.0, "tolerance must be positive");
    if q.is_sampled() {
        propagate_magnus(q, lambda, grid, tol, want_deriv)
    } else {
        propagate_dp54(q, lambda, grid, tol, want_deriv)
    }
}

/// Solves only for the endpoint values `Y(1, lambda)` and optionally
/// `dY/dlambda (1, lambda)`.
pub fn endpoint_solution(
    q: &MatrixPotential,
    lambda: Complex64,
    tol: f64,
    want_deriv: bool,
) -> Result<SolutionSamples> {
    let grid = Grid::from_nodes(vec![0.0, 1.0]).expect("two-node grid");
    fundamental_matrix(q, lambda, &grid, tol, want_deriv)
}

/// Maximum over grid nodes of the operator norm of
/// `Y_Q(x, lambda) J Y_{Q*}(x, conj lambda)^H - J`.
///
/// This identity holds exactly for the true solutions; the returned residual
/// is the integrator's primary accuracy certificate.
pub fn wronskian_residual(
    q: &MatrixPotential,
    lambda: Complex64,
    grid: &Grid,
    tol: f64,
) -> Result<f64> {
    let sol = fundamental_matrix(q, lambda, grid, tol, false)?;
    let sol_star = fundamental_matrix(&q.adjoint(), lambda.conj(), grid, tol, false)?;
    let j = j_matrix(q.r());
    let mut worst = 0.0_f64;
    for i in 0..grid.len() {
        let prod = &sol.y[i] * &j * sol_star.y[i].adjoint();
        worst = worst.max(op_norm(&(prod - &j)));
    }
    Ok(worst)
}

const STAGE_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 0.2;
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const ERR_W: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Dp54 {
    q1buf: CMat,
    q2buf: CMat,
    k: Vec<CMat>,
    tmp: CMat,
    err: CMat,
}

impl Dp54 {
    fn new(r: usize, augmented: bool) -> Self {
        let w = if augmented { 4 * r } else { 2 * r };
        Self {
            q1buf: CMat::zeros(r, r),
            q2buf: CMat::zeros(r, r),
            k: (0..7).map(|_| CMat::zeros(2 * r, w)).collect(),
            tmp: CMat::zeros(2 * r, w),
            err: CMat::zeros(2 * r, w),
        }
    }

    /// `tmp = s + h * sum coeffs[j] k[j]`.
    fn stage_sum(&mut self, s: &CMat, h: f64, coeffs: &[f64]) {
        let Self { tmp, k, .. } = self;
        tmp.copy_from(s);
        for (j, &a) in coeffs.iter().enumerate() {
            if a != 0.0 {
                let alpha = Complex64::new(h * a, 0.0);
                for (t, kv) in tmp.as_mut_slice().iter_mut().zip(k[j].as_slice()) {
                    *t += alpha * kv;
                }
            }
        }
    }

    /// `err = h * sum ERR_W[j] k[j]`, the embedded 5(4) difference.
    fn error_sum(&mut self, h: f64) {
        let Self { err, k, .. } = self;
        err.fill(Complex64::new(0.0, 0.0));
        for (j, &e) in ERR_W.iter().enumerate() {
            if e != 0.0 {
                let alpha = Complex64::new(h * e, 0.0);
                for (t, kv) in err.as_mut_slice().iter_mut().zip(k[j].as_slice()) {
                    *t += alpha * kv;
                }
            }
        }
    }
}

/// `out = B(x) s` plus, when `augmented`, the variational coupling `-J Z`
/// feeding the derivative columns.
#[allow(clippy::too_many_arguments)]
fn fill_rhs(
    q: &MatrixPotential,
    lambda: Complex64,
    augmented: bool,
    x: f64,
    s: &CMat,
    q1buf: &mut CMat,
    q2buf: &mut CMat,
    out: &mut CMat,
) {
    let r = q.r();
    let w = s.ncols();
    q.q1_into(x, q1buf);
    q.q2_into(x, q2buf);
    let phase = Complex64::new(0.0, -2.0) * lambda * x;
    let e_minus = phase.exp();
    let e_plus = (-phase).exp();
    let zero = Complex64::new(0.0, 0.0);
    out.view_mut((0, 0), (r, w))
        .gemm(-C_I * e_minus, &*q1buf, &s.view((r, 0), (r, w)), zero);
    out.view_mut((r, 0), (r, w))
        .gemm(C_I * e_plus, &*q2buf, &s.view((0, 0), (r, w)), zero);
    if augmented {
        // Derivative columns pick up -J Z; J = diag(-iI, iI).
        for row in 0..r {
            for col in 0..2 * r {
                let z = s[(row, col)];
                out[(row, 2 * r + col)] += C_I * z;
            }
        }
        for row in r..2 * r {
            for col in 0..2 * r {
                let z = s[(row, col)];
                out[(row, 2 * r + col)] -= C_I * z;
            }
        }
    }
}

fn propagate_dp54(
    q: &MatrixPotential,
    lambda: Complex64,
    grid: &Grid,
    tol: f64,
    want_deriv: bool,
) -> Result<SolutionSamples> {
    let r = q.r();
    let mut ws = Dp54::new(r, want_deriv);
    let w = if want_deriv { 4 * r } else { 2 * r };
    let mut s = CMat::zeros(2 * r, w);
    for i in 0..2 * r {
        s[(i, i)] = Complex64::new(1.0, 0.0);
    }

    let rtol = tol;
    let atol = tol * 1e-3;
    let mut acc_err = 0.0_f64;
    let mut h_prop = (0.5 / (1.0 + 2.0 * lambda.norm())).min(1e-2);
    let mut total_steps = 0_usize;
    let mut have_fsal = false;

    let nodes = grid.nodes();
    let mut y_out: Vec<CMat> = Vec::with_capacity(nodes.len());
    let mut ylam_out: Vec<CMat> = if want_deriv {
        Vec::with_capacity(nodes.len())
    } else {
        Vec::new()
    };
    store_node(&s, lambda, 0.0, r, want_deriv, &mut y_out, &mut ylam_out);

    for seg in nodes.windows(2) {
        let (xa, xb) = (seg[0], seg[1]);
        let mut x = xa;
        while x < xb - 1e-15 {
            total_steps += 1;
            if total_steps > 2_000_000 {
                return Err(Error::IntegratorFailure {
                    x,
                    reason: "step budget exhausted".into(),
                });
            }
            let h = h_prop.min(xb - x);

            if !have_fsal {
                fill_rhs(q, lambda, want_deriv, x, &s, &mut ws.q1buf, &mut ws.q2buf, &mut ws.k[0]);
            }
            ws.stage_sum(&s, h, &[A21]);
            fill_rhs(q, lambda, want_deriv, x + STAGE_C[1] * h, &ws.tmp, &mut ws.q1buf, &mut ws.q2buf, &mut ws.k[1]);
            ws.stage_sum(&s, h, &A3);
            fill_rhs(q, lambda, want_deriv, x + STAGE_C[2] * h, &ws.tmp, &mut ws.q1buf, &mut ws.q2buf, &mut ws.k[2]);
            ws.stage_sum(&s, h, &A4);
            fill_rhs(q, lambda, want_deriv, x + STAGE_C[3] * h, &ws.tmp, &mut ws.q1buf, &mut ws.q2buf, &mut ws.k[3]);
            ws.stage_sum(&s, h, &A5);
            fill_rhs(q, lambda, want_deriv, x + STAGE_C[4] * h, &ws.tmp, &mut ws.q1buf, &mut ws.q2buf, &mut ws.k[4]);
            ws.stage_sum(&s, h, &A6);
            fill_rhs(q, lambda, want_deriv, x + STAGE_C[5] * h, &ws.tmp, &mut ws.q1buf, &mut ws.q2buf, &mut ws.k[5]);
            ws.stage_sum(&s, h, &A7);
            // tmp now holds the fifth-order candidate; its derivative is FSAL.
            fill_rhs(q, lambda, want_deriv, x + h, &ws.tmp, &mut ws.q1buf, &mut ws.q2buf, &mut ws.k[6]);
            ws.error_sum(h);

            let err_abs = ws.err.norm();
            let scale = atol + rtol * s.norm().max(ws.tmp.norm());
            let err_norm = err_abs / scale;

            if err_norm <= 1.0 {
                x = if h >= xb - x - 1e-15 { xb } else { x + h };
                s.copy_from(&ws.tmp);
                ws.k.swap(0, 6);
                have_fsal = true;
                acc_err += err_abs;
                let fac = if err_norm == 0.0 {
                    5.0
                } else {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                h_prop = (h * fac).min(0.25);
            } else {
                // k[0] is still the derivative at (x, s): FSAL stays valid.
                let fac = (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9);
                h_prop = h * fac;
                if h_prop < 1e-14 {
                    return Err(Error::IntegratorFailure {
                        x,
                        reason: "step size underflow".into(),
                    });
                }
            }
        }
        store_node(&s, lambda, xb, r, want_deriv, &mut y_out, &mut ylam_out);
    }

    Ok(SolutionSamples {
        lambda,
        x_grid: nodes.to_vec(),
        y: y_out,
        y_lambda: want_deriv.then_some(ylam_out),
        estimated_error: acc_err,
        r,
    })
}

/// Converts interaction-picture state columns back to `Y` (and `dY/dlambda`)
/// at node `x` and appends them to the output lists.
fn store_node(
    s: &CMat,
    lambda: Complex64,
    x: f64,
    r: usize,
    want_deriv: bool,
    y_out: &mut Vec<CMat>,
    ylam_out: &mut Vec<CMat>,
) {
    let e_plus = (C_I * lambda * x).exp();
    let e_minus = (-C_I * lambda * x).exp();
    let mut y = CMat::zeros(2 * r, 2 * r);
    for row in 0..2 * r {
        let f = if row < r { e_plus } else { e_minus };
        for col in 0..2 * r {
            y[(row, col)] = f * s[(row, col)];
        }
    }
    y_out.push(y);
    if want_deriv {
        let mut v = CMat::zeros(2 * r, 2 * r);
        for row in 0..2 * r {
            let f = if row < r { e_plus } else { e_minus };
            for col in 0..2 * r {
                v[(row, col)] = f * s[(row, 2 * r + col)];
            }
        }
        ylam_out.push(v);
    }
}

/// Midpoint-exponential propagation for sampled potentials.
///
/// Steps never cross potential sample nodes, so the piecewise-linear kinks
/// do not degrade the order. The returned estimate is a Richardson
/// comparison against a propagation with halved substeps.
fn propagate_magnus(
    q: &MatrixPotential,
    lambda: Complex64,
    grid: &Grid,
    tol: f64,
    want_deriv: bool,
) -> Result<SolutionSamples> {
    let coarse = magnus_pass(q, lambda, grid, tol, want_deriv, 1)?;
    let fine = magnus_pass(q, lambda, grid, tol, want_deriv, 2)?;
    let mut est = 0.0_f64;
    for (a, b) in coarse.y.iter().zip(&fine.y) {
        est = est.max((a - b).norm());
    }
    let mut out = fine;
    out.estimated_error = est;
    Ok(out)
}

fn magnus_pass(
    q: &MatrixPotential,
    lambda: Complex64,
    grid: &Grid,
    tol: f64,
    want_deriv: bool,
    refine: usize,
) -> Result<SolutionSamples> {
    let r = q.r();
    let kinks = q.kink_points();
    let j = j_matrix(r);

    let mut z = CMat::identity(2 * r, 2 * r);
    let mut v = CMat::zeros(2 * r, 2 * r);

    let nodes = grid.nodes();
    let mut y_out: Vec<CMat> = Vec::with_capacity(nodes.len());
    let mut ylam_out: Vec<CMat> = Vec::with_capacity(nodes.len());
    y_out.push(z.clone());
    if want_deriv {
        ylam_out.push(v.clone());
    }

    let h_target = (tol / (1.0 + lambda.norm())).sqrt().clamp(1e-6, 0.25) / refine as f64;
    let mut total_steps = 0_usize;

    for seg in nodes.windows(2) {
        let (xa, xb) = (seg[0], seg[1]);
        // Cell boundaries: segment ends plus any potential kinks inside.
        let mut cuts = vec![xa];
        cuts.extend(
            kinks
                .iter()
                .copied()
                .filter(|&k| k > xa + 1e-14 && k < xb - 1e-14),
        );
        cuts.push(xb);
        for cell in cuts.windows(2) {
            let len = cell[1] - cell[0];
            let n_sub = ((len / h_target).ceil() as usize).max(1);
            if total_steps + n_sub > 4_000_000 {
                return Err(Error::IntegratorFailure {
                    x: cell[0],
                    reason: "midpoint-exponential step budget exhausted".into(),
                });
            }
            total_steps += n_sub;
            let h = len / n_sub as f64;
            for k in 0..n_sub {
                let xm = cell[0] + (k as f64 + 0.5) * h;
                let a_mid = ode_matrix(q, lambda, xm);
                if want_deriv {
                    // Augmented generator [[A, 0], [-J, A]] exponentiated as a
                    // whole propagates (Y, dY/dlambda) with frozen coefficients.
                    let mut g = CMat::zeros(4 * r, 4 * r);
                    g.view_mut((0, 0), (2 * r, 2 * r)).copy_from(&a_mid);
                    g.view_mut((2 * r, 2 * r), (2 * r, 2 * r)).copy_from(&a_mid);
                    g.view_mut((2 * r, 0), (2 * r, 2 * r)).copy_from(&(-&j));
                    let f = (g * Complex64::new(h, 0.0)).exp();
                    let e = f.view((0, 0), (2 * r, 2 * r)).clone_owned();
                    let xblk = f.view((2 * r, 0), (2 * r, 2 * r)).clone_owned();
                    let z_new = &e * &z;
                    let v_new = &xblk * &z + &e * &v;
                    z = z_new;
                    v = v_new;
                } else {
                    let f = (a_mid * Complex64::new(h, 0.0)).exp();
                    z = &f * &z;
                }
            }
        }
        y_out.push(z.clone());
        if want_deriv {
            ylam_out.push(v.clone());
        }
    }

    Ok(SolutionSamples {
        lambda,
        x_grid: nodes.to_vec(),
        y: y_out,
        y_lambda: want_deriv.then_some(ylam_out),
        estimated_error: 0.0,
        r,
    })
}

/// Explicit system matrix `A(x) = -lambda J + J Q(x)`, so that `Y' = A Y`.
pub fn ode_matrix(q: &MatrixPotential, lambda: Complex64, x: f64) -> CMat {
    let r = q.r();
    let mut a = CMat::zeros(2 * r, 2 * r);
    let q1 = q.q1(x);
    let q2 = q.q2(x);
    for i in 0..r {
        a[(i, i)] = C_I * lambda;
        a[(r + i, r + i)] = -C_I * lambda;
    }
    for i in 0..r {
        for jj in 0..r {
            a[(i, r + jj)] = -C_I * q1[(i, jj)];
            a[(r + i, jj)] = C_I * q2[(i, jj)];
        }
    }
    a
}
