//! Strip and single-eigenvalue Riesz projectors as Nystrom kernels.
//!
//! A projector is represented by its integral kernel sampled on a quadrature
//! grid: block `(i, j)` of the stored matrix is the `2r x 2r` kernel value
//! `K(x_i, t_j)`.  Composition, traces, and operator norms are taken in the
//! weighted (Nystrom) sense, so a kernel behaves like the discretised
//! operator `f -> integral K(x, t) f(t) dt`.
//!
//! Perturbed kernels are produced by trapezoidal quadrature of the contour
//! integral of `phi_Q(x, lambda) m(lambda) phi_{Q*}(t, conj(lambda))^H` over a
//! circle enclosing the targeted eigenvalue group.  Only the pole-carrying
//! term is quadratured; the remaining part of the resolvent is entire in
//! `lambda` and integrates to zero over any closed contour, so it is never
//! sampled.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Error;
use crate::grid::{Grid, GridFunction};
use crate::linalg::{a_matrix, a_star, ja_star, CMat, CVec, C_ONE, C_ZERO};
use crate::potential::MatrixPotential;
use crate::propagator::fundamental_matrix;
use crate::spectrum::EigenvalueRecord;
use crate::Result;

/// What a kernel represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelTag {
    /// Projector onto the eigenvalue group of one vertical strip.
    Strip(i64),
    /// Projector onto a single eigenvalue cluster.
    Eigenvalue(Complex64),
    /// Closed-form unperturbed strip projector.
    FreeStrip(i64),
    /// Result of kernel arithmetic (differences, compositions).
    Derived,
}

/// Tuning knobs for contour quadrature of projector kernels.
#[derive(Debug, Clone, Copy)]
pub struct KernelOptions {
    /// ODE tolerance for the contour-node solves.
    pub tol: f64,
    /// Initial number of contour nodes.
    pub m_start: usize,
    /// Hard cap on contour nodes; doubling stops here.
    pub m_cap: usize,
    /// Node doubling stops once the kernel changes by less than this.
    pub stability_tol: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            m_start: 64,
            m_cap: 1024,
            stability_tol: 1e-8,
        }
    }
}

/// A projector (or derived operator) as a dense Nystrom kernel.
///
/// The matrix is `(2 r G) x (2 r G)` for a grid of `G` nodes; rows group by
/// node first, component second, so row `i * 2r + a` is component `a` at node
/// `x_i`.
#[derive(Debug, Clone)]
pub struct ProjectorKernel {
    /// Quadrature grid shared by both kernel arguments.
    pub grid: Grid,
    /// Block size parameter; kernel values are `2r x 2r`.
    pub r: usize,
    /// Kernel samples, block `(i, j)` at rows `i*2r..`, columns `j*2r..`.
    pub matrix: CMat,
    /// Provenance of this kernel.
    pub tag: KernelTag,
    /// Contour nodes used by the final quadrature pass (0 for closed forms).
    pub contour_nodes: usize,
    /// Kernel change over the last node doubling, max entry modulus.
    pub estimated_quadrature_error: f64,
}

/// Relative convergence target for power-iteration norm estimates.
const POWER_TOL: f64 = 1e-4;
/// Norm estimates below this are reported without further refinement.
const POWER_FLOOR: f64 = 1e-9;
/// Contours must keep this absolute distance from located eigenvalues
/// (relaxed proportionally for small circles).
const SEPARATION: f64 = 0.05;

impl ProjectorKernel {
    fn zero(grid: &Grid, r: usize, tag: KernelTag) -> Self {
        let dim = 2 * r * grid.len();
        Self {
            grid: grid.clone(),
            r,
            matrix: CMat::zeros(dim, dim),
            tag,
            contour_nodes: 0,
            estimated_quadrature_error: 0.0,
        }
    }

    /// Kernel value block at node pair `(i, j)`.
    pub fn block(&self, i: usize, j: usize) -> CMat {
        let d = 2 * self.r;
        self.matrix.view((i * d, j * d), (d, d)).into_owned()
    }

    /// Largest entry modulus of the kernel difference with `other`.
    pub fn max_entry_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let mut worst = 0.0f64;
        for (a, b) in self
            .matrix
            .as_slice()
            .iter()
            .zip(other.matrix.as_slice())
        {
            worst = worst.max((a - b).norm());
        }
        Ok(worst)
    }

    /// Kernel difference `self - other`, tagged as derived.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            r: self.r,
            matrix: &self.matrix - &other.matrix,
            tag: KernelTag::Derived,
            contour_nodes: self.contour_nodes.max(other.contour_nodes),
            estimated_quadrature_error: self.estimated_quadrature_error
                + other.estimated_quadrature_error,
        })
    }

    /// Kernel sum `self + other`, tagged as derived.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            r: self.r,
            matrix: &self.matrix + &other.matrix,
            tag: KernelTag::Derived,
            contour_nodes: self.contour_nodes.max(other.contour_nodes),
            estimated_quadrature_error: self.estimated_quadrature_error
                + other.estimated_quadrature_error,
        })
    }

    /// Nystrom composition `(self o other)(x, t) = integral self(x, s)
    /// other(s, t) ds`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let weighted = scale_block_rows(&other.matrix, self.grid.weights(), 2 * self.r);
        let mut matrix = CMat::zeros(self.matrix.nrows(), self.matrix.ncols());
        matrix.gemm(C_ONE, &self.matrix, &weighted, C_ZERO);
        Ok(Self {
            grid: self.grid.clone(),
            r: self.r,
            matrix,
            tag: KernelTag::Derived,
            contour_nodes: self.contour_nodes.max(other.contour_nodes),
            estimated_quadrature_error: self.estimated_quadrature_error
                + other.estimated_quadrature_error,
        })
    }

    /// Apply the operator to a grid function: `g(x_i) = sum_j w_j K(x_i, x_j)
    /// f(x_j)`.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let d = 2 * self.r;
        if f.values.len() != self.grid.len() || f.values[0].len() != d {
            return Err(Error::DimensionMismatch(format!(
                "kernel on {} nodes of size {} applied to function on {} nodes of size {}",
                self.grid.len(),
                d,
                f.values.len(),
                f.values[0].len()
            )));
        }
        let mut flat = CVec::zeros(self.matrix.ncols());
        for (j, (v, &w)) in f.values.iter().zip(self.grid.weights()).enumerate() {
            let w = Complex64::new(w, 0.0);
            for a in 0..d {
                flat[j * d + a] = w * v[a];
            }
        }
        let out = &self.matrix * &flat;
        let values = (0..self.grid.len())
            .map(|i| CVec::from_fn(d, |a, _| out[i * d + a]))
            .collect();
        Ok(GridFunction { values })
    }

    /// Nystrom trace `sum_i w_i tr K(x_i, x_i)`.
    pub fn trace(&self) -> Complex64 {
        let d = 2 * self.r;
        let mut acc = C_ZERO;
        for (i, &w) in self.grid.weights().iter().enumerate() {
            let mut diag = C_ZERO;
            for a in 0..d {
                diag += self.matrix[(i * d + a, i * d + a)];
            }
            acc += Complex64::new(w, 0.0) * diag;
        }
        acc
    }

    /// Weight-symmetrised matrix `W^{1/2} K W^{1/2}`; its singular values are
    /// those of the Nystrom operator on the weighted sequence space.
    pub fn symmetrized(&self) -> CMat {
        let d = 2 * self.r;
        let sqrt_w: Vec<f64> = self.grid.weights().iter().map(|w| w.sqrt()).collect();
        let mut s = self.matrix.clone();
        for (i, &wi) in sqrt_w.iter().enumerate() {
            for a in 0..d {
                let row = i * d + a;
                for (j, &wj) in sqrt_w.iter().enumerate() {
                    for b in 0..d {
                        let col = j * d + b;
                        s[(row, col)] *= Complex64::new(wi * wj, 0.0);
                    }
                }
            }
        }
        s
    }

    /// Operator norm of the Nystrom operator (largest singular value of the
    /// weight-symmetrised matrix).
    pub fn op_norm(&self) -> f64 {
        let s = self.symmetrized();
        sigma_max_chain(&[ChainLink::Plain(&s)], s.ncols())
    }

    /// Hilbert-Schmidt norm of the Nystrom operator.
    pub fn hs_norm(&self) -> f64 {
        self.symmetrized().norm()
    }

    /// Number of singular values above `rel_tol` times the largest.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let svd = self.symmetrized().svd(false, false);
        let s1 = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        if s1 <= 0.0 {
            return 0;
        }
        svd.singular_values.iter().filter(|s| **s > rel_tol * s1).count()
    }

    /// Operator norm of `self o self - self`, a direct idempotency check that
    /// avoids forming the composition explicitly.
    pub fn idempotency_defect(&self) -> f64 {
        let s = self.symmetrized();
        sigma_max_chain(&[ChainLink::SquareMinusSelf(&s)], s.ncols())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.r != other.r || self.grid.len() != other.grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "kernel shapes differ: {} nodes size {} vs {} nodes size {}",
                self.grid.len(),
                self.r,
                other.grid.len(),
                other.r
            )));
        }
        Ok(())
    }
}

/// Operator norm of the composition `a o b` without forming it.
pub fn cross_product_op_norm(a: &ProjectorKernel, b: &ProjectorKernel) -> Result<f64> {
    a.check_compatible(b)?;
    let sa = a.symmetrized();
    let sb = b.symmetrized();
    Ok(sigma_max_chain(
        &[ChainLink::Plain(&sb), ChainLink::Plain(&sa)],
        sa.ncols(),
    ))
}

/// Operator norm of the kernel difference `a - b`.
pub fn op_norm_difference(a: &ProjectorKernel, b: &ProjectorKernel) -> Result<f64> {
    Ok(a.sub(b)?.op_norm())
}

/// Hilbert-Schmidt norm of the kernel difference `a - b`.
pub fn hs_norm_difference(a: &ProjectorKernel, b: &ProjectorKernel) -> Result<f64> {
    Ok(a.sub(b)?.hs_norm())
}

/// One factor in a product operator for norm estimation.  Chains apply
/// right-to-left, matching matrix-product order.
enum ChainLink<'a> {
    Plain(&'a CMat),
    /// `S^2 - S` applied as two multiplications and a subtraction.
    SquareMinusSelf(&'a CMat),
}

impl ChainLink<'_> {
    fn apply(&self, v: &CVec) -> CVec {
        match self {
            ChainLink::Plain(m) => *m * v,
            ChainLink::SquareMinusSelf(m) => {
                let sv = *m * v;
                *m * &sv - sv
            }
        }
    }

    fn apply_adjoint(&self, v: &CVec) -> CVec {
        match self {
            ChainLink::Plain(m) => m.ad_mul(v),
            ChainLink::SquareMinusSelf(m) => {
                let sv = m.ad_mul(v);
                m.ad_mul(&sv) - sv
            }
        }
    }
}

/// Deterministic start vector with irrational frequencies, so it cannot be
/// exactly orthogonal to eigenspaces carved out by grid symmetries.
fn seed_vector(dim: usize, phase: f64) -> CVec {
    CVec::from_fn(dim, |k, _| {
        let t = k as f64;
        Complex64::new(
            (2.399963 * t + phase).sin() + 0.05,
            0.8 * (1.533 * t + 0.25 * phase).cos(),
        )
    })
}

/// Largest singular value of the product of a chain of operators, by power
/// iteration on the normal equations with a deterministic start vector.  A
/// second seed is tried when the first collapses, guarding against a start
/// vector in the operator's null space.
fn sigma_max_chain(chain: &[ChainLink<'_>], dim: usize) -> f64 {
    let mut best = 0.0f64;
    for phase in [0.0, 1.0] {
        let mut v = seed_vector(dim, phase);
        let norm = v.norm();
        v.unscale_mut(norm);
        let mut sigma = 0.0f64;
        for iter in 0..300 {
            let mut w = v.clone();
            for link in chain.iter().rev() {
                w = link.apply(&w);
            }
            let fwd = w.norm();
            if fwd <= f64::MIN_POSITIVE {
                sigma = 0.0;
                break;
            }
            for link in chain.iter() {
                w = link.apply_adjoint(&w);
            }
            let back = w.norm();
            if back <= f64::MIN_POSITIVE {
                sigma = fwd;
                break;
            }
            v = w.unscale(back);
            let converged = (fwd - sigma).abs() <= POWER_TOL * fwd.max(POWER_FLOOR);
            sigma = fwd;
            if converged && iter >= 3 {
                break;
            }
        }
        best = best.max(sigma);
        if best > POWER_FLOOR {
            break;
        }
    }
    best
}

/// Scale block-row `j` (of height `d`) of `m` by `weights[j]`.
fn scale_block_rows(m: &CMat, weights: &[f64], d: usize) -> CMat {
    let mut out = m.clone();
    for (j, &w) in weights.iter().enumerate() {
        let w = Complex64::new(w, 0.0);
        for x in out.view_mut((j * d, 0), (d, m.ncols())).iter_mut() {
            *x *= w;
        }
    }
    out
}

/// Closed-form unperturbed strip projector kernel.
///
/// With `e_n(u) = exp(i pi n u)`, the kernel at `(x, t)` is
/// `1/2 [[e_n(x-t) I, e_n(x+t) I], [conj(e_n(x+t)) I, conj(e_n(x-t)) I]]`.
/// It has operator norm 1, rank `r`, and Hilbert-Schmidt norm `sqrt(r)`.
pub fn free_projector_kernel(n: i64, r: usize, grid: &Grid) -> ProjectorKernel {
    let mut kernel = ProjectorKernel::zero(grid, r, KernelTag::FreeStrip(n));
    let d = 2 * r;
    let omega = PI * n as f64;
    for (i, &x) in grid.nodes().iter().enumerate() {
        for (j, &t) in grid.nodes().iter().enumerate() {
            let diff = Complex64::new(0.0, omega * (x - t)).exp() * 0.5;
            let sum = Complex64::new(0.0, omega * (x + t)).exp() * 0.5;
            for a in 0..r {
                kernel.matrix[(i * d + a, j * d + a)] = diff;
                kernel.matrix[(i * d + a, j * d + r + a)] = sum;
                kernel.matrix[(i * d + r + a, j * d + a)] = sum.conj();
                kernel.matrix[(i * d + r + a, j * d + r + a)] = diff.conj();
            }
        }
    }
    kernel
}

/// Enforce contour separation from every located eigenvalue.
fn check_separation(
    records: &[EigenvalueRecord],
    center: Complex64,
    radius: f64,
) -> Result<()> {
    let gate = SEPARATION.min(0.1 * radius);
    for rec in records {
        let gap = ((rec.value - center).norm() - radius).abs();
        if gap < gate {
            return Err(Error::ContourTooCloseToEigenvalue {
                eigenvalue: rec.value,
                distance: gap,
            });
        }
    }
    Ok(())
}

/// Cached per-angle contour data: stacked `phi_Q` columns, the adjoint of the
/// stacked `phi_{Q*}` columns, and the Weyl matrix.
struct ContourNode {
    u: CMat,
    vh: CMat,
    m: CMat,
}

/// One contour angle: solve both systems across the grid and assemble the
/// rank-`r` kernel factors.
fn solve_contour_node(
    q: &MatrixPotential,
    q_adj: &MatrixPotential,
    lambda: Complex64,
    grid: &Grid,
    tol: f64,
) -> Result<ContourNode> {
    let r = q.r();
    let d = 2 * r;
    let sol = fundamental_matrix(q, lambda, grid, tol, false)?;
    let sol_star = fundamental_matrix(q_adj, lambda.conj(), grid, tol, false)?;

    let a = a_matrix(r);
    let jas = ja_star(r);
    let aster = a_star(r);
    let y_end = sol.y_end();
    let s = &a * y_end * &jas;
    let c = &a * y_end * &aster;
    let m = s
        .clone()
        .lu()
        .solve(&(-&c))
        .ok_or(Error::SingularCharacteristicMatrix { lambda })?;

    let mut u = CMat::zeros(d * grid.len(), r);
    let mut v = CMat::zeros(d * grid.len(), r);
    for i in 0..grid.len() {
        u.view_mut((i * d, 0), (d, r)).copy_from(&sol.phi(i));
        v.view_mut((i * d, 0), (d, r)).copy_from(&sol_star.phi(i));
    }
    Ok(ContourNode {
        u,
        vh: v.adjoint(),
        m,
    })
}

/// Accumulate the trapezoidal contour quadrature for a fixed node count,
/// reusing cached per-angle solves.
fn accumulate_kernel(
    cache: &mut HashMap<usize, ContourNode>,
    q: &MatrixPotential,
    q_adj: &MatrixPotential,
    center: Complex64,
    radius: f64,
    grid: &Grid,
    tol: f64,
    m_nodes: usize,
    m_cap: usize,
) -> Result<CMat> {
    let r = q.r();
    let dim = 2 * r * grid.len();
    let mut kernel = CMat::zeros(dim, dim);
    let mut scaled = CMat::zeros(dim, r);
    let stride = m_cap / m_nodes;
    for k in 0..m_nodes {
        let key = k * stride;
        if !cache.contains_key(&key) {
            let theta = 2.0 * PI * k as f64 / m_nodes as f64;
            let lambda = center + Complex64::new(0.0, theta).exp() * radius;
            cache.insert(key, solve_contour_node(q, q_adj, lambda, grid, tol)?);
        }
        let node = &cache[&key];
        let theta = 2.0 * PI * k as f64 / m_nodes as f64;
        let coeff = -Complex64::new(0.0, theta).exp() * (radius / m_nodes as f64);
        scaled.gemm(coeff, &node.u, &node.m, C_ZERO);
        kernel.gemm(C_ONE, &scaled, &node.vh, C_ONE);
    }
    Ok(kernel)
}

/// Contour-quadrature projector kernel over the circle with the given center
/// and radius, with node doubling until the kernel stabilises.
fn contour_kernel(
    q: &MatrixPotential,
    center: Complex64,
    radius: f64,
    grid: &Grid,
    records: &[EigenvalueRecord],
    opts: &KernelOptions,
    tag: KernelTag,
) -> Result<ProjectorKernel> {
    check_separation(records, center, radius)?;
    let q_adj = q.adjoint();
    let mut cache = HashMap::new();
    let mut m_nodes = opts.m_start.max(8).next_power_of_two();
    let m_cap = opts.m_cap.next_power_of_two().max(m_nodes);
    let mut kernel = accumulate_kernel(
        &mut cache, q, &q_adj, center, radius, grid, opts.tol, m_nodes, m_cap,
    )?;
    let mut change = f64::INFINITY;
    while m_nodes < m_cap {
        m_nodes *= 2;
        let refined = accumulate_kernel(
            &mut cache, q, &q_adj, center, radius, grid, opts.tol, m_nodes, m_cap,
        )?;
        change = max_abs_diff(&refined, &kernel);
        kernel = refined;
        if change <= opts.stability_tol {
            break;
        }
    }
    Ok(ProjectorKernel {
        grid: grid.clone(),
        r: q.r(),
        matrix: kernel,
        tag,
        contour_nodes: m_nodes,
        estimated_quadrature_error: if change.is_finite() { change } else { 0.0 },
    })
}

fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Strip projector by quadrature over the unit circle centered at `pi n`.
///
/// `records` must contain the located eigenvalues near the strip; the call
/// fails if any of them comes within the separation gate of the contour.
pub fn projector_kernel(
    q: &MatrixPotential,
    n: i64,
    grid: &Grid,
    records: &[EigenvalueRecord],
    opts: &KernelOptions,
) -> Result<ProjectorKernel> {
    let center = Complex64::new(PI * n as f64, 0.0);
    contour_kernel(q, center, 1.0, grid, records, opts, KernelTag::Strip(n))
}

/// Projector onto a single eigenvalue cluster, over a circle of the given
/// radius around the record's value.  Other records must stay clear of the
/// contour.
pub fn projector_for_eigenvalue(
    q: &MatrixPotential,
    record: &EigenvalueRecord,
    radius: f64,
    grid: &Grid,
    records: &[EigenvalueRecord],
    opts: &KernelOptions,
) -> Result<ProjectorKernel> {
    let others: Vec<EigenvalueRecord> = records
        .iter()
        .filter(|rec| (rec.value - record.value).norm() > 1e-9)
        .copied()
        .collect();
    contour_kernel(
        q,
        record.value,
        radius,
        grid,
        &others,
        opts,
        KernelTag::Eigenvalue(record.value),
    )
}

/// Strip projector with automatic contour choice.
///
/// The unit circle around `pi n` is used when it cleanly separates the
/// strip's eigenvalues from all others; otherwise the projector is assembled
/// as a sum of single-eigenvalue projectors with radii scaled to 0.4 times
/// the nearest-neighbour distance.
pub fn strip_projector_auto(
    q: &MatrixPotential,
    n: i64,
    grid: &Grid,
    records: &[EigenvalueRecord],
    opts: &KernelOptions,
) -> Result<ProjectorKernel> {
    let center = Complex64::new(PI * n as f64, 0.0);
    let strip: Vec<&EigenvalueRecord> = records.iter().filter(|rec| rec.strip == n).collect();
    if strip.is_empty() {
        return Ok(ProjectorKernel::zero(grid, q.r(), KernelTag::Strip(n)));
    }
    let circle_ok = records.iter().all(|rec| {
        let dist = (rec.value - center).norm();
        if rec.strip == n {
            dist <= 1.0 - SEPARATION
        } else {
            dist >= 1.0 + SEPARATION
        }
    });
    if circle_ok {
        return projector_kernel(q, n, grid, records, opts);
    }
    let mut total: Option<ProjectorKernel> = None;
    for rec in &strip {
        let nn = records
            .iter()
            .filter(|other| (other.value - rec.value).norm() > 1e-9)
            .map(|other| (other.value - rec.value).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = if nn.is_finite() {
            (0.4 * nn).clamp(1e-3, 0.35)
        } else {
            0.35
        };
        let part = projector_for_eigenvalue(q, rec, radius, grid, records, opts)?;
        total = Some(match total {
            None => part,
            Some(acc) => acc.add(&part)?,
        });
    }
    let mut kernel = total.expect("strip has at least one record");
    kernel.tag = KernelTag::Strip(n);
    Ok(kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::potential::{builtin, free};
    use crate::resolvent::ResolventSampler;
    use crate::spectrum::{eigenvalues_in_strip, SearchOptions};
    use approx::assert_relative_eq;

    fn free_records(n_lo: i64, n_hi: i64, r: usize) -> Vec<EigenvalueRecord> {
        (n_lo..=n_hi)
            .map(|n| EigenvalueRecord {
                value: Complex64::new(PI * n as f64, 0.0),
                multiplicity: r,
                strip: n,
            })
            .collect()
    }

    #[test]
    fn free_kernel_matches_closed_form_values() {
        let grid = Grid::uniform(5);
        let kernel = free_projector_kernel(0, 1, &grid);
        let block = kernel.block(0, 0);
        for a in 0..2 {
            for b in 0..2 {
                assert_relative_eq!(block[(a, b)].re, 0.5, max_relative = 1e-14);
                assert!(block[(a, b)].im.abs() < 1e-14);
            }
        }
        let k2 = free_projector_kernel(3, 2, &grid);
        let b2 = k2.block(1, 2);
        let x = grid.nodes()[1];
        let t = grid.nodes()[2];
        let expect = Complex64::new(0.0, 3.0 * PI * (x - t)).exp() * 0.5;
        assert!((b2[(0, 0)] - expect).norm() < 1e-14);
        assert!((b2[(0, 1)]).norm() < 1e-14);
    }

    #[test]
    fn free_kernel_norms_and_rank() {
        let grid = Grid::uniform(65);
        for (n, r) in [(0i64, 1usize), (2, 1), (-1, 2)] {
            let kernel = free_projector_kernel(n, r, &grid);
            assert_relative_eq!(kernel.op_norm(), 1.0, max_relative = 1e-6);
            assert_relative_eq!(kernel.hs_norm(), (r as f64).sqrt(), max_relative = 1e-10);
            assert_eq!(kernel.rank(1e-8), r);
            let tr = kernel.trace();
            assert_relative_eq!(tr.re, r as f64, max_relative = 1e-12);
            assert!(tr.im.abs() < 1e-12);
        }
    }

    #[test]
    fn free_contour_quadrature_matches_closed_form() {
        let grid = Grid::uniform(33);
        let q = free(1);
        let records = free_records(-4, 4, 1);
        let opts = KernelOptions::default();
        for n in [0i64, 2] {
            let by_contour = projector_kernel(&q, n, &grid, &records, &opts).unwrap();
            let closed = free_projector_kernel(n, 1, &grid);
            assert!(by_contour.max_entry_diff(&closed).unwrap() < 1e-8);
            assert!(by_contour.estimated_quadrature_error < 1e-8);
        }
    }

    #[test]
    fn free_contour_quadrature_matches_closed_form_r2() {
        let grid = Grid::uniform(17);
        let q = free(2);
        let records = free_records(-2, 3, 2);
        let opts = KernelOptions::default();
        let by_contour = projector_kernel(&q, 1, &grid, &records, &opts).unwrap();
        let closed = free_projector_kernel(1, 2, &grid);
        assert!(by_contour.max_entry_diff(&closed).unwrap() < 1e-8);
    }

    #[test]
    fn separation_gate_rejects_close_eigenvalue() {
        let grid = Grid::uniform(9);
        let q = free(1);
        let mut records = free_records(-1, 1, 1);
        records.push(EigenvalueRecord {
            value: Complex64::new(1.02, 0.0),
            multiplicity: 1,
            strip: 0,
        });
        let err = projector_kernel(&q, 0, &grid, &records, &KernelOptions::default());
        assert!(matches!(
            err,
            Err(Error::ContourTooCloseToEigenvalue { .. })
        ));
    }

    #[test]
    fn free_kernel_is_idempotent_under_quadrature() {
        let grid = Grid::uniform(65);
        let kernel = free_projector_kernel(1, 1, &grid);
        assert!(kernel.idempotency_defect() < 1e-10);
        let composed = kernel.compose(&kernel).unwrap();
        assert!(composed.max_entry_diff(&kernel).unwrap() < 1e-12);
    }

    #[test]
    fn free_kernels_are_pairwise_orthogonal() {
        let grid = Grid::uniform(65);
        for (n, m) in [(0i64, 1i64), (-1, 1), (2, 5)] {
            let a = free_projector_kernel(n, 1, &grid);
            let b = free_projector_kernel(m, 1, &grid);
            assert!(cross_product_op_norm(&a, &b).unwrap() < 1e-10);
        }
    }

    #[test]
    fn trig_strip_projector_idempotent_with_integer_trace() {
        let grid = Grid::uniform(129);
        let q = builtin("trig").unwrap();
        let sopts = SearchOptions::default();
        let mut records = Vec::new();
        for n in -1..=2 {
            records.extend(eigenvalues_in_strip(&q, n, &sopts).unwrap());
        }
        let opts = KernelOptions::default();
        let kernel = strip_projector_auto(&q, 1, &grid, &records, &opts).unwrap();
        assert!(kernel.idempotency_defect() < 1e-5);
        let tr = kernel.trace();
        assert!((tr.re - 1.0).abs() < 1e-4, "trace {tr}");
        assert!(tr.im.abs() < 1e-4);
    }

    #[test]
    fn eigenvalue_circle_sum_matches_strip_circle() {
        let grid = Grid::uniform(65);
        let q = builtin("trig").unwrap();
        let sopts = SearchOptions::default();
        let mut records = Vec::new();
        for n in -1..=1 {
            records.extend(eigenvalues_in_strip(&q, n, &sopts).unwrap());
        }
        let opts = KernelOptions::default();
        let by_circle = projector_kernel(&q, 0, &grid, &records, &opts).unwrap();
        let rec = records.iter().find(|r| r.strip == 0).unwrap();
        let by_eig =
            projector_for_eigenvalue(&q, rec, 0.4, &grid, &records, &opts).unwrap();
        assert!(by_circle.max_entry_diff(&by_eig).unwrap() < 1e-6);
    }

    #[test]
    fn projector_commutes_with_resolvent() {
        let grid = Grid::uniform(129);
        let q = builtin("trig").unwrap();
        let sopts = SearchOptions::default();
        let mut records = Vec::new();
        for n in -1..=1 {
            records.extend(eigenvalues_in_strip(&q, n, &sopts).unwrap());
        }
        let opts = KernelOptions::default();
        let kernel = strip_projector_auto(&q, 0, &grid, &records, &opts).unwrap();

        let lambda = Complex64::new(PI, 0.0) + Complex64::new(0.0, 0.3).exp();
        let sampler = ResolventSampler::new(&q, lambda, &grid, 1e-10).unwrap();
        let f = GridFunction::from_fn(&grid, 1, |x| {
            CVec::from_fn(2, |a, _| {
                Complex64::new((PI * x).cos(), if a == 0 { 0.1 } else { -0.2 })
            })
        });
        let rf = sampler.apply(&f);
        let prf = kernel.apply(&rf).unwrap();
        let pf = kernel.apply(&f).unwrap();
        let rpf = sampler.apply(&pf);
        let diff = prf.axpy(Complex64::new(-1.0, 0.0), &rpf);
        let resid = diff.l2_norm(&grid) / f.l2_norm(&grid);
        assert!(resid < 1e-5, "commutation residual {resid}");
    }

    #[test]
    fn operator_norm_bounded_by_hs_norm() {
        let grid = Grid::uniform(33);
        let mut kernel = ProjectorKernel::zero(&grid, 1, KernelTag::Derived);
        let dim = kernel.matrix.nrows();
        for i in 0..dim {
            for j in 0..dim {
                kernel.matrix[(i, j)] = Complex64::new(
                    (0.37 * i as f64 + 0.11 * j as f64).sin(),
                    (0.23 * i as f64 - 0.31 * j as f64).cos(),
                );
            }
        }
        let op = kernel.op_norm();
        let hs = kernel.hs_norm();
        assert!(op <= hs * (1.0 + 1e-8), "op {op} hs {hs}");
    }

    #[test]
    fn apply_reproduces_free_eigenfunction() {
        let grid = Grid::uniform(65);
        let kernel = free_projector_kernel(1, 1, &grid);
        let f = GridFunction::from_fn(&grid, 1, |x| {
            CVec::from_fn(2, |a, _| {
                let sign = if a == 0 { 1.0 } else { -1.0 };
                Complex64::new(0.0, sign * PI * x).exp()
            })
        });
        let pf = kernel.apply(&f).unwrap();
        let diff = pf.axpy(Complex64::new(-1.0, 0.0), &f);
        assert!(diff.l2_norm(&grid) < 1e-10);
    }
}
