//! Decay tables and quantitative contour certificates.
//!
//! The central deliverable is the strip-projector decay table: operator and
//! Hilbert-Schmidt norms of the difference between perturbed and unperturbed
//! strip projectors, together with partial sums of their squares and the
//! matching eigenvalue deviation sums.  Square-summability of these
//! differences is the property the library exists to probe, so the table
//! carries everything needed to judge tail decay empirically.
//!
//! The module also houses two standalone certificates: a shifted-lattice
//! Fourier-sum bound for band-limited matrix functions, and per-contour
//! extremal bounds for `sin`, `cot`, and the characteristic matrix.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::characteristic::characteristic;
use crate::error::Error;
use crate::grid::Grid;
use crate::linalg::{op_norm, CMat};
use crate::potential::MatrixPotential;
use crate::projector::{
    free_projector_kernel, strip_projector_auto, KernelOptions,
};
use crate::spectrum::{
    asymptotics_from_records, spectrum_in_strips, EigenvalueRecord, SearchOptions,
};
use crate::Result;

/// Tolerances and sizes a decay table was computed with.
#[derive(Debug, Clone, Copy)]
pub struct ReportTolerances {
    /// ODE tolerance of the contour-node solves.
    pub kernel_ode_tol: f64,
    /// Contour-node doubling stability target.
    pub kernel_stability_tol: f64,
    /// ODE tolerance of the eigenvalue-search winding integrals.
    pub search_contour_tol: f64,
    /// ODE tolerance of the Newton polish.
    pub search_polish_tol: f64,
    /// Number of kernel grid nodes.
    pub grid_len: usize,
}

/// One strip of the decay table.
#[derive(Debug, Clone, Copy)]
pub struct BariMarkusRow {
    /// Strip number.
    pub n: i64,
    /// Operator-norm estimate of the projector difference.
    pub d: f64,
    /// Hilbert-Schmidt norm of the projector difference.
    pub hs_d: f64,
    /// Sum of `d_m^2` over `|m| <= |n|`.
    pub partial_sum: f64,
    /// Multiplicity-weighted `sum |lambda - pi n|^2` over the strip.
    pub strip_deviation_sq: f64,
    /// Multiplicity-weighted eigenvalue count of the strip.
    pub strip_count: usize,
}

/// Strip-projector decay table over a symmetric range of strips.
#[derive(Debug, Clone)]
pub struct BariMarkusReport {
    /// Largest strip index covered.
    pub n_max: i64,
    /// Rows for strips `-n_max ..= n_max` in ascending order.
    pub rows: Vec<BariMarkusRow>,
    /// Projector-difference square sum over all covered strips.
    pub s_total: f64,
    /// Eigenvalue deviation square sum over all covered strips.
    pub deviation_total: f64,
    /// Smallest `N` from which every covered strip looks unperturbed
    /// (count `r`, deviation below 0.25).
    pub threshold_n_hat: Option<i64>,
    /// Eigenvalue records the table was built from.
    pub records: Vec<EigenvalueRecord>,
    /// Parameters the table was computed with.
    pub tolerances: ReportTolerances,
}

impl BariMarkusReport {
    /// Row of strip `n`.
    pub fn row(&self, n: i64) -> Option<&BariMarkusRow> {
        self.rows.iter().find(|row| row.n == n)
    }

    /// Partial sum `S_N` of squared projector-difference norms over
    /// `|n| <= nn`.
    pub fn partial_sum_at(&self, nn: i64) -> f64 {
        self.rows
            .iter()
            .filter(|row| row.n.abs() <= nn)
            .map(|row| row.d * row.d)
            .sum()
    }

    /// Partial sum of eigenvalue deviations over `|n| <= nn`.
    pub fn deviation_sum_at(&self, nn: i64) -> f64 {
        self.rows
            .iter()
            .filter(|row| row.n.abs() <= nn)
            .map(|row| row.strip_deviation_sq)
            .sum()
    }
}

/// Build the strip-projector decay table for strips `|n| <= n_max`.
///
/// Eigenvalues are located for `|n| <= n_max + 1` first, so every contour can
/// prove its separation also against the neighbours just outside the covered
/// range.  Per-strip work is independent; assembly is a deterministic
/// reduction in ascending strip order.
pub fn bari_markus_table(
    q: &MatrixPotential,
    n_max: i64,
    grid: &Grid,
    kopts: &KernelOptions,
    sopts: &SearchOptions,
) -> Result<BariMarkusReport> {
    let records = spectrum_in_strips(q, -n_max - 1, n_max + 1, sopts)?;
    let asym = asymptotics_from_records(&records, q.r(), n_max);
    let mut rows = Vec::with_capacity((2 * n_max + 1) as usize);
    for n in -n_max..=n_max {
        let kernel = strip_projector_auto(q, n, grid, &records, kopts)?;
        let free = free_projector_kernel(n, q.r(), grid);
        let diff = kernel.sub(&free)?;
        let stats = asym
            .per_strip
            .iter()
            .find(|s| s.n == n)
            .expect("strip range covered by asymptotics");
        rows.push(BariMarkusRow {
            n,
            d: diff.op_norm(),
            hs_d: diff.hs_norm(),
            partial_sum: 0.0,
            strip_deviation_sq: stats.deviation_sq,
            strip_count: stats.count,
        });
    }
    for i in 0..rows.len() {
        let nn = rows[i].n.abs();
        rows[i].partial_sum = rows
            .iter()
            .filter(|row| row.n.abs() <= nn)
            .map(|row| row.d * row.d)
            .sum();
    }
    let s_total = rows.iter().map(|row| row.d * row.d).sum();
    let deviation_total = rows.iter().map(|row| row.strip_deviation_sq).sum();
    Ok(BariMarkusReport {
        n_max,
        rows,
        s_total,
        deviation_total,
        threshold_n_hat: asym.threshold_n_hat,
        records,
        tolerances: ReportTolerances {
            kernel_ode_tol: kopts.tol,
            kernel_stability_tol: kopts.stability_tol,
            search_contour_tol: sopts.tol_contour,
            search_polish_tol: sopts.tol_polish,
            grid_len: grid.len(),
        },
    })
}

/// A matrix-valued trigonometric polynomial on `(-1, 1)`:
/// `f(t) = sum_k C_k exp(i pi k t)`.
#[derive(Debug, Clone)]
pub struct BandLimitedFunction {
    r: usize,
    modes: Vec<(i64, CMat)>,
}

impl BandLimitedFunction {
    /// Build from `(frequency, coefficient)` pairs; coefficients must be
    /// `r x r`.  Duplicate frequencies are summed.
    pub fn new(r: usize, modes: Vec<(i64, CMat)>) -> Result<Self> {
        let mut sorted: Vec<(i64, CMat)> = Vec::new();
        for (k, c) in modes {
            if c.nrows() != r || c.ncols() != r {
                return Err(Error::DimensionMismatch(format!(
                    "mode {k} coefficient is {}x{}, expected {r}x{r}",
                    c.nrows(),
                    c.ncols()
                )));
            }
            match sorted.iter_mut().find(|(f, _)| *f == k) {
                Some((_, acc)) => *acc += c,
                None => sorted.push((k, c)),
            }
        }
        sorted.sort_by_key(|(k, _)| *k);
        Ok(Self { r, modes: sorted })
    }

    /// Constant identity function.
    pub fn identity(r: usize) -> Self {
        Self {
            r,
            modes: vec![(0, CMat::identity(r, r))],
        }
    }

    /// Matrix size.
    pub fn r(&self) -> usize {
        self.r
    }

    /// Mode list sorted by frequency.
    pub fn modes(&self) -> &[(i64, CMat)] {
        &self.modes
    }

    /// Point value `f(t)`.
    pub fn eval(&self, t: f64) -> CMat {
        let mut out = CMat::zeros(self.r, self.r);
        for (k, c) in &self.modes {
            let phase = Complex64::new(0.0, PI * *k as f64 * t).exp();
            for (o, x) in out.as_mut_slice().iter_mut().zip(c.as_slice()) {
                *o += phase * x;
            }
        }
        out
    }

    /// `integral_{-1}^{1} ||f(t)||^2 dt` with the pointwise operator norm,
    /// by composite trapezoid fine enough for the band limit.
    pub fn l2_norm_sq(&self) -> f64 {
        let max_freq = self
            .modes
            .iter()
            .map(|(k, _)| k.unsigned_abs())
            .max()
            .unwrap_or(0);
        let nodes = (64 * (max_freq as usize + 1) + 1).max(513);
        let h = 2.0 / (nodes - 1) as f64;
        let mut acc = 0.0;
        for i in 0..nodes {
            let t = -1.0 + h * i as f64;
            let v = op_norm(&self.eval(t));
            let w = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
            acc += w * v * v;
        }
        acc * h
    }
}

/// Shifted-lattice Fourier sum certificate.
#[derive(Debug, Clone, Copy)]
pub struct LemmaAReport {
    /// `sum_{|n| <= N} ||A(pi n + lambda) f||^2` (operator norms).
    pub sum: f64,
    /// `9 r ||f||^2` with the pointwise operator norm in `||f||`.
    pub bound: f64,
    /// `sum / bound`; at most 1 for every admissible input.
    pub ratio: f64,
    /// Truncation actually used.
    pub n_trunc: i64,
}

/// Evaluate `sum_{|n| <= n_trunc} ||A(pi n + lambda) f||^2` against its
/// a-priori bound, where `A(mu) f = (1/sqrt 2) integral_{-1}^{1}
/// e^{i mu t} f(t) dt`.
///
/// Modes integrate in closed form:
/// `A(pi n + lambda) f = sqrt 2 sin(lambda) sum_k (-1)^{n+k} C_k /
/// (lambda + pi (n+k))`.  The sum over the full lattice equals the squared
/// norm of `e^{i lambda t} f(t)` by Parseval, which the factor 9 dominates
/// for any unit-modulus `lambda`; truncation only decreases the sum, so the
/// reported ratio can never exceed 1.
pub fn lemma_a_sum(
    f: &BandLimitedFunction,
    lambda: Complex64,
    n_trunc: i64,
) -> Result<LemmaAReport> {
    if (lambda.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "lattice shift must lie on the unit circle, got |lambda| = {}",
            lambda.norm()
        )));
    }
    let n_trunc = n_trunc.max(100);
    let r = f.r();
    let sin_l = lambda.sin();
    let sqrt2 = Complex64::new(std::f64::consts::SQRT_2, 0.0);
    let mut sum = 0.0;
    let mut term = CMat::zeros(r, r);
    for n in -n_trunc..=n_trunc {
        term.fill(Complex64::new(0.0, 0.0));
        for (k, c) in f.modes() {
            let sign = if (n + k).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let denom = lambda + Complex64::new(PI * (n + k) as f64, 0.0);
            let factor = Complex64::new(sign, 0.0) / denom;
            for (o, x) in term.as_mut_slice().iter_mut().zip(c.as_slice()) {
                *o += factor * x;
            }
        }
        let a_n = op_norm(&(&term * (sqrt2 * sin_l)));
        sum += a_n * a_n;
    }
    let bound = 9.0 * r as f64 * f.l2_norm_sq();
    let ratio = if bound > 0.0 { sum / bound } else { 0.0 };
    Ok(LemmaAReport {
        sum,
        bound,
        ratio,
        n_trunc,
    })
}

/// Extremal quantities over one projector contour.
#[derive(Debug, Clone, Copy)]
pub struct ContourBoundsReport {
    /// Contour index (circle of radius 1 around `pi n`).
    pub n: i64,
    /// Number of equally spaced samples taken.
    pub samples: usize,
    /// `min |sin lambda|` over the samples.
    pub min_abs_sin: f64,
    /// `max |cot lambda|` over the samples.
    pub max_abs_cot: f64,
    /// `max ||s(lambda)^{-1}||`; infinite if a sample was singular.
    pub max_s_inv_norm: f64,
    /// `max ||s(lambda) - sin(lambda) I||`, the perturbation seen by the
    /// characteristic matrix on the contour.
    pub max_s_deviation: f64,
    /// Coarse bound `|sin| >= 1/2` holds at every sample.
    pub sin_above_half: bool,
    /// Sharper bound `|sin| >= 0.84` holds at every sample.
    pub sin_above_sharp: bool,
    /// Coarse bound `|cot| <= sqrt 3` holds at every sample.
    pub cot_below_sqrt3: bool,
    /// Sharper bound `|cot| <= 1.32` holds at every sample.
    pub cot_below_sharp: bool,
    /// `||s^{-1}|| <= 4` holds at every sample.
    pub s_inv_below_four: bool,
    /// `||s - sin I|| < 1/4` holds at every sample.
    pub s_deviation_below_quarter: bool,
}

/// Sample the circle of radius 1 around `pi n` and report contour extrema
/// of `sin`, `cot`, the characteristic-matrix inverse, and the deviation of
/// the characteristic matrix from its unperturbed value.
pub fn contour_bounds_check(
    q: &MatrixPotential,
    n: i64,
    samples: usize,
    tol: f64,
) -> Result<ContourBoundsReport> {
    let samples = samples.max(64);
    let center = Complex64::new(PI * n as f64, 0.0);
    let mut min_abs_sin = f64::INFINITY;
    let mut max_abs_cot = 0.0f64;
    let mut max_s_inv_norm = 0.0f64;
    let mut max_s_deviation = 0.0f64;
    for k in 0..samples {
        let theta = 2.0 * PI * k as f64 / samples as f64;
        let lambda = center + Complex64::new(0.0, theta).exp();
        let sin_l = lambda.sin();
        min_abs_sin = min_abs_sin.min(sin_l.norm());
        max_abs_cot = max_abs_cot.max((lambda.cos() / sin_l).norm());
        let cs = characteristic(q, lambda, tol, false)?;
        max_s_inv_norm = max_s_inv_norm.max(match cs.s_inv_norm {
            Some(v) => v,
            None => f64::INFINITY,
        });
        let mut dev = cs.s.clone();
        for i in 0..q.r() {
            dev[(i, i)] -= sin_l;
        }
        max_s_deviation = max_s_deviation.max(op_norm(&dev));
    }
    Ok(ContourBoundsReport {
        n,
        samples,
        min_abs_sin,
        max_abs_cot,
        max_s_inv_norm,
        max_s_deviation,
        sin_above_half: min_abs_sin >= 0.5,
        sin_above_sharp: min_abs_sin >= 0.84,
        cot_below_sqrt3: max_abs_cot <= 3.0f64.sqrt(),
        cot_below_sharp: max_abs_cot <= 1.32,
        s_inv_below_four: max_s_inv_norm <= 4.0,
        s_deviation_below_quarter: max_s_deviation < 0.25,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{builtin, free};
    use approx::assert_relative_eq;

    #[test]
    fn lemma_sum_identity_closed_form() {
        let f = BandLimitedFunction::identity(1);
        let report = lemma_a_sum(&f, Complex64::new(1.0, 0.0), 10_000).unwrap();
        assert!((report.sum - 2.0).abs() < 1e-4, "sum {}", report.sum);
        assert_relative_eq!(report.bound, 18.0, max_relative = 1e-6);
        assert!((report.ratio - 1.0 / 9.0).abs() < 1e-4);
        assert!(report.ratio <= 1.0);
    }

    #[test]
    fn lemma_sum_single_mode_closed_form() {
        let f = BandLimitedFunction::new(1, vec![(1, CMat::identity(1, 1))]).unwrap();
        let report = lemma_a_sum(&f, Complex64::new(0.0, 1.0), 10_000).unwrap();
        let exact = 2.0f64.sinh();
        assert!(
            (report.sum - exact).abs() < 1e-4,
            "sum {} exact {exact}",
            report.sum
        );
        assert!(report.ratio <= 1.0);
    }

    #[test]
    fn lemma_sum_rejects_off_circle_shift() {
        let f = BandLimitedFunction::identity(1);
        let err = lemma_a_sum(&f, Complex64::new(0.5, 0.0), 200);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn lemma_sum_monotone_in_truncation() {
        let modes = vec![
            (0, CMat::from_element(2, 2, Complex64::new(0.3, 0.1))),
            (-2, CMat::from_element(2, 2, Complex64::new(0.0, 0.4))),
            (5, CMat::identity(2, 2) * Complex64::new(0.2, -0.3)),
        ];
        let f = BandLimitedFunction::new(2, modes).unwrap();
        let lambda = Complex64::new(0.6, 0.8);
        let lo = lemma_a_sum(&f, lambda, 100).unwrap();
        let hi = lemma_a_sum(&f, lambda, 200).unwrap();
        assert!(hi.sum >= lo.sum);
        assert!(hi.ratio <= 1.0);
    }

    #[test]
    fn lemma_sum_zero_function() {
        let f = BandLimitedFunction::new(2, vec![]).unwrap();
        let report = lemma_a_sum(&f, Complex64::new(-1.0, 0.0), 150).unwrap();
        assert_eq!(report.sum, 0.0);
        assert_eq!(report.ratio, 0.0);
    }

    #[test]
    fn band_limited_norm_matches_parseval_single_mode() {
        let f = BandLimitedFunction::new(1, vec![(3, CMat::identity(1, 1))]).unwrap();
        assert_relative_eq!(f.l2_norm_sq(), 2.0, max_relative = 1e-8);
        let g = BandLimitedFunction::identity(2);
        assert_relative_eq!(g.l2_norm_sq(), 2.0, max_relative = 1e-10);
    }

    #[test]
    fn contour_extrema_free_case() {
        let report = contour_bounds_check(&free(1), 3, 256, 1e-8).unwrap();
        assert!((report.min_abs_sin - 1.0f64.sin()).abs() < 1e-3);
        assert!((report.max_abs_cot - 1.0f64.tanh().recip()).abs() < 1e-3);
        assert!(report.sin_above_half && report.sin_above_sharp);
        assert!(report.cot_below_sqrt3 && report.cot_below_sharp);
        assert!(report.max_s_inv_norm < 1.19 && report.max_s_inv_norm > 1.18);
        assert!(report.s_inv_below_four);
        assert!(report.max_s_deviation < 1e-9);
        assert!(report.s_deviation_below_quarter);
    }

    #[test]
    fn contour_deviation_decays_with_strip_index() {
        let q = builtin("trig").unwrap();
        let low = contour_bounds_check(&q, 2, 64, 1e-7).unwrap();
        let high = contour_bounds_check(&q, 8, 64, 1e-7).unwrap();
        assert!(high.max_s_deviation < low.max_s_deviation);
        assert!(high.s_deviation_below_quarter);
        assert!(low.s_inv_below_four && high.s_inv_below_four);
    }

    #[test]
    fn decay_table_free_is_zero() {
        let grid = Grid::uniform(65);
        let report = bari_markus_table(
            &free(1),
            2,
            &grid,
            &KernelOptions::default(),
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 5);
        for row in &report.rows {
            assert!(row.d < 1e-8, "strip {} d {}", row.n, row.d);
            assert!(row.strip_deviation_sq < 1e-16);
            assert_eq!(row.strip_count, 1);
        }
        assert_eq!(report.threshold_n_hat, Some(0));
    }

    #[test]
    fn decay_table_trig_is_consistent() {
        let grid = Grid::uniform(129);
        let q = builtin("trig").unwrap();
        let report = bari_markus_table(
            &q,
            4,
            &grid,
            &KernelOptions::default(),
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 9);
        let mut last_sum = 0.0;
        for nn in 0..=4 {
            let s = report.partial_sum_at(nn);
            assert!(s >= last_sum);
            last_sum = s;
        }
        for row in &report.rows {
            assert!(row.d >= 0.0);
            assert!(row.hs_d >= row.d - 1e-10, "strip {}", row.n);
            assert_eq!(row.strip_count, 1);
        }
        assert!(report.s_total > 0.0);
        assert!(report.partial_sum_at(4) <= report.s_total + 1e-15);
    }
}
