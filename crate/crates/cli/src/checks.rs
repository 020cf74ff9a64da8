//! Self-check suites for the `verify` subcommand.
//!
//! Each suite exercises one identity or bound the library is supposed to
//! satisfy and reduces it to a single pass/fail verdict with a short
//! numerical summary.  Randomized suites draw from a caller-seeded stream,
//! so repeated runs are byte-identical.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use dirac_spectral::characteristic::verify_paley_wiener;
use dirac_spectral::diagnostics::{contour_bounds_check, lemma_a_sum};
use dirac_spectral::grid::Grid;
use dirac_spectral::oracle::compare_strips;
use dirac_spectral::propagator::wronskian_residual;
use dirac_spectral::resolvent::{boundary_mismatch, resolvent_apply, resolvent_residual};
use dirac_spectral::samples::{lambda_avoiding, random_band_limited, random_grid_function, SampleRng};
use dirac_spectral::spectrum::spectrum_in_strips;

use crate::config::RunConfig;
use crate::CliError;

/// Outcome of one suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    /// Suite name.
    pub name: String,
    /// Whether the suite's gate held.
    pub passed: bool,
    /// Whether the verdict counts toward the exit code.
    pub gated: bool,
    /// Short numerical summary.
    pub detail: String,
}

impl CheckResult {
    fn gated(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            gated: true,
            detail,
        }
    }

    fn informational(name: &str, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            gated: false,
            detail,
        }
    }
}

/// Extra knobs of the `verify` subcommand.
#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Seed for all randomized draws.
    pub seed: u64,
    /// Node count of the cross-validation discretization.
    pub oracle_grid: usize,
}

/// Transport-identity check: the forward flow against the adjoint flow at the
/// reflected spectral parameter must invert the symplectic pairing exactly.
pub fn check_wronskian(cfg: &RunConfig) -> Result<CheckResult, CliError> {
    let grid = Grid::uniform(33);
    let mut worst = 0.0f64;
    for n in 0..=4 {
        for &theta in &[0.4, 2.5] {
            let lambda = Complex64::new(PI * n as f64, 0.0)
                + Complex64::new(0.0, theta).exp() * (PI / 2.0);
            let residual = wronskian_residual(&cfg.potential, lambda, &grid, 1e-10)?;
            worst = worst.max(residual);
        }
    }
    let gate = 1e-8;
    Ok(CheckResult::gated(
        "wronskian",
        worst < gate,
        format!("max residual {worst:.3e} (gate {gate:.0e})"),
    ))
}

/// Resolvent check: for random right-hand sides and spectral parameters away
/// from the located eigenvalues, the computed solution must satisfy the
/// differential equation and the boundary conditions.
pub fn check_resolvent(cfg: &RunConfig, seed: u64) -> Result<CheckResult, CliError> {
    let q = &cfg.potential;
    let grid = Grid::uniform(513);
    let sopts = cfg.search_options();
    let records = spectrum_in_strips(q, -1, 1, &sopts)?;
    let eigenvalues: Vec<Complex64> = records.iter().map(|rec| rec.value).collect();
    let mut rng = SampleRng::seeded(seed);
    let mut worst_residual = 0.0f64;
    let mut worst_bc = 0.0f64;
    for _ in 0..3 {
        let lambda = lambda_avoiding(
            &mut rng,
            Complex64::new(0.0, 0.0),
            1.5,
            (0.2, 1.0),
            &eigenvalues,
            0.2,
            128,
        )
        .ok_or_else(|| {
            CliError::Failure("no admissible spectral parameter found near the origin".into())
        })?;
        let f = random_grid_function(&mut rng, &grid, q.r(), 3);
        let residual = resolvent_residual(q, lambda, &f, &grid, 1e-10)?;
        let g = resolvent_apply(q, lambda, &f, &grid, 1e-10)?;
        let (bc0, bc1) = boundary_mismatch(&g);
        worst_residual = worst_residual.max(residual);
        worst_bc = worst_bc.max(bc0).max(bc1);
    }
    let passed = worst_residual < 1e-6 && worst_bc < 1e-8;
    Ok(CheckResult::gated(
        "resolvent",
        passed,
        format!("max relative residual {worst_residual:.3e} (gate 1e-6), max boundary mismatch {worst_bc:.3e} (gate 1e-8)"),
    ))
}

/// Entire-function structure check: the characteristic matrix must be a
/// band-limited transform up to a windowing error that shrinks as the
/// frequency window widens.
pub fn check_paley_wiener(cfg: &RunConfig) -> Result<CheckResult, CliError> {
    let narrow = verify_paley_wiener(&cfg.potential, 8, cfg.tol)?;
    let wide = verify_paley_wiener(&cfg.potential, 16, cfg.tol)?;
    let slack = 1e-12;
    let s_ok = wide.off_grid_residual_s <= narrow.off_grid_residual_s + slack;
    let c_ok = wide.off_grid_residual_c <= narrow.off_grid_residual_c + slack;
    Ok(CheckResult::gated(
        "paley-wiener",
        s_ok && c_ok,
        format!(
            "off-grid residuals s: {:.3e} -> {:.3e}, c: {:.3e} -> {:.3e} (must not grow)",
            narrow.off_grid_residual_s,
            wide.off_grid_residual_s,
            narrow.off_grid_residual_c,
            wide.off_grid_residual_c
        ),
    ))
}

/// Shifted-lattice transform bound for random band-limited functions.
pub fn check_lemma_a(cfg: &RunConfig, seed: u64) -> Result<CheckResult, CliError> {
    let mut rng = SampleRng::seeded(seed.wrapping_add(1));
    let mut worst_ratio = 0.0f64;
    for _ in 0..3 {
        let f = random_band_limited(&mut rng, cfg.potential.r(), 4, 8);
        let lambda = rng.unit_circle();
        let report = lemma_a_sum(&f, lambda, 10_000)?;
        worst_ratio = worst_ratio.max(report.ratio);
    }
    let gate = 1.0 + 1e-9;
    Ok(CheckResult::gated(
        "lemma-a",
        worst_ratio <= gate,
        format!("max sum/bound ratio {worst_ratio:.6} (gate 1)"),
    ))
}

/// Extremal bounds on the standard circles far from the origin.
pub fn check_contour_bounds(cfg: &RunConfig) -> Result<CheckResult, CliError> {
    let mut details = Vec::new();
    let mut passed = true;
    for &n in &[-8i64, 8] {
        let report = contour_bounds_check(&cfg.potential, n, 128, cfg.tol)?;
        let ok = report.sin_above_sharp
            && report.cot_below_sharp
            && report.s_inv_below_four
            && report.s_deviation_below_quarter;
        passed &= ok;
        details.push(format!(
            "n={n}: min|sin| {:.3}, max|cot| {:.3}, max||s^-1|| {:.3}, max dev {:.3e}",
            report.min_abs_sin, report.max_abs_cot, report.max_s_inv_norm, report.max_s_deviation
        ));
    }
    Ok(CheckResult::gated(
        "contour-bounds",
        passed,
        details.join("; "),
    ))
}

/// Cross-validation against the dense finite-difference discretization on the
/// three central strips.
pub fn check_oracle(cfg: &RunConfig, oracle_grid: usize) -> Result<CheckResult, CliError> {
    let sopts = cfg.search_options();
    let kopts = cfg.kernel_options();
    let reports = compare_strips(&cfg.potential, oracle_grid, &[-1, 0, 1], &sopts, &kopts)?;
    let mut passed = true;
    let mut details = Vec::new();
    let mut defective = false;
    for report in &reports {
        if report.defective_warning {
            defective = true;
            details.push(format!(
                "n={}: skipped, eigenvector basis ill-conditioned at m={}",
                report.n, report.m
            ));
            continue;
        }
        let ok = report.oracle_count == report.shooting_count
            && report.max_eigenvalue_deviation < 1e-3
            && report.max_kernel_deviation < 1e-2;
        passed &= ok;
        details.push(format!(
            "n={}: counts {}/{}, eigenvalue dev {:.2e}, kernel dev {:.2e}",
            report.n,
            report.oracle_count,
            report.shooting_count,
            report.max_eigenvalue_deviation,
            report.max_kernel_deviation
        ));
    }
    let detail = details.join("; ");
    if defective && passed {
        Ok(CheckResult::informational("oracle-compare", detail))
    } else {
        Ok(CheckResult::gated("oracle-compare", passed, detail))
    }
}

/// Run every suite in fixed order.
pub fn run_all(cfg: &RunConfig, opts: &VerifyOptions) -> Result<Vec<CheckResult>, CliError> {
    Ok(vec![
        check_wronskian(cfg)?,
        check_resolvent(cfg, opts.seed)?,
        check_paley_wiener(cfg)?,
        check_lemma_a(cfg, opts.seed)?,
        check_contour_bounds(cfg)?,
        check_oracle(cfg, opts.oracle_grid)?,
    ])
}
