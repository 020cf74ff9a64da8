//! Subcommand drivers: compute, then write deterministic output files.

use serde::Serialize;

use dirac_spectral::diagnostics::{bari_markus_table, contour_bounds_check};
use dirac_spectral::grid::Grid;
use dirac_spectral::projector::strip_projector_auto;
use dirac_spectral::spectrum::{
    asymptotics_from_records, index_spectrum, spectrum_in_strips, EigenvalueRecord,
};

use crate::checks::{run_all, VerifyOptions};
use crate::config::RunConfig;
use crate::emit::{
    decay_outputs, write_json, write_kernel, write_rows, AsymptoticsOut, ContourBoundsRow,
    EigenvalueRow, ProjectorRow,
};
use crate::CliError;

/// Create the output directory if needed.
fn ensure_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| {
        CliError::Input(format!(
            "cannot create output directory {}: {e}",
            cfg.out.display()
        ))
    })
}

/// Largest symmetric strip index contained in the configured range, if the
/// range covers a symmetric window around zero at all.
fn symmetric_n_max(cfg: &RunConfig) -> Option<i64> {
    let (lo, hi) = cfg.strips;
    if lo <= 0 && hi >= 0 {
        Some((-lo).min(hi))
    } else {
        None
    }
}

/// Write the indexed eigenvalue table and, when the range is symmetric
/// around zero, the deviation summary.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let (lo, hi) = cfg.strips;
    let sopts = cfg.search_options();
    let records = spectrum_in_strips(&cfg.potential, lo, hi, &sopts)?;
    let indexed = index_spectrum(records.clone());
    let rows: Vec<EigenvalueRow> = indexed.iter().map(EigenvalueRow::from).collect();
    let table = cfg.table_path("eigenvalues");
    write_rows(&table, cfg.format, &rows)?;
    let count: usize = records.iter().map(|rec| rec.multiplicity).sum();
    println!(
        "spectrum: {} records ({count} eigenvalues with multiplicity) in strips {lo}..{hi}",
        rows.len()
    );
    println!("wrote {}", table.display());
    if let Some(n_max) = symmetric_n_max(cfg) {
        let asym = asymptotics_from_records(&records, cfg.potential.r(), n_max);
        let path = cfg.fixed_path("asymptotics.json");
        write_json(&path, &AsymptoticsOut::from_report(n_max, &asym))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Compute one projector kernel per strip; dump kernels and a summary table.
pub fn cmd_projectors(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let (lo, hi) = cfg.strips;
    let sopts = cfg.search_options();
    let kopts = cfg.kernel_options();
    // Neighbouring strips are searched too, so every contour can prove its
    // separation from the spectrum just outside the requested range.
    let records = spectrum_in_strips(&cfg.potential, lo - 1, hi + 1, &sopts)?;
    let grid = Grid::uniform(cfg.grid_nodes);
    let mut rows = Vec::new();
    for n in lo..=hi {
        let kernel = strip_projector_auto(&cfg.potential, n, &grid, &records, &kopts)?;
        write_kernel(&cfg.out, cfg.format, n, &kernel)?;
        rows.push(ProjectorRow::from_kernel(n, &kernel));
    }
    let table = cfg.table_path("projectors");
    write_rows(&table, cfg.format, &rows)?;
    println!(
        "projectors: strips {lo}..{hi} on {} nodes; kernels and summary under {}",
        cfg.grid_nodes,
        cfg.out.display()
    );
    Ok(())
}

/// Write the projector decay table, its summary, and optionally the per-strip
/// kernels it was built from.
pub fn cmd_bari_markus(cfg: &RunConfig, dump_kernels: bool) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let (lo, hi) = cfg.strips;
    let n_max = lo.abs().max(hi.abs());
    let sopts = cfg.search_options();
    let kopts = cfg.kernel_options();
    let grid = Grid::uniform(cfg.grid_nodes);
    let report = bari_markus_table(&cfg.potential, n_max, &grid, &kopts, &sopts)?;
    let (rows, summary) = decay_outputs(&report);
    let table = cfg.table_path("bari_markus");
    write_rows(&table, cfg.format, &rows)?;
    let summary_path = cfg.fixed_path("bari_markus_summary.json");
    write_json(&summary_path, &summary)?;
    if dump_kernels {
        for n in -n_max..=n_max {
            let kernel =
                strip_projector_auto(&cfg.potential, n, &grid, &report.records, &kopts)?;
            write_kernel(&cfg.out, cfg.format, n, &kernel)?;
        }
    }
    println!(
        "bari-markus: strips |n| <= {n_max}, S_total {:.6e}, deviation total {:.6e}",
        report.s_total, report.deviation_total
    );
    match report.threshold_n_hat {
        Some(nh) => println!("unperturbed-tail threshold N = {nh}"),
        None => println!("no unperturbed-tail threshold within the covered range"),
    }
    println!("wrote {} and {}", table.display(), summary_path.display());
    Ok(())
}

/// Run the verification suites, print the check matrix, persist it, and
/// report whether every gated suite passed.
pub fn cmd_verify(cfg: &RunConfig, opts: &VerifyOptions) -> Result<bool, CliError> {
    ensure_out_dir(cfg)?;
    let results = run_all(cfg, opts)?;
    let name_width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    println!("potential: {} (r = {})", cfg.source, cfg.potential.r());
    for result in &results {
        let status = if !result.gated {
            "info"
        } else if result.passed {
            "pass"
        } else {
            "FAIL"
        };
        println!("{:<name_width$}  {:<4}  {}", result.name, status, result.detail);
    }
    let all_passed = results.iter().all(|r| !r.gated || r.passed);
    println!(
        "{:<name_width$}  {}",
        "OVERALL",
        if all_passed { "pass" } else { "FAIL" }
    );
    write_json(&cfg.fixed_path("verify.json"), &results)?;
    Ok(all_passed)
}

/// Potential metadata recorded in the combined report.
#[derive(Debug, Clone, Serialize)]
struct PotentialMeta {
    source: String,
    r: usize,
    l2_norm: f64,
}

/// Top-level combined report.
#[derive(Debug, Clone, Serialize)]
struct ReportBundle {
    potential: PotentialMeta,
    strip_lo: i64,
    strip_hi: i64,
    n_max: i64,
    eigenvalue_count: usize,
    s_total: f64,
    deviation_total: f64,
    threshold_n_hat: Option<i64>,
    files: Vec<String>,
}

/// Produce the combined bundle: eigenvalue table, deviation summary, decay
/// table, contour bounds, and a top-level JSON report.
pub fn cmd_report(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let (lo, hi) = cfg.strips;
    let n_max = lo.abs().max(hi.abs());
    let sopts = cfg.search_options();
    let kopts = cfg.kernel_options();
    let grid = Grid::uniform(cfg.grid_nodes);
    let report = bari_markus_table(&cfg.potential, n_max, &grid, &kopts, &sopts)?;

    let mut files = Vec::new();
    let in_range = |rec: &&EigenvalueRecord| rec.strip >= -n_max && rec.strip <= n_max;
    let covered: Vec<EigenvalueRecord> =
        report.records.iter().filter(in_range).cloned().collect();
    let indexed = index_spectrum(covered.clone());
    let eigen_rows: Vec<EigenvalueRow> = indexed.iter().map(EigenvalueRow::from).collect();
    let table = cfg.table_path("eigenvalues");
    write_rows(&table, cfg.format, &eigen_rows)?;
    files.push(table.display().to_string());

    let asym = asymptotics_from_records(&covered, cfg.potential.r(), n_max);
    let asym_path = cfg.fixed_path("asymptotics.json");
    write_json(&asym_path, &AsymptoticsOut::from_report(n_max, &asym))?;
    files.push(asym_path.display().to_string());

    let (rows, summary) = decay_outputs(&report);
    let decay_path = cfg.table_path("bari_markus");
    write_rows(&decay_path, cfg.format, &rows)?;
    files.push(decay_path.display().to_string());
    let summary_path = cfg.fixed_path("bari_markus_summary.json");
    write_json(&summary_path, &summary)?;
    files.push(summary_path.display().to_string());

    let mut contour_ns = vec![-n_max, 0, n_max];
    contour_ns.dedup();
    let mut contour_rows = Vec::new();
    for n in contour_ns {
        let bounds = contour_bounds_check(&cfg.potential, n, 128, cfg.tol)?;
        contour_rows.push(ContourBoundsRow::from(&bounds));
    }
    let contour_path = cfg.fixed_path("contour_bounds.json");
    write_json(&contour_path, &contour_rows)?;
    files.push(contour_path.display().to_string());

    let eigenvalue_count: usize = covered.iter().map(|rec| rec.multiplicity).sum();
    let bundle = ReportBundle {
        potential: PotentialMeta {
            source: cfg.source.clone(),
            r: cfg.potential.r(),
            l2_norm: cfg.potential.l2_norm(),
        },
        strip_lo: -n_max,
        strip_hi: n_max,
        n_max,
        eigenvalue_count,
        s_total: report.s_total,
        deviation_total: report.deviation_total,
        threshold_n_hat: report.threshold_n_hat,
        files,
    };
    let report_path = cfg.fixed_path("report.json");
    write_json(&report_path, &bundle)?;
    println!(
        "report: strips |n| <= {n_max}, {eigenvalue_count} eigenvalues, S_total {:.6e}",
        report.s_total
    );
    println!("wrote {}", report_path.display());
    Ok(())
}
