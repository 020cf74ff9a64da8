//! Serializable output rows and deterministic file writers.
//!
//! CSV and JSON share the same row structs, so the two formats always carry
//! identical numbers: both serializers print `f64` values in shortest
//! round-trip form.

use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use dirac_spectral::diagnostics::{BariMarkusReport, ContourBoundsReport};
use dirac_spectral::projector::ProjectorKernel;
use dirac_spectral::spectrum::{AsymptoticsReport, IndexedEigenvalue};

use crate::CliError;

/// One indexed eigenvalue.
#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueRow {
    /// First global index covered by the record.
    pub j: i64,
    /// Strip number.
    pub n: i64,
    /// Real part.
    pub re: f64,
    /// Imaginary part.
    pub im: f64,
    /// Algebraic multiplicity.
    pub multiplicity: usize,
}

impl From<&IndexedEigenvalue> for EigenvalueRow {
    fn from(e: &IndexedEigenvalue) -> Self {
        Self {
            j: e.index,
            n: e.strip,
            re: e.value.re,
            im: e.value.im,
            multiplicity: e.multiplicity,
        }
    }
}

/// Per-strip eigenvalue statistics.
#[derive(Debug, Clone, Serialize)]
pub struct StripStatsRow {
    /// Strip number.
    pub n: i64,
    /// Multiplicity-weighted count.
    pub count: usize,
    /// Multiplicity-weighted squared deviation from the strip center.
    pub deviation_sq: f64,
}

/// Deviation summary over a symmetric strip range.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsOut {
    /// Largest strip index covered.
    pub n_max: i64,
    /// Per-strip statistics in ascending strip order.
    pub per_strip: Vec<StripStatsRow>,
    /// `partial_sums[k]` sums deviations over strips `|n| <= k`.
    pub partial_sums: Vec<f64>,
    /// Largest multiplicity-weighted count in any covered strip.
    pub max_count_per_strip: usize,
    /// Smallest `N` from which every covered strip has count `r` and
    /// deviation below 0.25, if any.
    pub threshold_n_hat: Option<i64>,
}

impl AsymptoticsOut {
    /// Flatten a library report.
    pub fn from_report(n_max: i64, report: &AsymptoticsReport) -> Self {
        Self {
            n_max,
            per_strip: report
                .per_strip
                .iter()
                .map(|s| StripStatsRow {
                    n: s.n,
                    count: s.count,
                    deviation_sq: s.deviation_sq,
                })
                .collect(),
            partial_sums: report.partial_sums.clone(),
            max_count_per_strip: report.max_count_per_strip,
            threshold_n_hat: report.threshold_n_hat,
        }
    }
}

/// One strip of the projector summary table.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectorRow {
    /// Strip number.
    pub n: i64,
    /// Real part of the kernel trace.
    pub trace_re: f64,
    /// Imaginary part of the kernel trace.
    pub trace_im: f64,
    /// Hilbert-Schmidt norm of the discretized projector.
    pub hs_norm: f64,
    /// Operator norm of `P^2 - P` for the discretized projector.
    pub idempotency_defect: f64,
    /// Contour nodes the kernel stabilized at.
    pub contour_nodes: usize,
    /// Last observed change under contour-node doubling.
    pub estimated_quadrature_error: f64,
}

impl ProjectorRow {
    /// Summarize a computed kernel for strip `n`.
    pub fn from_kernel(n: i64, kernel: &ProjectorKernel) -> Self {
        let trace = kernel.trace();
        Self {
            n,
            trace_re: trace.re,
            trace_im: trace.im,
            hs_norm: kernel.hs_norm(),
            idempotency_defect: kernel.idempotency_defect(),
            contour_nodes: kernel.contour_nodes,
            estimated_quadrature_error: kernel.estimated_quadrature_error,
        }
    }
}

/// One strip of the projector decay table.
#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    /// Strip number.
    pub n: i64,
    /// Operator norm of the projector difference.
    pub d: f64,
    /// Hilbert-Schmidt norm of the projector difference.
    pub hs_d: f64,
    /// Sum of `d^2` over strips up to `|n|`.
    pub partial_sum: f64,
    /// Multiplicity-weighted squared eigenvalue deviation of the strip.
    pub strip_deviation_sq: f64,
    /// Multiplicity-weighted eigenvalue count of the strip.
    pub strip_count: usize,
}

/// Decay table totals and provenance.
#[derive(Debug, Clone, Serialize)]
pub struct DecaySummary {
    /// Largest strip index covered.
    pub n_max: i64,
    /// Total of `d^2` over all covered strips.
    pub s_total: f64,
    /// Total squared eigenvalue deviation over all covered strips.
    pub deviation_total: f64,
    /// Unperturbed-tail threshold, if one exists in the covered range.
    pub threshold_n_hat: Option<i64>,
    /// Kernel grid size the table was computed on.
    pub grid_len: usize,
    /// ODE tolerance of the kernel solves.
    pub kernel_ode_tol: f64,
    /// Contour-doubling stability target.
    pub kernel_stability_tol: f64,
    /// ODE tolerance of the winding integrals.
    pub search_contour_tol: f64,
    /// ODE tolerance of the Newton polish.
    pub search_polish_tol: f64,
}

/// Split a decay report into rows and summary.
pub fn decay_outputs(report: &BariMarkusReport) -> (Vec<DecayRow>, DecaySummary) {
    let rows = report
        .rows
        .iter()
        .map(|row| DecayRow {
            n: row.n,
            d: row.d,
            hs_d: row.hs_d,
            partial_sum: row.partial_sum,
            strip_deviation_sq: row.strip_deviation_sq,
            strip_count: row.strip_count,
        })
        .collect();
    let summary = DecaySummary {
        n_max: report.n_max,
        s_total: report.s_total,
        deviation_total: report.deviation_total,
        threshold_n_hat: report.threshold_n_hat,
        grid_len: report.tolerances.grid_len,
        kernel_ode_tol: report.tolerances.kernel_ode_tol,
        kernel_stability_tol: report.tolerances.kernel_stability_tol,
        search_contour_tol: report.tolerances.search_contour_tol,
        search_polish_tol: report.tolerances.search_polish_tol,
    };
    (rows, summary)
}

/// Extremal contour samples for one circle.
#[derive(Debug, Clone, Serialize)]
pub struct ContourBoundsRow {
    /// Contour index.
    pub n: i64,
    /// Samples taken on the circle.
    pub samples: usize,
    /// Minimum `|sin|` over the samples.
    pub min_abs_sin: f64,
    /// Maximum `|cot|` over the samples.
    pub max_abs_cot: f64,
    /// Maximum characteristic-matrix inverse norm.
    pub max_s_inv_norm: f64,
    /// Maximum deviation of the characteristic matrix from `sin . I`.
    pub max_s_deviation: f64,
    /// Whether `|sin| >= 0.84` held at every sample.
    pub sin_above_sharp: bool,
    /// Whether `|cot| <= 1.32` held at every sample.
    pub cot_below_sharp: bool,
    /// Whether the inverse norm stayed at or below 4.
    pub s_inv_below_four: bool,
    /// Whether the deviation stayed below 0.25.
    pub s_deviation_below_quarter: bool,
}

impl From<&ContourBoundsReport> for ContourBoundsRow {
    fn from(r: &ContourBoundsReport) -> Self {
        Self {
            n: r.n,
            samples: r.samples,
            min_abs_sin: r.min_abs_sin,
            max_abs_cot: r.max_abs_cot,
            max_s_inv_norm: r.max_s_inv_norm,
            max_s_deviation: r.max_s_deviation,
            sin_above_sharp: r.sin_above_sharp,
            cot_below_sharp: r.cot_below_sharp,
            s_inv_below_four: r.s_inv_below_four,
            s_deviation_below_quarter: r.s_deviation_below_quarter,
        }
    }
}

/// Sidecar description of a kernel dump.
#[derive(Debug, Clone, Serialize)]
pub struct KernelMeta {
    /// Strip number.
    pub n: i64,
    /// Number of grid nodes; the matrix is `(nodes * 2r) x (nodes * 2r)`.
    pub grid_nodes: usize,
    /// Block size parameter.
    pub r: usize,
    /// Contour nodes the kernel stabilized at.
    pub contour_nodes: usize,
    /// Last observed change under contour-node doubling.
    pub estimated_quadrature_error: f64,
    /// Real part of the kernel trace.
    pub trace_re: f64,
    /// Imaginary part of the kernel trace.
    pub trace_im: f64,
}

/// Full kernel dump in JSON form.
#[derive(Debug, Clone, Serialize)]
pub struct KernelDump {
    /// Shape and provenance.
    pub meta: KernelMeta,
    /// Matrix rows; entries alternate real and imaginary parts.
    pub rows: Vec<Vec<f64>>,
}

/// Interleave a complex matrix into rows of `[re, im, re, im, ...]`.
pub fn interleaved_rows(kernel: &ProjectorKernel) -> Vec<Vec<f64>> {
    let n = kernel.matrix.nrows();
    let m = kernel.matrix.ncols();
    (0..n)
        .map(|i| {
            let mut row = Vec::with_capacity(2 * m);
            for j in 0..m {
                let z: Complex64 = kernel.matrix[(i, j)];
                row.push(z.re);
                row.push(z.im);
            }
            row
        })
        .collect()
}

/// Write rows as CSV with a header derived from the struct fields.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Write any serializable value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Failure(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))
}

/// Write rows in the requested tabular format.
pub fn write_rows<T: Serialize>(
    path: &Path,
    format: crate::config::Format,
    rows: &[T],
) -> Result<(), CliError> {
    match format {
        crate::config::Format::Csv => write_csv(path, rows),
        crate::config::Format::Json => write_json(path, &rows),
    }
}

/// Write a kernel dump: bare numeric CSV plus JSON sidecar, or a single JSON
/// file, depending on the format.
pub fn write_kernel(
    out_dir: &Path,
    format: crate::config::Format,
    n: i64,
    kernel: &ProjectorKernel,
) -> Result<(), CliError> {
    let trace = kernel.trace();
    let meta = KernelMeta {
        n,
        grid_nodes: kernel.grid.len(),
        r: kernel.r,
        contour_nodes: kernel.contour_nodes,
        estimated_quadrature_error: kernel.estimated_quadrature_error,
        trace_re: trace.re,
        trace_im: trace.im,
    };
    let rows = interleaved_rows(kernel);
    let stem = format!("kernel_strip_{n}");
    match format {
        crate::config::Format::Csv => {
            let path = out_dir.join(format!("{stem}.csv"));
            let mut writer = csv::WriterBuilder::new()
                .has_headers(false)
                .from_path(&path)
                .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))?;
            for row in &rows {
                writer.serialize(row).map_err(|e| {
                    CliError::Failure(format!("cannot write {}: {e}", path.display()))
                })?;
            }
            writer
                .flush()
                .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
            write_json(&out_dir.join(format!("{stem}.meta.json")), &meta)
        }
        crate::config::Format::Json => {
            write_json(&out_dir.join(format!("{stem}.json")), &KernelDump { meta, rows })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dirac_spectral::grid::Grid;
    use dirac_spectral::projector::free_projector_kernel;

    #[test]
    fn interleaving_doubles_the_column_count() {
        let grid = Grid::uniform(5);
        let kernel = free_projector_kernel(0, 1, &grid);
        let rows = interleaved_rows(&kernel);
        assert_eq!(rows.len(), 10);
        assert_eq!(rows[0].len(), 20);
    }

    #[test]
    fn row_serialization_round_trips_through_csv() {
        let rows = vec![EigenvalueRow {
            j: -1,
            n: 0,
            re: -0.323,
            im: 1.0 / 3.0,
            multiplicity: 2,
        }];
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            for row in &rows {
                w.serialize(row).unwrap();
            }
            w.flush().unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("j,n,re,im,multiplicity"));
        assert!(text.contains("0.3333333333333333"));
    }
}
