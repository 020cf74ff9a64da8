//! Run configuration: argument parsing helpers and validation.

use std::path::PathBuf;

use dirac_spectral::potential::{builtin, from_json_str, MatrixPotential};
use dirac_spectral::projector::KernelOptions;
use dirac_spectral::spectrum::SearchOptions;

use crate::CliError;

/// Table output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Comma-separated rows with a header line.
    Csv,
    /// Pretty-printed JSON arrays and objects.
    Json,
}

impl Format {
    /// File extension for tabular outputs.
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Validated settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Human-readable description of where the potential came from.
    pub source: String,
    /// The potential itself.
    pub potential: MatrixPotential,
    /// Inclusive strip range `lo..hi`.
    pub strips: (i64, i64),
    /// Number of uniform kernel grid nodes.
    pub grid_nodes: usize,
    /// Initial contour quadrature node count.
    pub contour_nodes: usize,
    /// ODE tolerance driving both the search and the kernel solves.
    pub tol: f64,
    /// Output directory; created on demand.
    pub out: PathBuf,
    /// Table format.
    pub format: Format,
}

impl RunConfig {
    /// Search options derived from the shared tolerance: contour integrals
    /// at `tol`, Newton polish at `min(tol, 1e-10)`.
    pub fn search_options(&self) -> SearchOptions {
        SearchOptions {
            tol_contour: self.tol,
            tol_polish: self.tol.min(1e-10),
            ..SearchOptions::default()
        }
    }

    /// Kernel options derived from the shared tolerance and the requested
    /// starting contour resolution.
    pub fn kernel_options(&self) -> KernelOptions {
        KernelOptions {
            tol: self.tol,
            m_start: self.contour_nodes,
            m_cap: self.contour_nodes.max(1024),
            stability_tol: self.tol,
        }
    }

    /// Path of an output file with the configured table extension.
    pub fn table_path(&self, stem: &str) -> PathBuf {
        self.out.join(format!("{stem}.{}", self.format.extension()))
    }

    /// Path of an output file with a fixed extension.
    pub fn fixed_path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Parse an inclusive strip range of the form `A..B`; both ends may be
/// negative.
pub fn parse_strip_range(text: &str) -> Result<(i64, i64), CliError> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| CliError::Input(format!("strip range `{text}` is not of the form A..B")))?;
    let lo: i64 = lo
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("strip range start `{lo}` is not an integer")))?;
    let hi: i64 = hi
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("strip range end `{hi}` is not an integer")))?;
    if lo > hi {
        return Err(CliError::Input(format!(
            "strip range {lo}..{hi} is empty (start exceeds end)"
        )));
    }
    Ok((lo, hi))
}

/// Resolve a `--potential` argument: `builtin:NAME` selects a named example,
/// anything else is read as a JSON file.
pub fn load_potential(arg: &str) -> Result<(String, MatrixPotential), CliError> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        let q = builtin(name)
            .ok_or_else(|| CliError::Input(format!("unknown builtin potential `{name}`")))?;
        return Ok((arg.to_string(), q));
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| CliError::Input(format!("cannot read potential file {arg}: {e}")))?;
    let q = from_json_str(&text)
        .map_err(|e| CliError::Input(format!("potential file {arg} is invalid: {e}")))?;
    Ok((arg.to_string(), q))
}

/// Assemble and validate a full run configuration.
#[allow(clippy::too_many_arguments)]
pub fn build_config(
    potential: &str,
    strips: &str,
    grid_nodes: usize,
    contour_nodes: usize,
    tol: f64,
    out: PathBuf,
    format: Format,
) -> Result<RunConfig, CliError> {
    let strips = parse_strip_range(strips)?;
    if grid_nodes < 2 {
        return Err(CliError::Input(format!(
            "grid must have at least 2 nodes, got {grid_nodes}"
        )));
    }
    if contour_nodes < 8 {
        return Err(CliError::Input(format!(
            "contour quadrature needs at least 8 nodes, got {contour_nodes}"
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Input(format!(
            "tolerance must be a positive finite number, got {tol}"
        )));
    }
    let (source, potential) = load_potential(potential)?;
    Ok(RunConfig {
        source,
        potential,
        strips,
        grid_nodes,
        contour_nodes,
        tol,
        out,
        format,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_ranges_parse_with_negatives() {
        assert_eq!(parse_strip_range("-4..4").unwrap(), (-4, 4));
        assert_eq!(parse_strip_range("-6..-2").unwrap(), (-6, -2));
        assert_eq!(parse_strip_range("0..0").unwrap(), (0, 0));
    }

    #[test]
    fn malformed_ranges_are_rejected() {
        assert!(parse_strip_range("4").is_err());
        assert!(parse_strip_range("a..b").is_err());
        assert!(parse_strip_range("3..1").is_err());
    }

    #[test]
    fn builtin_potentials_resolve() {
        let (source, q) = load_potential("builtin:zero").unwrap();
        assert_eq!(source, "builtin:zero");
        assert_eq!(q.r(), 1);
        assert!(load_potential("builtin:no-such-thing").is_err());
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let err = load_potential("/no/such/file.json").unwrap_err();
        let msg = format!("{err:?}");
        assert!(msg.contains("/no/such/file.json"));
    }
}
