//! Spectral analysis of one-dimensional Dirac-type operators.
//!
//! This crate computes spectra, Weyl–Titchmarsh functions, resolvents and
//! strip-wise Riesz spectral projectors of the non-self-adjoint operator
//! `T = J d/dx + Q(x)` acting on square-integrable `C^{2r}`-valued functions
//! on `(0,1)`, where `J = diag(-iI, iI)` and `Q` is an off-diagonal block
//! matrix potential, with the boundary conditions `y1(0) = y2(0)` and
//! `y1(1) = y2(1)`.
//!
//! The pipeline:
//!
//! * [`potential`] — potential representations, ingestion and transforms;
//! * [`propagator`] — fundamental-matrix solver with certified Wronskian
//!   residuals and parameter derivatives;
//! * [`characteristic`] — characteristic matrices `s`, `c`, the Weyl function
//!   `m = -s^{-1}c`, determinants and Fourier-structure diagnostics;
//! * [`spectrum`] — argument-principle eigenvalue localization per vertical
//!   strip, global indexing, asymptotics reports;
//! * [`resolvent`] — resolvent application through the explicit kernel
//!   formula, with residual certificates;
//! * [`projector`] — Riesz projector kernels by contour quadrature, Nystrom
//!   algebra and norm estimators;
//! * [`diagnostics`] — projector-decay tables and quantitative bound checks;
//! * [`oracle`] — an independent dense finite-difference discretization used
//!   for cross-validation.

pub mod characteristic;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod oracle;
pub mod potential;
pub mod projector;
pub mod propagator;
pub mod resolvent;
pub mod samples;
pub mod spectrum;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
