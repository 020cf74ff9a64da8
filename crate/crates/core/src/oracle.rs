//! Brute-force cross-validation by dense finite-difference discretization.
//!
//! This path shares nothing with the shooting pipeline: the operator is
//! discretized as one large matrix (fourth-order first-derivative stencils,
//! boundary conditions eliminated), handed to a dense eigensolver, and
//! spectral projectors are assembled from biorthogonal right/left
//! eigenvectors.  Agreement between the two pipelines is the strongest
//! end-to-end check the library has.

use std::f64::consts::PI;

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use num_complex::Complex64;

use crate::error::Error;
use crate::grid::Grid;
use crate::linalg::CMat;
use crate::potential::MatrixPotential;
use crate::projector::{strip_projector_auto, KernelOptions};
use crate::spectrum::{eigenvalues_in_strip, EigenvalueRecord, SearchOptions};
use crate::Result;

/// Five-point one-sided and central first-derivative stencils, in units of
/// `1/(12h)`.
const STENCIL_LEFT0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const STENCIL_LEFT1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const STENCIL_CENTER: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];

/// Dense matrix approximation of the boundary-value operator.
///
/// Nodes are `x_i = i/m` for `i = 0..=m`.  The boundary conditions identify
/// the second component block with the first at both endpoints, so the
/// matrix dimension is `2 r m`: node 0 and node `m` carry `r` unknowns each,
/// interior nodes carry `2r`.
#[derive(Debug, Clone)]
pub struct DenseDiscretization {
    /// Number of grid intervals.
    pub m: usize,
    /// Block size parameter.
    pub r: usize,
    /// Physical nodes `i/m`.
    pub nodes: Vec<f64>,
    /// Reduced operator matrix of dimension `2 r m`.
    pub matrix: Mat<Complex64>,
}

impl DenseDiscretization {
    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        2 * self.r * self.m
    }

    /// Column (and row) index of component `c` at node `i` in the reduced
    /// numbering; the eliminated second-component boundary blocks fold onto
    /// the first-component ones.
    fn index_of(&self, i: usize, c: usize) -> usize {
        let r = self.r;
        if i == 0 {
            c % r
        } else if i == self.m {
            r + 2 * r * (self.m - 1) + c % r
        } else {
            r + 2 * r * (i - 1) + c
        }
    }

    /// Eigenvalues of the reduced matrix, sorted by `(Re, Im)`.
    pub fn eigenvalues_only(&self) -> Result<Vec<Complex64>> {
        let vals = self
            .matrix
            .eigenvalues()
            .map_err(|e| Error::EigensolverFailure(format!("{e:?}")))?;
        let mut out: Vec<Complex64> = vals;
        out.sort_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .expect("finite eigenvalues")
        });
        Ok(out)
    }

    /// Full eigendecomposition with biorthogonal left vectors.
    pub fn decompose(&self) -> Result<OracleDecomposition> {
        let eig = self
            .matrix
            .eigen()
            .map_err(|e| Error::EigensolverFailure(format!("{e:?}")))?;
        let u = eig.U().to_owned();
        let u_inv = u.partial_piv_lu().inverse();
        let s = eig.S();
        let vals = s.column_vector();
        let eigenvalues: Vec<Complex64> = (0..self.dim()).map(|k| vals[k]).collect();
        Ok(OracleDecomposition {
            m: self.m,
            r: self.r,
            nodes: self.nodes.clone(),
            eigenvalues,
            u,
            u_inv,
        })
    }
}

/// Assemble the dense discretization of the operator for grid size `m`.
///
/// Each interior node carries one block row of `J d/dx + Q(x_i)` per
/// component.  The identified boundary unknowns leave room for `r` equations
/// per endpoint; collocating the second-component block at the left end and
/// the first-component block at the right keeps the problem square without
/// admitting parasitic boundary-layer modes (averaging the two component
/// equations instead leaves their difference unconstrained and produces a
/// spurious converging eigenvalue branch).
pub fn discretize_operator(q: &MatrixPotential, m: usize) -> Result<DenseDiscretization> {
    if m < 64 {
        return Err(Error::InvalidArgument(format!(
            "dense discretization needs at least 64 intervals, got {m}"
        )));
    }
    let r = q.r();
    let h = 1.0 / m as f64;
    let nodes: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let mut d = DenseDiscretization {
        m,
        r,
        nodes,
        matrix: Mat::zeros(2 * r * m, 2 * r * m),
    };

    // True when component c's equation is collocated at node i.
    let keep_row = |i: usize, c: usize| -> bool {
        if i == 0 {
            c >= r
        } else if i == m {
            c < r
        } else {
            true
        }
    };

    let scale = 1.0 / (12.0 * h);
    for i in 0..=m {
        // Stencil for the derivative at node i: (anchor node, coefficients).
        let (start, coeffs): (usize, [f64; 5]) = if i == 0 {
            (0, STENCIL_LEFT0)
        } else if i == 1 {
            (0, STENCIL_LEFT1)
        } else if i == m - 1 {
            let mut rev = STENCIL_LEFT1;
            rev.reverse();
            (m - 4, rev.map(|c| -c))
        } else if i == m {
            let mut rev = STENCIL_LEFT0;
            rev.reverse();
            (m - 4, rev.map(|c| -c))
        } else {
            (i - 2, STENCIL_CENTER)
        };
        let qx = q.assembled(d.nodes[i]);
        for c in 0..2 * r {
            if !keep_row(i, c) {
                continue;
            }
            let row = d.index_of(i, c);
            let jfac = if c < r {
                Complex64::new(0.0, -1.0)
            } else {
                Complex64::new(0.0, 1.0)
            };
            for (o, coef) in coeffs.iter().enumerate() {
                if *coef == 0.0 {
                    continue;
                }
                let col = d.index_of(start + o, c);
                d.matrix[(row, col)] += jfac * Complex64::new(scale * coef, 0.0);
            }
            for cc in 0..2 * r {
                let entry = qx[(c, cc)];
                if entry != Complex64::new(0.0, 0.0) {
                    let col = d.index_of(i, cc);
                    d.matrix[(row, col)] += entry;
                }
            }
        }
    }
    Ok(d)
}

/// Rectangular eigenvalue window.
#[derive(Debug, Clone, Copy)]
pub struct SpectralWindow {
    /// Lower real bound, exclusive.
    pub re_lo: f64,
    /// Upper real bound, inclusive.
    pub re_hi: f64,
    /// Bound on `|Im|`, inclusive.
    pub im_abs: f64,
}

impl SpectralWindow {
    /// The vertical strip around `pi n` under the half-open convention.
    pub fn strip(n: i64, im_abs: f64) -> Self {
        let center = PI * n as f64;
        Self {
            re_lo: center - PI / 2.0,
            re_hi: center + PI / 2.0,
            im_abs,
        }
    }

    /// Window membership.
    pub fn contains(&self, z: Complex64) -> bool {
        z.re > self.re_lo && z.re <= self.re_hi && z.im.abs() <= self.im_abs
    }
}

/// One oracle eigenvalue with its eigenvector conditioning.
#[derive(Debug, Clone, Copy)]
pub struct OracleEigenvalue {
    /// Eigenvalue of the dense matrix.
    pub value: Complex64,
    /// `||right|| * ||left||` for the biorthogonal pair; large values flag a
    /// nearly defective cluster.
    pub condition: f64,
}

/// Eigenvalues of a window, sorted by `(Re, Im)`.
#[derive(Debug, Clone)]
pub struct OracleSpectrum {
    /// Window the selection was taken over.
    pub window: SpectralWindow,
    /// Selected eigenvalues with conditioning.
    pub eigenvalues: Vec<OracleEigenvalue>,
    /// Positions of the selected eigenvalues in the decomposition.
    pub indices: Vec<usize>,
    /// Set when any selected conditioning exceeds `1e8`.
    pub defective_warning: bool,
}

/// Dense eigendecomposition with biorthogonal left rows.
pub struct OracleDecomposition {
    /// Number of grid intervals.
    pub m: usize,
    /// Block size parameter.
    pub r: usize,
    /// Physical nodes.
    pub nodes: Vec<f64>,
    eigenvalues: Vec<Complex64>,
    u: Mat<Complex64>,
    u_inv: Mat<Complex64>,
}

impl OracleDecomposition {
    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        2 * self.r * self.m
    }

    /// All eigenvalues in decomposition order.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Select and sort the eigenvalues inside a window.
    pub fn window_spectrum(&self, window: SpectralWindow) -> OracleSpectrum {
        let dim = self.dim();
        let mut picked: Vec<(Complex64, usize)> = self
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, z)| window.contains(*z))
            .map(|(k, z)| (z, k))
            .collect();
        picked.sort_by(|a, b| {
            (a.0.re, a.0.im)
                .partial_cmp(&(b.0.re, b.0.im))
                .expect("finite eigenvalues")
        });
        let mut eigenvalues = Vec::with_capacity(picked.len());
        let mut indices = Vec::with_capacity(picked.len());
        let mut defective_warning = false;
        for (z, k) in picked {
            let mut right = 0.0f64;
            let mut left = 0.0f64;
            for i in 0..dim {
                right += self.u[(i, k)].norm_sqr();
                left += self.u_inv[(k, i)].norm_sqr();
            }
            let condition = right.sqrt() * left.sqrt();
            defective_warning |= condition > 1e8;
            eigenvalues.push(OracleEigenvalue {
                value: z,
                condition,
            });
            indices.push(k);
        }
        OracleSpectrum {
            window,
            eigenvalues,
            indices,
            defective_warning,
        }
    }

    /// Dense spectral projector onto the window's eigenvalue group, built as
    /// `sum_k u_k l_k` over the biorthogonal pairs.
    pub fn window_projector(&self, window: SpectralWindow) -> Mat<Complex64> {
        let spectrum = self.window_spectrum(window);
        let dim = self.dim();
        let mut p = Mat::<Complex64>::zeros(dim, dim);
        for &k in &spectrum.indices {
            for i in 0..dim {
                let ui = self.u[(i, k)];
                if ui == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..dim {
                    p[(i, j)] += ui * self.u_inv[(k, j)];
                }
            }
        }
        p
    }

    /// Eigenvector samples at node `i`, component `c` (full `2r` range, the
    /// folded boundary components resolved).
    fn vector_entry(&self, k: usize, i: usize, c: usize) -> Complex64 {
        let r = self.r;
        let idx = if i == 0 {
            c % r
        } else if i == self.m {
            r + 2 * r * (self.m - 1) + c % r
        } else {
            r + 2 * r * (i - 1) + c
        };
        self.u[(idx, k)]
    }
}

/// Forward and adjoint discretizations of the same operator, decomposed.
///
/// Right eigenvectors of a collocation matrix track the true eigenfunctions
/// at the scheme's full order, while its left eigenvectors pick up an O(h)
/// weight error from the boundary closures.  Kernel samples are therefore
/// built from two forward-accurate factors: right eigenvectors of the
/// operator and right eigenvectors of its formal adjoint, coupled through
/// the quadrature Gram matrix.
pub struct OraclePair {
    /// Decomposition of the operator itself.
    pub forward: OracleDecomposition,
    /// Decomposition of the formal adjoint (conjugated, swapped blocks).
    pub adjoint: OracleDecomposition,
}

impl OraclePair {
    /// Discretize and decompose both the operator and its adjoint.
    pub fn new(q: &MatrixPotential, m: usize) -> Result<Self> {
        let forward = discretize_operator(q, m)?.decompose()?;
        let adjoint = discretize_operator(&q.adjoint(), m)?.decompose()?;
        Ok(Self { forward, adjoint })
    }

    /// Kernel samples of the window projector at the given nodes, as one
    /// block matrix laid out like the Nystrom kernels (row-major node
    /// blocks of size `2r`).
    ///
    /// The adjoint operator's spectrum is the conjugate of the operator's,
    /// so the same window (symmetric in the imaginary part) selects the
    /// matching eigenvalue group on both sides.
    pub fn kernel_samples(&self, window: SpectralWindow, node_idx: &[usize]) -> Result<CMat> {
        let m = self.forward.m;
        let r = self.forward.r;
        let d = 2 * r;
        for &i in node_idx {
            if i > m {
                return Err(Error::InvalidArgument(format!(
                    "node index {i} outside grid 0..={m}"
                )));
            }
        }
        let fwd = self.forward.window_spectrum(window);
        let adj = self.adjoint.window_spectrum(window);
        if fwd.indices.len() != adj.indices.len() {
            return Err(Error::EigensolverFailure(format!(
                "window eigenvalue count differs between operator ({}) and adjoint ({})",
                fwd.indices.len(),
                adj.indices.len()
            )));
        }
        let k = fwd.indices.len();
        let out_dim = d * node_idx.len();
        if k == 0 {
            return Ok(CMat::zeros(out_dim, out_dim));
        }

        // Quadrature Gram of adjoint against forward vectors.  The reduced
        // storage carries each folded boundary component once while the
        // trapezoid rule weights the two represented components h/2 each,
        // so a uniform weight h is exact.
        let dim = self.forward.dim();
        let h = Complex64::new(1.0 / m as f64, 0.0);
        let mut gram = CMat::zeros(k, k);
        for (b, &kb) in adj.indices.iter().enumerate() {
            for (a, &ka) in fwd.indices.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..dim {
                    acc += self.adjoint.u[(i, kb)].conj() * self.forward.u[(i, ka)];
                }
                gram[(b, a)] = acc * h;
            }
        }
        let gram_inv = gram.clone().try_inverse().ok_or_else(|| {
            Error::EigensolverFailure(
                "singular eigenvector coupling in window; group is numerically defective".into(),
            )
        })?;

        let mut phi = CMat::zeros(out_dim, k);
        let mut psi = CMat::zeros(out_dim, k);
        for (a, &ia) in node_idx.iter().enumerate() {
            for c in 0..d {
                for (col, (&kf, &kn)) in fwd.indices.iter().zip(&adj.indices).enumerate() {
                    phi[(a * d + c, col)] = self.forward.vector_entry(kf, ia, c);
                    psi[(a * d + c, col)] = self.adjoint.vector_entry(kn, ia, c);
                }
            }
        }
        Ok(&phi * &gram_inv * psi.adjoint())
    }
}

/// Deviation between the shooting pipeline and the dense oracle for one
/// strip.
#[derive(Debug, Clone, Copy)]
pub struct CompareReport {
    /// Strip number.
    pub n: i64,
    /// Oracle grid intervals.
    pub m: usize,
    /// Eigenvalues the oracle found in the strip window.
    pub oracle_count: usize,
    /// Multiplicity-weighted shooting count.
    pub shooting_count: usize,
    /// Largest distance between paired eigenvalues (symmetric nearest-match).
    pub max_eigenvalue_deviation: f64,
    /// Largest entry deviation between the two projector kernels at the
    /// sampled interior nodes.
    pub max_kernel_deviation: f64,
    /// Oracle eigenvector conditioning exceeded `1e8` somewhere.
    pub defective_warning: bool,
}

fn nearest_distance(z: Complex64, pool: &[Complex64]) -> f64 {
    pool.iter()
        .map(|w| (z - w).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Run both pipelines for the given strips over one shared decomposition.
pub fn compare_strips(
    q: &MatrixPotential,
    m: usize,
    strips: &[i64],
    sopts: &SearchOptions,
    kopts: &KernelOptions,
) -> Result<Vec<CompareReport>> {
    let im_abs = sopts
        .initial_height
        .unwrap_or(2.0 + q.l2_norm())
        .min(sopts.max_height)
        + 0.5;
    let pair = OraclePair::new(q, m)?;

    let lo = strips.iter().copied().min().unwrap_or(0) - 1;
    let hi = strips.iter().copied().max().unwrap_or(0) + 1;
    let mut records: Vec<EigenvalueRecord> = Vec::new();
    for n in lo..=hi {
        records.extend(eigenvalues_in_strip(q, n, sopts)?);
    }

    let stride = (m / 32).max(1);
    let mut node_idx: Vec<usize> = (0..)
        .map(|k| k * stride)
        .take_while(|&i| i < m)
        .collect();
    node_idx.push(m);
    let xs: Vec<f64> = node_idx.iter().map(|&i| i as f64 / m as f64).collect();
    let sub_grid = Grid::from_nodes(xs)?;

    let mut reports = Vec::with_capacity(strips.len());
    for &n in strips {
        let window = SpectralWindow::strip(n, im_abs);
        let spectrum = pair.forward.window_spectrum(window);
        let oracle_vals: Vec<Complex64> =
            spectrum.eigenvalues.iter().map(|e| e.value).collect();
        let strip_records: Vec<&EigenvalueRecord> =
            records.iter().filter(|rec| rec.strip == n).collect();
        let shooting_vals: Vec<Complex64> =
            strip_records.iter().map(|rec| rec.value).collect();
        let shooting_count: usize = strip_records.iter().map(|rec| rec.multiplicity).sum();

        let mut dev = 0.0f64;
        if !oracle_vals.is_empty() && !shooting_vals.is_empty() {
            for z in &oracle_vals {
                dev = dev.max(nearest_distance(*z, &shooting_vals));
            }
            for z in &shooting_vals {
                dev = dev.max(nearest_distance(*z, &oracle_vals));
            }
        } else if oracle_vals.len() != shooting_vals.len() {
            dev = f64::INFINITY;
        }

        let oracle_kernel = pair.kernel_samples(window, &node_idx)?;
        let shooting_kernel = strip_projector_auto(q, n, &sub_grid, &records, kopts)?;
        let mut kdev = 0.0f64;
        for (a, b) in oracle_kernel
            .as_slice()
            .iter()
            .zip(shooting_kernel.matrix.as_slice())
        {
            kdev = kdev.max((a - b).norm());
        }

        reports.push(CompareReport {
            n,
            m,
            oracle_count: oracle_vals.len(),
            shooting_count,
            max_eigenvalue_deviation: dev,
            max_kernel_deviation: kdev,
            defective_warning: spectrum.defective_warning,
        });
    }
    Ok(reports)
}

/// Deviation report for a single strip.
pub fn compare(
    q: &MatrixPotential,
    n: i64,
    m: usize,
    sopts: &SearchOptions,
    kopts: &KernelOptions,
) -> Result<CompareReport> {
    Ok(compare_strips(q, m, &[n], sopts, kopts)?
        .pop()
        .expect("one strip requested"))
}
