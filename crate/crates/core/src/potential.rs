//! Block off-diagonal matrix potentials `Q(x) = [[0, q1(x)], [q2(x), 0]]`.
//!
//! The assembled `2r x 2r` matrix anticommutes with `J` by construction.
//! Blocks are represented in closed form (zero, constant, trigonometric
//! polynomial) or as grid samples with piecewise-linear interpolation, and
//! can be ingested from a JSON document.

use crate::error::Error;
use crate::linalg::{op_norm, CMat};
use crate::Result;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Basis function of one trigonometric term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigBasis {
    /// `cos(freq * pi * x)`
    Cos,
    /// `sin(freq * pi * x)`
    Sin,
}

/// One term `coeff * basis(freq * pi * x)` of a trigonometric polynomial block.
#[derive(Debug, Clone)]
pub struct TrigTerm {
    /// Frequency multiplier of `pi * x`.
    pub freq: u32,
    /// Cosine or sine basis.
    pub basis: TrigBasis,
    /// Constant `r x r` matrix coefficient.
    pub coeff: CMat,
}

/// One `r x r` block of a potential.
#[derive(Debug, Clone)]
pub enum Block {
    /// Identically zero block.
    Zero {
        /// Block dimension.
        r: usize,
    },
    /// Constant matrix block.
    Const(CMat),
    /// Matrix trigonometric polynomial.
    Trig {
        /// Block dimension.
        r: usize,
        /// Terms summed to evaluate the block.
        terms: Vec<TrigTerm>,
    },
    /// Grid samples, interpolated piecewise-linearly per entry and clamped
    /// to the end samples outside the sample range.
    Samples {
        /// Strictly increasing sample positions in `[0,1]`.
        xs: Vec<f64>,
        /// Sample values aligned with `xs`.
        values: Vec<CMat>,
    },
}

impl Block {
    /// Block dimension `r`.
    pub fn r(&self) -> usize {
        match self {
            Block::Zero { r } => *r,
            Block::Const(m) => m.nrows(),
            Block::Trig { r, .. } => *r,
            Block::Samples { values, .. } => values[0].nrows(),
        }
    }

    /// Evaluates the block at `x`.
    pub fn eval(&self, x: f64) -> CMat {
        match self {
            Block::Zero { r } => CMat::zeros(*r, *r),
            Block::Const(m) => m.clone(),
            Block::Trig { r, terms } => {
                let mut out = CMat::zeros(*r, *r);
                for t in terms {
                    let arg = t.freq as f64 * PI * x;
                    let s = match t.basis {
                        TrigBasis::Cos => arg.cos(),
                        TrigBasis::Sin => arg.sin(),
                    };
                    out += &t.coeff * Complex64::new(s, 0.0);
                }
                out
            }
            Block::Samples { xs, values } => {
                if x <= xs[0] {
                    return values[0].clone();
                }
                if x >= *xs.last().unwrap() {
                    return values.last().unwrap().clone();
                }
                let idx = xs.partition_point(|&p| p <= x) - 1;
                if xs[idx] == x {
                    return values[idx].clone();
                }
                let t = (x - xs[idx]) / (xs[idx + 1] - xs[idx]);
                &values[idx] * Complex64::new(1.0 - t, 0.0)
                    + &values[idx + 1] * Complex64::new(t, 0.0)
            }
        }
    }

    /// Evaluates the block at `x` into an existing `r x r` buffer.
    pub fn eval_into(&self, x: f64, out: &mut CMat) {
        match self {
            Block::Zero { .. } => out.fill(Complex64::new(0.0, 0.0)),
            Block::Const(m) => out.copy_from(m),
            Block::Trig { terms, .. } => {
                out.fill(Complex64::new(0.0, 0.0));
                for t in terms {
                    let arg = t.freq as f64 * PI * x;
                    let s = match t.basis {
                        TrigBasis::Cos => arg.cos(),
                        TrigBasis::Sin => arg.sin(),
                    };
                    let alpha = Complex64::new(s, 0.0);
                    for (o, c) in out.as_mut_slice().iter_mut().zip(t.coeff.as_slice()) {
                        *o += alpha * c;
                    }
                }
            }
            Block::Samples { .. } => out.copy_from(&self.eval(x)),
        }
    }

    /// Pointwise conjugate transpose of the block.
    pub fn adjoint(&self) -> Block {
        match self {
            Block::Zero { r } => Block::Zero { r: *r },
            Block::Const(m) => Block::Const(m.adjoint()),
            Block::Trig { r, terms } => Block::Trig {
                r: *r,
                terms: terms
                    .iter()
                    .map(|t| TrigTerm {
                        freq: t.freq,
                        basis: t.basis,
                        coeff: t.coeff.adjoint(),
                    })
                    .collect(),
            },
            Block::Samples { xs, values } => Block::Samples {
                xs: xs.clone(),
                values: values.iter().map(|v| v.adjoint()).collect(),
            },
        }
    }

    fn is_sampled(&self) -> bool {
        matches!(self, Block::Samples { .. })
    }
}

/// The potential `Q` with off-diagonal blocks `q1`, `q2`.
#[derive(Debug, Clone)]
pub struct MatrixPotential {
    r: usize,
    q1: Block,
    q2: Block,
}

impl MatrixPotential {
    /// Builds a potential from its two blocks, checking dimensions.
    pub fn new(q1: Block, q2: Block) -> Result<Self> {
        let r = q1.r();
        if r == 0 {
            return Err(Error::PotentialSpec("block size r must be >= 1".into()));
        }
        if q2.r() != r {
            return Err(Error::PotentialSpec(format!(
                "q1 is {r} x {r} but q2 is {0} x {0}",
                q2.r()
            )));
        }
        Ok(Self { r, q1, q2 })
    }

    /// Block dimension `r`.
    pub fn r(&self) -> usize {
        self.r
    }

    /// Upper-right block `q1(x)`.
    pub fn q1(&self, x: f64) -> CMat {
        self.q1.eval(x)
    }

    /// Lower-left block `q2(x)`.
    pub fn q2(&self, x: f64) -> CMat {
        self.q2.eval(x)
    }

    /// Evaluates `q1(x)` into an existing buffer.
    pub fn q1_into(&self, x: f64, out: &mut CMat) {
        self.q1.eval_into(x, out);
    }

    /// Evaluates `q2(x)` into an existing buffer.
    pub fn q2_into(&self, x: f64, out: &mut CMat) {
        self.q2.eval_into(x, out);
    }

    /// Assembled `2r x 2r` matrix `Q(x)` with zero diagonal blocks.
    pub fn assembled(&self, x: f64) -> CMat {
        let r = self.r;
        let mut q = CMat::zeros(2 * r, 2 * r);
        q.view_mut((0, r), (r, r)).copy_from(&self.q1(x));
        q.view_mut((r, 0), (r, r)).copy_from(&self.q2(x));
        q
    }

    /// Pointwise adjoint potential: blocks conjugate-transposed and swapped
    /// so that the assembled matrix is `Q(x)^H`.
    pub fn adjoint(&self) -> MatrixPotential {
        MatrixPotential {
            r: self.r,
            q1: self.q2.adjoint(),
            q2: self.q1.adjoint(),
        }
    }

    /// Pointwise operator norm of the assembled matrix,
    /// `max(sigma_max(q1(x)), sigma_max(q2(x)))`.
    pub fn pointwise_norm(&self, x: f64) -> f64 {
        op_norm(&self.q1(x)).max(op_norm(&self.q2(x)))
    }

    /// Quadrature value of the `L2(0,1)` norm of the pointwise operator norm,
    /// together with an estimate of the quadrature error.
    pub fn l2_norm_with_tol(&self) -> (f64, f64) {
        let coarse = self.l2_norm_on(2048);
        let fine = self.l2_norm_on(4096);
        (fine, (fine - coarse).abs())
    }

    /// Quadrature value of the `L2(0,1)` norm of the potential.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_with_tol().0
    }

    fn l2_norm_on(&self, intervals: usize) -> f64 {
        let h = 1.0 / intervals as f64;
        let mut sum = 0.0;
        for i in 0..=intervals {
            let x = i as f64 * h;
            let v = self.pointwise_norm(x).powi(2);
            let w = if i == 0 || i == intervals { 0.5 } else { 1.0 };
            sum += w * v;
        }
        (sum * h).sqrt()
    }

    /// True when any block is represented by grid samples.
    pub fn is_sampled(&self) -> bool {
        self.q1.is_sampled() || self.q2.is_sampled()
    }

    /// Interior points where the potential may lose smoothness
    /// (sample nodes of sampled blocks), sorted and deduplicated.
    pub fn kink_points(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        for b in [&self.q1, &self.q2] {
            if let Block::Samples { xs, .. } = b {
                pts.extend(xs.iter().copied().filter(|&x| x > 0.0 && x < 1.0));
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        pts
    }
}

/// JSON description of one block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockSpec {
    /// `{"kind": "zero"}`
    Zero,
    /// `{"kind": "const", "re": [[..]], "im": [[..]]}` (row-major)
    Const {
        /// Real parts, row-major.
        re: Vec<Vec<f64>>,
        /// Imaginary parts, row-major.
        im: Vec<Vec<f64>>,
    },
    /// `{"kind": "samples", "x": [..], "re": [[[..]]], "im": [[[..]]]}`
    Samples {
        /// Sample positions.
        x: Vec<f64>,
        /// Per-sample real parts, row-major.
        re: Vec<Vec<Vec<f64>>>,
        /// Per-sample imaginary parts, row-major.
        im: Vec<Vec<Vec<f64>>>,
    },
    /// `{"kind": "builtin", "name": "...", "params": {...}}`
    Builtin {
        /// Builtin family name; `"trig"` is supported.
        name: String,
        /// Family-specific parameters.
        params: serde_json::Value,
    },
}

/// JSON description of a potential.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialSpec {
    /// Block dimension.
    pub r: usize,
    /// Upper-right block.
    pub q1: BlockSpec,
    /// Lower-left block.
    pub q2: BlockSpec,
}

/// Parameters of the `"trig"` builtin block (serde helper).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrigParams {
    terms: Vec<TrigTermSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrigTermSpec {
    freq: u32,
    basis: String,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

fn matrix_from_parts(re: &[Vec<f64>], im: &[Vec<f64>], r: usize, what: &str) -> Result<CMat> {
    if re.len() != r || im.len() != r {
        return Err(Error::PotentialSpec(format!(
            "{what}: expected {r} rows, got re: {}, im: {}",
            re.len(),
            im.len()
        )));
    }
    let mut m = CMat::zeros(r, r);
    for i in 0..r {
        if re[i].len() != r || im[i].len() != r {
            return Err(Error::PotentialSpec(format!(
                "{what}: row {i} has wrong length"
            )));
        }
        for j in 0..r {
            let v = Complex64::new(re[i][j], im[i][j]);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::PotentialSpec(format!(
                    "{what}: non-finite entry at ({i},{j})"
                )));
            }
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

fn block_from_spec(spec: &BlockSpec, r: usize, what: &str) -> Result<Block> {
    match spec {
        BlockSpec::Zero => Ok(Block::Zero { r }),
        BlockSpec::Const { re, im } => Ok(Block::Const(matrix_from_parts(re, im, r, what)?)),
        BlockSpec::Samples { x, re, im } => {
            if x.len() < 2 {
                return Err(Error::PotentialSpec(format!(
                    "{what}: need at least two samples"
                )));
            }
            if x.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::PotentialSpec(format!(
                    "{what}: sample positions must be strictly increasing"
                )));
            }
            if x.iter().any(|&p| !(0.0..=1.0).contains(&p) || !p.is_finite()) {
                return Err(Error::PotentialSpec(format!(
                    "{what}: sample positions must lie in [0,1]"
                )));
            }
            if re.len() != x.len() || im.len() != x.len() {
                return Err(Error::PotentialSpec(format!(
                    "{what}: sample count mismatch"
                )));
            }
            let values = re
                .iter()
                .zip(im)
                .enumerate()
                .map(|(k, (vre, vim))| matrix_from_parts(vre, vim, r, &format!("{what}[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            Ok(Block::Samples {
                xs: x.clone(),
                values,
            })
        }
        BlockSpec::Builtin { name, params } => match name.as_str() {
            "zero" => Ok(Block::Zero { r }),
            "trig" => {
                let p: TrigParams = serde_json::from_value(params.clone()).map_err(|e| {
                    Error::PotentialSpec(format!("{what}: bad trig params: {e}"))
                })?;
                let terms = p
                    .terms
                    .iter()
                    .enumerate()
                    .map(|(k, t)| {
                        let basis = match t.basis.as_str() {
                            "cos" => TrigBasis::Cos,
                            "sin" => TrigBasis::Sin,
                            other => {
                                return Err(Error::PotentialSpec(format!(
                                    "{what}: term {k}: unknown basis {other:?}"
                                )))
                            }
                        };
                        Ok(TrigTerm {
                            freq: t.freq,
                            basis,
                            coeff: matrix_from_parts(
                                &t.re,
                                &t.im,
                                r,
                                &format!("{what} term {k}"),
                            )?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Block::Trig { r, terms })
            }
            other => Err(Error::PotentialSpec(format!(
                "{what}: unknown builtin {other:?}"
            ))),
        },
    }
}

/// Builds a [`MatrixPotential`] from a parsed spec document.
pub fn load_potential(spec: &PotentialSpec) -> Result<MatrixPotential> {
    if spec.r == 0 {
        return Err(Error::PotentialSpec("r must be >= 1".into()));
    }
    let q1 = block_from_spec(&spec.q1, spec.r, "q1")?;
    let q2 = block_from_spec(&spec.q2, spec.r, "q2")?;
    MatrixPotential::new(q1, q2)
}

/// Parses a JSON document into a [`MatrixPotential`].
pub fn from_json_str(s: &str) -> Result<MatrixPotential> {
    let spec: PotentialSpec =
        serde_json::from_str(s).map_err(|e| Error::PotentialSpec(format!("bad JSON: {e}")))?;
    load_potential(&spec)
}

fn scalar_const(c: Complex64) -> Block {
    Block::Const(CMat::from_element(1, 1, c))
}

/// The zero potential at block size `r`.
pub fn free(r: usize) -> MatrixPotential {
    MatrixPotential::new(Block::Zero { r }, Block::Zero { r }).expect("valid")
}

/// Scalar constant potential `q1 = c1`, `q2 = c2` at `r = 1`.
pub fn constant_scalar(c1: Complex64, c2: Complex64) -> MatrixPotential {
    MatrixPotential::new(scalar_const(c1), scalar_const(c2)).expect("valid")
}

/// Named members of the builtin test-potential family.
pub fn builtin(name: &str) -> Option<MatrixPotential> {
    match name {
        "zero" => Some(free(1)),
        "zero2" => Some(free(2)),
        "constant" => Some(constant_scalar(
            Complex64::new(0.6, 0.0),
            Complex64::new(0.6, 0.0),
        )),
        "trig" => {
            let term = |freq: u32, basis: TrigBasis, re: f64, im: f64| TrigTerm {
                freq,
                basis,
                coeff: CMat::from_element(1, 1, Complex64::new(re, im)),
            };
            let q1 = Block::Trig {
                r: 1,
                terms: vec![
                    term(0, TrigBasis::Cos, 0.5, 0.0),
                    term(1, TrigBasis::Cos, 0.4, 0.0),
                ],
            };
            let q2 = Block::Trig {
                r: 1,
                terms: vec![
                    term(0, TrigBasis::Cos, 0.5, 0.0),
                    term(1, TrigBasis::Cos, 0.4, 0.0),
                    term(1, TrigBasis::Sin, 0.0, 0.2),
                ],
            };
            Some(MatrixPotential::new(q1, q2).expect("valid"))
        }
        "nonnormal" => {
            let q1 = Block::Const(CMat::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(0.6, 0.0),
                    Complex64::new(0.25, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.6, 0.0),
                ],
            ));
            let q2 = Block::Const(CMat::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(0.5, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.15, 0.0),
                    Complex64::new(0.5, 0.0),
                ],
            ));
            Some(MatrixPotential::new(q1, q2).expect("valid"))
        }
        _ => None,
    }
}

/// The standard test-potential suite: zero, constant, trigonometric and a
/// non-normal example with `q2 != q1^H`.
pub fn suite() -> Vec<(&'static str, MatrixPotential)> {
    ["zero", "constant", "trig", "nonnormal"]
        .into_iter()
        .map(|n| (n, builtin(n).expect("builtin exists")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::linalg::j_matrix;

    #[test]
    fn assembled_anticommutes_with_j() {
        for (_, q) in suite() {
            let j = j_matrix(q.r());
            for x in [0.0, 0.31, 0.77, 1.0] {
                let qm = q.assembled(x);
                let anti = &j * &qm + &qm * &j;
                assert_relative_eq!(anti.norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn diagonal_blocks_are_exactly_zero() {
        for (_, q) in suite() {
            let r = q.r();
            let qm = q.assembled(0.4);
            for i in 0..r {
                for j in 0..r {
                    assert_eq!(qm[(i, j)], Complex64::new(0.0, 0.0));
                    assert_eq!(qm[(r + i, r + j)], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn adjoint_is_involution() {
        for (_, q) in suite() {
            let qq = q.adjoint().adjoint();
            for x in [0.0, 0.25, 0.5, 0.9, 1.0] {
                assert_relative_eq!(
                    (q.assembled(x) - qq.assembled(x)).norm(),
                    0.0,
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn adjoint_matches_conjugate_transpose_of_assembly() {
        for (_, q) in suite() {
            let qs = q.adjoint();
            for x in [0.1, 0.5, 0.85] {
                let lhs = qs.assembled(x);
                let rhs = q.assembled(x).adjoint();
                assert_relative_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn adjoint_of_scalar_imaginary_block() {
        // q1 = i, q2 = 0: the adjoint has q1 = 0, q2 = -i.
        let q = constant_scalar(Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0));
        let qs = q.adjoint();
        assert_eq!(qs.q1(0.3)[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(qs.q2(0.3)[(0, 0)], Complex64::new(0.0, -1.0));
    }

    #[test]
    fn self_adjoint_potential_fixed_by_adjoint() {
        // r=2 with q2 = q1^H pointwise.
        let q1 = Block::Trig {
            r: 2,
            terms: vec![TrigTerm {
                freq: 1,
                basis: TrigBasis::Cos,
                coeff: CMat::from_row_slice(
                    2,
                    2,
                    &[
                        Complex64::new(0.3, 0.1),
                        Complex64::new(0.2, -0.4),
                        Complex64::new(0.1, 0.2),
                        Complex64::new(-0.5, 0.0),
                    ],
                ),
            }],
        };
        let q2 = q1.adjoint();
        let q = MatrixPotential::new(q1, q2).unwrap();
        let qs = q.adjoint();
        for k in 0..100 {
            let x = k as f64 / 99.0;
            assert_relative_eq!(
                (q.assembled(x) - qs.assembled(x)).norm(),
                0.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn l2_norm_zero_and_constant() {
        let (norm, _) = free(2).l2_norm_with_tol();
        assert_eq!(norm, 0.0);
        // q1 = q2 = 1: pointwise operator norm of the assembly is 1.
        let q = constant_scalar(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        let (norm, tol) = q.l2_norm_with_tol();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-10);
        assert!(tol < 1e-10);
    }

    #[test]
    fn l2_norm_homogeneity() {
        let q = builtin("trig").unwrap();
        let doubled = MatrixPotential::new(
            match &q.q1 {
                Block::Trig { r, terms } => Block::Trig {
                    r: *r,
                    terms: terms
                        .iter()
                        .map(|t| TrigTerm {
                            freq: t.freq,
                            basis: t.basis,
                            coeff: &t.coeff * Complex64::new(2.0, 0.0),
                        })
                        .collect(),
                },
                _ => unreachable!(),
            },
            match &q.q2 {
                Block::Trig { r, terms } => Block::Trig {
                    r: *r,
                    terms: terms
                        .iter()
                        .map(|t| TrigTerm {
                            freq: t.freq,
                            basis: t.basis,
                            coeff: &t.coeff * Complex64::new(2.0, 0.0),
                        })
                        .collect(),
                },
                _ => unreachable!(),
            },
        )
        .unwrap();
        assert_relative_eq!(
            doubled.l2_norm(),
            2.0 * q.l2_norm(),
            max_relative = 1e-8
        );
    }

    #[test]
    fn json_round_trip_of_samples_is_exact_at_nodes() {
        let xs = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let spec = PotentialSpec {
            r: 2,
            q1: BlockSpec::Samples {
                x: xs.clone(),
                re: xs
                    .iter()
                    .map(|&x| vec![vec![x, 2.0 * x], vec![-x, 0.5]])
                    .collect(),
                im: xs
                    .iter()
                    .map(|&x| vec![vec![0.0, x * x], vec![1.0, -x]])
                    .collect(),
            },
            q2: BlockSpec::Zero,
        };
        let q = load_potential(&spec).unwrap();
        for (k, &x) in xs.iter().enumerate() {
            let m = q.q1(x);
            assert_eq!(m[(0, 0)], Complex64::new(x, 0.0));
            assert_eq!(m[(0, 1)], Complex64::new(2.0 * x, x * x));
            assert_eq!(m[(1, 0)], Complex64::new(-x, 1.0));
            assert_eq!(m[(1, 1)], Complex64::new(0.5, -x));
            let _ = k;
        }
        // Midpoint interpolates linearly.
        let mid = q.q1(0.125);
        assert_relative_eq!(mid[(0, 0)].re, 0.125, epsilon = 1e-15);
    }

    #[test]
    fn json_errors_are_structured() {
        assert!(from_json_str("{").is_err());
        // Dimension mismatch.
        let bad = r#"{"r": 2, "q1": {"kind": "const", "re": [[1.0]], "im": [[0.0]]}, "q2": {"kind": "zero"}}"#;
        assert!(matches!(
            from_json_str(bad),
            Err(Error::PotentialSpec(_))
        ));
        // Non-finite entries are rejected by JSON itself or by validation.
        let nonfinite = r#"{"r": 1, "q1": {"kind": "const", "re": [[1e999]], "im": [[0.0]]}, "q2": {"kind": "zero"}}"#;
        assert!(from_json_str(nonfinite).is_err());
        // Decreasing sample grid.
        let dec = r#"{"r": 1, "q1": {"kind": "samples", "x": [0.0, 0.6, 0.4], "re": [[[1]],[[1]],[[1]]], "im": [[[0]],[[0]],[[0]]]}, "q2": {"kind": "zero"}}"#;
        assert!(from_json_str(dec).is_err());
    }

    #[test]
    fn builtin_trig_block_parses() {
        let doc = r#"{
            "r": 1,
            "q1": {"kind": "builtin", "name": "trig", "params": {"terms": [
                {"freq": 0, "basis": "cos", "re": [[0.5]], "im": [[0.0]]},
                {"freq": 1, "basis": "cos", "re": [[0.4]], "im": [[0.0]]}
            ]}},
            "q2": {"kind": "zero"}
        }"#;
        let q = from_json_str(doc).unwrap();
        assert_relative_eq!(q.q1(0.0)[(0, 0)].re, 0.9, epsilon = 1e-15);
        assert_relative_eq!(q.q1(1.0)[(0, 0)].re, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn suite_members_have_expected_shape() {
        let suite = suite();
        assert_eq!(suite.len(), 4);
        let nn = builtin("nonnormal").unwrap();
        assert_eq!(nn.r(), 2);
        // Genuinely non-self-adjoint: q2 != q1^H somewhere.
        let diff = (nn.q2(0.5) - nn.q1(0.5).adjoint()).norm();
        assert!(diff > 0.1);
        // Norm budget used by decay studies.
        assert!(builtin("constant").unwrap().l2_norm() <= 2.0);
        assert!(builtin("trig").unwrap().l2_norm() <= 2.0);
    }
}
