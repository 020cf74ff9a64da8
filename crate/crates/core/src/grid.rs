//! Quadrature grids on `[0,1]` and discretized vector-valued functions.

use crate::error::Error;
use crate::linalg::CVec;
use crate::Result;
use num_complex::Complex64;

/// Increasing nodes on `[0,1]` with composite-trapezoid quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Uniform grid with `n >= 2` nodes, endpoints included.
    pub fn uniform(n: usize) -> Self {
        assert!(n >= 2, "a grid needs at least two nodes");
        let h = 1.0 / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        Self::from_nodes(nodes).expect("uniform nodes are valid")
    }

    /// Grid over arbitrary strictly increasing nodes spanning `[0,1]`.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::DimensionMismatch(
                "grid needs at least two nodes".into(),
            ));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::DimensionMismatch(
                "grid must start at 0 and end at 1".into(),
            ));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DimensionMismatch(
                "grid nodes must be strictly increasing".into(),
            ));
        }
        let n = nodes.len();
        let mut weights = vec![0.0; n];
        for i in 0..n - 1 {
            let h = nodes[i + 1] - nodes[i];
            weights[i] += 0.5 * h;
            weights[i + 1] += 0.5 * h;
        }
        Ok(Self { nodes, weights })
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True when the grid has no interior nodes.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node positions.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Trapezoid weights aligned with [`Self::nodes`].
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Spacing of a uniform grid; panics if the grid is not uniform.
    pub fn uniform_spacing(&self) -> f64 {
        let h = self.nodes[1] - self.nodes[0];
        debug_assert!(
            self.nodes
                .windows(2)
                .all(|w| ((w[1] - w[0]) - h).abs() < 1e-12),
            "grid is not uniform"
        );
        h
    }

    /// Quadrature of a scalar sample vector.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        assert_eq!(samples.len(), self.len());
        self.weights
            .iter()
            .zip(samples)
            .map(|(w, s)| w * s)
            .sum()
    }

    /// True when all spacings agree to tight tolerance.
    pub fn is_uniform(&self) -> bool {
        let h = self.nodes[1] - self.nodes[0];
        self.nodes
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() < 1e-12)
    }
}

/// Fourth-order finite-difference derivative of uniformly spaced samples,
/// with one-sided five-point closures at the two nodes nearest each end.
pub fn derivative_uniform_samples(values: &[CVec], h: f64) -> Vec<CVec> {
    let n = values.len();
    assert!(n >= 5, "five samples needed for fourth-order differences");
    let s = 1.0 / (12.0 * h);
    let comb = |terms: &[(f64, usize)]| -> CVec {
        let mut acc = CVec::zeros(values[0].len());
        for &(c, idx) in terms {
            acc.axpy(Complex64::new(c * s, 0.0), &values[idx], Complex64::new(1.0, 0.0));
        }
        acc
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let v = if i == 0 {
            comb(&[(-25.0, 0), (48.0, 1), (-36.0, 2), (16.0, 3), (-3.0, 4)])
        } else if i == 1 {
            comb(&[(-3.0, 0), (-10.0, 1), (18.0, 2), (-6.0, 3), (1.0, 4)])
        } else if i == n - 2 {
            comb(&[
                (3.0, n - 1),
                (10.0, n - 2),
                (-18.0, n - 3),
                (6.0, n - 4),
                (-1.0, n - 5),
            ])
        } else if i == n - 1 {
            comb(&[
                (25.0, n - 1),
                (-48.0, n - 2),
                (36.0, n - 3),
                (-16.0, n - 4),
                (3.0, n - 5),
            ])
        } else {
            comb(&[(1.0, i - 2), (-8.0, i - 1), (8.0, i + 1), (-1.0, i + 2)])
        };
        out.push(v);
    }
    out
}

/// A `C^{2r}`-valued function represented by its values on a [`Grid`].
#[derive(Debug, Clone)]
pub struct GridFunction {
    /// Per-node values, each of length `2r`.
    pub values: Vec<CVec>,
}

impl GridFunction {
    /// Zero function with `2r` components on an `n`-node grid.
    pub fn zeros(n: usize, r: usize) -> Self {
        Self {
            values: vec![CVec::zeros(2 * r); n],
        }
    }

    /// Builds a grid function by evaluating a closure at each node.
    pub fn from_fn(grid: &Grid, r: usize, mut f: impl FnMut(f64) -> CVec) -> Self {
        let values: Vec<CVec> = grid.nodes().iter().map(|&x| f(x)).collect();
        assert!(values.iter().all(|v| v.len() == 2 * r));
        Self { values }
    }

    /// Number of vector components (`2r`).
    pub fn components(&self) -> usize {
        self.values[0].len()
    }

    /// Discrete `L2` norm with the grid's quadrature weights.
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        assert_eq!(self.values.len(), grid.len());
        grid.weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Pointwise linear combination `self + alpha * other`.
    pub fn axpy(&self, alpha: Complex64, other: &GridFunction) -> GridFunction {
        assert_eq!(self.values.len(), other.values.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b * alpha)
            .collect();
        GridFunction { values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_weights_sum_to_one() {
        for n in [2, 3, 17, 513] {
            let g = Grid::uniform(n);
            let total: f64 = g.weights().iter().sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn trapezoid_exact_on_linear_functions() {
        let g = Grid::uniform(33);
        let samples: Vec<f64> = g.nodes().iter().map(|x| 3.0 * x - 0.5).collect();
        assert_relative_eq!(g.integrate(&samples), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn fourth_order_derivative_accuracy() {
        let g = Grid::uniform(129);
        let h = g.uniform_spacing();
        let values: Vec<CVec> = g
            .nodes()
            .iter()
            .map(|&x| {
                CVec::from_vec(vec![
                    Complex64::new((3.0 * x).sin(), 0.0),
                    Complex64::new(0.0, (2.0 * x).cos()),
                ])
            })
            .collect();
        let deriv = derivative_uniform_samples(&values, h);
        for (i, &x) in g.nodes().iter().enumerate() {
            let exact = CVec::from_vec(vec![
                Complex64::new(3.0 * (3.0 * x).cos(), 0.0),
                Complex64::new(0.0, -2.0 * (2.0 * x).sin()),
            ]);
            let err = (&deriv[i] - exact).norm();
            assert!(err < 1e-6, "node {i}: error {err:.2e}");
        }
    }

    #[test]
    fn trapezoid_exact_on_integer_cosines() {
        // Uniform trapezoid integrates cos(2 pi k x) to exactly zero for
        // integer k not divisible by the interval count.
        let g = Grid::uniform(257);
        for k in [1, 2, 5, 16] {
            let samples: Vec<f64> = g
                .nodes()
                .iter()
                .map(|x| (2.0 * std::f64::consts::PI * k as f64 * x).cos())
                .collect();
            assert!(g.integrate(&samples).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_node_lists() {
        assert!(Grid::from_nodes(vec![0.0, 0.5]).is_err());
        assert!(Grid::from_nodes(vec![0.0, 0.6, 0.4, 1.0]).is_err());
        assert!(Grid::from_nodes(vec![0.1, 0.5, 1.0]).is_err());
    }

    #[test]
    fn grid_function_l2_norm() {
        let g = Grid::uniform(129);
        let f = GridFunction::from_fn(&g, 1, |_x| {
            CVec::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)])
        });
        // Constant vector of norm sqrt(2) over unit interval.
        assert_relative_eq!(f.l2_norm(&g), 2.0_f64.sqrt(), epsilon = 1e-12);
    }
}
