//! Seeded pseudo-random inputs for stress tests.
//!
//! Everything here is deterministic given the seed: the generator is a
//! portable stream cipher and all draws map its output through fixed
//! arithmetic, so test corpora are reproducible across platforms and runs.

use num_complex::Complex64;
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::BandLimitedFunction;
use crate::grid::{Grid, GridFunction};
use crate::linalg::{CMat, CVec};
use crate::potential::{Block, MatrixPotential, TrigBasis, TrigTerm};

/// Deterministic random source for test-data generation.
pub struct SampleRng {
    inner: ChaCha8Rng,
}

impl SampleRng {
    /// Generator seeded from a single integer.
    pub fn seeded(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform draw from `[0, 1)` using the top 53 bits.
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform complex draw from the centered box with the given half-widths.
    pub fn complex_box(&mut self, re_half: f64, im_half: f64) -> Complex64 {
        Complex64::new(
            self.uniform(-re_half, re_half),
            self.uniform(-im_half, im_half),
        )
    }

    /// Uniformly distributed point on the unit circle.
    pub fn unit_circle(&mut self) -> Complex64 {
        let theta = self.uniform(0.0, std::f64::consts::TAU);
        Complex64::new(theta.cos(), theta.sin())
    }

    /// Uniform index in `0..n`.
    pub fn pick(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let x = self.unit() * n as f64;
        (x as usize).min(n - 1)
    }

    /// Random `r x r` matrix with entries in the centered unit box.
    pub fn matrix(&mut self, r: usize) -> CMat {
        CMat::from_fn(r, r, |_, _| self.complex_box(1.0, 1.0))
    }
}

fn scaled_terms(terms: &[TrigTerm], factor: f64) -> Vec<TrigTerm> {
    let alpha = Complex64::new(factor, 0.0);
    terms
        .iter()
        .map(|t| TrigTerm {
            freq: t.freq,
            basis: t.basis,
            coeff: &t.coeff * alpha,
        })
        .collect()
}

/// Random matrix trigonometric-polynomial potential with frequencies up to
/// `max_freq`, rescaled so its `L2` norm equals `target_l2`.
pub fn random_trig_potential(
    rng: &mut SampleRng,
    r: usize,
    max_freq: u32,
    target_l2: f64,
) -> MatrixPotential {
    let block = |rng: &mut SampleRng| -> Vec<TrigTerm> {
        let mut terms = Vec::new();
        for freq in 0..=max_freq {
            terms.push(TrigTerm {
                freq,
                basis: TrigBasis::Cos,
                coeff: rng.matrix(r),
            });
            if freq > 0 {
                terms.push(TrigTerm {
                    freq,
                    basis: TrigBasis::Sin,
                    coeff: rng.matrix(r),
                });
            }
        }
        terms
    };
    let t1 = block(rng);
    let t2 = block(rng);
    let draft = MatrixPotential::new(
        Block::Trig {
            r,
            terms: t1.clone(),
        },
        Block::Trig {
            r,
            terms: t2.clone(),
        },
    )
    .expect("matching block sizes");
    let norm = draft.l2_norm();
    let factor = if norm > 0.0 { target_l2 / norm } else { 0.0 };
    MatrixPotential::new(
        Block::Trig {
            r,
            terms: scaled_terms(&t1, factor),
        },
        Block::Trig {
            r,
            terms: scaled_terms(&t2, factor),
        },
    )
    .expect("matching block sizes")
}

/// Random smooth `2r`-component function on a grid: per component a complex
/// trigonometric polynomial with frequencies up to `max_freq`.
pub fn random_grid_function(
    rng: &mut SampleRng,
    grid: &Grid,
    r: usize,
    max_freq: u32,
) -> GridFunction {
    let d = 2 * r;
    // coefficients[c][k] multiplies exp(i pi (k - max_freq) x) in component c
    let coeffs: Vec<Vec<Complex64>> = (0..d)
        .map(|_| {
            (0..2 * max_freq + 1)
                .map(|_| rng.complex_box(1.0, 1.0))
                .collect()
        })
        .collect();
    GridFunction::from_fn(grid, r, |x| {
        CVec::from_fn(d, |c, _| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, coeff) in coeffs[c].iter().enumerate() {
                let freq = k as f64 - max_freq as f64;
                acc += coeff * Complex64::new(0.0, std::f64::consts::PI * freq * x).exp();
            }
            acc
        })
    })
}

/// Random band-limited matrix function with `mode_count` distinct integer
/// frequencies drawn from `[-max_freq, max_freq]`.
pub fn random_band_limited(
    rng: &mut SampleRng,
    r: usize,
    mode_count: usize,
    max_freq: i64,
) -> BandLimitedFunction {
    let span = (2 * max_freq + 1) as usize;
    let count = mode_count.min(span);
    let mut freqs: Vec<i64> = Vec::with_capacity(count);
    while freqs.len() < count {
        let k = rng.pick(span) as i64 - max_freq;
        if !freqs.contains(&k) {
            freqs.push(k);
        }
    }
    let modes: Vec<(i64, CMat)> = freqs.into_iter().map(|k| (k, rng.matrix(r))).collect();
    BandLimitedFunction::new(r, modes).expect("coefficients are r x r")
}

/// Random spectral parameter in the box `center + [-re_half, re_half] x
/// i*(sign * [im_lo, im_hi])`, redrawn until it clears `min_dist` from every
/// point in `avoid`.  Returns `None` when `max_tries` draws all fail.
pub fn lambda_avoiding(
    rng: &mut SampleRng,
    center: Complex64,
    re_half: f64,
    im_range: (f64, f64),
    avoid: &[Complex64],
    min_dist: f64,
    max_tries: usize,
) -> Option<Complex64> {
    for _ in 0..max_tries {
        let re = center.re + rng.uniform(-re_half, re_half);
        let im_mag = rng.uniform(im_range.0, im_range.1);
        let sign = if rng.unit() < 0.5 { -1.0 } else { 1.0 };
        let z = Complex64::new(re, center.im + sign * im_mag);
        if avoid.iter().all(|a| (z - a).norm() >= min_dist) {
            return Some(z);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn seeded_streams_are_reproducible() {
        let mut a = SampleRng::seeded(7);
        let mut b = SampleRng::seeded(7);
        for _ in 0..32 {
            assert_eq!(a.unit().to_bits(), b.unit().to_bits());
        }
        let qa = random_trig_potential(&mut SampleRng::seeded(3), 2, 2, 1.0);
        let qb = random_trig_potential(&mut SampleRng::seeded(3), 2, 2, 1.0);
        for x in [0.0, 0.3, 0.7, 1.0] {
            assert_eq!(qa.q1(x), qb.q1(x));
            assert_eq!(qa.q2(x), qb.q2(x));
        }
    }

    #[test]
    fn distinct_seeds_differ() {
        let mut a = SampleRng::seeded(1);
        let mut b = SampleRng::seeded(2);
        let draws_a: Vec<f64> = (0..8).map(|_| a.unit()).collect();
        let draws_b: Vec<f64> = (0..8).map(|_| b.unit()).collect();
        assert_ne!(draws_a, draws_b);
    }

    #[test]
    fn trig_potential_hits_target_norm() {
        for (seed, r, target) in [(11u64, 1usize, 0.8f64), (12, 2, 1.5), (13, 1, 2.0)] {
            let q = random_trig_potential(&mut SampleRng::seeded(seed), r, 2, target);
            assert_eq!(q.r(), r);
            assert_relative_eq!(q.l2_norm(), target, max_relative = 1e-6);
        }
    }

    #[test]
    fn unit_circle_points_have_unit_modulus() {
        let mut rng = SampleRng::seeded(5);
        for _ in 0..50 {
            let z = rng.unit_circle();
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_draws_stay_in_range() {
        let mut rng = SampleRng::seeded(9);
        for _ in 0..200 {
            let x = rng.uniform(-1.5, 2.5);
            assert!((-1.5..2.5).contains(&x));
            let k = rng.pick(7);
            assert!(k < 7);
        }
    }

    #[test]
    fn lambda_avoiding_respects_exclusions() {
        let mut rng = SampleRng::seeded(21);
        let avoid = [Complex64::new(0.0, 0.5), Complex64::new(0.4, -0.6)];
        for _ in 0..25 {
            let z = lambda_avoiding(
                &mut rng,
                Complex64::new(0.0, 0.0),
                1.5,
                (0.2, 1.0),
                &avoid,
                0.2,
                64,
            )
            .expect("box has room");
            assert!(z.re.abs() <= 1.5);
            assert!((0.2..=1.0).contains(&z.im.abs()));
            for a in &avoid {
                assert!((z - a).norm() >= 0.2);
            }
        }
    }

    #[test]
    fn band_limited_mode_count_and_dimension() {
        let mut rng = SampleRng::seeded(14);
        let f = random_band_limited(&mut rng, 2, 6, 20);
        assert_eq!(f.r(), 2);
        assert!(f.l2_norm_sq() > 0.0);
    }

    #[test]
    fn grid_function_matches_component_count() {
        let grid = Grid::uniform(33);
        let mut rng = SampleRng::seeded(17);
        let f = random_grid_function(&mut rng, &grid, 2, 3);
        assert_eq!(f.components(), 4);
        assert!(f.l2_norm(&grid) > 0.0);
    }
}
