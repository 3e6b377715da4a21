//! Seeded random source and the few distributions the samplers need.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Deterministic random stream: the same seed and call sequence always
/// yields the same draws.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream derived from this seed, e.g. for replicate `k`.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, inner }
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        loop {
            let u: f64 = self.inner.gen();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn uniform_int(&mut self, lo: usize, hi: usize) -> usize {
        self.inner.gen_range(lo..=hi)
    }

    /// Index drawn with probability proportional to `weights`.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = self.uniform() * total;
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                return i;
            }
            u -= w;
        }
        weights.len() - 1
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal by the Marsaglia polar method (second variate discarded).
    pub fn standard_normal(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }

    /// Gamma(shape, scale = 1) by Marsaglia–Tsang; shapes below one are
    /// boosted through `G(a) = G(a + 1) · U^{1/a}`.
    pub fn standard_gamma(&mut self, shape: f64) -> f64 {
        debug_assert!(shape > 0.0);
        if shape < 1.0 {
            let g = self.standard_gamma(shape + 1.0);
            return g * self.uniform().powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let (x, v) = loop {
                let x = self.standard_normal();
                let v = 1.0 + c * x;
                if v > 0.0 {
                    break (x, v * v * v);
                }
            };
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v;
            }
            if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    pub fn chi_square(&mut self, dof: f64) -> f64 {
        2.0 * self.standard_gamma(0.5 * dof)
    }

    /// Student-t with `dof` degrees of freedom.
    pub fn student_t(&mut self, dof: f64) -> f64 {
        let z = self.standard_normal();
        z / (self.chi_square(dof) / dof).sqrt()
    }
}

/// One draw from `N(mean, sd²)`; `sd = 0` returns `mean` exactly.
pub fn draw_normal<T: Real>(rng: &mut RngState, mean: T, sd: T) -> Result<T> {
    if !(sd >= T::zero()) || !mean.is_finite() || !sd.is_finite() {
        return Err(Error::Domain(format!("normal with mean={mean}, sd={sd}")));
    }
    if sd == T::zero() {
        return Ok(mean);
    }
    Ok(mean + sd * T::lit(rng.standard_normal()))
}

/// One draw from the scaled inverse chi-square `Inv-χ²(dof, scale)`,
/// i.e. `dof · scale / χ²_dof`.
pub fn draw_scaled_inv_chi2<T: Real>(rng: &mut RngState, dof: T, scale: T) -> Result<T> {
    if !(dof > T::zero() && scale > T::zero()) || !dof.is_finite() || !scale.is_finite() {
        return Err(Error::Domain(format!("scaled inverse chi-square with dof={dof}, scale={scale}")));
    }
    let d = dof.as_f64();
    let x = rng.chi_square(d);
    Ok(T::lit(d * scale.as_f64() / x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sd_returns_mean() {
        let mut rng = RngState::new(1);
        assert_eq!(draw_normal(&mut rng, 3.25f64, 0.0).unwrap(), 3.25);
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngState::new(42);
        let mut b = RngState::new(42);
        let xa: Vec<f64> = (0..100).map(|_| draw_scaled_inv_chi2(&mut a, 3.0, 0.5).unwrap()).collect();
        let xb: Vec<f64> = (0..100).map(|_| draw_scaled_inv_chi2(&mut b, 3.0, 0.5).unwrap()).collect();
        assert_eq!(xa, xb);
    }

    #[test]
    fn scaled_inv_chi2_mean() {
        let mut rng = RngState::new(7);
        let n = 1_000_000;
        let mean = (0..n).map(|_| draw_scaled_inv_chi2(&mut rng, 10.0f64, 1.0).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 1.25).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn gamma_small_shape_mean() {
        let mut rng = RngState::new(3);
        let n = 400_000;
        let mean = (0..n).map(|_| rng.standard_gamma(0.3)).sum::<f64>() / n as f64;
        assert!((mean - 0.3).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut rng = RngState::new(0);
        assert!(draw_scaled_inv_chi2(&mut rng, 0.0f64, 1.0).is_err());
        assert!(draw_scaled_inv_chi2(&mut rng, 1.0f64, -1.0).is_err());
        assert!(draw_normal(&mut rng, 0.0f64, -1.0).is_err());
    }

    #[test]
    fn derived_streams_differ() {
        let mut a = RngState::derive(5, 0);
        let mut b = RngState::derive(5, 1);
        assert_ne!(a.uniform(), b.uniform());
    }
}
