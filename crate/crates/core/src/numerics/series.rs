//! Statistics over ordered sequences of reals (traces, residuals).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Non-empty sequence of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T>(Vec<T>);

impl<T: Real> Series<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DegenerateInput("empty series".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("series contains non-finite values".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> T {
        mean(&self.0)
    }

    /// Sample variance with `n - 1` denominator (0 for a single value).
    pub fn variance(&self) -> T {
        let n = self.0.len();
        if n < 2 {
            return T::zero();
        }
        central_moment(&self.0, 2) * T::from_count(n) / T::from_count(n - 1)
    }

    pub fn sd(&self) -> T {
        self.variance().sqrt()
    }

    pub fn min(&self) -> T {
        self.0.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.0.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Empirical quantile with linear interpolation between order statistics.
    pub fn quantile(&self, prob: T) -> Result<T> {
        if !(prob >= T::zero() && prob <= T::one()) {
            return Err(Error::Domain(format!("quantile probability {prob}")));
        }
        let mut sorted = self.0.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        Ok(quantile_sorted(&sorted, prob))
    }
}

pub(crate) fn quantile_sorted<T: Real>(sorted: &[T], prob: T) -> T {
    let n = sorted.len();
    let h = prob * T::from_count(n - 1);
    let lo = h.floor().to_usize().unwrap_or(0).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = h - T::from_count(lo);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub(crate) fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_count(xs.len())
}

fn central_moment<T: Real>(xs: &[T], k: i32) -> T {
    let m = mean(xs);
    xs.iter().map(|&x| (x - m).powi(k)).sum::<T>() / T::from_count(xs.len())
}

/// Moment skewness `m₃ / m₂^{3/2}` with biased central moments.
pub fn sample_skewness<T: Real>(s: &Series<T>) -> Result<T> {
    let xs = s.values();
    if xs.len() < 3 {
        return Err(Error::DegenerateInput(format!("skewness needs 3 values, got {}", xs.len())));
    }
    let m2 = central_moment(xs, 2);
    if !(m2 > T::zero()) {
        return Err(Error::DegenerateInput("constant series has no skewness".into()));
    }
    Ok(central_moment(xs, 3) / m2.powf(T::lit(1.5)))
}

/// Autocorrelations at lags `0..=max_lag`, normalized by the lag-0
/// autocovariance. Element 0 is exactly 1.
pub fn acf<T: Real>(s: &Series<T>, max_lag: usize) -> Result<Vec<T>> {
    let xs = s.values();
    let n = xs.len();
    if n <= max_lag {
        return Err(Error::DegenerateInput(format!("series of length {n} for lag {max_lag}")));
    }
    let m = mean(xs);
    let centered: Vec<T> = xs.iter().map(|&x| x - m).collect();
    let c0: T = centered.iter().map(|&d| d * d).sum();
    if !(c0 > T::zero()) {
        return Err(Error::DegenerateInput("constant series has no autocorrelation".into()));
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(T::one());
    for k in 1..=max_lag {
        let ck: T = centered[..n - k].iter().zip(&centered[k..]).map(|(&a, &b)| a * b).sum();
        out.push((ck / c0).max(-T::one()).min(T::one()));
    }
    Ok(out)
}

/// Effective sample size `n / (1 + 2 Σ ρ_k)`, summing lags `k ≥ 1` until
/// the first non-positive autocorrelation.
pub fn effective_sample_size<T: Real>(s: &Series<T>) -> Result<T> {
    let n = s.len();
    if n < 3 {
        return Err(Error::DegenerateInput(format!("ESS needs 3 values, got {n}")));
    }
    let max_lag = (n - 1).min(1000);
    let rho = acf(s, max_lag)?;
    let tail: T = rho[1..].iter().copied().take_while(|&r| r > T::zero()).sum();
    Ok(T::from_count(n) / (T::one() + T::lit(2.0) * tail))
}
