use serde::{Deserialize, Serialize};

use crate::design::DesignMatrices;
use crate::error::{Error, Result};
use crate::numerics::{cholesky_solve_vec, cholesky_unchecked, dot, Series};
use crate::scalar::Real;

/// One full set of sampled parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsState<T> {
    pub beta: Vec<T>,
    /// Random intercepts, one per subject.
    pub b: Vec<T>,
    pub tau1_sq: T,
    pub sigma_eps_sq: T,
    /// Random GA slopes of the intercept+slope variant.
    pub b_slope: Option<Vec<T>>,
    pub tau2_sq: Option<T>,
}

impl<T: Real> GibbsState<T> {
    /// Positive variances and dimensions matching `dm`.
    pub fn validate(&self, dm: &DesignMatrices<T>) -> Result<()> {
        let m = dm.n_subjects();
        if self.beta.len() != dm.n_fixed() || self.b.len() != m {
            return Err(Error::DimensionMismatch("state does not match the design".into()));
        }
        let slope = dm.n_random() == 2;
        if slope != self.b_slope.is_some() || slope != self.tau2_sq.is_some() {
            return Err(Error::DimensionMismatch("random slope presence differs from the design".into()));
        }
        if self.b_slope.as_ref().is_some_and(|s| s.len() != m) {
            return Err(Error::DimensionMismatch("random slopes".into()));
        }
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(self.tau1_sq) || !positive(self.sigma_eps_sq) || self.tau2_sq.is_some_and(|v| !positive(v)) {
            return Err(Error::Domain("sampled variances must be positive".into()));
        }
        Ok(())
    }

    /// Random-effect vector of subject `i`.
    pub(crate) fn effects(&self, i: usize) -> [T; 2] {
        [self.b[i], self.b_slope.as_ref().map_or(T::zero(), |s| s[i])]
    }

    /// `Xβ + Zb` for every row.
    pub fn conditional_mean(&self, dm: &DesignMatrices<T>) -> Vec<T> {
        let mut mu = dm.x.matvec(&self.beta);
        for (i, g) in dm.groups.iter().enumerate() {
            let e = self.effects(i);
            for r in g.clone() {
                mu[r] += dot(dm.z.row(r), &e[..dm.n_random()]);
            }
        }
        mu
    }

    /// Ordinary least squares for β, zero random effects and all variances
    /// at the residual sample variance. The slope variance is that value
    /// divided by the variance of the slope covariate.
    pub fn initial(dm: &DesignMatrices<T>) -> Result<Self> {
        let l = cholesky_unchecked(&dm.x.gram())?;
        let beta = cholesky_solve_vec(&l, &dm.x.t_matvec(&dm.y));
        let fitted = dm.x.matvec(&beta);
        let resid: Vec<T> = dm.y.iter().zip(&fitted).map(|(&y, &f)| y - f).collect();
        let v = Series::new(resid)?.variance();
        if !(v > T::zero()) {
            return Err(Error::DegenerateInput("OLS residuals have zero variance".into()));
        }
        let m = dm.n_subjects();
        let (b_slope, tau2_sq) = if dm.n_random() == 2 {
            let spread = Series::new(dm.z.col_vec(1))?.variance();
            let scale = if spread > T::zero() { spread } else { T::one() };
            (Some(vec![T::zero(); m]), Some(v / scale))
        } else {
            (None, None)
        };
        Ok(Self { beta, b: vec![T::zero(); m], tau1_sq: v, sigma_eps_sq: v, b_slope, tau2_sq })
    }
}
