//! Likelihood-ratio tests between nested fits.

use serde::{Deserialize, Serialize};

use super::fit::LmmFit;
use super::likelihood::Criterion;
use crate::error::{Error, Result};
use crate::numerics::chi2_survival;
use crate::scalar::Real;

/// Statistics more negative than this signal a failed null fit.
pub const NEGATIVE_STAT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrtMethod {
    /// χ² with df equal to the parameter-count difference.
    Standard,
    /// `½χ²(1) + ½χ²(2)` for adding a random slope to a random intercept.
    BoundaryMixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtResult {
    /// `2(ℓ_alt − ℓ_null)`, clamped at zero.
    pub statistic: f64,
    /// Parameter-count difference.
    pub df: usize,
    /// Human-readable reference distribution.
    pub reference: String,
    pub p_value: f64,
    pub method: LrtMethod,
}

fn is_subset(small: &[String], big: &[String]) -> bool {
    small.iter().all(|s| big.contains(s))
}

/// Compares a null fit against an alternative that nests it.
pub fn lrt<T: Real>(null_fit: &LmmFit<T>, alt_fit: &LmmFit<T>, method: LrtMethod) -> Result<LrtResult> {
    if null_fit.criterion != alt_fit.criterion {
        return Err(Error::InvalidSpec("both fits must use the same criterion".into()));
    }
    if null_fit.n_obs != alt_fit.n_obs || null_fit.n_subjects != alt_fit.n_subjects {
        return Err(Error::NotNested("fits are on different data".into()));
    }
    if !is_subset(&null_fit.fixed_labels, &alt_fit.fixed_labels) {
        return Err(Error::NotNested("null fixed effects are not a subset of the alternative's".into()));
    }
    if !is_subset(&null_fit.random_labels, &alt_fit.random_labels) {
        return Err(Error::NotNested("null random effects are not a subset of the alternative's".into()));
    }
    let fixed_differ = null_fit.fixed_labels.len() != alt_fit.fixed_labels.len();
    if fixed_differ && null_fit.criterion != Criterion::Ml {
        return Err(Error::InvalidSpec("fixed-effect comparisons need ML fits".into()));
    }
    let df = alt_fit.n_parameters() - null_fit.n_parameters();
    if method == LrtMethod::BoundaryMixture
        && !(null_fit.random_labels.len() == 1 && alt_fit.random_labels.len() == 2 && !fixed_differ)
    {
        return Err(Error::InvalidSpec("the boundary mixture applies only to adding a random slope".into()));
    }

    let raw = 2.0 * (alt_fit.loglik().as_f64() - null_fit.loglik().as_f64());
    if raw < -NEGATIVE_STAT_TOL {
        return Err(Error::ConvergenceFailure {
            iterations: alt_fit.convergence.iterations,
            message: format!("likelihood-ratio statistic {raw:.3e} is negative; the alternative fit did not converge"),
        });
    }
    let statistic = raw.max(0.0);
    let (p_value, reference) = match method {
        LrtMethod::Standard if df == 0 => (1.0, "chi2(0)".to_string()),
        LrtMethod::Standard => (chi2_survival(statistic, df as f64)?, format!("chi2({df})")),
        LrtMethod::BoundaryMixture => (
            0.5 * chi2_survival(statistic, 1.0)? + 0.5 * chi2_survival(statistic, 2.0)?,
            "0.5*chi2(1)+0.5*chi2(2)".to_string(),
        ),
    };
    Ok(LrtResult { statistic, df, reference, p_value: p_value.clamp(0.0, 1.0), method })
}
