use serde::{Deserialize, Serialize};

use super::conditionals::residual_ss;
use super::sampler::GibbsChain;
use super::state::GibbsState;
use crate::design::DesignMatrices;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DicResult {
    pub dic: f64,
    pub p_d: f64,
    pub mean_deviance: f64,
    pub deviance_at_mean: f64,
}

/// `−2 log p(y | β, b, σ²)` under the conditional normal model.
pub fn deviance<T: Real>(state: &GibbsState<T>, dm: &DesignMatrices<T>) -> f64 {
    deviance_from_rss(residual_ss(state, dm).as_f64(), state.sigma_eps_sq.as_f64(), dm.n_obs())
}

pub(crate) fn deviance_from_rss(rss: f64, sigma_sq: f64, n: usize) -> f64 {
    n as f64 * (2.0 * std::f64::consts::PI * sigma_sq).ln() + rss / sigma_sq
}

/// `DIC = D̄ + p_D` with `p_D = D̄ − D(θ̄)`, `θ̄` the posterior means of
/// `(β, b, σ²)`.
pub fn dic<T: Real>(chain: &GibbsChain<T>, dm: &DesignMatrices<T>) -> Result<DicResult> {
    if chain.is_empty() {
        return Err(Error::DegenerateInput("empty chain".into()));
    }
    let mean_deviance = chain.draws.iter().map(|d| deviance(d, dm)).sum::<f64>() / chain.len() as f64;
    let deviance_at_mean = deviance(&chain.posterior_mean(), dm);
    let p_d = mean_deviance - deviance_at_mean;
    Ok(DicResult { dic: mean_deviance + p_d, p_d, mean_deviance, deviance_at_mean })
}
