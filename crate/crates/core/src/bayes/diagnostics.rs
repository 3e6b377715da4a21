use serde::{Deserialize, Serialize};

use super::sampler::GibbsChain;
use crate::error::{Error, Result};
use crate::numerics::{acf, effective_sample_size, Series};
use crate::scalar::Real;

pub const ACF_MAX_LAG: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDiagnostics {
    pub name: String,
    pub trace: Vec<f64>,
    /// Lags `0..=50`.
    pub acf: Vec<f64>,
    pub ess: f64,
}

/// Trace, autocorrelation and ESS of a single parameter's draws.
pub fn diagnose_trace(name: &str, trace: Vec<f64>) -> Result<ParameterDiagnostics> {
    if trace.len() <= ACF_MAX_LAG {
        return Err(Error::DegenerateInput(format!("chain of length {} for lag {ACF_MAX_LAG}", trace.len())));
    }
    let s = Series::new(trace)?;
    let acf = acf(&s, ACF_MAX_LAG)?;
    let ess = effective_sample_size(&s)?;
    Ok(ParameterDiagnostics { name: name.to_string(), trace: s.into_vec(), acf, ess })
}

/// Diagnostics for every summarized parameter.
pub fn chain_diagnostics<T: Real>(chain: &GibbsChain<T>) -> Result<Vec<ParameterDiagnostics>> {
    chain.parameter_names().iter().map(|n| diagnose_trace(n, chain.trace(n).expect("known parameter"))).collect()
}
