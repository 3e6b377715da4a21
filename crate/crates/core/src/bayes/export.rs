//! Chain CSV and summary JSON layouts.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::dic::DicResult;
use super::ppc::PpcResult;
use super::sampler::{GibbsChain, ParameterSummary};
use crate::error::Result;
use crate::scalar::Real;

pub const BAYES_SCHEMA_VERSION: u32 = 1;

/// Posterior mean and 95% interval per parameter, plus run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesSummary {
    pub schema_version: u32,
    pub model: String,
    pub n_iter: usize,
    pub burn_fraction: f64,
    pub n_retained: usize,
    pub seed: u64,
    pub parameters: Vec<ParameterSummary>,
    pub dic: Option<DicResult>,
    pub p_b: Option<f64>,
}

impl BayesSummary {
    pub fn new<T: Real>(chain: &GibbsChain<T>, model: &str, dic: Option<DicResult>, ppc: Option<&PpcResult>) -> Self {
        Self {
            schema_version: BAYES_SCHEMA_VERSION,
            model: model.to_string(),
            n_iter: chain.n_iter,
            burn_fraction: chain.burn_fraction,
            n_retained: chain.len(),
            seed: chain.seed,
            parameters: chain.summaries.clone(),
            dic,
            p_b: ppc.map(|p| p.p_b),
        }
    }
}

fn burn<T>(chain: &GibbsChain<T>) -> usize {
    chain.n_iter.saturating_sub(chain.draws.len())
}

/// One row per retained iteration: `iteration`, every β by label,
/// the random-effect variances and `sigma_eps_sq`.
pub fn write_chain_csv<T: Real, W: Write>(chain: &GibbsChain<T>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let names = chain.parameter_names();
    let mut header = vec!["iteration".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    let traces: Vec<Vec<f64>> = names.iter().map(|n| chain.trace(n).expect("known parameter")).collect();
    for k in 0..chain.len() {
        let mut row = vec![(burn(chain) + k + 1).to_string()];
        row.extend(traces.iter().map(|t| t[k].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format random effects: `iteration, subject, b` and `b_slope` when present.
pub fn write_random_effects_csv<T: Real, W: Write>(
    chain: &GibbsChain<T>,
    subject_ids: &[String],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let slope = chain.has_random_slope();
    let mut header = vec!["iteration", "subject", "b"];
    if slope {
        header.push("b_slope");
    }
    w.write_record(&header).map_err(csv_err)?;
    for (k, d) in chain.draws.iter().enumerate() {
        let it = (burn(chain) + k + 1).to_string();
        for (i, id) in subject_ids.iter().enumerate() {
            let mut row = vec![it.clone(), id.clone(), d.b[i].as_f64().to_string()];
            if let Some(s) = &d.b_slope {
                row.push(s[i].as_f64().to_string());
            }
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e.to_string()))
}
