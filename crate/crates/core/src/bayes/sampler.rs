use serde::{Deserialize, Serialize};

use super::conditionals::{
    beta_conditional_with, cond_draw_b, cond_draw_sigma_eps_sq, cond_draw_tau1_sq, cond_draw_tau2_sq,
};
use super::priors::PriorHyperparams;
use super::state::GibbsState;
use crate::design::DesignMatrices;
use crate::error::{Error, Result};
use crate::numerics::{effective_sample_size, quantile_sorted, RngState, Series};
use crate::scalar::Real;

pub const DEFAULT_BURN_FRACTION: f64 = 0.2;
pub const MIN_ITERATIONS: usize = 100;

/// Posterior mean, sd and equal-tailed 95% interval of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub lower_95: f64,
    pub upper_95: f64,
    /// Absent for a constant trace.
    pub ess: Option<f64>,
}

impl ParameterSummary {
    pub fn from_trace(name: &str, trace: &[f64]) -> Result<Self> {
        let s = Series::new(trace.to_vec())?;
        let mut sorted = trace.to_vec();
        sorted.sort_by(f64::total_cmp);
        let sd = if trace.len() > 1 { s.sd() } else { 0.0 };
        Ok(Self {
            name: name.to_string(),
            mean: s.mean(),
            sd,
            lower_95: quantile_sorted(&sorted, 0.025),
            upper_95: quantile_sorted(&sorted, 0.975),
            ess: effective_sample_size(&s).ok(),
        })
    }
}

/// Retained post-burn-in draws with their summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsChain<T> {
    pub draws: Vec<GibbsState<T>>,
    pub n_iter: usize,
    pub burn_fraction: f64,
    pub seed: u64,
    pub fixed_labels: Vec<String>,
    pub summaries: Vec<ParameterSummary>,
}

impl<T: Real> GibbsChain<T> {
    /// Wraps existing draws, e.g. from an external sampler or a test.
    pub fn from_draws(
        draws: Vec<GibbsState<T>>,
        fixed_labels: Vec<String>,
        n_iter: usize,
        burn_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::DegenerateInput("empty chain".into()));
        }
        if draws.iter().any(|d| d.beta.len() != fixed_labels.len()) {
            return Err(Error::DimensionMismatch("draw and label counts differ".into()));
        }
        let mut chain = Self { draws, n_iter, burn_fraction, seed, fixed_labels, summaries: Vec::new() };
        chain.summaries = chain
            .parameter_names()
            .iter()
            .map(|n| ParameterSummary::from_trace(n, &chain.trace(n).expect("known parameter")))
            .collect::<Result<_>>()?;
        Ok(chain)
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn has_random_slope(&self) -> bool {
        self.draws[0].tau2_sq.is_some()
    }

    /// Fixed-effect labels followed by the variance parameters.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = self.fixed_labels.clone();
        names.push("tau1_sq".into());
        if self.has_random_slope() {
            names.push("tau2_sq".into());
        }
        names.push("sigma_eps_sq".into());
        names
    }

    /// Draws of one named parameter, in iteration order.
    pub fn trace(&self, name: &str) -> Option<Vec<f64>> {
        let column = match name {
            "tau1_sq" | "tau2_sq" | "sigma_eps_sq" => None,
            label => Some(self.fixed_labels.iter().position(|l| l == label)?),
        };
        let pick = |d: &GibbsState<T>| match (column, name) {
            (Some(j), _) => Some(d.beta[j]),
            (None, "tau1_sq") => Some(d.tau1_sq),
            (None, "tau2_sq") => d.tau2_sq,
            _ => Some(d.sigma_eps_sq),
        };
        self.draws.iter().map(|d| pick(d).map(|v| v.as_f64())).collect()
    }

    pub fn summary(&self, name: &str) -> Option<&ParameterSummary> {
        self.summaries.iter().find(|s| s.name == name)
    }

    /// Posterior mean of every state component.
    pub fn posterior_mean(&self) -> GibbsState<T> {
        let n = T::from_count(self.draws.len());
        let avg = |f: &dyn Fn(&GibbsState<T>) -> T| self.draws.iter().map(f).sum::<T>() / n;
        let avg_vec = |len: usize, f: &dyn Fn(&GibbsState<T>, usize) -> T| -> Vec<T> {
            (0..len).map(|k| avg(&|d| f(d, k))).collect()
        };
        let first = &self.draws[0];
        GibbsState {
            beta: avg_vec(first.beta.len(), &|d, k| d.beta[k]),
            b: avg_vec(first.b.len(), &|d, k| d.b[k]),
            tau1_sq: avg(&|d| d.tau1_sq),
            sigma_eps_sq: avg(&|d| d.sigma_eps_sq),
            b_slope: first.b_slope.as_ref().map(|s| avg_vec(s.len(), &|d, k| d.b_slope.as_ref().expect("slope")[k])),
            tau2_sq: first.tau2_sq.map(|_| avg(&|d| d.tau2_sq.expect("slope"))),
        }
    }
}

/// Number of draws kept after discarding the burn-in.
pub fn retained_count(n_iter: usize, burn_fraction: f64) -> usize {
    (n_iter as f64 * (1.0 - burn_fraction)).floor() as usize
}

/// Gibbs sampler sweeping `b → β → τ₁² (→ τ₂²) → σ_ε²`. Starts from
/// [`GibbsState::initial`] unless `init` is given.
pub fn run_gibbs<T: Real>(
    dm: &DesignMatrices<T>,
    priors: &PriorHyperparams,
    n_iter: usize,
    burn_fraction: f64,
    seed: u64,
    init: Option<GibbsState<T>>,
) -> Result<GibbsChain<T>> {
    if n_iter < MIN_ITERATIONS {
        return Err(Error::Domain(format!("{n_iter} iterations; at least {MIN_ITERATIONS} are required")));
    }
    if !(0.0..1.0).contains(&burn_fraction) {
        return Err(Error::Domain(format!("burn-in fraction {burn_fraction} outside [0, 1)")));
    }
    if dm.n_random() > 2 {
        return Err(Error::InvalidSpec("the sampler supports at most two random terms".into()));
    }
    priors.validate(dm.n_fixed())?;
    let mut state = match init {
        Some(s) => s,
        None => GibbsState::initial(dm)?,
    };
    state.validate(dm)?;

    let keep = retained_count(n_iter, burn_fraction);
    let burn = n_iter - keep;
    let xtx = dm.x.gram();
    let mut rng = RngState::new(seed);
    let mut draws = Vec::with_capacity(keep);
    for it in 0..n_iter {
        let step = |state: &mut GibbsState<T>, rng: &mut RngState| -> Result<()> {
            cond_draw_b(state, dm, priors, rng)?;
            state.beta = beta_conditional_with(&xtx, state, dm, priors)?.draw(rng);
            cond_draw_tau1_sq(state, priors, rng)?;
            cond_draw_tau2_sq(state, priors, rng)?;
            cond_draw_sigma_eps_sq(state, dm, priors, rng)
        };
        step(&mut state, &mut rng).map_err(|e| Error::Sampler { iteration: it, source: Box::new(e) })?;
        if it >= burn {
            draws.push(state.clone());
        }
    }
    GibbsChain::from_draws(draws, dm.fixed_labels.clone(), n_iter, burn_fraction, seed)
}
