//! Hierarchical Bayesian random-intercept model with conditionally
//! conjugate priors, fitted by Gibbs sampling, with DIC, posterior
//! predictive checks and chain diagnostics.

mod conditionals;
mod diagnostics;
mod dic;
mod export;
mod ppc;
mod priors;
mod sampler;
mod state;

pub use conditionals::{
    b_conditional, beta_conditional, cond_draw_b, cond_draw_beta, cond_draw_sigma_eps_sq, cond_draw_tau1_sq,
    cond_draw_tau2_sq, residual_ss, sigma_eps_sq_conditional, tau1_sq_conditional, tau2_sq_conditional, InvChi2,
    NormalConditional,
};
pub use diagnostics::{chain_diagnostics, diagnose_trace, ParameterDiagnostics, ACF_MAX_LAG};
pub use dic::{deviance, dic, DicResult};
pub use export::{write_chain_csv, write_random_effects_csv, BayesSummary, BAYES_SCHEMA_VERSION};
pub use ppc::{posterior_predictive_pvalue, PpcResult, MIN_PPC_DRAWS};
pub use priors::{PriorHyperparams, DEFAULT_COEF_VARIANCE, DEFAULT_DOF, DEFAULT_SCALE};
pub use sampler::{retained_count, run_gibbs, GibbsChain, ParameterSummary, DEFAULT_BURN_FRACTION, MIN_ITERATIONS};
pub use state::GibbsState;
