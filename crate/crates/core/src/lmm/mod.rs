//! Frequentist linear mixed models: likelihood, fitting, residual
//! diagnostics, Satterthwaite tests, likelihood-ratio tests and the
//! exponentiated-effect interpreter.

mod diagnostics;
mod effects;
mod fit;
mod likelihood;
mod lrt;
mod report;
mod satterthwaite;

pub use diagnostics::{pearson_residuals, qq_points};
pub use effects::{effect_percent, percent, piecewise_slope_percent, EffectReport, Segment};
pub use fit::{fit_lmm, fit_lmm_with, Convergence, FitOptions, LmmFit, MAX_ITER, OBJECTIVE_TOL};
pub use likelihood::{profile_loglik, Criterion, VarianceComponents};
pub use lrt::{lrt, LrtMethod, LrtResult, NEGATIVE_STAT_TOL};
pub use report::{fit_report, CoefficientRow, FitReport, FIT_SCHEMA_VERSION};
pub use satterthwaite::{satterthwaite_test, SatterthwaiteResult, FD_STEP};
