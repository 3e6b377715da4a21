//! JSON-ready summary of a fit.
//!
//! Field names are stable; `schema_version` changes whenever they do.

use serde::{Deserialize, Serialize};

use super::fit::{Convergence, LmmFit};
use super::likelihood::{Criterion, VarianceComponents};
use super::satterthwaite::satterthwaite_test;
use crate::design::DesignMatrices;
use crate::error::Result;
use crate::numerics::normal_two_sided;
use crate::scalar::Real;

pub const FIT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub label: String,
    pub estimate: f64,
    pub se: f64,
    /// Satterthwaite df; absent when the normal approximation was used.
    pub df: Option<f64>,
    pub t: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub model: String,
    pub criterion: Criterion,
    pub n_obs: usize,
    pub n_subjects: usize,
    /// `satterthwaite` or `normal`.
    pub p_value_method: String,
    pub coefficients: Vec<CoefficientRow>,
    pub variance_components: VarianceComponents<f64>,
    pub loglik_ml: f64,
    pub loglik_reml: f64,
    pub aic: f64,
    pub convergence: Convergence,
}

/// Coefficient table with Satterthwaite p-values for REML fits and
/// normal-approximation p-values for ML fits.
pub fn fit_report<T: Real>(fit: &LmmFit<T>, dm: &DesignMatrices<T>) -> Result<FitReport> {
    let mut coefficients = Vec::with_capacity(fit.beta.len());
    let mut any_normal = fit.criterion == Criterion::Ml;
    for (j, label) in fit.fixed_labels.iter().enumerate() {
        let row = if fit.criterion == Criterion::Reml {
            let s = satterthwaite_test(fit, dm, j)?;
            any_normal |= s.normal_approximation;
            CoefficientRow {
                label: label.clone(),
                estimate: s.estimate,
                se: s.se,
                df: s.df,
                t: s.t,
                p_value: s.p_value,
            }
        } else {
            let (estimate, se) = (fit.beta[j].as_f64(), fit.se(j).as_f64());
            let t = estimate / se;
            CoefficientRow { label: label.clone(), estimate, se, df: None, t, p_value: normal_two_sided(t) }
        };
        coefficients.push(row);
    }
    let vc = VarianceComponents {
        tau1_sq: fit.vc.tau1_sq.as_f64(),
        tau2_sq: fit.vc.tau2_sq.map(|v| v.as_f64()),
        tau12: fit.vc.tau12.map(|v| v.as_f64()),
        sigma_eps_sq: fit.vc.sigma_eps_sq.as_f64(),
    };
    Ok(FitReport {
        schema_version: FIT_SCHEMA_VERSION,
        model: fit.spec.as_ref().map(|s| s.to_string()).unwrap_or_default(),
        criterion: fit.criterion,
        n_obs: fit.n_obs,
        n_subjects: fit.n_subjects,
        p_value_method: if any_normal { "normal" } else { "satterthwaite" }.into(),
        coefficients,
        variance_components: vc,
        loglik_ml: fit.loglik_ml.as_f64(),
        loglik_reml: fit.loglik_reml.as_f64(),
        aic: 2.0 * fit.n_parameters() as f64 - 2.0 * fit.loglik().as_f64(),
        convergence: fit.convergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{simulate_cohort, DesignParams, SimulationTruth};
    use crate::design::{build_design, ModelSpec};
    use crate::lmm::fit_lmm;

    #[test]
    fn report_round_trips_through_json() {
        let sim = simulate_cohort(&SimulationTruth::interaction(), &DesignParams::default(), 2).unwrap();
        let dm = build_design::<f64>(&sim.cohort, &ModelSpec::random_intercept()).unwrap();
        let fit = fit_lmm(&dm, Criterion::Reml).unwrap();
        let report = fit_report(&fit, &dm).unwrap();
        assert_eq!(report.coefficients.len(), 9);
        assert_eq!(report.p_value_method, "satterthwaite");
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"schema_version\":1"));
        let back: FitReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
