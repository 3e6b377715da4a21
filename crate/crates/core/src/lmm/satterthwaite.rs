//! Satterthwaite denominator degrees of freedom for single fixed effects.

use serde::{Deserialize, Serialize};

use super::fit::LmmFit;
use super::likelihood::{gls_solve, loglik_at, Criterion};
use crate::design::DesignMatrices;
use crate::error::{Error, Result};
use crate::numerics::{cholesky, cholesky_solve_vec, inverse_spd, normal_two_sided, student_t_two_sided, Matrix};
use crate::scalar::Real;

/// Relative finite-difference step on the variance parameters.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatterthwaiteResult {
    pub estimate: f64,
    pub se: f64,
    /// `None` when the normal approximation was used instead.
    pub df: Option<f64>,
    pub t: f64,
    pub p_value: f64,
    /// Set when the variance-parameter Hessian was singular or a variance
    /// sits on the boundary, so the p-value is from the normal distribution.
    pub normal_approximation: bool,
}

/// Absolute variance parameters: `(log τ², log σ²)` for one random term,
/// `(log L₁₁, L₂₁, log L₂₂, log σ²)` with `G = LLᵀ` for two.
fn theta_of(fit: &LmmFit<f64>) -> Option<Vec<f64>> {
    let s = fit.vc.sigma_eps_sq.ln();
    if fit.random_labels.len() == 1 {
        (fit.vc.tau1_sq > 0.0).then(|| vec![fit.vc.tau1_sq.ln(), s])
    } else {
        let l = cholesky(&fit.vc.g_matrix()).ok()?;
        Some(vec![l[(0, 0)].ln(), l[(1, 0)], l[(1, 1)].ln(), s])
    }
}

/// Relative covariance `Γ = G/σ²` and `σ²` from absolute parameters.
fn unpack(theta: &[f64]) -> (Matrix<f64>, f64) {
    let s2 = theta[theta.len() - 1].exp();
    let g = if theta.len() == 2 {
        Matrix::diag(&[theta[0].exp() / s2])
    } else {
        let (l11, l21, l22) = (theta[0].exp(), theta[1], theta[2].exp());
        let mut g = Matrix::diag(&[l11 * l11 / s2, (l21 * l21 + l22 * l22) / s2]);
        g[(0, 1)] = l11 * l21 / s2;
        g[(1, 0)] = l11 * l21 / s2;
        g
    };
    (g, s2)
}

fn reml(dm: &DesignMatrices<f64>, theta: &[f64]) -> Result<f64> {
    let (gamma, s2) = unpack(theta);
    let sol = gls_solve(dm, &gamma)?;
    Ok(loglik_at(&sol, dm.n_obs(), dm.n_fixed(), s2, Criterion::Reml))
}

/// `Var(β̂_j)` at the given variance parameters.
fn coefficient_variance(dm: &DesignMatrices<f64>, theta: &[f64], j: usize) -> Result<f64> {
    let (gamma, s2) = unpack(theta);
    let sol = gls_solve(dm, &gamma)?;
    let mut e = vec![0.0; dm.n_fixed()];
    e[j] = 1.0;
    Ok(s2 * cholesky_solve_vec(&sol.xthx_chol, &e)[j])
}

fn steps(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| FD_STEP * t.abs().max(1.0)).collect()
}

fn shifted(theta: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut t = theta.to_vec();
    for &(k, d) in moves {
        t[k] += d;
    }
    t
}

fn reml_hessian(dm: &DesignMatrices<f64>, theta: &[f64]) -> Result<Matrix<f64>> {
    let k = theta.len();
    let h = steps(theta);
    let f0 = reml(dm, theta)?;
    let mut hess = Matrix::zeros(k, k);
    for a in 0..k {
        let fp = reml(dm, &shifted(theta, &[(a, h[a])]))?;
        let fm = reml(dm, &shifted(theta, &[(a, -h[a])]))?;
        hess[(a, a)] = (fp - 2.0 * f0 + fm) / (h[a] * h[a]);
        for b in 0..a {
            let fpp = reml(dm, &shifted(theta, &[(a, h[a]), (b, h[b])]))?;
            let fpm = reml(dm, &shifted(theta, &[(a, h[a]), (b, -h[b])]))?;
            let fmp = reml(dm, &shifted(theta, &[(a, -h[a]), (b, h[b])]))?;
            let fmm = reml(dm, &shifted(theta, &[(a, -h[a]), (b, -h[b])]))?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[a] * h[b]);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    Ok(hess)
}

/// t-test of coefficient `j` with Satterthwaite degrees of freedom
/// `2(cᵀV_βc)² / (gᵀAg)`, `A` the inverse negative REML Hessian.
pub fn satterthwaite_test<T: Real>(fit: &LmmFit<T>, dm: &DesignMatrices<T>, j: usize) -> Result<SatterthwaiteResult> {
    if fit.criterion != Criterion::Reml {
        return Err(Error::InvalidSpec("Satterthwaite tests need a REML fit".into()));
    }
    if j >= fit.beta.len() || dm.n_fixed() != fit.beta.len() || dm.n_obs() != fit.n_obs {
        return Err(Error::DimensionMismatch(format!("coefficient {j} out of range")));
    }
    let fit = LmmFit::<f64> {
        spec: fit.spec.clone(),
        criterion: fit.criterion,
        fixed_labels: fit.fixed_labels.clone(),
        random_labels: fit.random_labels.clone(),
        beta: fit.beta.iter().map(|v| v.as_f64()).collect(),
        vc: super::VarianceComponents {
            tau1_sq: fit.vc.tau1_sq.as_f64(),
            tau2_sq: fit.vc.tau2_sq.map(|v| v.as_f64()),
            tau12: fit.vc.tau12.map(|v| v.as_f64()),
            sigma_eps_sq: fit.vc.sigma_eps_sq.as_f64(),
        },
        cov_beta: fit.cov_beta.cast(),
        loglik_ml: fit.loglik_ml.as_f64(),
        loglik_reml: fit.loglik_reml.as_f64(),
        blups: fit.blups.cast(),
        convergence: fit.convergence,
        n_obs: fit.n_obs,
        n_subjects: fit.n_subjects,
    };
    let dm = dm.cast::<f64>();
    let estimate = fit.beta[j];
    let var = fit.cov_beta[(j, j)];
    let se = var.sqrt();
    let t = estimate / se;
    let fallback =
        || SatterthwaiteResult { estimate, se, df: None, t, p_value: normal_two_sided(t), normal_approximation: true };

    let Some(theta) = theta_of(&fit) else { return Ok(fallback()) };
    let neg_hess = reml_hessian(&dm, &theta)?.scale(-1.0);
    let Ok(a) = inverse_spd(&neg_hess) else { return Ok(fallback()) };
    let h = steps(&theta);
    let mut g = vec![0.0; theta.len()];
    for k in 0..theta.len() {
        let vp = coefficient_variance(&dm, &shifted(&theta, &[(k, h[k])]), j)?;
        let vm = coefficient_variance(&dm, &shifted(&theta, &[(k, -h[k])]), j)?;
        g[k] = (vp - vm) / (2.0 * h[k]);
    }
    let gag = crate::numerics::dot(&g, &a.matvec(&g));
    if !(gag > 0.0) || !gag.is_finite() {
        return Ok(fallback());
    }
    let df = 2.0 * var * var / gag;
    Ok(SatterthwaiteResult {
        estimate,
        se,
        df: Some(df),
        t,
        p_value: student_t_two_sided(t, df)?,
        normal_approximation: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{simulate_cohort, DesignParams, SimulationTruth};
    use crate::design::{build_design, ModelSpec};
    use crate::lmm::fit::tests::one_way;
    use crate::lmm::fit_lmm;

    #[test]
    fn one_way_intercept_df_is_between_groups_df() {
        for (m, seed) in [(20, 1), (12, 2), (40, 3)] {
            let dm = one_way(m, 5, 1.0, 0.7, seed);
            let fit = fit_lmm(&dm, Criterion::Reml).unwrap();
            let r = satterthwaite_test(&fit, &dm, 0).unwrap();
            let df = r.df.unwrap();
            let target = (m - 1) as f64;
            assert!((df - target).abs() < 0.05 * target, "m={m}: {df}");
        }
    }

    #[test]
    fn large_df_matches_normal_approximation() {
        let design = DesignParams { n_subjects: 200, visits_min: 5, visits_max: 5 };
        let sim = simulate_cohort(&SimulationTruth::interaction(), &design, 9).unwrap();
        let dm = build_design::<f64>(&sim.cohort, &ModelSpec::random_intercept()).unwrap();
        let fit = fit_lmm(&dm, Criterion::Reml).unwrap();
        let j = dm.column_index("GA").unwrap();
        let r = satterthwaite_test(&fit, &dm, j).unwrap();
        assert!(r.df.unwrap() >= 200.0, "{:?}", r.df);
        assert!((r.p_value - normal_two_sided(r.t)).abs() < 1e-3);
        // same comparison at a moderate t where the tails differ visibly
        let t = 1.96;
        let gap = (student_t_two_sided(t, r.df.unwrap()).unwrap() - normal_two_sided(t)).abs();
        assert!(gap < 1e-3, "df {:?}: {gap}", r.df);
    }

    #[test]
    fn ga_is_significant_on_default_simulation() {
        let sim = simulate_cohort(&SimulationTruth::interaction(), &DesignParams::default(), 21).unwrap();
        let dm = build_design::<f64>(&sim.cohort, &ModelSpec::random_intercept()).unwrap();
        let fit = fit_lmm(&dm, Criterion::Reml).unwrap();
        let r = satterthwaite_test(&fit, &dm, dm.column_index("GA").unwrap()).unwrap();
        assert!(!r.normal_approximation);
        assert!(r.p_value < 0.001, "{r:?}");
    }

    #[test]
    fn boundary_fit_falls_back_to_normal() {
        let dm = one_way(10, 4, 0.0, 1.0, 8);
        let fit = fit_lmm(&dm, Criterion::Reml).unwrap();
        let r = satterthwaite_test(&fit, &dm, 0).unwrap();
        if fit.vc.tau1_sq == 0.0 {
            assert!(r.normal_approximation && r.df.is_none());
        }
        assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn needs_reml() {
        let dm = one_way(10, 4, 1.0, 1.0, 8);
        let fit = fit_lmm(&dm, Criterion::Ml).unwrap();
        assert!(satterthwaite_test(&fit, &dm, 0).is_err());
    }
}
