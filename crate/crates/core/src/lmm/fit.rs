//! ML/REML fitting of random-intercept and random-intercept+slope models.

use serde::{Deserialize, Serialize};

use super::likelihood::{
    blups, gls_solve, loglik_at, profiled_loglik, profiled_loglik_and_slope, profiled_sigma_sq, Criterion,
    VarianceComponents,
};
use crate::design::{DesignMatrices, ModelSpec};
use crate::error::{Error, Result};
use crate::numerics::optimize::{nelder_mead, Minimum};
use crate::numerics::{inverse_from_cholesky, Matrix};
use crate::scalar::Real;

/// Relative objective change at which the optimizers stop.
pub const OBJECTIVE_TOL: f64 = 1e-8;
/// Iteration cap per optimizer run.
pub const MAX_ITER: usize = 500;

/// Optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Relative objective change at which Nelder–Mead stops.
    pub tolerance: f64,
    /// Iteration cap per optimizer run.
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tolerance: OBJECTIVE_TOL, max_iter: MAX_ITER }
    }
}

const LOG_MIN: f64 = -30.0;
const LOG_MAX: f64 = 12.0;

/// Optimizer bookkeeping reported with every fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    /// Central-difference gradient norm of the objective at the solution,
    /// in the optimizer's coordinates.
    pub gradient_norm: f64,
    /// Random-effect variance estimated on the boundary (zero).
    pub at_boundary: bool,
}

/// A fitted linear mixed model.
#[derive(Debug, Clone, PartialEq)]
pub struct LmmFit<T> {
    pub spec: Option<ModelSpec>,
    pub criterion: Criterion,
    pub fixed_labels: Vec<String>,
    pub random_labels: Vec<String>,
    pub beta: Vec<T>,
    pub vc: VarianceComponents<T>,
    /// `(Xᵀ V̂⁻¹ X)⁻¹`
    pub cov_beta: Matrix<T>,
    pub loglik_ml: T,
    pub loglik_reml: T,
    /// Predicted random effects, one row per subject.
    pub blups: Matrix<T>,
    pub convergence: Convergence,
    pub n_obs: usize,
    pub n_subjects: usize,
}

impl<T: Real> LmmFit<T> {
    /// Log-likelihood under the criterion the fit maximized.
    pub fn loglik(&self) -> T {
        match self.criterion {
            Criterion::Ml => self.loglik_ml,
            Criterion::Reml => self.loglik_reml,
        }
    }

    pub fn converged(&self) -> bool {
        self.convergence.converged
    }

    pub fn se(&self, j: usize) -> T {
        self.cov_beta[(j, j)].sqrt()
    }

    pub fn coefficient(&self, label: &str) -> Option<(T, T)> {
        self.fixed_labels.iter().position(|l| l == label).map(|j| (self.beta[j], self.se(j)))
    }

    /// Fixed coefficients plus the free entries of `G` and σ².
    pub fn n_parameters(&self) -> usize {
        let q = self.random_labels.len();
        self.beta.len() + q * (q + 1) / 2 + 1
    }

    /// `Xβ̂ + Zb̂` for every row.
    pub fn fitted(&self, dm: &DesignMatrices<T>) -> Vec<T> {
        let subject = dm.subject_of_rows();
        (0..dm.n_obs())
            .map(|r| {
                let fixed = crate::numerics::dot(dm.x.row(r), &self.beta);
                fixed + crate::numerics::dot(dm.z.row(r), self.blups.row(subject[r]))
            })
            .collect()
    }
}

/// Relative covariance `Γ` from optimizer coordinates.
///
/// One term: `θ = [log λ]`. Two terms: log-Cholesky `θ = [log L₁₁, L₂₁, log L₂₂]`.
pub(crate) fn gamma_from_theta<T: Real>(theta: &[f64]) -> Matrix<T> {
    let e = |v: f64| v.clamp(LOG_MIN, LOG_MAX).exp();
    match theta.len() {
        1 => Matrix::diag(&[T::lit(e(theta[0]))]),
        3 => {
            let (l11, l21, l22) = (e(theta[0]), theta[1], e(theta[2]));
            let mut g = Matrix::zeros(2, 2);
            g[(0, 0)] = T::lit(l11 * l11);
            g[(0, 1)] = T::lit(l11 * l21);
            g[(1, 0)] = T::lit(l11 * l21);
            g[(1, 1)] = T::lit(l21 * l21 + l22 * l22);
            g
        }
        n => panic!("unsupported parameter count {n}"),
    }
}

fn objective<T: Real>(dm: &DesignMatrices<T>, gamma: &Matrix<T>, criterion: Criterion) -> f64 {
    match profiled_loglik(dm, gamma, criterion) {
        Ok(v) if v.is_finite() => -v.as_f64(),
        _ => f64::INFINITY,
    }
}

/// Objective and its derivative in `θ = log λ` where `λ = Γ_cc`.
fn objective_along<T: Real>(dm: &DesignMatrices<T>, theta: f64, col: usize, criterion: Criterion) -> (f64, f64) {
    let lam = theta.clamp(LOG_MIN, LOG_MAX).exp();
    let mut gamma = Matrix::zeros(dm.n_random(), dm.n_random());
    gamma[(col, col)] = T::lit(lam);
    match profiled_loglik_and_slope(dm, &gamma, col, criterion) {
        Ok((v, d)) if v.is_finite() && d.is_finite() => (-v.as_f64(), -lam * d.as_f64()),
        _ => (f64::INFINITY, f64::NAN),
    }
}

/// One-dimensional search over `θ = log λ`: coarse grid, then a safeguarded
/// root search on the analytic derivative inside the best bracket. `f`
/// returns the objective and its derivative in `θ`.
fn minimize_log_ratio<F: FnMut(f64) -> (f64, f64)>(mut f: F, max_iter: usize) -> Minimum {
    let (lo, hi, k) = (1e-8f64.ln(), 1e4f64.ln(), 48);
    let grid: Vec<f64> = (0..=k).map(|i| lo + (hi - lo) * i as f64 / k as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&t| f(t).0).collect();
    let best = (0..=k).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(k)]);
    let (_, mut ga) = f(a);
    let (_, mut gb) = f(b);
    if !(ga <= 0.0 && gb >= 0.0) {
        // optimum at an end of the search range
        return Minimum { x: vec![grid[best]], value: values[best], iterations: k + 1, converged: best != k };
    }
    let mut iterations = 0;
    let mut converged = false;
    let mut side = 0i8;
    while iterations < max_iter {
        iterations += 1;
        // Illinois-modified regula falsi, bisection when the secant leaves the bracket
        let mut x = (a * gb - b * ga) / (gb - ga);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let (_, gx) = f(x);
        if gx == 0.0 || (b - a) < 1e-13 * (1.0 + x.abs()) {
            a = x;
            b = x;
            converged = true;
            break;
        }
        if gx < 0.0 {
            a = x;
            ga = gx;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            gb = gx;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
        if (b - a) < 1e-13 * (1.0 + x.abs()) {
            converged = true;
            break;
        }
    }
    let x = 0.5 * (a + b);
    Minimum { x: vec![x], value: f(x).0, iterations, converged }
}

fn central_gradient_norm<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64]) -> f64 {
    let mut sq = 0.0;
    for k in 0..x.len() {
        let h = 1e-5 * x[k].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        let g = (f(&xp) - f(&xm)) / (2.0 * h);
        sq += g * g;
    }
    sq.sqrt()
}

/// Maximizes the chosen criterion over the variance components; β̂ is the
/// GLS estimate at the optimum.
pub fn fit_lmm<T: Real>(dm: &DesignMatrices<T>, criterion: Criterion) -> Result<LmmFit<T>> {
    fit_lmm_with(dm, criterion, &FitOptions::default())
}

/// [`fit_lmm`] with explicit optimizer settings.
pub fn fit_lmm_with<T: Real>(dm: &DesignMatrices<T>, criterion: Criterion, options: &FitOptions) -> Result<LmmFit<T>> {
    let q = dm.n_random();
    let (n, p) = (dm.n_obs(), dm.n_fixed());
    let n_var = q * (q + 1) / 2 + 1;
    if n <= p + n_var {
        return Err(Error::DegenerateInput(format!("{n} observations for {p} fixed and {n_var} variance parameters")));
    }

    let (gamma, convergence) = match q {
        1 => fit_one_term(dm, criterion, options)?,
        2 => fit_two_terms(dm, criterion, options)?,
        _ => return Err(Error::InvalidSpec(format!("{q} random terms; at most two are supported"))),
    };
    finish_fit(dm, criterion, &gamma, convergence)
}

fn fit_one_term<T: Real>(
    dm: &DesignMatrices<T>,
    criterion: Criterion,
    options: &FitOptions,
) -> Result<(Matrix<T>, Convergence)> {
    let m = minimize_log_ratio(|t| objective_along(dm, t, 0, criterion), options.max_iter);
    let at_zero = objective(dm, &Matrix::diag(&[T::zero()]), criterion);
    if !m.value.is_finite() && !at_zero.is_finite() {
        return Err(Error::ConvergenceFailure { iterations: m.iterations, message: "objective not finite".into() });
    }
    if at_zero <= m.value {
        let conv = Convergence { converged: true, iterations: m.iterations, gradient_norm: 0.0, at_boundary: true };
        return Ok((Matrix::diag(&[T::zero()]), conv));
    }
    let gradient_norm = objective_along(dm, m.x[0], 0, criterion).1.abs();
    let conv = Convergence { converged: m.converged, iterations: m.iterations, gradient_norm, at_boundary: false };
    Ok((gamma_from_theta(&m.x), conv))
}

fn fit_two_terms<T: Real>(
    dm: &DesignMatrices<T>,
    criterion: Criterion,
    options: &FitOptions,
) -> Result<(Matrix<T>, Convergence)> {
    // intercept-only profile (slope variance pinned at zero) seeds the search
    let seed = minimize_log_ratio(|t| objective_along(dm, t, 0, criterion), options.max_iter);
    let l11 = 0.5 * seed.x[0];
    let slope_rms = (dm.z.col_vec(1).iter().map(|v| v.as_f64().powi(2)).sum::<f64>() / dm.n_obs() as f64).sqrt();
    let f = |theta: &[f64]| objective(dm, &gamma_from_theta::<T>(theta), criterion);

    let starts = [vec![l11, 0.0, 1e-6f64.ln()], vec![l11, 0.0, (0.1 / slope_rms.max(1e-12)).ln()]];
    let mut best: Option<Minimum> = None;
    let mut iterations = seed.iterations;
    for s in &starts {
        let m = nelder_mead(f, s, 1.0, options.tolerance, options.max_iter);
        iterations += m.iterations;
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let restart_from = best.expect("at least one start").x;
    let m = nelder_mead(f, &restart_from, 0.25, options.tolerance, options.max_iter);
    iterations += m.iterations;
    if !m.value.is_finite() {
        return Err(Error::ConvergenceFailure { iterations, message: "objective not finite".into() });
    }
    let gradient_norm = central_gradient_norm(f, &m.x);
    let at_boundary = m.x[2] <= LOG_MIN + 1.0 || m.x[0] <= LOG_MIN + 1.0;
    let conv = Convergence { converged: m.converged, iterations, gradient_norm, at_boundary };
    Ok((gamma_from_theta(&m.x), conv))
}

fn finish_fit<T: Real>(
    dm: &DesignMatrices<T>,
    criterion: Criterion,
    gamma: &Matrix<T>,
    convergence: Convergence,
) -> Result<LmmFit<T>> {
    let (n, p) = (dm.n_obs(), dm.n_fixed());
    let sol = gls_solve(dm, gamma)?;
    let sigma_sq = profiled_sigma_sq(&sol, n, p, criterion);
    if !(sigma_sq > T::zero()) {
        return Err(Error::DegenerateInput("fitted residual variance is zero".into()));
    }
    let vc = VarianceComponents::from_g(&gamma.scale(sigma_sq), sigma_sq);
    let cov_beta = inverse_from_cholesky(&sol.xthx_chol).scale(sigma_sq);
    let blups = blups(dm, gamma, &sol.beta)?;
    Ok(LmmFit {
        spec: dm.spec.clone(),
        criterion,
        fixed_labels: dm.fixed_labels.clone(),
        random_labels: dm.random_labels.clone(),
        beta: sol.beta.clone(),
        vc,
        cov_beta,
        loglik_ml: loglik_at(&sol, n, p, sigma_sq, Criterion::Ml),
        loglik_reml: loglik_at(&sol, n, p, sigma_sq, Criterion::Reml),
        blups,
        convergence,
        n_obs: n,
        n_subjects: dm.n_subjects(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::data::{simulate_cohort, DesignParams, SimulationTruth};
    use crate::design::build_design;
    use crate::lmm::profile_loglik;
    use crate::numerics::RngState;

    /// Balanced one-way layout: `m` groups of `k` replicates, intercept only.
    pub(crate) fn one_way(m: usize, k: usize, tau: f64, sigma: f64, seed: u64) -> DesignMatrices<f64> {
        let mut rng = RngState::new(seed);
        let mut y = Vec::with_capacity(m * k);
        for _ in 0..m {
            let b = tau * rng.standard_normal();
            for _ in 0..k {
                y.push(2.0 + b + sigma * rng.standard_normal());
            }
        }
        let n = m * k;
        DesignMatrices::from_parts(
            y,
            Matrix::new(n, 1, vec![1.0; n]).unwrap(),
            Matrix::new(n, 1, vec![1.0; n]).unwrap(),
            &vec![k; m],
            vec!["Intercept".into()],
            vec!["Intercept".into()],
        )
        .unwrap()
    }

    /// Mean squares of a balanced one-way layout.
    pub(crate) fn anova(dm: &DesignMatrices<f64>, k: usize) -> (f64, f64) {
        let m = dm.n_subjects();
        let grand = dm.y.iter().sum::<f64>() / dm.n_obs() as f64;
        let means: Vec<f64> = dm.groups.iter().map(|g| dm.y[g.clone()].iter().sum::<f64>() / k as f64).collect();
        let ssa: f64 = means.iter().map(|mu| k as f64 * (mu - grand).powi(2)).sum();
        let sse: f64 = dm
            .groups
            .iter()
            .zip(&means)
            .map(|(g, mu)| dm.y[g.clone()].iter().map(|y| (y - mu).powi(2)).sum::<f64>())
            .sum();
        (ssa / (m - 1) as f64, sse / (m * (k - 1)) as f64)
    }

    #[test]
    fn reml_matches_anova_estimators() {
        let dm = one_way(20, 5, 0.8, 0.5, 1);
        let (msa, mse) = anova(&dm, 5);
        let fit = fit_lmm(&dm, Criterion::Reml).unwrap();
        assert!(fit.converged());
        let tau_anova = (msa - mse) / 5.0;
        assert!((fit.vc.sigma_eps_sq - mse).abs() / mse < 1e-6, "{} vs {mse}", fit.vc.sigma_eps_sq);
        assert!((fit.vc.tau1_sq - tau_anova).abs() / tau_anova < 1e-6, "{} vs {tau_anova}", fit.vc.tau1_sq);
    }

    #[test]
    fn negative_anova_estimate_gives_boundary_fit() {
        // no between-group variance at all: identical group means
        let mut dm = one_way(10, 4, 0.0, 1.0, 3);
        for g in dm.groups.clone() {
            let mean = dm.y[g.clone()].iter().sum::<f64>() / 4.0;
            dm.y[g].iter_mut().for_each(|v| *v += 2.0 - mean);
        }
        let fit = fit_lmm(&dm, Criterion::Reml).unwrap();
        assert!(fit.convergence.at_boundary);
        assert_eq!(fit.vc.tau1_sq, 0.0);
    }

    #[test]
    fn noise_free_fit_recovers_truth() {
        let truth = SimulationTruth::interaction();
        let exact = SimulationTruth { tau1_sq: 0.0, sigma_eps_sq: 0.0, ..truth.clone() };
        let sim = simulate_cohort(&exact, &DesignParams::default(), 5).unwrap();
        let mut dm: DesignMatrices<f64> =
            build_design(&sim.cohort, &crate::design::ModelSpec::random_intercept()).unwrap();
        let mut rng = RngState::new(6);
        dm.y.iter_mut().for_each(|v| *v += 1e-8 * rng.standard_normal());
        let fit = fit_lmm(&dm, Criterion::Reml).unwrap();
        for (b, t) in fit.beta.iter().zip(&truth.beta) {
            assert!((b - t).abs() < 1e-4, "{b} vs {t}");
        }
    }

    #[test]
    fn ml_optimum_not_beaten_by_random_restarts() {
        let sim = simulate_cohort(&SimulationTruth::interaction(), &DesignParams::default(), 8).unwrap();
        let dm: DesignMatrices<f64> = build_design(&sim.cohort, &crate::design::ModelSpec::random_intercept()).unwrap();
        for criterion in [Criterion::Ml, Criterion::Reml] {
            let fit = fit_lmm(&dm, criterion).unwrap();
            let best = fit.loglik();
            let mut rng = RngState::new(10);
            for _ in 0..100 {
                let vc = VarianceComponents::random_intercept(
                    fit.vc.tau1_sq * (2.0 * rng.standard_normal()).exp(),
                    fit.vc.sigma_eps_sq * (0.5 * rng.standard_normal()).exp(),
                );
                let ll = profile_loglik(&dm, &vc, criterion).unwrap();
                assert!(ll <= best + 1e-4, "{criterion:?}: {ll} > {best}");
            }
        }
    }

    #[test]
    fn random_slope_fit_runs_and_dominates_intercept_fit() {
        let sim = simulate_cohort(&SimulationTruth::interaction(), &DesignParams::default(), 12).unwrap();
        let ri: DesignMatrices<f64> = build_design(&sim.cohort, &crate::design::ModelSpec::random_intercept()).unwrap();
        let rs: DesignMatrices<f64> = build_design(&sim.cohort, &crate::design::ModelSpec::random_slope()).unwrap();
        let a = fit_lmm(&ri, Criterion::Reml).unwrap();
        let b = fit_lmm(&rs, Criterion::Reml).unwrap();
        assert!(b.converged());
        assert!(b.loglik_reml >= a.loglik_reml - 1e-7);
        assert!(b.vc.tau2_sq.unwrap() >= 0.0);
        assert_eq!(b.blups.cols(), 2);
    }

    #[test]
    fn permutation_invariance_of_variance_components() {
        let sim = simulate_cohort(&SimulationTruth::interaction(), &DesignParams::default(), 21).unwrap();
        let spec = crate::design::ModelSpec::random_intercept();
        let dm: DesignMatrices<f64> = build_design(&sim.cohort, &spec).unwrap();
        let mut order: Vec<usize> = (0..sim.cohort.n_subjects()).rev().collect();
        order.swap(3, 40);
        let perm: DesignMatrices<f64> = build_design(&sim.cohort.permuted(&order).unwrap(), &spec).unwrap();
        let a = fit_lmm(&dm, Criterion::Reml).unwrap();
        let b = fit_lmm(&perm, Criterion::Reml).unwrap();
        assert!((a.vc.tau1_sq - b.vc.tau1_sq).abs() < 1e-10, "{} {}", a.vc.tau1_sq, b.vc.tau1_sq);
        assert!((a.vc.sigma_eps_sq - b.vc.sigma_eps_sq).abs() < 1e-10);
    }
}
