//! Exact Gaussian marginal likelihood with β profiled out by GLS.
//!
//! Work is done per subject with `H_i = I + Z_i Γ Z_iᵀ`, where `Γ = G / σ²`
//! is the random-effect covariance relative to the residual variance, so
//! `V_i = σ² H_i`.

use serde::{Deserialize, Serialize};

use crate::design::DesignMatrices;
use crate::error::{Error, Result};
use crate::numerics::{
    back_substitute_transpose, cholesky_log_det, cholesky_solve_vec, cholesky_unchecked, dot, forward_substitute,
    Matrix,
};
use crate::scalar::Real;

/// Variance-component estimation criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Ml,
    Reml,
}

impl std::str::FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ml" => Ok(Criterion::Ml),
            "reml" => Ok(Criterion::Reml),
            other => Err(Error::InvalidSpec(format!("unknown criterion `{other}`"))),
        }
    }
}

/// Random-effect covariance `G` plus residual variance.
///
/// `tau1_sq` is the variance of the first random term, `tau2_sq`/`tau12` the
/// second term's variance and the covariance when two terms are present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents<T> {
    pub tau1_sq: T,
    pub tau2_sq: Option<T>,
    pub tau12: Option<T>,
    pub sigma_eps_sq: T,
}

impl<T: Real> VarianceComponents<T> {
    pub fn random_intercept(tau1_sq: T, sigma_eps_sq: T) -> Self {
        Self { tau1_sq, tau2_sq: None, tau12: None, sigma_eps_sq }
    }

    pub fn two_terms(tau1_sq: T, tau12: T, tau2_sq: T, sigma_eps_sq: T) -> Self {
        Self { tau1_sq, tau2_sq: Some(tau2_sq), tau12: Some(tau12), sigma_eps_sq }
    }

    pub fn n_terms(&self) -> usize {
        if self.tau2_sq.is_some() {
            2
        } else {
            1
        }
    }

    /// `G` as a `q × q` matrix.
    pub fn g_matrix(&self) -> Matrix<T> {
        match self.tau2_sq {
            None => Matrix::diag(&[self.tau1_sq]),
            Some(t2) => {
                let c = self.tau12.unwrap_or(T::zero());
                let mut g = Matrix::diag(&[self.tau1_sq, t2]);
                g[(0, 1)] = c;
                g[(1, 0)] = c;
                g
            }
        }
    }

    pub fn from_g(g: &Matrix<T>, sigma_eps_sq: T) -> Self {
        if g.rows() == 1 {
            Self::random_intercept(g[(0, 0)], sigma_eps_sq)
        } else {
            Self::two_terms(g[(0, 0)], g[(0, 1)], g[(1, 1)], sigma_eps_sq)
        }
    }

    /// Variances non-negative and `G` positive semidefinite.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Domain(format!("invalid variance components: {m}")));
        if !(self.sigma_eps_sq > T::zero()) || !self.sigma_eps_sq.is_finite() {
            return bad("sigma_eps_sq must be positive");
        }
        if !(self.tau1_sq >= T::zero()) || !self.tau1_sq.is_finite() {
            return bad("tau1_sq must be non-negative");
        }
        if let Some(t2) = self.tau2_sq {
            let c = self.tau12.unwrap_or(T::zero());
            if !(t2 >= T::zero()) || !t2.is_finite() || !c.is_finite() {
                return bad("tau2_sq must be non-negative");
            }
            let slack = T::lit(1e-12) * (self.tau1_sq * t2).max(T::min_positive_value());
            if self.tau1_sq * t2 - c * c < -slack {
                return bad("random-effect covariance is not positive semidefinite");
            }
        }
        Ok(())
    }
}

/// GLS cross-products accumulated over subjects.
#[derive(Debug, Clone)]
pub(crate) struct GlsPieces<T> {
    /// `Xᵀ H⁻¹ X`
    pub xthx: Matrix<T>,
    /// `Xᵀ H⁻¹ y`
    pub xthy: Vec<T>,
    /// `yᵀ H⁻¹ y`
    pub ythy: T,
    /// `Σ log|H_i|`
    pub logdet_h: T,
}

/// Per-subject `H_i = I + Z_i Γ Z_iᵀ`.
pub(crate) fn subject_h<T: Real>(z: &Matrix<T>, rows: std::ops::Range<usize>, gamma: &Matrix<T>) -> Matrix<T> {
    let n = rows.len();
    let q = z.cols();
    let mut h = Matrix::identity(n);
    for (a, ra) in rows.clone().enumerate() {
        let za = z.row(ra);
        for (b, rb) in rows.clone().enumerate().take(a + 1) {
            let zb = z.row(rb);
            let mut s = T::zero();
            for k in 0..q {
                for l in 0..q {
                    s += za[k] * gamma[(k, l)] * zb[l];
                }
            }
            h[(a, b)] += s;
            if a != b {
                h[(b, a)] += s;
            }
        }
    }
    h
}

pub(crate) fn gls_pieces<T: Real>(dm: &DesignMatrices<T>, gamma: &Matrix<T>) -> Result<GlsPieces<T>> {
    let p = dm.n_fixed();
    let mut xthx = Matrix::zeros(p, p);
    let mut xthy = vec![T::zero(); p];
    let mut ythy = T::zero();
    let mut logdet_h = T::zero();
    for g in &dm.groups {
        let h = subject_h(&dm.z, g.clone(), gamma);
        let l = cholesky_unchecked(&h)?;
        logdet_h += cholesky_log_det(&l);
        // whitened y and X columns: L⁻¹ y_i, L⁻¹ X_i
        let mut wy: Vec<T> = dm.y[g.clone()].to_vec();
        forward_substitute(&l, &mut wy);
        let n = g.len();
        let mut wx = Matrix::zeros(p, n);
        for c in 0..p {
            let col = wx.row_mut(c);
            for (k, r) in g.clone().enumerate() {
                col[k] = dm.x[(r, c)];
            }
            forward_substitute(&l, col);
        }
        ythy += dot(&wy, &wy);
        for a in 0..p {
            xthy[a] += dot(wx.row(a), &wy);
            for b in a..p {
                let v = dot(wx.row(a), wx.row(b));
                xthx[(a, b)] += v;
            }
        }
    }
    xthx.fill_lower_from_upper();
    Ok(GlsPieces { xthx, xthy, ythy, logdet_h })
}

/// GLS solution at a fixed `Γ`.
#[derive(Debug, Clone)]
pub(crate) struct GlsSolution<T> {
    pub beta: Vec<T>,
    /// Cholesky factor of `Xᵀ H⁻¹ X`.
    pub xthx_chol: Matrix<T>,
    /// `(y − Xβ̂)ᵀ H⁻¹ (y − Xβ̂)`
    pub rss: T,
    pub logdet_h: T,
    pub logdet_xthx: T,
}

pub(crate) fn gls_solve<T: Real>(dm: &DesignMatrices<T>, gamma: &Matrix<T>) -> Result<GlsSolution<T>> {
    let pieces = gls_pieces(dm, gamma)?;
    let chol = cholesky_unchecked(&pieces.xthx)?;
    let beta = cholesky_solve_vec(&chol, &pieces.xthy);
    let rss = (pieces.ythy - dot(&beta, &pieces.xthy)).max(T::zero());
    let logdet_xthx = cholesky_log_det(&chol);
    Ok(GlsSolution { beta, xthx_chol: chol, rss, logdet_h: pieces.logdet_h, logdet_xthx })
}

fn ln_2pi<T: Real>() -> T {
    T::lit((2.0 * std::f64::consts::PI).ln())
}

/// Log-likelihood at residual variance `sigma_sq` given a GLS solution.
pub(crate) fn loglik_at<T: Real>(sol: &GlsSolution<T>, n: usize, p: usize, sigma_sq: T, criterion: Criterion) -> T {
    let half = T::lit(0.5);
    let ls = sigma_sq.ln();
    match criterion {
        Criterion::Ml => {
            let nf = T::from_count(n);
            -half * (nf * ln_2pi::<T>() + nf * ls + sol.logdet_h + sol.rss / sigma_sq)
        }
        Criterion::Reml => {
            let df = T::from_count(n - p);
            // log|XᵀV⁻¹X| = log|XᵀH⁻¹X| − p·log σ²
            -half * (df * ln_2pi::<T>() + df * ls + sol.logdet_h + sol.logdet_xthx + sol.rss / sigma_sq)
        }
    }
}

/// Residual variance maximizing the criterion at fixed `Γ`.
pub(crate) fn profiled_sigma_sq<T: Real>(sol: &GlsSolution<T>, n: usize, p: usize, criterion: Criterion) -> T {
    let denom = match criterion {
        Criterion::Ml => n,
        Criterion::Reml => n - p,
    };
    sol.rss / T::from_count(denom)
}

/// Criterion value with both β and σ² profiled out, as a function of `Γ`.
pub(crate) fn profiled_loglik<T: Real>(dm: &DesignMatrices<T>, gamma: &Matrix<T>, criterion: Criterion) -> Result<T> {
    let sol = gls_solve(dm, gamma)?;
    let (n, p) = (dm.n_obs(), dm.n_fixed());
    let s2 = profiled_sigma_sq(&sol, n, p, criterion);
    if !(s2 > T::zero()) {
        return Err(Error::DegenerateInput("zero residual variance".into()));
    }
    Ok(loglik_at(&sol, n, p, s2, criterion))
}

/// Marginal (ML) or restricted (REML) log-likelihood at the given variance
/// components, with β at its GLS estimate.
pub fn profile_loglik<T: Real>(dm: &DesignMatrices<T>, vc: &VarianceComponents<T>, criterion: Criterion) -> Result<T> {
    vc.validate()?;
    if vc.n_terms() != dm.n_random() {
        return Err(Error::DimensionMismatch(format!(
            "{} random terms in design, {} in variance components",
            dm.n_random(),
            vc.n_terms()
        )));
    }
    let gamma = vc.g_matrix().scale(T::one() / vc.sigma_eps_sq);
    let sol = gls_solve(dm, &gamma)?;
    Ok(loglik_at(&sol, dm.n_obs(), dm.n_fixed(), vc.sigma_eps_sq, criterion))
}

/// Profiled criterion and its derivative along `Γ = λ·e_c e_cᵀ + Γ_rest`
/// with respect to `λ`, where `c` is one random-term column.
///
/// Uses `d log|H|/dλ = Σ u_iᵀH_i⁻¹u_i`, `dr/dλ = −Σ (u_iᵀH_i⁻¹e_i)²` and
/// `d log|XᵀH⁻¹X|/dλ = −Σ w_iᵀ(XᵀH⁻¹X)⁻¹w_i` with `w_i = X_iᵀH_i⁻¹u_i`.
pub(crate) fn profiled_loglik_and_slope<T: Real>(
    dm: &DesignMatrices<T>,
    gamma: &Matrix<T>,
    col: usize,
    criterion: Criterion,
) -> Result<(T, T)> {
    let sol = gls_solve(dm, gamma)?;
    let (n, p) = (dm.n_obs(), dm.n_fixed());
    let s2 = profiled_sigma_sq(&sol, n, p, criterion);
    if !(s2 > T::zero()) {
        return Err(Error::DegenerateInput("zero residual variance".into()));
    }
    let ll = loglik_at(&sol, n, p, s2, criterion);
    let mut trace_h = T::zero();
    let mut drss = T::zero();
    let mut trace_x = T::zero();
    for g in &dm.groups {
        let h = subject_h(&dm.z, g.clone(), gamma);
        let l = cholesky_unchecked(&h)?;
        let mut u: Vec<T> = g.clone().map(|r| dm.z[(r, col)]).collect();
        let mut e: Vec<T> = g.clone().map(|r| dm.y[r] - dot(dm.x.row(r), &sol.beta)).collect();
        forward_substitute(&l, &mut u);
        forward_substitute(&l, &mut e);
        trace_h += dot(&u, &u);
        let ue = dot(&u, &e);
        drss -= ue * ue;
        if criterion == Criterion::Reml {
            let w: Vec<T> = (0..p)
                .map(|c| {
                    let mut xc: Vec<T> = g.clone().map(|r| dm.x[(r, c)]).collect();
                    forward_substitute(&l, &mut xc);
                    dot(&xc, &u)
                })
                .collect();
            trace_x += dot(&w, &cholesky_solve_vec(&sol.xthx_chol, &w));
        }
    }
    let half = T::lit(0.5);
    let slope = match criterion {
        Criterion::Ml => -half * (T::from_count(n) * drss / sol.rss + trace_h),
        Criterion::Reml => -half * (T::from_count(n - p) * drss / sol.rss + trace_h - trace_x),
    };
    Ok((ll, slope))
}

/// Conditional modes of the random effects, `Γ Z_iᵀ H_i⁻¹ (y_i − X_i β)`,
/// one row per subject.
pub(crate) fn blups<T: Real>(dm: &DesignMatrices<T>, gamma: &Matrix<T>, beta: &[T]) -> Result<Matrix<T>> {
    let q = dm.n_random();
    let mut out = Matrix::zeros(dm.n_subjects(), q);
    for (i, g) in dm.groups.iter().enumerate() {
        let h = subject_h(&dm.z, g.clone(), gamma);
        let l = cholesky_unchecked(&h)?;
        let mut r: Vec<T> = g.clone().map(|row| dm.y[row] - dot(dm.x.row(row), beta)).collect();
        forward_substitute(&l, &mut r);
        back_substitute_transpose(&l, &mut r);
        // Zᵀ H⁻¹ r
        let mut zr = vec![T::zero(); q];
        for (k, row) in g.clone().enumerate() {
            for (a, zv) in dm.z.row(row).iter().enumerate() {
                zr[a] += *zv * r[k];
            }
        }
        let b = gamma.matvec(&zr);
        out.row_mut(i).copy_from_slice(&b);
    }
    Ok(out)
}
