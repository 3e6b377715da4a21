//! Full conditional distributions of the conjugate random-effects model.
//!
//! Each `cond_draw_*` replaces one block of the state with a draw from its
//! full conditional given the others. The `*_conditional` functions expose
//! the exact distribution parameters.

use super::priors::PriorHyperparams;
use super::state::GibbsState;
use crate::design::DesignMatrices;
use crate::error::Result;
use crate::numerics::{
    back_substitute_transpose, cholesky_solve_vec, cholesky_unchecked, dot, draw_scaled_inv_chi2,
    inverse_from_cholesky, Matrix, RngState,
};
use crate::scalar::Real;

/// Normal conditional given by its mean and Cholesky factor of the precision.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalConditional<T> {
    pub mean: Vec<T>,
    pub precision_chol: Matrix<T>,
}

impl<T: Real> NormalConditional<T> {
    /// Precision `P` and linear term `h` give `N(P⁻¹h, P⁻¹)`.
    fn from_precision(precision: &Matrix<T>, h: &[T]) -> Result<Self> {
        let l = cholesky_unchecked(precision)?;
        Ok(Self { mean: cholesky_solve_vec(&l, h), precision_chol: l })
    }

    pub fn covariance(&self) -> Matrix<T> {
        inverse_from_cholesky(&self.precision_chol)
    }

    /// `mean + L⁻ᵀz` with `P = LLᵀ`.
    pub fn draw(&self, rng: &mut RngState) -> Vec<T> {
        let mut z: Vec<T> = (0..self.mean.len()).map(|_| T::lit(rng.standard_normal())).collect();
        back_substitute_transpose(&self.precision_chol, &mut z);
        self.mean.iter().zip(&z).map(|(&m, &e)| m + e).collect()
    }
}

/// Conditional of subject `i`'s random effects: precision
/// `Z_iᵀZ_i/σ² + diag(1/τ²)`, linear term `Z_iᵀ(y_i − X_iβ)/σ²`. With a
/// random intercept only this is `N((Σ r/σ²)/(n_i/σ² + 1/τ²), (n_i/σ² + 1/τ²)⁻¹)`.
pub fn b_conditional<T: Real>(state: &GibbsState<T>, dm: &DesignMatrices<T>, i: usize) -> Result<NormalConditional<T>> {
    let q = dm.n_random();
    let inv_s2 = state.sigma_eps_sq.recip();
    let mut precision = Matrix::zeros(q, q);
    let mut h = vec![T::zero(); q];
    for r in dm.groups[i].clone() {
        let z = dm.z.row(r);
        let resid = dm.y[r] - dot(dm.x.row(r), &state.beta);
        for a in 0..q {
            h[a] += z[a] * resid * inv_s2;
            for c in 0..q {
                precision[(a, c)] += z[a] * z[c] * inv_s2;
            }
        }
    }
    precision[(0, 0)] += state.tau1_sq.recip();
    if q == 2 {
        precision[(1, 1)] += state.tau2_sq.expect("slope variance present").recip();
    }
    NormalConditional::from_precision(&precision, &h)
}

pub fn cond_draw_b<T: Real>(
    state: &mut GibbsState<T>,
    dm: &DesignMatrices<T>,
    _priors: &PriorHyperparams,
    rng: &mut RngState,
) -> Result<()> {
    for i in 0..dm.n_subjects() {
        let draw = b_conditional(state, dm, i)?.draw(rng);
        state.b[i] = draw[0];
        if let Some(s) = state.b_slope.as_mut() {
            s[i] = draw[1];
        }
    }
    Ok(())
}

/// `N((1/σ²)(XᵀX/σ² + Λ₀)⁻¹XᵀỸ, (XᵀX/σ² + Λ₀)⁻¹)` with `Ỹ = y − Zb`.
pub fn beta_conditional<T: Real>(
    state: &GibbsState<T>,
    dm: &DesignMatrices<T>,
    priors: &PriorHyperparams,
) -> Result<NormalConditional<T>> {
    beta_conditional_with(&dm.x.gram(), state, dm, priors)
}

pub(crate) fn beta_conditional_with<T: Real>(
    xtx: &Matrix<T>,
    state: &GibbsState<T>,
    dm: &DesignMatrices<T>,
    priors: &PriorHyperparams,
) -> Result<NormalConditional<T>> {
    let inv_s2 = state.sigma_eps_sq.recip();
    let mut precision = xtx.scale(inv_s2);
    for (l, &v) in priors.sigma_l_sq.iter().enumerate() {
        precision[(l, l)] += T::lit(v).recip();
    }
    let mut y_tilde = dm.y.clone();
    let q = dm.n_random();
    for (i, g) in dm.groups.iter().enumerate() {
        let e = state.effects(i);
        for r in g.clone() {
            y_tilde[r] -= dot(dm.z.row(r), &e[..q]);
        }
    }
    let h: Vec<T> = dm.x.t_matvec(&y_tilde).into_iter().map(|v| v * inv_s2).collect();
    NormalConditional::from_precision(&precision, &h)
}

pub fn cond_draw_beta<T: Real>(
    state: &mut GibbsState<T>,
    dm: &DesignMatrices<T>,
    priors: &PriorHyperparams,
    rng: &mut RngState,
) -> Result<()> {
    state.beta = beta_conditional(state, dm, priors)?.draw(rng);
    Ok(())
}

/// `(dof, scale)` of a scaled inverse chi-square conditional.
pub type InvChi2<T> = (T, T);

fn variance_conditional<T: Real>(effects: &[T], dof: f64, scale: f64) -> InvChi2<T> {
    let m = T::from_count(effects.len());
    let ss: T = effects.iter().map(|&v| v * v).sum();
    let nu = m + T::lit(dof);
    (nu, (ss + T::lit(dof * scale)) / nu)
}

/// `Inv-χ²(m + c, (Σb² + cd)/(m + c))`.
pub fn tau1_sq_conditional<T: Real>(state: &GibbsState<T>, priors: &PriorHyperparams) -> InvChi2<T> {
    variance_conditional(&state.b, priors.c, priors.d)
}

pub fn cond_draw_tau1_sq<T: Real>(
    state: &mut GibbsState<T>,
    priors: &PriorHyperparams,
    rng: &mut RngState,
) -> Result<()> {
    let (nu, s) = tau1_sq_conditional(state, priors);
    state.tau1_sq = draw_scaled_inv_chi2(rng, nu, s)?;
    Ok(())
}

/// Slope-variance analogue of [`tau1_sq_conditional`] with the same prior.
pub fn tau2_sq_conditional<T: Real>(state: &GibbsState<T>, priors: &PriorHyperparams) -> Option<InvChi2<T>> {
    state.b_slope.as_ref().map(|s| variance_conditional(s, priors.c, priors.d))
}

pub fn cond_draw_tau2_sq<T: Real>(
    state: &mut GibbsState<T>,
    priors: &PriorHyperparams,
    rng: &mut RngState,
) -> Result<()> {
    if let Some((nu, s)) = tau2_sq_conditional(state, priors) {
        state.tau2_sq = Some(draw_scaled_inv_chi2(rng, nu, s)?);
    }
    Ok(())
}

/// Residual sum of squares `Σ(y − Xβ − Zb)²`.
pub fn residual_ss<T: Real>(state: &GibbsState<T>, dm: &DesignMatrices<T>) -> T {
    let mu = state.conditional_mean(dm);
    dm.y.iter().zip(&mu).map(|(&y, &m)| (y - m) * (y - m)).sum()
}

/// `Inv-χ²(N + a, (RSS + ab)/(N + a))`.
pub fn sigma_eps_sq_conditional<T: Real>(
    state: &GibbsState<T>,
    dm: &DesignMatrices<T>,
    priors: &PriorHyperparams,
) -> InvChi2<T> {
    let nu = T::from_count(dm.n_obs()) + T::lit(priors.a);
    (nu, (residual_ss(state, dm) + T::lit(priors.a * priors.b)) / nu)
}

pub fn cond_draw_sigma_eps_sq<T: Real>(
    state: &mut GibbsState<T>,
    dm: &DesignMatrices<T>,
    priors: &PriorHyperparams,
    rng: &mut RngState,
) -> Result<()> {
    let (nu, s) = sigma_eps_sq_conditional(state, dm, priors);
    state.sigma_eps_sq = draw_scaled_inv_chi2(rng, nu, s)?;
    Ok(())
}
