//! Numerical substrate: dense linear algebra, special functions, seeded
//! sampling and series statistics.

mod matrix;
pub mod optimize;
mod rng;
mod series;
mod special;

pub use matrix::{
    back_substitute_transpose, cholesky, cholesky_log_det, cholesky_solve_vec, dot, first_dependent_column,
    forward_substitute, inverse_spd, pivoted_rank, solve_spd, Matrix,
};
pub(crate) use matrix::{cholesky_unchecked, inverse_from_cholesky};
pub use rng::{draw_normal, draw_scaled_inv_chi2, RngState};
pub(crate) use series::quantile_sorted;
pub use series::{acf, effective_sample_size, sample_skewness, Series};
pub use special::{
    beta_inc, chi2_survival, erfc, gamma_p, gamma_q, ln_gamma, normal_cdf, normal_pdf, normal_quantile,
    normal_two_sided, student_t_two_sided,
};

/// Matrix tolerance settings shared by every factorization in the crate.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Maximum `|m_ij - m_ji|` relative to `max(1, max|m|)` accepted as symmetric.
    pub symmetry: f64,
    /// Cholesky pivots at or below this fraction of the largest diagonal fail.
    pub pivot: f64,
    /// Pivoted-Cholesky rank threshold relative to the largest diagonal of `XᵀX`.
    pub rank: f64,
}

pub const TOLERANCES: Tolerances = Tolerances { symmetry: 1e-10, pivot: 1e-12, rank: 1e-8 };
