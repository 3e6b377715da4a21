//! Small dense matrices and SPD factorizations.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::numerics::TOLERANCES;
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite entry at ({}, {})", pos / cols.max(1), pos % cols.max(1))));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    /// Column vector.
    pub fn column(values: Vec<T>) -> Self {
        let n = values.len();
        Self { rows: n, cols: 1, data: values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        let c = self.cols;
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn col_vec(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Converts every entry to another scalar type.
    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| U::lit(v.as_f64())).collect() }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out[(i, j)] + a * other[(k, j)];
                    out[(i, j)] = v;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "matvec dimension");
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    /// `selfᵀ · v`.
    pub fn t_matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows, "t_matvec dimension");
        let mut out = vec![T::zero(); self.cols];
        for (r, &w) in v.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(self.row(r)) {
                *o += x * w;
            }
        }
        out
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Self {
        let p = self.cols;
        let mut g = Self::zeros(p, p);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..p {
                for j in i..p {
                    g.data[i * p + j] += row[i] * row[j];
                }
            }
        }
        g.fill_lower_from_upper();
        g
    }

    pub(crate) fn fill_lower_from_upper(&mut self) {
        for i in 0..self.rows {
            for j in 0..i {
                self.data[i * self.cols + j] = self.data[j * self.cols + i];
            }
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("matrix add".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest absolute asymmetry `|m_ij - m_ji|`, or `None` for non-square input.
    pub fn asymmetry(&self) -> Option<T> {
        if self.rows != self.cols {
            return None;
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        Some(worst)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn check_symmetric<T: Real>(m: &Matrix<T>) -> Result<()> {
    let asym = m.asymmetry().ok_or_else(|| Error::DimensionMismatch(format!("{}x{} is not square", m.rows, m.cols)))?;
    let scale = m.max_abs().max(T::one());
    if asym > T::lit(TOLERANCES.symmetry) * scale {
        return Err(Error::NotSymmetric(asym.as_f64()));
    }
    Ok(())
}

/// Cholesky factor `L` with `L·Lᵀ = m`.
pub fn cholesky<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    check_symmetric(m)?;
    cholesky_unchecked(m)
}

/// Cholesky without the symmetry check; only the lower triangle of `m` is read.
pub(crate) fn cholesky_unchecked<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let n = m.rows;
    let max_diag = (0..n).fold(T::zero(), |acc, i| acc.max(m[(i, i)].abs()));
    let floor = T::lit(TOLERANCES.pivot) * max_diag;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) || d <= T::zero() {
            return Err(Error::NotPositiveDefinite { index: j, value: d.as_f64() });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L·x = b` in place for lower-triangular `L`.
pub fn forward_substitute<T: Real>(l: &Matrix<T>, b: &mut [T]) {
    let n = l.rows;
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `Lᵀ·x = b` in place for lower-triangular `L`.
pub fn back_substitute_transpose<T: Real>(l: &Matrix<T>, b: &mut [T]) {
    let n = l.rows;
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `(L·Lᵀ)·x = b` given the Cholesky factor.
pub fn cholesky_solve_vec<T: Real>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let mut x = b.to_vec();
    forward_substitute(l, &mut x);
    back_substitute_transpose(l, &mut x);
    x
}

/// `log|L·Lᵀ|` from its Cholesky factor.
pub fn cholesky_log_det<T: Real>(l: &Matrix<T>) -> T {
    (0..l.rows).map(|i| l[(i, i)].ln()).sum::<T>() * T::lit(2.0)
}

/// Solves `m·x = b` for symmetric positive-definite `m`; `b` may have several columns.
pub fn solve_spd<T: Real>(m: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if m.rows != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "system of order {} with right-hand side of {} rows",
            m.rows, b.rows
        )));
    }
    let l = cholesky(m)?;
    let mut out = Matrix::zeros(b.rows, b.cols);
    for c in 0..b.cols {
        let x = cholesky_solve_vec(&l, &b.col_vec(c));
        for (r, v) in x.into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

/// Inverse of an SPD matrix through its Cholesky factor.
pub fn inverse_spd<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let l = cholesky(m)?;
    Ok(inverse_from_cholesky(&l))
}

pub(crate) fn inverse_from_cholesky<T: Real>(l: &Matrix<T>) -> Matrix<T> {
    let n = l.rows;
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![T::zero(); n];
    for c in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[c] = T::one();
        let x = cholesky_solve_vec(l, &e);
        for (r, v) in x.into_iter().enumerate() {
            inv[(r, c)] = v;
        }
    }
    // symmetrize away rounding
    for i in 0..n {
        for j in 0..i {
            let avg = (inv[(i, j)] + inv[(j, i)]) * T::lit(0.5);
            inv[(i, j)] = avg;
            inv[(j, i)] = avg;
        }
    }
    inv
}

/// Numerical rank of a symmetric PSD matrix by diagonal-pivoted Cholesky.
///
/// A pivot is accepted while it exceeds `rel_tol × max diagonal`.
pub fn pivoted_rank<T: Real>(m: &Matrix<T>, rel_tol: f64) -> usize {
    let n = m.rows;
    let max_diag = (0..n).fold(T::zero(), |acc, i| acc.max(m[(i, i)]));
    pivoted_rank_with_floor(m, T::lit(rel_tol) * max_diag)
}

fn pivoted_rank_with_floor<T: Real>(m: &Matrix<T>, tol: T) -> usize {
    let n = m.rows;
    let mut a = m.clone();
    for k in 0..n {
        let (mut best, mut best_val) = (k, a[(k, k)]);
        for i in (k + 1)..n {
            if a[(i, i)] > best_val {
                best = i;
                best_val = a[(i, i)];
            }
        }
        if !(best_val > tol) {
            return k;
        }
        if best != k {
            swap_sym(&mut a, k, best);
        }
        let piv = a[(k, k)].sqrt();
        a[(k, k)] = piv;
        for i in (k + 1)..n {
            a[(i, k)] /= piv;
        }
        for j in (k + 1)..n {
            for i in j..n {
                let v = a[(i, j)] - a[(i, k)] * a[(j, k)];
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    n
}

/// First column `k` (in the given order) that is numerically spanned by
/// columns `0..k`, or `None` when the matrix has full rank.
pub fn first_dependent_column<T: Real>(m: &Matrix<T>, rel_tol: f64) -> Option<usize> {
    let n = m.rows;
    let max_diag = (0..n).fold(T::zero(), |acc, i| acc.max(m[(i, i)]));
    let tol = T::lit(rel_tol) * max_diag;
    if pivoted_rank_with_floor(m, tol) == n {
        return None;
    }
    (0..n).find(|&k| {
        let mut lead = Matrix::zeros(k + 1, k + 1);
        for i in 0..=k {
            for j in 0..=k {
                lead[(i, j)] = m[(i, j)];
            }
        }
        pivoted_rank_with_floor(&lead, tol) <= k
    })
}

fn swap_sym<T: Real>(a: &mut Matrix<T>, p: usize, q: usize) {
    let n = a.rows;
    for c in 0..n {
        a.data.swap(p * n + c, q * n + c);
    }
    for r in 0..n {
        a.data.swap(r * n + p, r * n + q);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cholesky_of_identity_is_identity() {
        let i3 = Matrix::<f64>::identity(3);
        assert_eq!(cholesky(&i3).unwrap(), i3);
    }

    #[test]
    fn cholesky_two_by_two_hand_case() {
        let m = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let l = cholesky(&m).unwrap();
        assert_abs_diff_eq!(l[(0, 0)], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(0, 1)], 0.0);
        assert_abs_diff_eq!(l[(1, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(1, 1)], 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&m), Err(Error::NotPositiveDefinite { index: 1, .. })));
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert!(matches!(cholesky(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn cholesky_works_in_single_precision() {
        let m = Matrix::<f32>::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let l = cholesky(&m).unwrap();
        assert!((l[(1, 1)] - 2f32.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let b = Matrix::column(vec![1.0, -2.0, 3.5]);
        assert_eq!(solve_spd(&Matrix::identity(3), &b).unwrap(), b);
        // random SPD: A = BᵀB + I, check the residual
        let mut rng = crate::numerics::RngState::new(9);
        let raw = Matrix::new(5, 5, (0..25).map(|_| rng.standard_normal()).collect()).unwrap();
        let a = raw.gram().add(&Matrix::identity(5)).unwrap();
        let rhs = Matrix::column((0..5).map(|_| rng.standard_normal()).collect());
        let x = solve_spd(&a, &rhs).unwrap();
        let resid = a.matmul(&x).unwrap();
        for i in 0..5 {
            assert!((resid[(i, 0)] - rhs[(i, 0)]).abs() < 1e-8 * rhs.max_abs());
        }
        let d = Matrix::diag(&[2.0, 4.0]);
        let x = solve_spd(&d, &Matrix::column(vec![1.0, 8.0])).unwrap();
        assert_abs_diff_eq!(x[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x[(1, 0)], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn non_finite_entries_rejected() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn pivoted_rank_check_finds_duplicate_column() {
        // columns: 1, x, 2x
        let x =
            Matrix::from_rows(&[vec![1.0, 1.0, 2.0], vec![1.0, 2.0, 4.0], vec![1.0, 3.0, 6.0], vec![1.0, 5.0, 10.0]])
                .unwrap();
        assert_eq!(first_dependent_column(&x.gram(), 1e-8), Some(2));
        let full = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 4.0]]).unwrap();
        assert_eq!(first_dependent_column(&full.gram(), 1e-8), None);
    }
}
