//! Small dense and banded matrices.
//!
//! Everything here is sized for desk-scale verification (a few thousand rows
//! at most), so storage is plain row-major `Vec`s.

use crate::Scalar;

/// Square matrix with `lower` sub-diagonals and `upper` super-diagonals.
///
/// Row `i` keeps columns `i - lower ..= i + upper` contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix<T> {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedMatrix<T> {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = lower + upper + 1;
        Self {
            n,
            lower,
            upper,
            data: vec![T::zero(); n * width],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn slot(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.n || col >= self.n || col + self.lower < row || col > row + self.upper {
            return None;
        }
        Some(row * (self.lower + self.upper + 1) + col + self.lower - row)
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.slot(row, col)
            .map(|s| self.data[s].clone())
            .unwrap_or_else(T::zero)
    }

    /// Adds `value` to entry `(row, col)`.
    ///
    /// Panics when the entry lies outside the band.
    pub fn add(&mut self, row: usize, col: usize, value: T) {
        let s = self
            .slot(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) outside band"));
        let cur = std::mem::replace(&mut self.data[s], T::zero());
        self.data[s] = cur + value;
    }

    /// Solves `A x = rhs` by Gaussian elimination without pivoting.
    ///
    /// Without row exchanges the fill stays inside the band, which is sound for
    /// the weakly diagonally dominant systems built in this crate. Returns
    /// `None` when a zero pivot is met.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(mut self, mut rhs: Vec<T>) -> Option<Vec<T>> {
        assert_eq!(rhs.len(), self.n, "right-hand side length");
        let n = self.n;
        for k in 0..n {
            let pivot = self.get(k, k);
            if pivot.is_zero() {
                return None;
            }
            let last_row = (k + self.lower).min(n.saturating_sub(1));
            let last_col = (k + self.upper).min(n.saturating_sub(1));
            for i in k + 1..=last_row {
                let below = self.get(i, k);
                if below.is_zero() {
                    continue;
                }
                let factor = below / pivot.clone();
                for j in k..=last_col {
                    let delta = factor.clone() * self.get(k, j);
                    self.add(i, j, -delta);
                }
                let delta = factor * rhs[k].clone();
                let cur = std::mem::replace(&mut rhs[i], T::zero());
                rhs[i] = cur - delta;
            }
        }
        let mut x = vec![T::zero(); n];
        for k in (0..n).rev() {
            let mut acc = rhs[k].clone();
            let last_col = (k + self.upper).min(n.saturating_sub(1));
            for j in k + 1..=last_col {
                acc = acc - self.get(k, j) * x[j].clone();
            }
            x[k] = acc / self.get(k, k);
        }
        Some(x)
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.cols + col] = value;
    }

    pub fn add_at(&mut self, row: usize, col: usize, value: T) {
        let idx = row * self.cols + col;
        let cur = std::mem::replace(&mut self.data[idx], T::zero());
        self.data[idx] = cur + value;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    /// Matrix product; zero entries of `self` are skipped.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if !b.is_zero() {
                        out.add_at(i, j, a.clone() * b.clone());
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| f(a.clone(), b.clone()))
                .collect(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(Scalar::abs_value)
            .fold(T::zero(), |acc, v| if v > acc { v } else { acc })
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        self.sub(rhs).max_abs()
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self.get(i, i).clone())
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i).clone())
            .collect()
    }

    /// Largest absolute off-diagonal entry.
    pub fn max_abs_off_diagonal(&self) -> T {
        let mut best = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    let v = self.get(i, j).abs_value();
                    if v > best {
                        best = v;
                    }
                }
            }
        }
        best
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        assert_eq!(self.rows, self.cols, "square");
        let mut best = T::zero();
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                let v = (self.get(i, j).clone() - self.get(j, i).clone()).abs_value();
                if v > best {
                    best = v;
                }
            }
        }
        best
    }

    /// `v^T A v` for a real vector.
    #[allow(clippy::needless_range_loop)]
    pub fn quadratic_form(&self, v: &[T]) -> T {
        assert_eq!(self.rows, self.cols, "square");
        assert_eq!(v.len(), self.rows, "vector length");
        let mut acc = T::zero();
        for i in 0..self.rows {
            if v[i].is_zero() {
                continue;
            }
            let mut row = T::zero();
            for j in 0..self.cols {
                let a = self.get(i, j);
                if !a.is_zero() {
                    row = row + a.clone() * v[j].clone();
                }
            }
            acc = acc + v[i].clone() * row;
        }
        acc
    }

    /// Traces out the first factor of a `outer x inner` bipartite operator.
    pub fn partial_trace_first(&self, outer: usize, inner: usize) -> Self {
        assert_eq!(self.rows, outer * inner, "bipartite shape");
        assert_eq!(self.cols, outer * inner, "bipartite shape");
        let mut out = Self::zeros(inner, inner);
        for c in 0..outer {
            for a in 0..inner {
                for b in 0..inner {
                    out.add_at(a, b, self.get(c * inner + a, c * inner + b).clone());
                }
            }
        }
        out
    }

    /// Traces out the second factor of a `outer x inner` bipartite operator.
    pub fn partial_trace_second(&self, outer: usize, inner: usize) -> Self {
        assert_eq!(self.rows, outer * inner, "bipartite shape");
        assert_eq!(self.cols, outer * inner, "bipartite shape");
        let mut out = Self::zeros(outer, outer);
        for a in 0..outer {
            for b in 0..outer {
                for t in 0..inner {
                    out.add_at(a, b, self.get(a * inner + t, b * inner + t).clone());
                }
            }
        }
        out
    }
}

impl<T: crate::Real> DenseMatrix<T> {
    /// Cholesky test for positive semidefiniteness after shifting by `tol * I`.
    pub fn is_positive_semidefinite(&self, tol: T) -> bool {
        let n = self.rows;
        if n != self.cols {
            return false;
        }
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut diag = *self.get(j, j) + tol;
            for k in 0..j {
                diag = diag - *l.get(j, k) * *l.get(j, k);
            }
            if diag <= T::zero() {
                return false;
            }
            let root = diag.sqrt();
            l.set(j, j, root);
            for i in j + 1..n {
                let mut s = *self.get(i, j);
                for k in 0..j {
                    s = s - *l.get(i, k) * *l.get(j, k);
                }
                l.set(i, j, s / root);
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn banded_solve_tridiagonal() {
        // -x_{i-1} + 2 x_i - x_{i+1} = 1 on 5 points, zero ends: x_i = i'(6-i')/2
        let n = 5;
        let mut a = BandedMatrix::<f64>::zeros(n, 1, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
            }
        }
        let x = a.solve(vec![1.0; n]).unwrap();
        for (i, xi) in x.iter().enumerate() {
            let k = (i + 1) as f64;
            assert!((xi - k * (6.0 - k) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn banded_solve_exact_rational() {
        let one = || BigRational::from_int(1);
        let mut a = BandedMatrix::<BigRational>::zeros(3, 1, 2);
        a.add(0, 0, BigRational::from_int(3));
        a.add(0, 2, one());
        a.add(1, 0, one());
        a.add(1, 1, BigRational::from_int(4));
        a.add(2, 1, -one());
        a.add(2, 2, BigRational::from_int(2));
        let x = a.clone().solve(vec![one(), one(), one()]).unwrap();
        // residual is exactly zero
        for r in 0..3 {
            let mut acc = BigRational::from_int(0);
            for (c, xc) in x.iter().enumerate() {
                acc += a.get(r, c) * xc.clone();
            }
            assert_eq!(acc, one());
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = BandedMatrix::<f64>::zeros(2, 0, 1);
        assert!(a.solve(vec![1.0, 1.0]).is_none());
    }

    #[test]
    fn partial_traces() {
        // |0><0| (x) diag(1,2)  +  |1><1| (x) diag(3,4)
        let mut m = DenseMatrix::<f64>::zeros(4, 4);
        for (i, v) in [1.0, 2.0, 3.0, 4.0].into_iter().enumerate() {
            m.set(i, i, v);
        }
        assert_eq!(m.partial_trace_first(2, 2).diagonal(), vec![4.0, 6.0]);
        assert_eq!(m.partial_trace_second(2, 2).diagonal(), vec![3.0, 7.0]);
    }

    #[test]
    fn psd_check() {
        let good = DenseMatrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        let bad = DenseMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(good.is_positive_semidefinite(1e-12));
        assert!(!bad.is_positive_semidefinite(1e-12));
        assert!(DenseMatrix::<f64>::zeros(3, 3).is_positive_semidefinite(1e-12));
    }
}
