use std::ops::{Index, IndexMut};

use super::vector::{dot, DenseVector};
use super::LinalgError;
use crate::scalar::Real;

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
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
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_slice(rows: usize, cols: usize, values: &[T]) -> Self {
        assert_eq!(values.len(), rows * cols, "row slice length mismatch");
        Self {
            rows,
            cols,
            data: values.to_vec(),
        }
    }

    /// Builds from nested `f64` rows; intended for literals in tests and configs.
    pub fn from_rows_f64(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| T::lit(rows[i][j]))
    }

    pub fn from_columns(columns: &[Vec<T>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        Self::from_fn(rows, cols, |i, j| columns[j][i])
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[T]) {
        assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::ShapeMismatch {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(l)) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `A x`
    pub fn matvec(&self, x: &[T]) -> DenseVector<T> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ x`
    pub fn tr_matvec(&self, x: &[T]) -> DenseVector<T> {
        assert_eq!(x.len(), self.rows, "tr_matvec dimension mismatch");
        let mut out = DenseVector::zeros(self.cols);
        for (i, &xi) in x.iter().enumerate() {
            out.axpy(xi, self.row(i));
        }
        out
    }

    /// `AᵀA`
    pub fn gram(&self) -> Self {
        let mut g = Self::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..self.cols {
                let ra = r[a];
                if ra == T::zero() {
                    continue;
                }
                for b in a..self.cols {
                    g.data[a * self.cols + b] = g.data[a * self.cols + b] + ra * r[b];
                }
            }
        }
        for a in 0..self.cols {
            for b in 0..a {
                g.data[a * self.cols + b] = g.data[b * self.cols + a];
            }
        }
        g
    }

    fn zip_with(&self, rhs: &Self, op: &'static str, f: impl Fn(T, T) -> T) -> Result<Self, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::ShapeMismatch {
                op,
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| a * v).collect(),
        }
    }

    /// `self += a * rhs`
    pub fn add_scaled(&mut self, a: T, rhs: &Self) {
        assert_eq!(self.shape(), rhs.shape());
        for (x, &y) in self.data.iter_mut().zip(&rhs.data) {
            *x = *x + a * y;
        }
    }

    /// `self += a * u vᵀ`
    pub fn add_outer(&mut self, a: T, u: &[T], v: &[T]) {
        assert_eq!(u.len(), self.rows);
        assert_eq!(v.len(), self.cols);
        for (i, &ui) in u.iter().enumerate() {
            let s = a * ui;
            if s == T::zero() {
                continue;
            }
            for (x, &vj) in self.data[i * self.cols..(i + 1) * self.cols].iter_mut().zip(v) {
                *x = *x + s * vj;
            }
        }
    }

    pub fn frobenius_norm(&self) -> T {
        super::vector::norm(&self.data)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `max |Aᵢⱼ − Aⱼᵢ|`; infinite for non-square input.
    pub fn symmetry_defect(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Symmetric within `1e-12` relative to the largest entry.
    pub fn is_symmetric(&self) -> bool {
        self.symmetry_defect() <= T::tol(1e-12) * self.max_abs()
    }

    /// `(A + Aᵀ) / 2`
    pub fn symmetrized(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| half * (self[(i, j)] + self[(j, i)]))
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Copies columns `range` into a new matrix.
    pub fn column_block(&self, start: usize, end: usize) -> Self {
        Self::from_fn(self.rows, end - start, |i, j| self[(i, start + j)])
    }

    /// Copies rows `start..end` into a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> Self {
        Self::from_row_slice(end - start, self.cols, &self.data[start * self.cols..end * self.cols])
    }

    /// Horizontal concatenation `[self, rhs]`.
    pub fn hstack(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows);
        Self::from_fn(self.rows, self.cols + rhs.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                rhs[(i, j - self.cols)]
            }
        })
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.as_f64()).collect())
            .collect()
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}
