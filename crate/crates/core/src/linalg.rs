//! Dense linear-algebra substrate: row-major matrices, Cholesky factorization
//! with escalating jitter, and triangular solves.
//!
//! Everything here is sized for experimental designs of at most a few thousand
//! points, so plain O(N^3) dense algorithms are used throughout and no explicit
//! matrix inverse is ever formed on the solve paths.

use serde::{Deserialize, Serialize};

use crate::error::{KrigError, Result};

/// Default starting jitter for rescuing near-singular correlation matrices.
pub const DEFAULT_BASE_JITTER: f64 = 1e-10;
/// Default jitter ceiling; escalation stops (and fails) past this value.
pub const DEFAULT_MAX_JITTER: f64 = 1e-6;

/// Dense row-major matrix of `f64`.
///
/// Zero-sized dimensions are permitted (an `N x 0` cross-correlation block for
/// an empty query set is a valid value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from row-major data; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(KrigError::DimensionMismatch(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(KrigError::DimensionMismatch("ragged rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    /// Column vector from a slice.
    pub fn column(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_vec(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// The single column of an `N x 1` matrix as a vector.
    pub fn into_column_vec(self) -> Vec<f64> {
        debug_assert_eq!(self.cols, 1);
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Select a subset of rows in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(idx.len(), self.cols);
        for (k, &i) in idx.iter().enumerate() {
            m.row_mut(k).copy_from_slice(self.row(i));
        }
        m
    }

    pub fn add_to_diagonal(&mut self, value: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self[(i, i)] += value;
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(KrigError::DimensionMismatch(format!(
                "matmul {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(KrigError::DimensionMismatch(format!(
                "matvec {}x{} * {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `self^T * v` without materializing the transpose.
    pub fn transpose_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.rows != v.len() {
            return Err(KrigError::DimensionMismatch(format!(
                "transpose_matvec {}x{} * {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &s) in v.iter().enumerate() {
            let row = self.row(i);
            for (o, &a) in out.iter_mut().zip(row) {
                *o += s * a;
            }
        }
        Ok(out)
    }

    /// `self^T * self`, the Gram matrix of the columns.
    pub fn gram(&self) -> Matrix {
        let p = self.cols;
        let mut g = Matrix::zeros(p, p);
        for i in 0..self.rows {
            let row = self.row(i);
            for a in 0..p {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..p {
                    g[(a, b)] += ra * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor `L` of `A + jitter * I`, with the log
/// determinant of the jittered matrix recorded.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: Matrix,
    jitter_applied: f64,
    log_det: f64,
}

impl CholeskyFactor {
    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    /// log det(A + jitter * I) = 2 * sum(log diag(L)).
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Solve `L X = B` by forward substitution.
    pub fn solve_lower(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.dim();
        if b.rows() != n {
            return Err(KrigError::DimensionMismatch(format!(
                "solve_lower: factor is {n}x{n}, rhs has {} rows",
                b.rows()
            )));
        }
        let mut x = b.clone();
        let ncols = x.cols();
        for i in 0..n {
            let li = self.lower.row(i);
            for c in 0..ncols {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= li[k] * x[(k, c)];
                }
                x[(i, c)] = s / li[i];
            }
        }
        Ok(x)
    }

    /// Solve `L^T X = B` by backward substitution.
    pub fn solve_lower_transpose(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.dim();
        if b.rows() != n {
            return Err(KrigError::DimensionMismatch(format!(
                "solve_lower_transpose: factor is {n}x{n}, rhs has {} rows",
                b.rows()
            )));
        }
        let mut x = b.clone();
        let ncols = x.cols();
        for i in (0..n).rev() {
            for c in 0..ncols {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.lower[(k, i)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lower[(i, i)];
            }
        }
        Ok(x)
    }

    /// Solve `(L L^T) X = B` via forward then backward substitution.
    pub fn solve_spd(&self, b: &Matrix) -> Result<Matrix> {
        self.solve_lower_transpose(&self.solve_lower(b)?)
    }

    /// Vector convenience form of [`CholeskyFactor::solve_spd`].
    pub fn solve_spd_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_spd(&Matrix::column(b))?.into_column_vec())
    }

    pub fn solve_lower_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_lower(&Matrix::column(b))?.into_column_vec())
    }

    /// Explicit `(L L^T)^-1`. Only used where a full inverse is genuinely
    /// needed (the fast leave-one-out shortcut reads its diagonal); solve
    /// paths never call this.
    pub fn inverse_spd(&self) -> Result<Matrix> {
        self.solve_spd(&Matrix::identity(self.dim()))
    }
}

/// Cholesky-factorize a symmetric matrix, escalating a diagonal jitter from
/// `base_jitter` by factors of 10 up to `max_jitter` until the factorization
/// succeeds.
///
/// The attempted jitter ladder is `{0, base, 10*base, ..., max}`; the recorded
/// `jitter_applied` is the first value that succeeds.
pub fn cholesky_with_jitter(
    a: &Matrix,
    base_jitter: f64,
    max_jitter: f64,
) -> Result<CholeskyFactor> {
    let n = a.rows();
    if n != a.cols() {
        return Err(KrigError::DimensionMismatch(format!(
            "cholesky requires a square matrix, got {}x{}",
            n,
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(KrigError::NonFinite("matrix has non-finite entries".into()));
    }
    if base_jitter < 0.0 || max_jitter < 0.0 {
        return Err(KrigError::Domain("jitter values must be >= 0".into()));
    }

    let mut ladder = vec![0.0];
    if base_jitter > 0.0 {
        let mut j = base_jitter;
        while j < max_jitter {
            ladder.push(j);
            j *= 10.0;
        }
    }
    if max_jitter > 0.0 && ladder.last() != Some(&max_jitter) {
        ladder.push(max_jitter);
    }

    for &jitter in &ladder {
        if let Some(factor) = try_cholesky(a, jitter) {
            return Ok(factor);
        }
    }
    Err(KrigError::NotPositiveDefinite { max_jitter })
}

/// One factorization attempt; `None` when a pivot is not strictly positive.
fn try_cholesky(a: &Matrix, jitter: f64) -> Option<CholeskyFactor> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    let mut log_det = 0.0;
    for j in 0..n {
        let mut d = a[(j, j)] + jitter;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        log_det += 2.0 * ljj.ln();
        for i in j + 1..n {
            let mut s = a[(i, j)] + if i == j { jitter } else { 0.0 };
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(CholeskyFactor {
        lower: l,
        jitter_applied: jitter,
        log_det,
    })
}
