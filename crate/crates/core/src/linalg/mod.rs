//! Dense complex linear algebra.
//!
//! Only what the discrimination pipeline needs: products, adjoints,
//! Hermitian eigendecomposition and the largest singular value. Matrices are
//! stored row-major as `Complex64`.

mod cmx;
mod eigen;

use std::ops::{Index, IndexMut};

pub use cmx::{decode_cmx, encode_cmx, read_cmx, write_cmx, CMX_MAGIC};
pub use eigen::{
    eig_hermitian, largest_singular_value, HermitianEigen, HERMITIAN_TOL, JACOBI_MAX_SWEEPS,
    JACOBI_TOL, POWER_MAX_ITERS, POWER_TOL,
};

use crate::{Error, Result};

pub type C64 = num_complex::Complex64;

fn check_finite(values: &[C64]) -> Result<()> {
    match values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(i) => Err(Error::Validation(format!("non-finite entry at flat index {i}"))),
        None => Ok(()),
    }
}

/// Dense `rows x cols` complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes,
    /// length mismatches and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix shape");
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix shape");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Stacks equal-length vectors as columns.
    pub fn from_columns(columns: &[ComplexVector]) -> Result<Self> {
        let first = columns
            .first()
            .ok_or_else(|| Error::Dimension("no columns".into()))?;
        let rows = first.dim();
        if columns.iter().any(|c| c.dim() != rows) {
            return Err(Error::Dimension("columns of unequal length".into()));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector { data: (0..self.rows).map(|i| self[(i, j)]).collect() }
    }

    pub fn set_column(&mut self, j: usize, v: &ComplexVector) -> Result<()> {
        if v.dim() != self.rows || j >= self.cols {
            return Err(Error::Dimension(format!(
                "column {j} of length {} into {}x{}",
                v.dim(),
                self.rows,
                self.cols
            )));
        }
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
        Ok(())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.rows * other.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self { rows: self.rows, cols: other.cols, data: out })
    }

    pub fn mul_vec(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.cols != v.dim() {
            return Err(Error::Dimension(format!(
                "cannot apply {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let data = (0..self.rows)
            .map(|i| self.row(i).iter().zip(&v.data).map(|(a, b)| a * b).sum())
            .collect();
        Ok(ComplexVector { data })
    }

    /// `self^† v` without materializing the adjoint.
    pub fn adjoint_mul_vec(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.rows != v.dim() {
            return Err(Error::Dimension(format!(
                "cannot apply adjoint of {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for (i, &vi) in v.data.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        Ok(ComplexVector { data: out })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "shapes {}x{} and {}x{} differ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    /// `self · diag(d)`, i.e. column `j` multiplied by `d[j]`.
    pub fn scale_columns(&self, d: &[C64]) -> Result<Self> {
        if d.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{} column factors for {} columns",
                d.len(),
                self.cols
            )));
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * d[j]))
    }

    /// `diag(d) · self`, i.e. row `i` multiplied by `d[i]`.
    pub fn scale_rows(&self, d: &[C64]) -> Result<Self> {
        if d.len() != self.rows {
            return Err(Error::Dimension(format!("{} row factors for {} rows", d.len(), self.rows)));
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * d[i]))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`; `INFINITY` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise modulus of `self - self^†`; `INFINITY` when not square.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(self + self^†) / 2`.
    pub fn hermitian_part(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "hermitian part of non-square {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        }))
    }

    /// Largest entrywise deviation of `self^† self` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let gram = gram(self);
        gram.max_abs_diff(&Self::identity(self.cols))
    }
}

/// `a^† a`, accumulated row by row.
pub fn gram(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.cols;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..a.rows {
        let row = a.row(i);
        for (j, aj) in row.iter().enumerate() {
            let cj = aj.conj();
            if cj == C64::new(0.0, 0.0) {
                continue;
            }
            let out_row = &mut out.data[j * n..(j + 1) * n];
            for (o, &ak) in out_row.iter_mut().zip(row) {
                *o += cj * ak;
            }
        }
    }
    out
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    data: Vec<C64>,
}

impl ComplexVector {
    pub fn new(data: Vec<C64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Dimension("empty vector".into()));
        }
        check_finite(&data)?;
        Ok(Self { data })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "empty vector");
        Self { data: vec![C64::new(0.0, 0.0); dim] }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[k] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.data.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product `<self|other>`, antilinear in `self`.
    pub fn dot(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "inner product of lengths {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { data: self.data.iter().map(|&z| z * factor).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "lengths {} and {} differ",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Self { data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect() })
    }

    /// Unit-norm copy; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale(C64::new(1.0 / n, 0.0)))
    }

    /// Per-entry `|z|^2`.
    pub fn intensity(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn as_column(&self) -> ComplexMatrix {
        ComplexMatrix { rows: self.dim(), cols: 1, data: self.data.clone() }
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;

    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.data[i]
    }
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.matmul(b)
}

pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}
