//! Small dense linear algebra: complex matrices for channels and beams, real
//! symmetric matrices for Newton systems.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Complex column vector.
pub type CVector<T> = Vec<Complex<T>>;

/// Inner product `a^H b`.
pub fn cdot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

/// Euclidean norm of a complex vector.
pub fn cnorm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
}

/// Returns `a / ‖a‖`, or `None` for the zero vector.
pub fn normalized<T: Real>(a: &[Complex<T>]) -> Option<CVector<T>> {
    let n = cnorm(a);
    if n > T::zero() {
        Some(a.iter().map(|x| x / n).collect())
    } else {
        None
    }
}

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T> AsRef<CMatrix<T>> for CMatrix<T> {
    fn as_ref(&self) -> &CMatrix<T> {
        self
    }
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Outer product `a b^H`.
    pub fn outer(a: &[Complex<T>], b: &[Complex<T>]) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: Complex<T>) {
        self.data[r * self.cols + c] = value;
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[Complex<T>]) -> CVector<T> {
        assert_eq!(x.len(), self.cols, "dimension mismatch in A x");
        self.data
            .chunks_exact(self.cols)
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// `A^H x`.
    pub fn adjoint_mul_vec(&self, x: &[Complex<T>]) -> CVector<T> {
        assert_eq!(x.len(), self.rows, "dimension mismatch in A^H x");
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.cols];
        for (row, xr) in self.data.chunks_exact(self.cols).zip(x) {
            for (o, a) in out.iter_mut().zip(row) {
                *o = *o + a.conj() * xr;
            }
        }
        out
    }

    /// Bilinear form `u^H A v`.
    pub fn bilinear(&self, u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
        cdot(u, &self.mul_vec(v))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: T) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b * factor)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Largest singular value with its left/right singular vectors, by power
    /// iteration on `A^H A` started from `start` (or the all-ones vector).
    pub fn principal_singular_triplet(
        &self,
        start: Option<&[Complex<T>]>,
        max_iter: usize,
        tol: T,
    ) -> (T, CVector<T>, CVector<T>) {
        let ones = vec![Complex::new(T::one(), T::zero()); self.cols];
        let mut v = start
            .and_then(normalized)
            .or_else(|| normalized(&ones))
            .expect("matrix with zero columns");
        let mut sigma = T::zero();
        for _ in 0..max_iter {
            let u = self.mul_vec(&v);
            let next = self.adjoint_mul_vec(&u);
            let Some(next) = normalized(&next) else {
                break;
            };
            let new_sigma = cnorm(&self.mul_vec(&next));
            let done = (new_sigma - sigma).abs() <= tol * new_sigma;
            sigma = new_sigma;
            v = next;
            if done {
                break;
            }
        }
        let u = normalized(&self.mul_vec(&v)).unwrap_or_else(|| {
            let mut e = vec![Complex::new(T::zero(), T::zero()); self.rows];
            e[0] = Complex::new(T::one(), T::zero());
            e
        });
        (sigma, u, v)
    }
}

/// Dense real square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, value: T) {
        self.data[r * self.n + c] = self.data[r * self.n + c] + value;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| *a * *b).sum())
            .collect()
    }

    /// `self += coeff * v v^T` on the principal submatrix starting at `offset`.
    pub fn add_outer(&mut self, offset: usize, v: &[T], coeff: T) {
        for (i, vi) in v.iter().enumerate() {
            let s = coeff * *vi;
            if s == T::zero() {
                continue;
            }
            let row = (offset + i) * self.n + offset;
            for (j, vj) in v.iter().enumerate() {
                self.data[row + j] = self.data[row + j] + s * *vj;
            }
        }
    }

    /// Cholesky factor `L` (lower triangle, row-major) of a symmetric
    /// positive definite matrix, or `None` when a pivot is not positive.
    pub fn cholesky(&self) -> Option<Cholesky<T>> {
        let n = self.n;
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum = sum - l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(sum > T::zero()) || !sum.is_finite() {
                        return None;
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Some(Cholesky { n, l })
    }

    /// Largest absolute diagonal entry.
    pub fn max_diag(&self) -> T {
        (0..self.n)
            .map(|i| self.get(i, i).abs())
            .fold(T::zero(), T::max)
    }

    pub fn add_diagonal(&mut self, value: T) {
        for i in 0..self.n {
            self.add(i, i, value);
        }
    }
}

/// Lower-triangular Cholesky factor.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// Factors a symmetric positive semidefinite matrix, adding the smallest
/// diagonal shift (relative to the largest diagonal entry) that makes it
/// positive definite.
pub fn regularized_cholesky<T: Real>(m: &DenseMatrix<T>) -> Option<Cholesky<T>> {
    if let Some(f) = m.cholesky() {
        return Some(f);
    }
    let scale = m.max_diag().max(T::min_positive_value());
    let mut shift = scale * T::epsilon() * T::of(16.0);
    for _ in 0..12 {
        let mut shifted = m.clone();
        shifted.add_diagonal(shift);
        if let Some(f) = shifted.cholesky() {
            return Some(f);
        }
        shift = shift * T::of(100.0);
    }
    None
}

/// Solves a general square system by Gaussian elimination with partial
/// pivoting. `a` is row-major `n x n`.
pub fn lu_solve<T: Real>(mut a: Vec<T>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i * n + col]
                    .abs()
                    .partial_cmp(&a[j * n + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if !(a[pivot * n + col].abs() > T::zero()) {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                a[r * n + k] = a[r * n + k] - f * a[col * n + k];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in r + 1..n {
            s = s - a[r * n + k] * x[k];
        }
        x[r] = s / a[r * n + r];
    }
    Some(x)
}
