//! Square banded matrices with explicit lower/upper bandwidths.
//!
//! Every matrix in the two-user model has at most two non-zero
//! sub/super-diagonals, so all products and factorizations here run in
//! `O(n · w²)` for band width `w`. Dense conversion exists for oracles and for
//! the few routines that need general (unstructured) solves.

use std::ops::{Add, Mul};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Square real matrix whose non-zeros satisfy `-lower <= j - i <= upper`.
///
/// Storage is row-major over the band: row `i` holds columns
/// `i - lower ..= i + upper`, out-of-range slots are kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let lower = lower.min(n.saturating_sub(1));
        let upper = upper.min(n.saturating_sub(1));
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0, 0);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix by evaluating `f(i, j)` on every in-band position.
    pub fn from_fn(n: usize, lower: usize, upper: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n, lower, upper);
        for i in 0..n {
            for j in m.row_range(i) {
                let v = f(i, j);
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), 0, 0, |i, _| diag[i])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.lower
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.upper
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    /// Column indices stored for row `i`.
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        let lo = i.saturating_sub(self.lower);
        let hi = (i + self.upper + 1).min(self.n);
        lo..hi
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.lower >= i && j <= i + self.upper
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.lower - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Sets entry `(i, j)`.
    ///
    /// # Panics
    /// If `(i, j)` lies outside the stored band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            self.in_band(i, j),
            "({i}, {j}) outside band (lower {}, upper {}) of {}x{} matrix",
            self.lower,
            self.upper,
            self.n,
            self.n
        );
        let s = self.slot(i, j);
        self.data[s] = value;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, self.upper, self.lower, |i, j| self.get(j, i))
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        Self::from_fn(
            self.n,
            self.lower.max(other.lower),
            self.upper.max(other.upper),
            |i, j| self.get(i, j) + factor * other.get(i, j),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, -1.0)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut out = Self::zeros(self.n, self.lower + other.lower, self.upper + other.upper);
        for i in 0..self.n {
            for k in self.row_range(i) {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in other.row_range(k) {
                    let s = out.slot(i, j);
                    out.data[s] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// `diag(d) * self`.
    pub fn scale_rows(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.n, "dimension mismatch");
        Self::from_fn(self.n, self.lower, self.upper, |i, j| d[i] * self.get(i, j))
    }

    /// `self * diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.n, "dimension mismatch");
        Self::from_fn(self.n, self.lower, self.upper, |i, j| self.get(i, j) * d[j])
    }

    /// Matrix-vector product over any scalar that can be scaled by `f64`.
    pub fn mul_vec<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
    {
        assert_eq!(x.len(), self.n, "dimension mismatch");
        (0..self.n)
            .map(|i| {
                self.row_range(i)
                    .fold(T::default(), |acc, j| acc + x[j] * self.get(i, j))
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let lower = self.lower.max(other.lower);
        let upper = self.upper.max(other.upper);
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            let lo = i.saturating_sub(lower);
            let hi = (i + upper + 1).min(self.n);
            for j in lo..hi {
                worst = worst.max((self.get(i, j) - other.get(i, j)).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row_range(i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Cholesky factorization `A = L Lᵀ` reading only the lower band.
    ///
    /// `context` labels the matrix in the error raised when a pivot is not
    /// strictly positive.
    pub fn cholesky(&self, context: &str) -> Result<BandCholesky> {
        let p = self.lower;
        let n = self.n;
        let mut l = Self::zeros(n, p, 0);
        for j in 0..n {
            let lo = j.saturating_sub(p);
            let mut pivot = self.get(j, j);
            for k in lo..j {
                let v = l.get(j, k);
                pivot -= v * v;
            }
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    context: context.to_string(),
                    pivot: j,
                });
            }
            let diag = pivot.sqrt();
            l.set(j, j, diag);
            for i in (j + 1)..(j + p + 1).min(n) {
                let mut v = self.get(i, j);
                for k in i.saturating_sub(p)..j {
                    v -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, v / diag);
            }
        }
        Ok(BandCholesky { l })
    }
}

/// Lower-triangular banded Cholesky factor.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    pub fn factor(&self) -> &BandMatrix {
        &self.l
    }

    /// Natural log of `det(A)`.
    pub fn ln_det(&self) -> f64 {
        2.0 * (0..self.l.dim()).map(|i| self.l.get(i, i).ln()).sum::<f64>()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.l.dim();
        let p = self.l.lower_bandwidth();
        assert_eq!(b.len(), n, "dimension mismatch");
        for i in 0..n {
            let mut v = b[i];
            for k in i.saturating_sub(p)..i {
                v -= self.l.get(i, k) * b[k];
            }
            b[i] = v / self.l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in (i + 1)..(i + p + 1).min(n) {
                v -= self.l.get(k, i) * b[k];
            }
            b[i] = v / self.l.get(i, i);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
