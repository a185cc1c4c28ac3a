//! Dense LU and the Levinson–Durbin recursion for symmetric Toeplitz matrices.

use crate::error::{Result, ScatterError};
use crate::scalar::{lit, Real};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| *a * *b).sum()).collect()
    }

    /// Induced 1-norm (maximum column sum).
    pub fn norm_1(&self) -> T {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Induced infinity-norm (maximum row sum).
    pub fn norm_inf(&self) -> T {
        (0..self.n).map(|i| self.row(i).iter().map(|v| v.abs()).sum::<T>()).fold(T::zero(), T::max)
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn factor(mut a: Matrix<T>) -> Result<Self> {
        let n = a.n;
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.norm_inf().max(T::min_positive_value());
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, a.get(i, k).abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= T::epsilon() * scale {
                return Err(ScatterError::SingularSystem { pivot: pivot.to_f64_lossy(), step: k });
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let akk = a.get(k, k);
            for i in k + 1..n {
                let l = a.get(i, k) / akk;
                a.set(i, k, l);
                if l != T::zero() {
                    for j in k + 1..n {
                        let v = a.get(i, j) - l * a.get(k, j);
                        a.set(i, j, v);
                    }
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: T = row[..i].iter().zip(&x[..i]).map(|(a, b)| *a * *b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: T = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| *a * *b).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

/// One step of the Levinson–Durbin recursion for the symmetric Toeplitz matrices
/// `R_m = [r_{|i-j|}]`, `m = 0, 1, ...`.
///
/// After `m` steps, `R_m [1, a_1, ..., a_m]^T = err * e_0`, so the first column of
/// `R_m^{-1}` is `[1, a_1, ..., a_m] / err`.
#[derive(Debug, Clone)]
pub struct Levinson<T> {
    coeffs: Vec<T>,
    err: T,
    scratch: Vec<T>,
}

impl<T: Real> Levinson<T> {
    pub fn new(r0: T) -> Result<Self> {
        if !(r0 > T::zero()) {
            return Err(ScatterError::SingularSystem { pivot: r0.to_f64_lossy(), step: 0 });
        }
        Ok(Self { coeffs: vec![T::one()], err: r0, scratch: Vec::new() })
    }

    /// Order of the current solution (`R_m` has size `m + 1`).
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn error(&self) -> T {
        self.err
    }

    /// `[1, a_1, ..., a_m]`.
    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    /// Extend by one order with `r` holding at least `r_0 ..= r_{m+1}`; returns the
    /// reflection coefficient.
    pub fn extend(&mut self, r: &[T]) -> Result<T> {
        let m = self.coeffs.len();
        let mut acc = r[m];
        for j in 1..m {
            acc += self.coeffs[j] * r[m - j];
        }
        let kappa = -acc / self.err;
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.coeffs);
        for j in 1..m {
            self.coeffs[j] = self.scratch[j] + kappa * self.scratch[m - j];
        }
        self.coeffs.push(kappa);
        let err = self.err * (T::one() - kappa * kappa);
        if !(err > T::epsilon() * lit(16.0) * r[0]) {
            return Err(ScatterError::SingularSystem { pivot: err.to_f64_lossy(), step: m });
        }
        self.err = err;
        Ok(kappa)
    }
}
