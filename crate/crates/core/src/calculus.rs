//! Finite differences, smoothing and interpolation on uniform grids.

use crate::error::{Result, ScatterError};
use crate::scalar::{lit, Real};

/// Fourth-order first derivative: central five-point stencil inside, one-sided
/// five-point stencils at the two nodes nearest each end.
pub fn derivative<T: Real>(v: &[T], h: T) -> Vec<T> {
    let n = v.len();
    assert!(n >= 5, "derivative stencil needs at least 5 samples");
    let c = |x: f64| T::lit(x);
    let d = h * c(12.0);
    let mut out = vec![T::zero(); n];
    out[0] = (c(-25.0) * v[0] + c(48.0) * v[1] - c(36.0) * v[2] + c(16.0) * v[3] - c(3.0) * v[4]) / d;
    out[1] = (c(-3.0) * v[0] - c(10.0) * v[1] + c(18.0) * v[2] - c(6.0) * v[3] + v[4]) / d;
    for i in 2..n - 2 {
        out[i] = (v[i - 2] - c(8.0) * v[i - 1] + c(8.0) * v[i + 1] - v[i + 2]) / d;
    }
    out[n - 2] = -(c(-3.0) * v[n - 1] - c(10.0) * v[n - 2] + c(18.0) * v[n - 3] - c(6.0) * v[n - 4] + v[n - 5]) / d;
    out[n - 1] =
        -(c(-25.0) * v[n - 1] + c(48.0) * v[n - 2] - c(36.0) * v[n - 3] + c(16.0) * v[n - 4] - c(3.0) * v[n - 5]) / d;
    out
}

/// Three-point moving average; end values are kept.
pub fn smooth3<T: Real>(v: &[T]) -> Vec<T> {
    let mut out = v.to_vec();
    for i in 1..v.len().saturating_sub(1) {
        out[i] = (v[i - 1] + v[i] + v[i + 1]) / lit(3.0);
    }
    out
}

/// Four-point Lagrange interpolation of equispaced samples at fractional index `u`.
pub fn lagrange4<T: Real>(v: &[T], u: T) -> T {
    let n = v.len();
    if n < 4 {
        let i = u.floor().to_usize().unwrap_or(0).min(n.saturating_sub(2));
        let w = u - T::from_usize_lossy(i);
        return v[i] * (T::one() - w) + v[(i + 1).min(n - 1)] * w;
    }
    let base = u.floor().to_isize().unwrap_or(0) - 1;
    let base = base.clamp(0, n as isize - 4) as usize;
    let x = u - T::from_usize_lossy(base);
    let mut acc = T::zero();
    for j in 0..4 {
        let mut w = T::one();
        let xj = T::from_usize_lossy(j);
        for m in 0..4 {
            if m != j {
                let xm = T::from_usize_lossy(m);
                w *= (x - xm) / (xj - xm);
            }
        }
        acc += w * v[base + j];
    }
    acc
}

/// Natural cubic spline through `(x_i, y_i)` with strictly increasing abscissae.
#[derive(Debug, Clone)]
pub struct CubicSpline<T> {
    x: Vec<T>,
    y: Vec<T>,
    m: Vec<T>,
}

impl<T: Real> CubicSpline<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(ScatterError::LengthMismatch { expected: n, got: y.len() });
        }
        if n < 3 {
            return Err(ScatterError::InvalidInput("spline needs at least 3 points".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ScatterError::InvalidInput("spline abscissae must increase strictly".into()));
        }
        // tridiagonal system for second derivatives, natural ends
        let mut m = vec![T::zero(); n];
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0;
            let b = lit::<T>(2.0) * (h0 + h1);
            let r = lit::<T>(6.0) * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let denom = b - a * c[i - 1];
            c[i] = h1 / denom;
            d[i] = (r - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(Self { x, y, m })
    }

    pub fn eval(&self, t: T) -> T {
        let n = self.x.len();
        let i = match self.x.iter().position(|&xi| xi > t) {
            Some(0) => 0,
            Some(p) => p - 1,
            None => n - 2,
        }
        .min(n - 2);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let six = lit::<T>(6.0);
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / six
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_is_fourth_order() {
        let err = |h: f64| {
            let n = (2.0 / h) as usize + 1;
            let v: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
            derivative(&v, h)
                .iter()
                .enumerate()
                .map(|(i, d)| (d - (i as f64 * h).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(0.02) / err(0.01);
        assert!(ratio > 12.0, "observed ratio {ratio}");
    }

    #[test]
    fn derivative_exact_on_quartics() {
        let h = 0.1;
        let v: Vec<f64> = (0..9).map(|i| (i as f64 * h).powi(4)).collect();
        for (i, d) in derivative(&v, h).iter().enumerate() {
            let x = i as f64 * h;
            assert!((d - 4.0 * x.powi(3)).abs() < 1e-10);
        }
    }

    #[test]
    fn lagrange_exact_on_cubics() {
        let v: Vec<f64> = (0..10).map(|i| (i as f64).powi(3) - 2.0 * i as f64).collect();
        for &u in &[0.3, 4.5, 8.7] {
            assert!((lagrange4(&v, u) - (u * u * u - 2.0 * u)).abs() < 1e-10);
        }
    }

    #[test]
    fn spline_interpolates_nodes_and_smooth_data() {
        let x: Vec<f64> = vec![0.0, 0.3, 0.5, 1.1, 1.6, 2.0, 2.9, 3.3];
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = CubicSpline::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((s.eval(*xi) - yi).abs() < 1e-12);
        }
        assert!((s.eval(1.3) - 1.3_f64.sin()).abs() < 5e-3);
        assert!(CubicSpline::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
    }
}
