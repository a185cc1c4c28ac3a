//! Gelfand–Levitan inversion `K(x,y) + L(x,y) + int_0^x K(x,s) L(s,y) ds = 0`,
//! `L(x,y) = M(x-y) - M(x+y)`, `q = 2 d/dx K(x,x)`.
//!
//! `M` is the same transform of `|f|^{-2} - 1` as the Krein kernel `H`.

use rayon::prelude::*;

use crate::calculus::derivative;
use crate::error::{Result, ScatterError};
use crate::forward::Potential;
use crate::grid::{RealSamples, UniformGrid};
use crate::kernel::{cosine_transform, kernel_from_jost};
use crate::linalg::{Lu, Matrix};
use crate::riemann::JostClosure;
use crate::scalar::{lit, Real};

/// `M(t)` tabulated on `t >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlKernel<T> {
    pub m: RealSamples<T>,
}

impl<T: Real> GlKernel<T> {
    /// `L(x, y)` by interpolation in the `M` table.
    pub fn value(&self, x: T, y: T) -> T {
        self.m.interpolate((x - y).abs()) - self.m.interpolate(x + y)
    }
}

pub fn gl_kernel<T: Real>(f: &JostClosure<T>, t_grid: &UniformGrid<T>) -> Result<GlKernel<T>> {
    Ok(GlKernel { m: kernel_from_jost(f, t_grid)?.h })
}

/// `M` from the spectral density `d rho / dk = 2 k^2 / (pi |f|^2)` given on a positive
/// half-offset grid (no bound states).
pub fn gl_kernel_from_spectral<T: Real>(rho: &RealSamples<T>, t_grid: &UniformGrid<T>) -> Result<GlKernel<T>> {
    let excess = rho.map(|k, r| T::PI() * *r / (lit::<T>(2.0) * k * k) - T::one());
    Ok(GlKernel { m: cosine_transform(&excess, t_grid)? })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlRow<T> {
    pub x: T,
    /// `K(x, y)` for `y = 0, h, ..., x`.
    pub row: RealSamples<T>,
    pub residual: T,
}

fn table_stride<T: Real>(kernel: &GlKernel<T>, h: T) -> Result<usize> {
    let r = h / kernel.m.grid().step();
    let s = r.round();
    if (r - s).abs() > lit(1e-9) || s < T::one() {
        return Err(ScatterError::InvalidGrid("step must be a multiple of the M table step".into()));
    }
    Ok(s.to_usize().unwrap_or(1))
}

/// Trapezoid discretization on `y_j = j h`, `x = n h`: returns `(I + L W, -L(x, .))`.
pub fn gl_system<T: Real>(kernel: &GlKernel<T>, x: T, h: T) -> Result<(Matrix<T>, Vec<T>)> {
    let stride = table_stride(kernel, h)?;
    let r = x / h;
    let n = r.round();
    if (r - n).abs() > lit(1e-9) || n < T::zero() {
        return Err(ScatterError::InvalidGrid(format!("x = {x} is not a multiple of h")));
    }
    let n = n.to_usize().unwrap_or(0);
    let m = kernel.m.values();
    if 2 * n * stride >= m.len() {
        return Err(ScatterError::InvalidGrid(format!("M table must reach 2x = {}", x * lit(2.0))));
    }
    let l = |i: usize, j: usize| m[i.abs_diff(j) * stride] - m[(i + j) * stride];
    let w = |j: usize| if j == 0 || j == n { h * lit(0.5) } else { h };
    let a = Matrix::from_fn(n + 1, |i, j| if i == j { T::one() } else { T::zero() } + l(i, j) * w(j));
    let b = (0..=n).map(|i| -l(n, i)).collect();
    Ok((a, b))
}

pub fn solve_gl<T: Real>(kernel: &GlKernel<T>, x: T, h: T) -> Result<GlRow<T>> {
    let (a, b) = gl_system(kernel, x, h)?;
    let k = Lu::factor(a.clone())?.solve(&b);
    let ak = a.mul_vec(&k);
    let residual = ak.iter().zip(&b).fold(T::zero(), |r, (p, q)| r.max((*p - *q).abs()));
    Ok(GlRow { x, row: RealSamples::new(UniformGrid::new(T::zero(), h, k.len())?, k)?, residual })
}

/// `K(x, x)` at every node of `x_grid`. Cubic in the grid size per node; meant for
/// validation on coarse grids.
pub fn gl_diagonal<T: Real>(kernel: &GlKernel<T>, x_grid: &UniformGrid<T>) -> Result<RealSamples<T>> {
    let h = x_grid.step();
    let xs: Vec<T> = x_grid.nodes().collect();
    let d = xs
        .par_iter()
        .map(|&x| {
            if x == T::zero() {
                return Ok(T::zero());
            }
            solve_gl(kernel, x, h).map(|r| r.row.values()[r.row.len() - 1])
        })
        .collect::<Result<Vec<T>>>()?;
    RealSamples::new(*x_grid, d)
}

/// `q = 2 d/dx K(x, x)`.
pub fn gl_potential<T: Real>(diag: &RealSamples<T>) -> Result<Potential<T>> {
    let d = derivative(diag.values(), diag.grid().step());
    Potential::new(RealSamples::new(*diag.grid(), d.into_iter().map(|v| v * lit(2.0)).collect())?)
}

/// `q` at isolated checkpoints from five solves each (fourth-order stencil, one-sided
/// near the origin where `K(0,0) = 0`).
pub fn gl_potential_at<T: Real>(kernel: &GlKernel<T>, xs: &[T], h: T) -> Result<Vec<T>> {
    xs.par_iter()
        .map(|&x| {
            let n = (x / h).round();
            if (x / h - n).abs() > lit(1e-9) {
                return Err(ScatterError::InvalidGrid(format!("checkpoint {x} is not a multiple of h")));
            }
            let forward = n < lit(2.0);
            let base = if forward { n } else { n - lit(2.0) };
            let diag = |j: usize| -> Result<T> {
                let xj = (base + T::from_usize_lossy(j)) * h;
                if xj == T::zero() {
                    return Ok(T::zero());
                }
                let r = solve_gl(kernel, xj, h)?;
                Ok(r.row.values()[r.row.len() - 1])
            };
            let k: Vec<T> = (0..5).map(diag).collect::<Result<_>>()?;
            let c: [f64; 5] = if forward { [-25.0, 48.0, -36.0, 16.0, -3.0] } else { [1.0, -8.0, 0.0, 8.0, -1.0] };
            let d: T = k.iter().zip(c).map(|(v, w)| *v * lit(w)).sum::<T>() / (h * lit(12.0));
            Ok(d * lit(2.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::spectral_density;
    use crate::kernel::marchenko_kernel;
    use crate::marchenko::{marchenko_potential, solve_marchenko_family, MarchenkoOptions};
    use crate::scalar::Cplx;
    use num_complex::Complex;

    fn bargmann_m(h: f64, end: f64) -> GlKernel<f64> {
        let g = UniformGrid::from_zero(end, h).unwrap();
        GlKernel { m: RealSamples::from_fn(g, |t: f64| -0.75 * (-2.0 * t).exp()) }
    }

    fn bargmann_q(x: f64) -> f64 {
        let e = (-2.0 * x).exp();
        24.0 * e / ((3.0 - e) * (3.0 - e))
    }

    fn bargmann_jost(kg: &UniformGrid<f64>) -> JostClosure<f64> {
        JostClosure::from_fn(kg, |k| Complex::new(k, 2.0) / Complex::new(k, 1.0), 1.0).unwrap()
    }

    #[test]
    fn zero_kernel() {
        let k = GlKernel { m: RealSamples::from_fn(UniformGrid::from_zero(4.0, 0.1).unwrap(), |_| 0.0) };
        assert_eq!(solve_gl(&k, 1.0, 0.1).unwrap().row.sup_norm(), 0.0);
        let d = gl_diagonal(&k, &UniformGrid::from_zero(1.0, 0.1).unwrap()).unwrap();
        assert_eq!(gl_potential(&d).unwrap().samples().sup_norm(), 0.0);
        let kg = UniformGrid::half_offset(0.1, 100).unwrap();
        let f = JostClosure::from_fn(&kg, |_| Complex::new(1.0, 0.0), 0.0).unwrap();
        assert!(gl_kernel(&f, &UniformGrid::from_zero(2.0, 0.1).unwrap()).unwrap().m.sup_norm() < 1e-15);
    }

    #[test]
    fn bargmann_m_and_l() {
        let kg = UniformGrid::half_offset(0.01, 20000).unwrap();
        let tg = UniformGrid::from_zero(4.0, 0.125).unwrap();
        let k = gl_kernel(&bargmann_jost(&kg), &tg).unwrap();
        for &(x, y) in &[(0.5, 0.25), (1.0, 1.0), (2.0, 0.0), (1.5, 0.5)] {
            let exact = -0.75 * ((-2.0 * f64::abs(x - y)).exp() - (-2.0 * (x + y)).exp());
            assert!((k.value(x, y) - exact).abs() < 1e-5, "({x},{y})");
        }
        let h = kernel_from_jost(&bargmann_jost(&kg), &tg).unwrap();
        assert_eq!(h.h, k.m);
    }

    #[test]
    fn dense_oracle_matches() {
        use nalgebra::{DMatrix, DVector};
        let k = bargmann_m(0.05, 4.0);
        let (x, h) = (1.5, 0.1);
        let n = 15;
        let w = |j: usize| if j == 0 || j == n { h / 2.0 } else { h };
        let a = DMatrix::from_fn(n + 1, n + 1, |i, j| {
            (i == j) as u8 as f64 + k.value(j as f64 * h, i as f64 * h) * w(j)
        });
        let b = DVector::from_fn(n + 1, |i, _| -k.value(x, i as f64 * h));
        let oracle = a.lu().solve(&b).unwrap();
        let row = solve_gl(&k, x, h).unwrap();
        for (p, q) in row.row.values().iter().zip(oracle.iter()) {
            assert!((p - q).abs() < 1e-13);
        }
        assert!(row.residual < 1e-13);
        assert_eq!(row.row.values()[0], 0.0);
    }

    #[test]
    fn bargmann_potential() {
        let h = 1.0 / 80.0;
        let k = bargmann_m(h, 12.0);
        let xs = [0.0, 0.2, 0.5, 1.0, 2.0, 3.5, 5.0];
        let q = gl_potential_at(&k, &xs, h).unwrap();
        for (x, v) in xs.iter().zip(&q) {
            assert!((v - bargmann_q(*x)).abs() < 1e-3, "x={x}: {v}");
        }
        let d = gl_diagonal(&k, &UniformGrid::from_zero(1.0, h).unwrap()).unwrap();
        let qd = gl_potential(&d).unwrap();
        for (x, v) in qd.samples().iter().filter(|(x, _)| *x > 0.05 && *x < 0.95) {
            assert!((v - bargmann_q(x)).abs() < 1e-3, "x={x}");
        }
    }

    #[test]
    fn opposite_signs_same_potential() {
        // GL differentiates +2 K(x,x), Marchenko -2 A(x,x); both give q
        let h = 1.0 / 32.0;
        let gl = gl_potential_at(&bargmann_m(h, 8.0), &[1.0], h).unwrap()[0];
        let f = crate::kernel::MarchenkoKernel {
            f: RealSamples::from_fn(UniformGrid::from_zero(30.0, h).unwrap(), |x: f64| -2.0 / 3.0 * (-x).exp()),
        };
        let sol = solve_marchenko_family(&f, &UniformGrid::from_zero(2.0, h).unwrap(), &MarchenkoOptions::default()).unwrap();
        let qm = marchenko_potential(&sol).unwrap();
        let mq = qm.samples().values()[32];
        assert!((gl - mq).abs() < 2e-3, "{gl} vs {mq}");
        assert!(gl > 0.0 && mq > 0.0);
    }

    #[test]
    fn spectral_route_equals_s_route() {
        let kg = UniformGrid::half_offset(0.01, 20000).unwrap();
        let f = bargmann_jost(&kg);
        let tg = UniformGrid::from_zero(6.0, 1.0 / 32.0).unwrap();
        let via_f = gl_kernel(&f, &tg).unwrap();
        let via_rho = gl_kernel_from_spectral(&spectral_density(&f).unwrap(), &tg).unwrap();
        assert!(via_f.m.values().iter().zip(via_rho.m.values()).all(|(p, q)| (p - q).abs() < 1e-10));
        let xs = [0.5, 1.5, 2.5];
        let a = gl_potential_at(&via_f, &xs, 1.0 / 32.0).unwrap();
        let b = gl_potential_at(&via_rho, &xs, 1.0 / 32.0).unwrap();
        for ((x, p), q) in xs.iter().zip(&a).zip(&b) {
            assert!((p - q).abs() < 1e-8);
            assert!((p - bargmann_q(*x)).abs() < 2e-3);
        }
        // S-route Marchenko kernel is consistent with the same data
        let s = crate::grid::ComplexSamples::from_fn(kg, |k| {
            let fk: Cplx<f64> = Complex::new(k, 2.0) / Complex::new(k, 1.0);
            fk.conj() / fk
        });
        let fm = marchenko_kernel(&s, &UniformGrid::from_zero(2.0, 0.5).unwrap()).unwrap();
        assert!((fm.f.values()[2] + 2.0 / 3.0 * (-1.0f64).exp()).abs() < 1e-5);
    }
}
