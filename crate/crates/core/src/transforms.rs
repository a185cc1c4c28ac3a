//! Cosine transforms, Cauchy integrals and their boundary values on the real axis.
//!
//! Quadrature is the composite trapezoid rule on the sample grid. Integrands that
//! carry a [`TailDecay`] model are continued analytically beyond the last node.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Result, ScatterError};
use crate::grid::{ComplexSamples, RealSamples, TailDecay, UniformGrid};
use crate::scalar::{imag_unit, lit, re, Cplx, Real};

/// Smallest admissible `Im k` for [`cauchy_integral`].
pub const POLE_FLOOR: f64 = 1e-12;

/// Largest `|H(end)| / max|H|` accepted by [`fourier_symbol`].
pub const DECAY_FRACTION: f64 = 1e-3;

/// `H~(k) = 2 int_0^inf cos(k t) H(t) dt` for an even real kernel sampled on `t >= 0`.
pub fn fourier_symbol<T: Real>(kernel: &RealSamples<T>, k_grid: &UniformGrid<T>) -> Result<RealSamples<T>> {
    fourier_symbol_with(kernel, k_grid, lit(DECAY_FRACTION))
}

pub fn fourier_symbol_with<T: Real>(
    kernel: &RealSamples<T>,
    k_grid: &UniformGrid<T>,
    decay_fraction: T,
) -> Result<RealSamples<T>> {
    let tg = kernel.grid();
    if tg.start().abs() > tg.step() * lit(1e-9) {
        return Err(ScatterError::InvalidInput("kernel grid must start at t = 0".into()));
    }
    let h = kernel.values();
    let max = kernel.sup_norm();
    let last = h[h.len() - 1].abs();
    if last > decay_fraction * max {
        return Err(ScatterError::NonDecayedInput {
            last: last.to_f64_lossy(),
            max: max.to_f64_lossy(),
            fraction: decay_fraction.to_f64_lossy(),
        });
    }
    let dt = tg.step();
    let n = h.len();
    let values: Vec<T> = (0..k_grid.len())
        .into_par_iter()
        .map(|i| {
            let k = k_grid.node(i).abs();
            let mut s = (h[0] + h[n - 1] * (k * tg.end()).cos()) * lit(0.5);
            for (j, hj) in h.iter().enumerate().take(n - 1).skip(1) {
                s += *hj * (k * T::from_usize_lossy(j) * dt).cos();
            }
            lit::<T>(2.0) * s * dt
        })
        .collect();
    RealSamples::new(*k_grid, values)
}

/// `int_a^inf y^{-n} / (y - k) dy` for the positive tail and
/// `int_{-inf}^{-b} y^{-n} / (y - k) dy` for the negative one, `n` in `1..=5`.
fn tail_integrals<T: Real>(n: u32, k: Cplx<T>, a: T, b: T) -> (Cplx<T>, Cplx<T>) {
    if k.norm() < lit::<T>(0.25) * a.min(b) {
        tail_series(n, k, a, b)
    } else {
        tail_closed(n, k, a, b)
    }
}

fn tail_series<T: Real>(n: u32, k: Cplx<T>, a: T, b: T) -> (Cplx<T>, Cplx<T>) {
    let one = re::<T>(T::one());
    let mut plus = Complex::new(T::zero(), T::zero());
    let mut minus = plus;
    let mut km = one;
    for m in 0..80u32 {
        let p = T::from_usize_lossy((n + m) as usize);
        plus += km * a.powi(-((n + m) as i32)) / p;
        let sgn = if (n + m).is_multiple_of(2) { -T::one() } else { T::one() };
        minus += km * (sgn * b.powi(-((n + m) as i32)) / p);
        km *= k;
    }
    (plus, minus)
}

fn tail_closed<T: Real>(n: u32, k: Cplx<T>, a: T, b: T) -> (Cplx<T>, Cplx<T>) {
    let one = re::<T>(T::one());
    // y^{-m}/(y-k) = (y^{1-m}/(y-k) - y^{-m}) / k
    let mut p = -(one - k / a).ln() / k;
    let mut m = (one + k / b).ln() / k;
    for j in 2..=n {
        let e = T::from_usize_lossy(j as usize - 1);
        let jp = T::one() / (e * a.powi(j as i32 - 1));
        let jm = (-b).powi(1 - j as i32) / (-e);
        p = (p - re(jp)) / k;
        m = (m - re(jm)) / k;
    }
    (p, m)
}

fn tail_rate<T: Real>(tail: &TailDecay<T, Cplx<T>>) -> Result<u32> {
    let r = tail.rate.round();
    if (tail.rate - r).abs() > lit(1e-12) || r < T::one() || r > lit(3.0) {
        return Err(ScatterError::UnsupportedTail(tail.rate.to_f64_lossy()));
    }
    Ok(r.to_u32().unwrap_or(0))
}

/// Contribution of the tail model to `int g(y)/(y-k) dy` outside the sampled range.
fn tail_contribution<T: Real>(g: &ComplexSamples<T>, k: Cplx<T>) -> Result<Cplx<T>> {
    let Some(tail) = g.tail() else { return Ok(Complex::new(T::zero(), T::zero())) };
    let n = tail_rate(tail)?;
    let a = g.grid().end();
    let b = -g.grid().start();
    if a <= T::zero() || b <= T::zero() {
        return Err(ScatterError::InvalidInput("tail model needs a grid straddling y = 0".into()));
    }
    let (p, m) = tail_integrals(n, k, a, b);
    let mut total = tail.coefficient * (p + m);
    if let Some(d) = tail.next {
        let (p, m) = tail_integrals(n + 2, k, a, b);
        total += d * (p + m);
    }
    Ok(total)
}

/// `(1 / 2 pi i) int g(y) / (y - k) dy` over the real line, `Im k > 0`.
pub fn cauchy_integral<T: Real>(g: &ComplexSamples<T>, k: Cplx<T>) -> Result<Cplx<T>> {
    if k.im <= lit(POLE_FLOOR) {
        return Err(ScatterError::PoleOnContour { im: k.im.to_f64_lossy() });
    }
    let grid = g.grid();
    let vals = g.values();
    let n = vals.len();
    let mut s = Complex::new(T::zero(), T::zero());
    for (j, v) in vals.iter().enumerate() {
        let w = if j == 0 || j == n - 1 { lit(0.5) } else { T::one() };
        s += *v * w / (re(grid.node(j)) - k);
    }
    s = s * grid.step() + tail_contribution(g, k)?;
    Ok(s / (imag_unit::<T>() * T::TAU()))
}

/// Value at a real point and derivative estimate used by the singularity subtraction.
fn value_and_slope<T: Real>(g: &ComplexSamples<T>, k0: T) -> (Cplx<T>, Cplx<T>) {
    let grid = g.grid();
    let v = g.values();
    let n = v.len();
    let h = grid.step();
    let u = ((k0 - grid.start()) / h).max(T::zero());
    let i = u.floor().to_usize().unwrap_or(0).min(n - 2);
    let w = u - T::from_usize_lossy(i);
    let slope_at = |j: usize| -> Cplx<T> {
        if j == 0 {
            (v[1] - v[0]) / h
        } else if j == n - 1 {
            (v[n - 1] - v[n - 2]) / h
        } else {
            (v[j + 1] - v[j - 1]) / (h * lit(2.0))
        }
    };
    let val = v[i] * (T::one() - w) + v[i + 1] * w;
    let slope = slope_at(i) * (T::one() - w) + slope_at(i + 1) * w;
    (val, slope)
}

/// Boundary value from the upper half-plane of the Cauchy integral of `g` at real `k0`:
/// `(1 / 2 pi i) P.V. int g(y)/(y - k0) dy + g(k0) / 2`.
pub fn hilbert_boundary<T: Real>(g: &ComplexSamples<T>, k0: T) -> Result<Cplx<T>> {
    let grid = g.grid();
    let (a, b) = (grid.start(), grid.end());
    if !(k0 > a && k0 < b) {
        return Err(ScatterError::InvalidInput(format!("boundary point {k0} outside ({a}, {b})")));
    }
    let (g0, slope) = value_and_slope(g, k0);
    let pv = principal_value(g, k0, g0, slope)?;
    Ok(pv / (imag_unit::<T>() * T::TAU()) + g0 * T::lit(0.5))
}

fn principal_value<T: Real>(g: &ComplexSamples<T>, k0: T, g0: Cplx<T>, slope: Cplx<T>) -> Result<Cplx<T>> {
    let grid = g.grid();
    let vals = g.values();
    let n = vals.len();
    let h = grid.step();
    let tiny = h * lit(1e-9);
    let mut s = Complex::new(T::zero(), T::zero());
    for (j, v) in vals.iter().enumerate() {
        let d = grid.node(j) - k0;
        let term = if d.abs() < tiny { slope } else { (*v - g0) / d };
        let w = if j == 0 || j == n - 1 { lit(0.5) } else { T::one() };
        s += term * w;
    }
    s = s * h + g0 * ((grid.end() - k0) / (k0 - grid.start())).ln();
    Ok(s + tail_contribution(g, re(k0))?)
}

/// [`hilbert_boundary`] evaluated at every interior node of the sample grid.
///
/// End nodes reuse the one-sided slope; callers normally discard them.
pub fn hilbert_boundary_nodes<T: Real>(g: &ComplexSamples<T>) -> Result<Vec<Cplx<T>>> {
    let grid = *g.grid();
    // validate the tail model once
    tail_contribution(g, Complex::new(T::zero(), T::one()))?;
    let v = g.values();
    let n = v.len();
    let h = grid.step();
    let out: Vec<Cplx<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let k0 = grid.node(i);
            let slope = if i == 0 {
                (v[1] - v[0]) / h
            } else if i == n - 1 {
                (v[n - 1] - v[n - 2]) / h
            } else {
                (v[i + 1] - v[i - 1]) / (h * lit(2.0))
            };
            let mut s = Complex::new(T::zero(), T::zero());
            for (j, vj) in v.iter().enumerate() {
                if j == i {
                    continue;
                }
                let w = if j == 0 || j == n - 1 { lit(0.5) } else { T::one() };
                s += (*vj - v[i]) * (w / (grid.node(j) - k0));
            }
            let wi = if i == 0 || i == n - 1 { lit(0.5) } else { T::one() };
            s += slope * wi;
            s *= h;
            if i > 0 && i < n - 1 {
                s += v[i] * ((grid.end() - k0) / (k0 - grid.start())).ln();
                s += tail_contribution(g, re(k0)).unwrap_or_default();
            }
            s / (imag_unit::<T>() * T::TAU()) + v[i] * T::lit(0.5)
        })
        .collect();
    Ok(out)
}

/// Least-squares fit `v(y) ~ c y^{-n} + d y^{-n-2}` over the outermost tenth of the
/// positive nodes; returns `c`.
pub fn fit_tail<T: Real>(grid: &UniformGrid<T>, values: &[Cplx<T>], rate: i32) -> Cplx<T> {
    fit_tail_pair(grid, values, rate).0
}

/// As [`fit_tail`], returning both `c` and `d`.
pub fn fit_tail_pair<T: Real>(grid: &UniformGrid<T>, values: &[Cplx<T>], rate: i32) -> (Cplx<T>, Cplx<T>) {
    let n = values.len();
    let first = n - (n / 10).max(4).min(n);
    let (mut s11, mut s12, mut s22) = (T::zero(), T::zero(), T::zero());
    let mut r1 = Complex::new(T::zero(), T::zero());
    let mut r2 = r1;
    for (j, v) in values.iter().enumerate().skip(first) {
        let y = grid.node(j);
        if y <= T::zero() {
            continue;
        }
        let b1 = y.powi(-rate);
        let b2 = y.powi(-rate - 2);
        s11 += b1 * b1;
        s12 += b1 * b2;
        s22 += b2 * b2;
        r1 += *v * b1;
        r2 += *v * b2;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() <= T::epsilon() * s11 * s22 {
        return (r1 / s11, Complex::new(T::zero(), T::zero()));
    }
    ((r1 * s22 - r2 * s12) / det, (r2 * s11 - r1 * s12) / det)
}
