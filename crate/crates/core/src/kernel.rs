//! Krein kernel `H(t)` from the Jost function and back, and the Marchenko kernel
//! `F(x)` from the S-matrix.
//!
//! Momentum integrals use the midpoint rule on the half-offset grid `k_i = (i + 1/2) dk`
//! (which integrates exactly over `[0, K]`, `K = N dk`) and a fitted power tail beyond `K`
//! integrated in closed form through sine integrals.

use rayon::prelude::*;

use crate::error::{Result, ScatterError};
use crate::forward::{check_nonvanishing, unitarity_defect, UNITARITY_TOL};
use crate::grid::{RealSamples, UniformGrid};
use crate::riemann::{outer_factor, JostClosure};
use crate::scalar::{lit, re, Cplx, Real};
use crate::special::{cosine_tail_quart, cosine_tail_sq, sine_tail, sine_tail_cube};
use crate::transforms::{fit_tail_pair, fourier_symbol};

/// Smallest symbol margin accepted before the Krein equations are solved.
pub const MIN_SYMBOL_MARGIN: f64 = 1e-6;

/// Even kernel `H` sampled on `t >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct KreinKernel<T> {
    pub h: RealSamples<T>,
    pub h0: T,
    /// Grid minimum of `1 + H~(k)`.
    pub symbol_margin: T,
}

impl<T: Real> KreinKernel<T> {
    /// Kernel from samples; the margin is computed from the cosine transform on `k_grid`.
    pub fn from_samples(h: RealSamples<T>, k_grid: &UniformGrid<T>) -> Result<Self> {
        let symbol = fourier_symbol(&h, k_grid)?;
        let margin = symbol.values().iter().fold(T::infinity(), |m, v| m.min(T::one() + *v));
        let h0 = h.values()[0];
        Ok(Self { h, h0, symbol_margin: margin })
    }

    pub fn value(&self, t: T) -> T {
        self.h.interpolate(t.abs())
    }

    pub fn ensure_positive(&self) -> Result<()> {
        if self.symbol_margin <= lit(MIN_SYMBOL_MARGIN) {
            return Err(ScatterError::SymbolNotPositive { min: self.symbol_margin.to_f64_lossy(), k: f64::NAN });
        }
        Ok(())
    }
}

/// `F(x)` sampled on `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarchenkoKernel<T> {
    pub f: RealSamples<T>,
}

/// `|f|^{-2} - 1` on the Jost grid, its tail `c/k^2 + d/k^4` and the cutoff `K`.
fn inverse_modulus_excess<T: Real>(f: &JostClosure<T>) -> Result<(Vec<T>, (T, T), T)> {
    check_nonvanishing(f)?;
    let g = f.grid();
    let s: Vec<T> = f.values().values().iter().map(|v| T::one() / v.norm_sqr() - T::one()).collect();
    let (c, d) = even_tail(g, &s);
    Ok((s, (c, d), g.end() + g.step() * lit(0.5)))
}

fn even_tail<T: Real>(g: &UniformGrid<T>, s: &[T]) -> (T, T) {
    let cs: Vec<Cplx<T>> = s.iter().map(|v| re(*v)).collect();
    let (c, d) = fit_tail_pair(g, &cs, 2);
    (c.re, d.re)
}

/// `(1/pi) int_0^inf s(k) cos(kt) dk` for `s` on a positive half-offset grid decaying like `1/k^2`.
pub(crate) fn cosine_transform<T: Real>(s: &RealSamples<T>, t_grid: &UniformGrid<T>) -> Result<RealSamples<T>> {
    let kg = *s.grid();
    if !kg.is_positive_half_offset() {
        return Err(ScatterError::InvalidGrid("k grid must be half-offset".into()));
    }
    let v = s.values();
    let c = even_tail(&kg, v);
    let cutoff = kg.end() + kg.step() * lit(0.5);
    let dk = kg.step();
    let ts: Vec<T> = t_grid.nodes().collect();
    let values: Vec<T> = ts
        .par_iter()
        .map(|&t| {
            let mut acc = T::zero();
            for (i, si) in v.iter().enumerate() {
                acc += *si * (kg.node(i) * t).cos();
            }
            (acc * dk + c.0 * cosine_tail_sq(cutoff, t) + c.1 * cosine_tail_quart(cutoff, t)) / T::PI()
        })
        .collect();
    RealSamples::new(*t_grid, values)
}

/// `H(t) = (1/pi) int_0^inf (|f(k)|^{-2} - 1) cos(kt) dk` on `t_grid`.
pub fn kernel_from_jost<T: Real>(f: &JostClosure<T>, t_grid: &UniformGrid<T>) -> Result<KreinKernel<T>> {
    let (s, _, _) = inverse_modulus_excess(f)?;
    let h = cosine_transform(&RealSamples::new(*f.grid(), s.clone())?, t_grid)?;
    let margin = s.iter().fold(T::infinity(), |m, v| m.min(T::one() + *v));
    let h0 = h_zero_from_jost(f)? * lit(0.5);
    Ok(KreinKernel { h, h0, symbol_margin: margin })
}

/// `2 H(0) = (2/pi) int_0^inf (|f(k)|^{-2} - 1) dk`.
pub fn h_zero_from_jost<T: Real>(f: &JostClosure<T>) -> Result<T> {
    let (s, c, cutoff) = inverse_modulus_excess(f)?;
    let sum: T = s.iter().copied().sum();
    let tail = c.0 / cutoff + c.1 / (cutoff * cutoff * cutoff * lit(3.0));
    Ok((sum * f.grid().step() + tail) * lit::<T>(2.0) / T::PI())
}

/// Outer factorization of `1 / (1 + H~)` on a positive half-offset `k_grid`.
pub fn jost_from_kernel<T: Real>(h: &KreinKernel<T>, k_grid: &UniformGrid<T>) -> Result<JostClosure<T>> {
    let symbol = fourier_symbol(&h.h, k_grid)?;
    for (k, v) in symbol.iter() {
        if T::one() + *v <= T::zero() {
            return Err(ScatterError::SymbolNotPositive {
                min: (T::one() + *v).to_f64_lossy(),
                k: k.to_f64_lossy(),
            });
        }
    }
    outer_factor(&symbol.map(|_, v| T::one() + *v))
}

/// `F(x) = (1/2pi) int (1 - S(k)) e^{ikx} dk` on `x_grid`, from `S` on a positive
/// half-offset grid.
pub fn marchenko_kernel<T: Real>(
    s: &crate::grid::ComplexSamples<T>,
    x_grid: &UniformGrid<T>,
) -> Result<MarchenkoKernel<T>> {
    let defect = unitarity_defect(s);
    if defect > lit(UNITARITY_TOL) {
        return Err(ScatterError::InvalidInput(format!("|S| deviates from 1 by {defect}")));
    }
    let kg = *s.grid();
    if !kg.is_positive_half_offset() {
        return Err(ScatterError::InvalidGrid("S grid must be half-offset".into()));
    }
    let one_minus: Vec<Cplx<T>> = s.values().iter().map(|v| re::<T>(T::one()) - *v).collect();
    // odd imaginary part ~ a1/k + a3/k^3, even real part ~ b2/k^2 + b4/k^4
    let im: Vec<Cplx<T>> = one_minus.iter().map(|z| re(z.im)).collect();
    let rl: Vec<Cplx<T>> = one_minus.iter().map(|z| re(z.re)).collect();
    let (a1, a3) = fit_tail_pair(&kg, &im, 1);
    let (b2, b4) = fit_tail_pair(&kg, &rl, 2);
    let (a1, a3, b2, b4) = (a1.re, a3.re, b2.re, b4.re);
    let cutoff = kg.end() + kg.step() * lit(0.5);
    let dk = kg.step();
    let xs: Vec<T> = x_grid.nodes().collect();
    let values: Vec<T> = xs
        .par_iter()
        .map(|&x| {
            let mut acc = T::zero();
            for (i, z) in one_minus.iter().enumerate() {
                let (sn, cs) = (kg.node(i) * x).sin_cos();
                acc += z.re * cs - z.im * sn;
            }
            let tail = -a1 * sine_tail(cutoff, x) - a3 * sine_tail_cube(cutoff, x)
                + b2 * cosine_tail_sq(cutoff, x)
                + b4 * cosine_tail_quart(cutoff, x);
            (acc * dk + tail) / T::PI()
        })
        .collect();
    Ok(MarchenkoKernel { f: RealSamples::new(*x_grid, values)? })
}

/// `H~(k)` computed as `|f(k)|^{-2} - 1` on the Jost grid.
pub fn symbol_from_jost<T: Real>(f: &JostClosure<T>) -> Result<RealSamples<T>> {
    check_nonvanishing(f)?;
    Ok(f.values().map(|_, v| T::one() / v.norm_sqr() - T::one()))
}
