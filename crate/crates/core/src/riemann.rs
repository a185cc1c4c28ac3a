//! Factorization `S(k) = f(-k) / f(k)`: winding index, the index-zero Riemann problem,
//! the Wiener–Lévy route through the phase shift, and admissibility diagnostics.

use num_complex::Complex;
use rayon::prelude::*;

use crate::calculus::derivative;
use crate::error::{Result, ScatterError};
use crate::forward::{unitarity_defect, unwrap_backward};
use crate::grid::{trapezoid, ComplexSamples, RealSamples, TailDecay, UniformGrid};
use crate::kernel::marchenko_kernel;
use crate::scalar::{imag_unit, lit, re, Cplx, Real};
use crate::special::{exp_panel, sine_tail, sine_tail_cube};
use crate::transforms::{fit_tail, fit_tail_pair, hilbert_boundary_nodes};

/// Jost function on a positive momentum grid with its large-`k` model
/// `f(k) ~ 1 - A(0) / (ik)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JostClosure<T> {
    f: ComplexSamples<T>,
    asymptotic_a0: T,
}

impl<T: Real> JostClosure<T> {
    pub fn new(f: ComplexSamples<T>, asymptotic_a0: T) -> Result<Self> {
        if !(f.grid().start() > T::zero()) {
            return Err(ScatterError::InvalidGrid("Jost function grid must lie on k > 0".into()));
        }
        Ok(Self { f, asymptotic_a0 })
    }

    pub fn from_fn(k_grid: &UniformGrid<T>, f: impl Fn(T) -> Cplx<T>, asymptotic_a0: T) -> Result<Self> {
        Self::new(ComplexSamples::from_fn(*k_grid, f), asymptotic_a0)
    }

    pub fn values(&self) -> &ComplexSamples<T> {
        &self.f
    }

    pub fn grid(&self) -> &UniformGrid<T> {
        self.f.grid()
    }

    pub fn asymptotic_a0(&self) -> T {
        self.asymptotic_a0
    }

    /// Values on the mirrored grid using `f(-k) = conj f(k)`.
    pub fn full_line(&self) -> Result<ComplexSamples<T>> {
        mirror_conjugate(&self.f)
    }

    /// `sup |f(k) - S(-k) f(-k)|` over the grid.
    pub fn boundary_residual(&self, s: &ComplexSamples<T>) -> Result<T> {
        if s.len() != self.f.len() {
            return Err(ScatterError::LengthMismatch { expected: self.f.len(), got: s.len() });
        }
        Ok(self
            .f
            .values()
            .iter()
            .zip(s.values())
            .fold(T::zero(), |m, (f, s)| m.max((*f - s.conj() * f.conj()).norm())))
    }
}

/// Extend samples on a positive grid to the mirrored grid by conjugate symmetry;
/// samples already on a symmetric grid are returned unchanged.
pub fn mirror_conjugate<T: Real>(s: &ComplexSamples<T>) -> Result<ComplexSamples<T>> {
    let g = s.grid();
    if (g.start() + g.end()).abs() <= g.step() * lit(1e-9) {
        return Ok(s.clone());
    }
    if !g.is_positive_half_offset() {
        return Err(ScatterError::InvalidGrid(
            "conjugate extension needs a half-offset grid k_i = (i + 1/2) dk".into(),
        ));
    }
    let v = s.values();
    let values: Vec<Cplx<T>> = v.iter().rev().map(|z| z.conj()).chain(v.iter().copied()).collect();
    ComplexSamples::new(g.mirrored(), values)
}

/// Winding number of `S` over the real line, with `S(+-inf) = 1`.
pub fn winding_index<T: Real>(s: &ComplexSamples<T>) -> Result<i64> {
    let full = mirror_conjugate(s)?;
    let arg = unwrap_backward(&full)?;
    let v = full.values();
    let total = v[0].arg() - arg[0];
    Ok((total / T::TAU()).round().to_i64().unwrap_or(i64::MAX))
}

/// `ln S(-y)` on the mirrored grid with the branch continued from `S(+inf) = 1`.
fn log_reflected<T: Real>(s: &ComplexSamples<T>) -> Result<ComplexSamples<T>> {
    let full = mirror_conjugate(s)?;
    let arg = unwrap_backward(&full).map_err(|e| ScatterError::BranchCutFailure(e.to_string()))?;
    let n = full.len();
    let v = full.values();
    // S(-y) is node n-1-j of the mirrored grid
    let values: Vec<Cplx<T>> = (0..n).map(|j| Complex::new(v[n - 1 - j].norm().ln(), arg[n - 1 - j])).collect();
    if let Some(j) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(ScatterError::BranchCutFailure(format!("ln S undefined at k = {}", full.grid().node(j))));
    }
    ComplexSamples::new(*full.grid(), values)
}

/// Boundary values of `exp(C g)` on the positive half of the mirrored grid, where `C`
/// is the Cauchy integral and `g` carries a fitted tail of the given rate.
fn exponentiate_boundary<T: Real>(g: ComplexSamples<T>, rate: i32) -> Result<JostClosure<T>> {
    let grid = *g.grid();
    let n = grid.len() / 2;
    let (c, d) = fit_tail_pair(&grid, g.values(), rate);
    let g = g.with_tail(TailDecay { coefficient: c, rate: T::from_i32(rate).unwrap_or_else(T::one), next: Some(d) })?;
    let logs = hilbert_boundary_nodes(&g)?;
    let pos = UniformGrid::new(grid.node(n), grid.step(), n)?;
    let logs_pos = &logs[n..];
    let a0 = fit_tail(&pos, logs_pos, 1).im;
    let f = ComplexSamples::new(pos, logs_pos.iter().map(|z| z.exp()).collect())?;
    JostClosure::new(f, a0)
}

/// Jost function from an index-zero S-matrix sampled on a positive half-offset grid.
pub fn solve_riemann<T: Real>(s: &ComplexSamples<T>) -> Result<JostClosure<T>> {
    let defect = unitarity_defect(s);
    if defect > lit(crate::forward::UNITARITY_TOL) {
        return Err(ScatterError::InvalidInput(format!("|S| deviates from 1 by {defect}")));
    }
    let index = winding_index(s).map_err(|e| ScatterError::BranchCutFailure(e.to_string()))?;
    if index != 0 {
        return Err(ScatterError::NonzeroIndex(index));
    }
    exponentiate_boundary(log_reflected(s)?, 1)
}

/// Outer factor with `|f|^2 = 1 / symbol` for a positive even symbol on `k > 0`.
pub(crate) fn outer_factor<T: Real>(symbol: &RealSamples<T>) -> Result<JostClosure<T>> {
    let g = symbol.map(|_, v| Complex::new(-v.ln(), T::zero()));
    exponentiate_boundary(mirror_conjugate(&g)?, 2)
}

/// Jost function from the phase shift:
/// `g(t) = -(2/pi) int_0^inf delta(k) sin(kt) dk`, `f(k) = exp(int_0^inf g(t) e^{ikt} dt)`.
///
/// `delta` lives on a positive half-offset grid with `delta ~ c/k` beyond it; `t_grid`
/// must start at 0 and extend far enough for `g` to have decayed.
pub fn wiener_levy_route<T: Real>(
    delta: &RealSamples<T>,
    t_grid: &UniformGrid<T>,
    k_grid: &UniformGrid<T>,
) -> Result<JostClosure<T>> {
    if t_grid.start().abs() > t_grid.step() * lit(1e-9) {
        return Err(ScatterError::InvalidGrid("t grid must start at 0".into()));
    }
    let dg = delta.grid();
    let dk = dg.step();
    let edge = dg.end() + dk * lit(0.5);
    let cplx: Vec<Cplx<T>> = delta.values().iter().map(|d| re(*d)).collect();
    let (c, d) = fit_tail_pair(dg, &cplx, 1);
    let (c, d) = (c.re, d.re);
    let g: Vec<T> = t_grid
        .nodes()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&t| {
            let s: T = delta.iter().map(|(k, d)| *d * (k * t).sin()).sum::<T>() * dk;
            -(s + c * sine_tail(edge, t) + d * sine_tail_cube(edge, t)) * lit::<T>(2.0) / T::PI()
        })
        .collect();
    let h = t_grid.step();
    let a0 = -c;
    let f: Vec<Cplx<T>> = k_grid
        .nodes()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let z = imag_unit::<T>() * (k * h);
            let (wa, wb) = exp_panel(z);
            let step = z.exp();
            let mut phase = re(T::one());
            let mut acc = Complex::new(T::zero(), T::zero());
            for w in g.windows(2) {
                acc += phase * (wa * w[0] + wb * w[1]);
                phase *= step;
            }
            (acc * h).exp()
        })
        .collect();
    JostClosure::new(ComplexSamples::new(*k_grid, f)?, a0)
}

/// Diagnostic summary of the admissibility conditions for scattering data.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AdmissibilityReport {
    pub unitarity_defect: f64,
    /// `None` when the phase could not be unwrapped unambiguously.
    pub index: Option<i64>,
    pub f_sup: f64,
    pub f_l1: f64,
    pub x_fprime_l1: f64,
    pub positivity_margin: Option<f64>,
}

/// Unitarity defect, winding index and grid surrogates of `||F||_inf`, `||F||_1`,
/// `||x F'||_1` for the Marchenko kernel on `x_grid`.
pub fn check_admissibility<T: Real>(
    s: &ComplexSamples<T>,
    x_grid: &UniformGrid<T>,
    positivity_margin: Option<T>,
) -> AdmissibilityReport {
    let unitarity = unitarity_defect(s).to_f64_lossy();
    let index = winding_index(s).ok();
    let (f_sup, f_l1, x_fprime_l1) = match marchenko_kernel(s, x_grid) {
        Ok(m) if m.f.len() >= 5 => {
            let v = m.f.values();
            let h = x_grid.step();
            let dv = derivative(v, h);
            let xdf = trapezoid(x_grid.nodes().zip(&dv).map(|(x, d)| (x * *d).abs()), h);
            (m.f.sup_norm().to_f64_lossy(), m.f.l1_norm().to_f64_lossy(), xdf.to_f64_lossy())
        }
        _ => (f64::NAN, f64::NAN, f64::NAN),
    };
    AdmissibilityReport {
        unitarity_defect: unitarity,
        index,
        f_sup,
        f_l1,
        x_fprime_l1,
        positivity_margin: positivity_margin.map(|c| c.to_f64_lossy()),
    }
}
