//! Marchenko inversion `A(x,y) + F(x+y) + int_x^inf A(x,s) F(s+y) ds = 0`,
//! `q = -2 d/dx A(x,x)`, and the hybrid Krein (small x) + Marchenko (large x) inverter.

use rayon::prelude::*;

use crate::calculus::derivative;
use crate::error::{Result, ScatterError};
use crate::forward::Potential;
use crate::grid::{RealSamples, UniformGrid};
use crate::kernel::{KreinKernel, MarchenkoKernel};
use crate::krein::{amplitude, contraction_length, potential_from_amplitude, solve_gamma_family, solve_gamma_iterative};
use crate::linalg::{Lu, Matrix};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchenkoOptions<T> {
    /// `F` is treated as zero beyond the last point where `|F| >= y_tail_tol * max|F|`.
    pub y_tail_tol: T,
    /// Stop when successive iterates differ by less than `tol * max|F|`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for MarchenkoOptions<T> {
    fn default() -> Self {
        Self { y_tail_tol: lit(1e-10), tol: lit(1e-12), max_iter: 1000 }
    }
}

/// One row `A(x, y)`, `y = x, x + h, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarchenkoRow<T> {
    pub x: T,
    pub row: RealSamples<T>,
    /// `None` when the row was obtained by the dense fallback.
    pub iterations: Option<usize>,
    /// Contraction bound: max row sum of the discretized integral operator.
    pub rho: T,
    /// Sup-norm residual of the discretized equation.
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarchenkoSolution<T> {
    pub x_grid: UniformGrid<T>,
    pub y_step: T,
    /// `A(x, x)`.
    pub diag: RealSamples<T>,
    pub iterations: Vec<Option<usize>>,
    pub residuals: Vec<T>,
}

fn effective_end<T: Real>(f: &MarchenkoKernel<T>, tol: T) -> usize {
    let v = f.f.values();
    let max = f.f.sup_norm();
    if max == T::zero() {
        return 0;
    }
    v.iter().rposition(|x| x.abs() >= tol * max).unwrap_or(0)
}

/// Solve for the row at `x`; `x` must be a node of the kernel grid.
pub fn solve_marchenko<T: Real>(f: &MarchenkoKernel<T>, x: T, opts: &MarchenkoOptions<T>) -> Result<MarchenkoRow<T>> {
    let g = f.f.grid();
    let h = g.step();
    let v = f.f.values();
    let ratio = x * lit(2.0) / h;
    let o = ratio.round();
    if (ratio - o).abs() > lit(1e-6) || o < T::zero() {
        return Err(ScatterError::InvalidGrid(format!("2x = {} is not on the kernel grid", x * lit(2.0))));
    }
    let o = o.to_usize().unwrap_or(0);
    let cut = effective_end(f, opts.y_tail_tol);
    let mut m = cut.saturating_sub(o).max(4);
    if o + 2 * m >= v.len() {
        m = (v.len() - 1).saturating_sub(o) / 2;
    }
    if m < 4 {
        return Err(ScatterError::InvalidGrid(format!("F grid ends at {}, too short for x = {x}", g.end())));
    }
    let fmax = f.f.sup_norm();
    let grid = UniformGrid::new(x, h, m + 1)?;
    if fmax == T::zero() {
        return Ok(MarchenkoRow { x, row: RealSamples::new(grid, vec![T::zero(); m + 1])?, iterations: Some(0), rho: T::zero(), residual: T::zero() });
    }
    let w = |j: usize| if j == 0 || j == m { h * lit(0.5) } else { h };
    let apply = |a: &[T]| -> Vec<T> {
        let wa: Vec<T> = a.iter().enumerate().map(|(j, aj)| *aj * w(j)).collect();
        (0..=m).map(|i| v[o + i..=o + i + m].iter().zip(&wa).map(|(p, q)| *p * *q).sum()).collect()
    };
    let rhs: Vec<T> = (0..=m).map(|i| -v[o + i]).collect();
    let rho = (0..=m)
        .map(|i| v[o + i..=o + i + m].iter().enumerate().map(|(j, p)| p.abs() * w(j)).sum::<T>())
        .fold(T::zero(), T::max);
    let residual_of = |a: &[T]| -> T {
        let ka = apply(a);
        a.iter().zip(&ka).zip(&rhs).fold(T::zero(), |r, ((ai, ki), bi)| r.max((*ai + *ki - *bi).abs()))
    };
    if rho < T::one() {
        let mut a = rhs.clone();
        for it in 1..=opts.max_iter {
            let ka = apply(&a);
            let next: Vec<T> = rhs.iter().zip(&ka).map(|(b, k)| *b - *k).collect();
            let delta = next.iter().zip(&a).fold(T::zero(), |d, (p, q)| d.max((*p - *q).abs()));
            a = next;
            if delta <= opts.tol * fmax {
                let residual = residual_of(&a);
                return Ok(MarchenkoRow { x, row: RealSamples::new(grid, a)?, iterations: Some(it), rho, residual });
            }
        }
    }
    let mat = Matrix::from_fn(m + 1, |i, j| if i == j { T::one() } else { T::zero() } + w(j) * v[o + i + j]);
    let lu = Lu::factor(mat).map_err(|e| ScatterError::NoContraction(format!("rho = {rho}, dense fallback failed: {e}")))?;
    let a = lu.solve(&rhs);
    let residual = residual_of(&a);
    Ok(MarchenkoRow { x, row: RealSamples::new(grid, a)?, iterations: None, rho, residual })
}

/// Rows at every node of `x_grid` (whose nodes must lie on the kernel grid); only the
/// diagonal is kept.
pub fn solve_marchenko_family<T: Real>(
    f: &MarchenkoKernel<T>,
    x_grid: &UniformGrid<T>,
    opts: &MarchenkoOptions<T>,
) -> Result<MarchenkoSolution<T>> {
    let xs: Vec<T> = x_grid.nodes().collect();
    let rows: Vec<(T, Option<usize>, T)> = xs
        .par_iter()
        .map(|&x| solve_marchenko(f, x, opts).map(|r| (r.row.values()[0], r.iterations, r.residual)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MarchenkoSolution {
        x_grid: *x_grid,
        y_step: f.f.grid().step(),
        diag: RealSamples::new(*x_grid, rows.iter().map(|r| r.0).collect())?,
        iterations: rows.iter().map(|r| r.1).collect(),
        residuals: rows.iter().map(|r| r.2).collect(),
    })
}

/// `q = -2 d/dx A(x, x)`.
pub fn marchenko_potential<T: Real>(sol: &MarchenkoSolution<T>) -> Result<Potential<T>> {
    let d = derivative(sol.diag.values(), sol.x_grid.step());
    let grid = sol.x_grid;
    if grid.start().abs() > grid.step() * lit(1e-9) {
        return Err(ScatterError::InvalidGrid("potential grid must start at 0".into()));
    }
    Potential::new(RealSamples::new(grid, d.into_iter().map(|v| v * lit(-2.0)).collect())?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridConfig<T> {
    pub x_max: T,
    /// Toeplitz step; the potential grid has step `h / 2`.
    pub h: T,
    /// Half-width of the window where both methods run.
    pub overlap: T,
    pub marchenko: MarchenkoOptions<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridResult<T> {
    pub q: Potential<T>,
    /// Interval length below which the fixed-point iteration of the Krein equation contracts.
    pub x0: T,
    /// Amplitude point where the Krein part hands over to the Marchenko part.
    pub stitch: T,
    /// Fixed-point iterations used for the Krein system at the stitch point.
    pub krein_iterations: usize,
    /// `sup |q_Krein - q_Marchenko|` over the overlap window.
    pub overlap_discrepancy: T,
}

/// Krein for `x <= stitch`, Marchenko beyond.
///
/// The stitch point is half the largest interval length `x0` satisfying
/// `sup_t int_0^{x0} |H(t-u)| du < 1`, clipped to `[h, X/2]`. The Krein part is taken
/// from the bordering sweep; the fixed-point iteration is run at the stitch point and
/// must reproduce the sweep value there. The Marchenko part runs on the grid of `F`,
/// whose step must be a multiple of `h / 2` and divide `X`, and is interpolated onto
/// the amplitude grid.
pub fn hybrid_invert<T: Real>(
    kernel: &KreinKernel<T>,
    f: &MarchenkoKernel<T>,
    cfg: &HybridConfig<T>,
) -> Result<HybridResult<T>> {
    let h = cfg.h;
    let hx = h * lit(0.5);
    let hm = f.f.grid().step();
    let is_multiple = |a: T, b: T| ((a / b) - (a / b).round()).abs() < lit(1e-9) && a / b >= lit(0.5);
    if !is_multiple(hm, hx) || !is_multiple(cfg.x_max, hm) {
        return Err(ScatterError::InvalidGrid("Marchenko step must be a multiple of h/2 dividing X".into()));
    }
    let sweep = solve_gamma_family(kernel, cfg.x_max, h)?;
    let qk = potential_from_amplitude(&amplitude(&sweep), false)?;
    let x0 = contraction_length(kernel, h, cfg.x_max * lit(2.0))?;
    let coarse = hm.max(h);
    let stitch = ((x0 * lit(0.5) / coarse).floor() * coarse)
        .max(coarse)
        .min((cfg.x_max * lit(0.5) / coarse).floor() * coarse);
    let iterative = solve_gamma_iterative(kernel, stitch * lit(2.0), h, lit(1e-13), 10_000)?;
    let n_stitch = sweep.x_grid.nearest(stitch);
    let direct = sweep.corner.values()[n_stitch];
    let it_corner = iterative.gamma[iterative.gamma.len() - 1];
    if (direct - it_corner).abs() > lit::<T>(1e-8) * direct.abs().max(T::one()) {
        return Err(ScatterError::NoConvergence(format!(
            "fixed point {it_corner} disagrees with the sweep {direct} at x = {stitch}"
        )));
    }
    let start = ((stitch - cfg.overlap).max(T::zero()) / hm).floor() * hm;
    let count = ((cfg.x_max - start) / hm).round().to_usize().unwrap_or(0) + 1;
    let mgrid = UniformGrid::new(start, hm, count)?;
    let sol = solve_marchenko_family(f, &mgrid, &cfg.marchenko)?;
    let dq = derivative(sol.diag.values(), hm);
    let qm = RealSamples::new(mgrid, dq.into_iter().map(|v| v * lit(-2.0)).collect())?;
    let over_end = (stitch + cfg.overlap).min(cfg.x_max);
    let discrepancy = qm
        .iter()
        .filter(|(x, _)| *x <= over_end + hx * lit(0.5))
        .fold(T::zero(), |m, (x, v)| m.max((qk.samples().interpolate(x) - *v).abs()));
    let q: Vec<T> = qk
        .samples()
        .iter()
        .enumerate()
        .map(|(i, (x, v))| if i <= n_stitch { *v } else { qm.interpolate(x) })
        .collect();
    Ok(HybridResult {
        q: Potential::new(RealSamples::new(sweep.x_grid, q)?)?,
        x0,
        stitch,
        krein_iterations: iterative.iterations,
        overlap_discrepancy: discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{jost_function, s_matrix};
    use crate::kernel::marchenko_kernel;

    fn bargmann_f(h: f64, end: f64) -> MarchenkoKernel<f64> {
        let g = UniformGrid::from_zero(end, h).unwrap();
        MarchenkoKernel { f: RealSamples::from_fn(g, |x: f64| -2.0 / 3.0 * (-x).exp()) }
    }

    fn bargmann_q(x: f64) -> f64 {
        let e = (-2.0 * x).exp();
        24.0 * e / ((3.0 - e) * (3.0 - e))
    }

    #[test]
    fn zero_kernel() {
        let g = UniformGrid::from_zero(10.0, 0.05).unwrap();
        let f = MarchenkoKernel { f: RealSamples::from_fn(g, |_| 0.0) };
        let row = solve_marchenko(&f, 1.0, &MarchenkoOptions::default()).unwrap();
        assert_eq!(row.row.sup_norm(), 0.0);
        let sol = solve_marchenko_family(&f, &UniformGrid::from_zero(2.0, 0.1).unwrap(), &MarchenkoOptions::default()).unwrap();
        assert_eq!(marchenko_potential(&sol).unwrap().samples().sup_norm(), 0.0);
    }

    #[test]
    fn bargmann_diagonal_and_potential() {
        let h = 1.0 / 64.0;
        let f = bargmann_f(h, 40.0);
        let xg = UniformGrid::from_zero(4.0, h).unwrap();
        let sol = solve_marchenko_family(&f, &xg, &MarchenkoOptions::default()).unwrap();
        for (x, a) in sol.diag.iter() {
            let e = (-2.0 * x).exp();
            assert!((a - 2.0 * e / (3.0 - e)).abs() < 1e-4, "x={x}");
        }
        let q = marchenko_potential(&sol).unwrap();
        for (x, v) in q.samples().iter().filter(|(x, _)| *x >= 0.1) {
            assert!((v - bargmann_q(x)).abs() < 1e-3, "x={x}: {v}");
        }
        assert!(sol.residuals.iter().all(|r| *r < 1e-8 * 2.0 / 3.0));
        let its: Vec<usize> = sol.iterations.iter().map(|i| i.unwrap()).collect();
        assert!(its.windows(2).all(|w| w[1] <= w[0]), "{its:?}");
    }

    #[test]
    fn dense_fallback_when_not_contractive() {
        let g = UniformGrid::from_zero(30.0, 1.0 / 32.0).unwrap();
        let f = MarchenkoKernel { f: RealSamples::from_fn(g, |x: f64| 1.5 * (-x).exp()) };
        let row = solve_marchenko(&f, 0.0, &MarchenkoOptions::default()).unwrap();
        assert!(row.rho > 1.0);
        assert_eq!(row.iterations, None);
        assert!(row.residual < 1e-10);
    }

    #[test]
    fn diagonal_is_half_tail_integral_of_q() {
        // A(x,x) = (1/2) int_x^inf q for q = e^{-x}
        let q = Potential::from_fn(30.0, 1.0 / 128.0, |x: f64| (-x).exp()).unwrap();
        let kg = UniformGrid::half_offset(0.01, 4000).unwrap();
        let s = s_matrix(&jost_function(&q, &kg).unwrap()).unwrap();
        let f = marchenko_kernel(&s, &UniformGrid::from_zero(24.0, 1.0 / 32.0).unwrap()).unwrap();
        for &x in &[0.5, 1.0, 2.0, 4.0] {
            let row = solve_marchenko(&f, x, &MarchenkoOptions { y_tail_tol: 1e-8, ..Default::default() }).unwrap();
            let ratio = row.row.values()[0] / (-x).exp();
            assert!((ratio - 0.5).abs() < 2e-3, "x={x}: {ratio}");
        }
    }

    #[test]
    fn hybrid_matches_closed_form() {
        let h = 1.0 / 32.0;
        let g = UniformGrid::from_zero(14.0, h).unwrap();
        let k = KreinKernel { h: RealSamples::from_fn(g, |t: f64| -0.75 * (-2.0 * t).exp()), h0: -0.75, symbol_margin: 0.25 };
        let f = bargmann_f(h / 2.0, 30.0);
        let cfg = HybridConfig { x_max: 4.0, h, overlap: 0.5, marchenko: MarchenkoOptions::default() };
        let r = hybrid_invert(&k, &f, &cfg).unwrap();
        assert_eq!(r.stitch, 2.0);
        assert!(r.x0 >= 8.0 - 1e-12);
        assert!(r.overlap_discrepancy < 5e-3, "{}", r.overlap_discrepancy);
        for (x, v) in r.q.samples().iter().filter(|(x, _)| *x > 0.1 && *x < 3.9) {
            assert!((v - bargmann_q(x)).abs() < 5e-3, "x={x}: {v}");
        }
        let coarse = hybrid_invert(&k, &bargmann_f(h, 30.0), &cfg).unwrap();
        assert!(coarse.q.samples().sup_abs_diff(r.q.samples()) < 2e-3);
    }
}
