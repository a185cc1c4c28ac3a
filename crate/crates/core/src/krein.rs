//! Krein's equations `Γ_L(t,s) + int_0^L H(t-u) Γ_L(u,s) du = H(t-s)`, the amplitude
//! `A(x) = 2 Γ_{2x}(2x, 0)`, the potential `q = A^2 + A'`, the function `E(x,k)`,
//! the converse chain `A -> E -> Γ` and the Riccati converse `q -> A`.
//!
//! Discretization: nodes `t_i = i h`, trapezoid weights. For interval length
//! `L = n h` the system is `(M - (h/2) b e_0^T - (h/2) J b e_n^T) γ = b` with the
//! symmetric Toeplitz `M = I + h [H((i-j)h)]` and `b = [H(ih)]`. One Levinson–Durbin
//! sweep over `n` gives the first column of every `M_n^{-1}`; since `M e_0 = e_0 + h b`,
//! `M^{-1} b = (e_0 - M^{-1} e_0) / h`, and the two trapezoid corrections reduce to a
//! 2x2 system for `(γ_0, γ_n)`. The whole family costs `O(N^2)`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::calculus::{derivative, lagrange4, smooth3};
use crate::error::{Result, ScatterError};
use crate::forward::Potential;
use crate::grid::{trapezoid, ComplexSamples, RealSamples, UniformGrid};
use crate::kernel::KreinKernel;
use crate::linalg::{Levinson, Lu, Matrix};
use crate::scalar::{imag_unit, lit, re, Cplx, Real};
use crate::special::{cosine_tail_sq, exp_panel};

/// Result of one bordering sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSweep<T> {
    /// Amplitude grid `x = n h / 2`, `n = 0..=N`.
    pub x_grid: UniformGrid<T>,
    /// `Γ_{2x}(2x, 0)`.
    pub corner: RealSamples<T>,
    /// `Γ_{2x}(0, 0)`.
    pub diag0: RealSamples<T>,
    /// `(x, Γ_{2x}(·, 0))` at the checkpoints, each on `t = 0, h, ..., 2x`.
    pub full_rows: Vec<(T, RealSamples<T>)>,
    pub t_step: T,
    pub h0: T,
}

impl<T: Real> GammaSweep<T> {
    /// Stored row `Γ_{2x}(·, 0)`.
    pub fn row(&self, x: T) -> Result<&RealSamples<T>> {
        self.row_entry(x).map(|(_, r)| r)
    }

    /// Checkpoint nearest to `x` (within a quarter step) with its row.
    pub fn row_entry(&self, x: T) -> Result<(T, &RealSamples<T>)> {
        let tol = self.t_step * lit(0.25);
        self.full_rows
            .iter()
            .find(|(xc, _)| (*xc - x).abs() <= tol)
            .map(|(xc, r)| (*xc, r))
            .ok_or(ScatterError::MissingRow(x.to_f64_lossy()))
    }
}

/// `H(i h)` for `i = 0..=n`, taken from the kernel table whose step must divide `h`.
pub fn kernel_table<T: Real>(kernel: &KreinKernel<T>, h: T, n: usize) -> Result<Vec<T>> {
    let g = kernel.h.grid();
    let ratio = h / g.step();
    let m = ratio.round();
    if m < T::one() || (ratio - m).abs() > lit(1e-6) {
        return Err(ScatterError::InvalidGrid(format!(
            "step {h} is not a multiple of the kernel step {}",
            g.step()
        )));
    }
    let m = m.to_usize().unwrap_or(1);
    if n * m >= g.len() {
        return Err(ScatterError::InvalidGrid(format!(
            "kernel sampled to t = {}, need t = {}",
            g.end(),
            T::from_usize_lossy(n) * h
        )));
    }
    Ok((0..=n).map(|i| kernel.h.values()[i * m]).collect())
}

fn grid_count<T: Real>(length: T, h: T) -> Result<usize> {
    let r = length / h;
    let n = r.round();
    if (r - n).abs() > lit(1e-6) || n < T::zero() {
        return Err(ScatterError::InvalidGrid(format!("length {length} is not a multiple of step {h}")));
    }
    Ok(n.to_usize().unwrap_or(0))
}

/// Default checkpoints `X/8, X/4, X/2, X`.
pub fn default_checkpoints<T: Real>(x_max: T) -> Vec<T> {
    [8.0, 4.0, 2.0, 1.0].iter().map(|d| x_max / lit(*d)).collect()
}

/// Sweep over `x in [0, X]` with Toeplitz step `h` and the default checkpoints.
pub fn solve_gamma_family<T: Real>(kernel: &KreinKernel<T>, x_max: T, h: T) -> Result<GammaSweep<T>> {
    solve_gamma_family_with(kernel, x_max, h, &default_checkpoints(x_max))
}

/// Sweep storing full rows at the given `x` checkpoints (snapped to the grid).
pub fn solve_gamma_family_with<T: Real>(
    kernel: &KreinKernel<T>,
    x_max: T,
    h: T,
    checkpoints: &[T],
) -> Result<GammaSweep<T>> {
    kernel.ensure_positive()?;
    let n_max = grid_count(x_max * lit(2.0), h)?;
    if n_max < 4 {
        return Err(ScatterError::InvalidGrid("need at least 4 steps in the sweep".into()));
    }
    let hx = kernel_table(kernel, h, n_max)?;
    let r: Vec<T> = hx.iter().enumerate().map(|(i, v)| if i == 0 { T::one() + h * *v } else { h * *v }).collect();
    let half = h * lit(0.5);
    let mut wanted: Vec<usize> = checkpoints
        .iter()
        .map(|x| (*x * lit(2.0) / h).round().to_usize().unwrap_or(0).min(n_max))
        .collect();
    wanted.sort_unstable();
    wanted.dedup();

    let mut corner = Vec::with_capacity(n_max + 1);
    let mut diag0 = Vec::with_capacity(n_max + 1);
    let mut rows = Vec::new();
    corner.push(hx[0]);
    diag0.push(hx[0]);
    if wanted.first() == Some(&0) {
        // a single node; stored twice because grids carry at least two nodes
        rows.push((T::zero(), RealSamples::new(UniformGrid::new(T::zero(), h, 2)?, vec![hx[0], hx[0]])?));
    }
    let mut lev = Levinson::new(r[0])?;
    for n in 1..=n_max {
        let kappa = lev.extend(&r)?;
        let e = lev.error();
        let a = (T::one() - T::one() / e) / h;
        let c = -kappa / e / h;
        let (g0, gn) = corner_pair(a, c, half, n)?;
        corner.push(gn);
        diag0.push(g0);
        if wanted.binary_search(&n).is_ok() {
            let u = lev.coefficients();
            let y: Vec<T> = (0..=n)
                .map(|i| {
                    let e0 = if i == 0 { T::one() } else { T::zero() };
                    (e0 - u[i] / e) / h
                })
                .collect();
            let row: Vec<T> = (0..=n).map(|i| y[i] * (T::one() + half * g0) + half * gn * y[n - i]).collect();
            rows.push((T::from_usize_lossy(n) * half, RealSamples::new(UniformGrid::from_zero(T::from_usize_lossy(n) * h, h)?, row)?));
        }
    }
    let x_grid = UniformGrid::new(T::zero(), half, n_max + 1)?;
    Ok(GammaSweep {
        x_grid,
        corner: RealSamples::new(x_grid, corner)?,
        diag0: RealSamples::new(x_grid, diag0)?,
        full_rows: rows,
        t_step: h,
        h0: kernel.h0,
    })
}

/// `(γ_0, γ_n)` from `a = (M^{-1}b)_0`, `c = (M^{-1}b)_n` and the half weight `r`.
fn corner_pair<T: Real>(a: T, c: T, r: T, n: usize) -> Result<(T, T)> {
    let d1 = T::one() - r * (a + c);
    let d2 = T::one() - r * (a - c);
    let tiny = T::epsilon() * lit(16.0);
    if d1.abs() < tiny || d2.abs() < tiny {
        return Err(ScatterError::SingularSystem { pivot: d1.abs().min(d2.abs()).to_f64_lossy(), step: n });
    }
    let s = (a + c) / d1;
    let d = (a - c) / d2;
    Ok(((s + d) * lit(0.5), (s - d) * lit(0.5)))
}

/// Trapezoid weights on `n + 1` nodes.
fn weights<T: Real>(n: usize) -> Vec<T> {
    (0..=n).map(|j| if j == 0 || j == n { lit(0.5) } else { T::one() }).collect()
}

/// Nyström matrix `I + h T D` of the system for interval length `n h`.
pub fn system_matrix<T: Real>(table: &[T], h: T, n: usize) -> Matrix<T> {
    let w = weights::<T>(n);
    Matrix::from_fn(n + 1, |i, j| {
        let d = if i == j { T::one() } else { T::zero() };
        d + h * w[j] * table[i.abs_diff(j)]
    })
}

/// `Γ_L(t_i, t_j)` for all node pairs by a dense LU solve.
pub fn resolvent_matrix<T: Real>(kernel: &KreinKernel<T>, length: T, h: T) -> Result<Matrix<T>> {
    let n = grid_count(length, h)?;
    let table = kernel_table(kernel, h, n)?;
    let lu = Lu::factor(system_matrix(&table, h, n))?;
    let mut out = Matrix::zeros(n + 1);
    let cols: Vec<Vec<T>> = (0..=n)
        .into_par_iter()
        .map(|j| {
            let rhs: Vec<T> = (0..=n).map(|i| table[i.abs_diff(j)]).collect();
            lu.solve(&rhs)
        })
        .collect();
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            out.set(i, j, *v);
        }
    }
    Ok(out)
}

/// `Γ_L(·, 0)` by a dense LU solve.
pub fn gamma_row_dense<T: Real>(kernel: &KreinKernel<T>, length: T, h: T) -> Result<Vec<T>> {
    let n = grid_count(length, h)?;
    let table = kernel_table(kernel, h, n)?;
    Ok(Lu::factor(system_matrix(&table, h, n))?.solve(&table))
}

/// Fixed-point solution of one system with its convergence history.
#[derive(Debug, Clone, PartialEq)]
pub struct IterativeSolution<T> {
    pub gamma: Vec<T>,
    pub iterations: usize,
    /// Sup-norm of successive updates.
    pub residuals: Vec<T>,
    /// Max row sum of `|h T D|`, the contraction bound.
    pub rho: T,
}

/// `γ <- b - h T D γ` from `γ = b` until the update is below `tol`.
pub fn solve_gamma_iterative<T: Real>(
    kernel: &KreinKernel<T>,
    length: T,
    h: T,
    tol: T,
    max_iter: usize,
) -> Result<IterativeSolution<T>> {
    let n = grid_count(length, h)?;
    let table = kernel_table(kernel, h, n)?;
    let w = weights::<T>(n);
    let op = Matrix::from_fn(n + 1, |i, j| h * w[j] * table[i.abs_diff(j)]);
    let rho = op.norm_inf();
    if rho >= T::one() {
        return Err(ScatterError::NoContraction(format!("row-sum bound {rho} >= 1 at length {length}")));
    }
    let b = table.clone();
    let mut gamma = b.clone();
    let mut residuals = Vec::new();
    for it in 1..=max_iter {
        let tg = op.mul_vec(&gamma);
        let next: Vec<T> = b.iter().zip(&tg).map(|(bi, ti)| *bi - *ti).collect();
        let delta = next.iter().zip(&gamma).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        gamma = next;
        residuals.push(delta);
        if delta <= tol {
            return Ok(IterativeSolution { gamma, iterations: it, residuals, rho });
        }
    }
    Err(ScatterError::NoConvergence(format!("fixed point not converged in {max_iter} iterations")))
}

/// Largest interval length `x0 <= max_length` with `sup_t int_0^{x0} |H(t-u)| du < 1`
/// (trapezoid row sums on step `h`).
pub fn contraction_length<T: Real>(kernel: &KreinKernel<T>, h: T, max_length: T) -> Result<T> {
    let n_max = grid_count(max_length, h)?;
    let table = kernel_table(kernel, h, n_max)?;
    // prefix[m] = trapezoid of |H| over [0, m h]
    let mut prefix = vec![T::zero(); n_max + 1];
    for m in 1..=n_max {
        prefix[m] = prefix[m - 1] + (table[m - 1].abs() + table[m].abs()) * h * lit(0.5);
    }
    let mut best = 0;
    for n in 1..=n_max {
        let worst = (0..=n).map(|i| prefix[i] + prefix[n - i]).fold(T::zero(), T::max);
        if worst >= T::one() {
            break;
        }
        best = n;
    }
    Ok(T::from_usize_lossy(best) * h)
}

/// `A(x)` on the sweep's amplitude grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeA<T> {
    pub a: RealSamples<T>,
}

/// `A = 2 Γ_{2x}(2x, 0)` with `A(0) = 2 H(0)` set from the kernel.
pub fn amplitude<T: Real>(sweep: &GammaSweep<T>) -> AmplitudeA<T> {
    let mut a = sweep.corner.map(|_, v| *v * lit(2.0));
    let values: Vec<T> = a.values().iter().enumerate().map(|(i, v)| if i == 0 { sweep.h0 * lit(2.0) } else { *v }).collect();
    a = RealSamples::new(sweep.x_grid, values).expect("same grid");
    AmplitudeA { a }
}

/// `q = A^2 + A'`, optionally after 3-point smoothing of `A`.
pub fn potential_from_amplitude<T: Real>(a: &AmplitudeA<T>, smooth: bool) -> Result<Potential<T>> {
    let v = if smooth { smooth3(a.a.values()) } else { a.a.values().to_vec() };
    let dv = derivative(&v, a.a.grid().step());
    let q: Vec<T> = v.iter().zip(&dv).map(|(x, d)| *x * *x + *d).collect();
    Potential::new(RealSamples::new(*a.a.grid(), q)?)
}

/// `q = 2 d/dx [Γ_{2x}(2x,0) - Γ_{2x}(0,0)]`.
pub fn potential_alternative<T: Real>(sweep: &GammaSweep<T>) -> Result<Potential<T>> {
    let diff: Vec<T> = sweep.corner.values().iter().zip(sweep.diag0.values()).map(|(c, d)| *c - *d).collect();
    let dq = derivative(&diff, sweep.x_grid.step());
    Potential::new(RealSamples::new(sweep.x_grid, dq.into_iter().map(|v| v * lit(2.0)).collect())?)
}

/// `int_0^L g(s) e^{-iks} ds` for piecewise-linear `g` on `s = 0, h, ...`.
fn filon_transform<T: Real>(g: &[T], h: T, k: T) -> Cplx<T> {
    let z = -imag_unit::<T>() * (k * h);
    let (wa, wb) = exp_panel(z);
    let step = z.exp();
    let mut phase = re(T::one());
    let mut acc = Complex::new(T::zero(), T::zero());
    for w in g.windows(2) {
        acc += phase * (wa * w[0] + wb * w[1]);
        phase *= step;
    }
    acc * h
}

/// `E(x, k) = e^{ikx} [1 - int_0^{2x} Γ_{2x}(s, 0) e^{-iks} ds]` on `k_grid`.
pub fn e_function<T: Real>(sweep: &GammaSweep<T>, x: T, k_grid: &UniformGrid<T>) -> Result<ComplexSamples<T>> {
    let (xs, row) = sweep.row_entry(x)?;
    let h = row.grid().step();
    let v = row.values();
    let ks: Vec<T> = k_grid.nodes().collect();
    let values: Vec<Cplx<T>> = ks
        .par_iter()
        .map(|&k| {
            let integral = if xs == T::zero() { Complex::new(T::zero(), T::zero()) } else { filon_transform(v, h, k) };
            (imag_unit::<T>() * (k * xs)).exp() * (re(T::one()) - integral)
        })
        .collect();
    ComplexSamples::new(*k_grid, values)
}

/// `psi(x, k) = (E(x,k) - E(x,-k)) / 2i = Im E(x, k)` at the stored checkpoints.
pub fn psi<T: Real>(sweep: &GammaSweep<T>, x: T, k_grid: &UniformGrid<T>) -> Result<RealSamples<T>> {
    Ok(e_function(sweep, x, k_grid)?.map(|_, v| v.im))
}

/// `(E, E_-)` at `x` from the system `E' = ikE - A E_-`, `E_-' = -ikE_- - A E`,
/// `E(0) = E_-(0) = 1`.
///
/// The free oscillation is factored out, `E = e^{ikx} u`, `E_- = e^{-ikx} v`, and
/// `u' = -A e^{-2ikx} v`, `v' = -A e^{2ikx} u` is integrated by classical Runge–Kutta
/// with `A` interpolated between samples; substeps keep `2 k dt <= 0.1`.
pub fn integrate_e_system<T: Real>(a: &AmplitudeA<T>, x: T, k: T) -> Result<(Cplx<T>, Cplx<T>)> {
    let (u, v) = integrate_interaction(a, x, k)?;
    let phase = (imag_unit::<T>() * (k * x)).exp();
    Ok((phase * u, phase.conj() * v))
}

fn integrate_interaction<T: Real>(a: &AmplitudeA<T>, x: T, k: T) -> Result<(Cplx<T>, Cplx<T>)> {
    let grid = a.a.grid();
    let hx = grid.step();
    let n = grid_count(x, hx)?;
    if n >= grid.len() {
        return Err(ScatterError::InvalidGrid(format!("A known up to {}, need {x}", grid.end())));
    }
    let v = a.a.values();
    if v[..=n].iter().any(|y| !y.is_finite()) {
        return Err(ScatterError::OdeFailure("non-finite amplitude".into()));
    }
    let sub = (k.abs() * hx / lit(0.05)).ceil().max(T::one());
    let m = sub.to_usize().unwrap_or(1);
    let dt = hx / sub;
    let two_ik = imag_unit::<T>() * (k * lit(2.0));
    let rhs = |u_idx: T, p: Cplx<T>, q: Cplx<T>| {
        let av = lagrange4(v, u_idx);
        let rot = (two_ik * (u_idx * hx)).exp();
        (-(q * av) / rot, -(p * av) * rot)
    };
    let (mut p, mut q) = (re(T::one()), re(T::one()));
    let inv = T::one() / sub;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let sixth = dt / T::lit(6.0);
    for i in 0..n {
        for j in 0..m {
            let u = T::from_usize_lossy(i) + T::from_usize_lossy(j) * inv;
            let (k1, l1) = rhs(u, p, q);
            let (k2, l2) = rhs(u + inv * half, p + k1 * (dt * half), q + l1 * (dt * half));
            let (k3, l3) = rhs(u + inv * half, p + k2 * (dt * half), q + l2 * (dt * half));
            let (k4, l4) = rhs(u + inv, p + k3 * dt, q + l3 * dt);
            p += (k1 + k2 * two + k3 * two + k4) * sixth;
            q += (l1 + l2 * two + l3 * two + l4) * sixth;
        }
    }
    if !(p.re.is_finite() && p.im.is_finite() && q.re.is_finite() && q.im.is_finite()) {
        return Err(ScatterError::OdeFailure(format!("non-finite E at k = {k}")));
    }
    Ok((p, q))
}

/// Row `Γ_{2x}(s, 0)`, `s in [0, 2x]`, recovered from `A` through `E(x, k)`.
///
/// `G(k) = 1 - E(x,k) e^{-ikx}` is the transform of the row. The linear function
/// through the known end values `Γ(2x) = A(x)/2` and `Γ(0) = A(0)/2 - int_0^x A^2/2`
/// is removed first, leaving a remainder whose transform behaves like
/// `-(a - b e^{-ikL}) / k^2`; `a`, `b` are fitted on the top decile of `k_grid` and
/// the part beyond the grid is added in closed form.
pub fn converse_chain<T: Real>(a: &AmplitudeA<T>, k_grid: &UniformGrid<T>, x: T) -> Result<RealSamples<T>> {
    if !k_grid.is_positive_half_offset() {
        return Err(ScatterError::InvalidGrid("momentum grid must be half-offset".into()));
    }
    let hx = a.a.grid().step();
    let n = grid_count(x, hx)?;
    let length = x * lit(2.0);
    let v = a.a.values();
    let g_end = v[n] * lit(0.5);
    let sq: Vec<T> = v[..=n].iter().map(|y| *y * *y).collect();
    let g_start = v[0] * lit(0.5) - trapezoid(sq.iter().copied(), hx) * lit(0.5);

    let ks: Vec<T> = k_grid.nodes().collect();
    let remainder: Vec<Cplx<T>> = ks
        .par_iter()
        .map(|&k| {
            let (u, _) = integrate_interaction(a, x, k)?;
            let g = re::<T>(T::one()) - u;
            let (wa, wb) = exp_panel(-imag_unit::<T>() * (k * length));
            Ok(g - (wa * g_start + wb * g_end) * length)
        })
        .collect::<Result<Vec<_>>>()?;

    // least squares for real (a, b) in -k^2 D(k) ~ a - b e^{-ikL}
    let first = ks.len() - (ks.len() / 10).max(4).min(ks.len());
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (k, d) in ks.iter().zip(&remainder).skip(first) {
        let y = -*d * (*k * *k);
        let p2 = -(-imag_unit::<T>() * (*k * length)).exp();
        s11 += T::one();
        s12 += p2.re;
        s22 += p2.norm_sqr();
        r1 += y.re;
        r2 += (p2.conj() * y).re;
    }
    let det = s11 * s22 - s12 * s12;
    let (ca, cb) = if det.abs() > T::epsilon() * s11 * s22 {
        ((r1 * s22 - r2 * s12) / det, (r2 * s11 - r1 * s12) / det)
    } else {
        (T::zero(), T::zero())
    };

    let dk = k_grid.step();
    let cutoff = k_grid.end() + dk * lit(0.5);
    let out_grid = UniformGrid::from_zero(length, hx * lit(2.0))?;
    let ss: Vec<T> = out_grid.nodes().collect();
    let row: Vec<T> = ss
        .par_iter()
        .map(|&s| {
            let mut acc = T::zero();
            for (k, d) in ks.iter().zip(&remainder) {
                acc += (*d * (imag_unit::<T>() * (*k * s)).exp()).re;
            }
            let tail = -(ca * cosine_tail_sq(cutoff, s) - cb * cosine_tail_sq(cutoff, s - length));
            let lin = g_start + (g_end - g_start) * s / length;
            lin + (acc * dk + tail) / T::PI()
        })
        .collect();
    RealSamples::new(out_grid, row)
}

/// Default `|A|` bound for [`riccati_converse`].
pub const RICCATI_BOUND: f64 = 1e6;

/// `A' = q - A^2`, `A(0) = a0`, by classical Runge–Kutta on the potential grid.
pub fn riccati_converse<T: Real>(q: &Potential<T>, a0: T, bound: T) -> Result<AmplitudeA<T>> {
    let grid = *q.grid();
    let h = grid.step();
    let v = q.samples().values();
    let half = lit::<T>(0.5);
    let f = |u: T, a: T| lagrange4(v, u) - a * a;
    let mut out = Vec::with_capacity(v.len());
    let mut a = a0;
    out.push(a);
    for i in 0..v.len() - 1 {
        let u = T::from_usize_lossy(i);
        let k1 = f(u, a);
        let k2 = f(u + half, a + k1 * h * half);
        let k3 = f(u + half, a + k2 * h * half);
        let k4 = f(u + T::one(), a + k3 * h);
        a += (k1 + k2 * lit(2.0) + k3 * lit(2.0) + k4) * h / lit(6.0);
        if !(a.abs() <= bound) {
            return Err(ScatterError::BlowUp { x: grid.node(i + 1).to_f64_lossy(), value: a.to_f64_lossy() });
        }
        out.push(a);
    }
    Ok(AmplitudeA { a: RealSamples::new(grid, out)? })
}
