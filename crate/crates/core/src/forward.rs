//! Forward scattering: Jost solution, Jost function, S-matrix, phase shift, bound
//! states and spectral density of a short-range potential on the half-line.
//!
//! The Jost solution is written `f(x, k) = e^{ikx} m(x, k)`, and `m` solves
//!
//! ```text
//! m(x) = 1 + int_x^X (e^{2ik(y-x)} - 1) / (2ik) q(y) m(y) dy,
//! ```
//!
//! which is the Volterra equation `f = e^{ikx} + int sin(k(y-x))/k q f dy` with the
//! oscillation factored out. The march from `X` to `0` integrates the kernel exactly
//! against a piecewise-linear `q m`, so the scheme is second order uniformly in `k`
//! (no `kh < 1` restriction) and remains regular at `k = 0` and on `Re k = 0`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Result, ScatterError};
use crate::grid::{trapezoid, ComplexSamples, RealSamples, UniformGrid};
use crate::riemann::JostClosure;
use crate::scalar::{imag_unit, lit, re, Cplx, Real};
use crate::special::{exp_kernel_panel, exp_panel, phi1};

/// `|f(k)|` below this is treated as a zero of the Jost function.
pub const ZERO_JOST_FLOOR: f64 = 1e-8;

/// Allowed deviation of `|S|` from one.
pub const UNITARITY_TOL: f64 = 1e-6;

/// Real potential sampled on `0, h, ..., X`; it vanishes for `x > X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential<T> {
    q: RealSamples<T>,
}

impl<T: Real> Potential<T> {
    pub fn new(q: RealSamples<T>) -> Result<Self> {
        let g = q.grid();
        if g.start().abs() > g.step() * lit(1e-9) {
            return Err(ScatterError::InvalidInput("potential grid must start at x = 0".into()));
        }
        if q.values().iter().any(|v| !v.is_finite()) {
            return Err(ScatterError::InvalidInput("potential has non-finite samples".into()));
        }
        let p = Self { q };
        if !p.first_moment().is_finite() {
            return Err(ScatterError::InvalidInput("int x |q| dx is not finite".into()));
        }
        Ok(p)
    }

    pub fn from_fn(support_end: T, step: T, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(RealSamples::from_fn(UniformGrid::from_zero(support_end, step)?, f))
    }

    pub fn zero(support_end: T, step: T) -> Result<Self> {
        Self::from_fn(support_end, step, |_| T::zero())
    }

    pub fn samples(&self) -> &RealSamples<T> {
        &self.q
    }

    pub fn grid(&self) -> &UniformGrid<T> {
        self.q.grid()
    }

    pub fn support_end(&self) -> T {
        self.q.grid().end()
    }

    /// `int_0^X x |q(x)| dx` (membership in the class L_{1,1}).
    pub fn first_moment(&self) -> T {
        trapezoid(self.q.iter().map(|(x, v)| x * v.abs()), self.q.grid().step())
    }

    /// `A(0) = (1/2) int_0^X q`, the coefficient of the `1/k` term of the Jost function.
    pub fn half_integral(&self) -> T {
        trapezoid(self.q.values().iter().copied(), self.q.grid().step()) * lit(0.5)
    }

    /// Restriction to `[0, x_end]`.
    pub fn truncated(&self, x_end: T) -> Result<Self> {
        let g = self.grid();
        let n = g.nearest(x_end) + 1;
        let grid = UniformGrid::new(T::zero(), g.step(), n)?;
        Self::new(RealSamples::new(grid, self.q.values()[..n].to_vec())?)
    }
}

/// S-matrix samples on `k > 0` together with bound-state data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData<T> {
    pub s: ComplexSamples<T>,
    pub bound_ks: Vec<T>,
    pub norming: Vec<T>,
}

impl<T: Real> ScatteringData<T> {
    pub fn new(s: ComplexSamples<T>, bound_ks: Vec<T>, norming: Vec<T>) -> Result<Self> {
        if bound_ks.len() != norming.len() {
            return Err(ScatterError::LengthMismatch { expected: bound_ks.len(), got: norming.len() });
        }
        if bound_ks.iter().any(|k| !(*k > T::zero())) || norming.iter().any(|s| !(*s > T::zero())) {
            return Err(ScatterError::InvalidInput("bound-state momenta and norming constants must be positive".into()));
        }
        for (i, a) in bound_ks.iter().enumerate() {
            if bound_ks[i + 1..].iter().any(|b| (*a - *b).abs() <= T::epsilon() * a.abs()) {
                return Err(ScatterError::InvalidInput("bound-state momenta must be distinct".into()));
            }
        }
        let defect = unitarity_defect(&s);
        if defect > lit(UNITARITY_TOL) {
            return Err(ScatterError::InvalidInput(format!("|S| deviates from 1 by {defect}")));
        }
        Ok(Self { s, bound_ks, norming })
    }
}

/// `sup | |S| - 1 |`.
pub fn unitarity_defect<T: Real>(s: &ComplexSamples<T>) -> T {
    s.values().iter().fold(T::zero(), |m, v| m.max((v.norm() - T::one()).abs()))
}

/// State of the backward march at one node: `m(x)` and `m'(x)`.
#[derive(Debug, Clone, Copy)]
struct MarchNode<T> {
    m: Cplx<T>,
    dm: Cplx<T>,
}

/// March from `x = X` to `x = 0`; `visit(i, node)` sees every node in decreasing order.
fn march<T: Real>(q: &[T], h: T, k: Cplx<T>, mut visit: impl FnMut(usize, MarchNode<T>)) -> MarchNode<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let one = re(T::one());
    let n = q.len();
    let z = imag_unit::<T>() * k * (h * lit(2.0));
    let e = z.exp();
    let (pa, pb) = exp_kernel_panel(z);
    let (wa, wb) = exp_panel(z);
    let hphi = phi1(z) * h;
    let h2 = h * h;
    let half_h = h * lit(0.5);

    let mut m = one;
    let mut d = zero; // int_x^X (e^{2ik(y-x)} - 1)/(2ik) g
    let mut i0 = zero; // int_x^X g
    let mut j = zero; // int_x^X e^{2ik(y-x)} g
    let mut g = m * q[n - 1];
    let last = MarchNode { m, dm: zero };
    visit(n - 1, last);
    let mut node = last;
    for i in (0..n - 1).rev() {
        let rhs = one + e * d + hphi * i0 + pb * g * h2;
        m = rhs / (one - pa * (h2 * q[i]));
        let gi = m * q[i];
        d = m - one;
        i0 += (gi + g) * half_h;
        j = e * j + (wa * gi + wb * g) * h;
        g = gi;
        node = MarchNode { m, dm: -j };
        visit(i, node);
    }
    node
}

/// Jost solution `f(x, k)` on `x_grid`, which must start at 0 and share the
/// potential's step; nodes beyond the support get `e^{ikx}` exactly.
pub fn jost_solution<T: Real>(q: &Potential<T>, k: Cplx<T>, x_grid: &UniformGrid<T>) -> Result<ComplexSamples<T>> {
    if k.im < T::zero() {
        return Err(ScatterError::InvalidInput("Jost solution requires Im k >= 0".into()));
    }
    let pg = q.grid();
    if x_grid.start().abs() > pg.step() * lit(1e-9) || (x_grid.step() - pg.step()).abs() > pg.step() * lit(1e-9) {
        return Err(ScatterError::InvalidInput("x grid must start at 0 with the potential's step".into()));
    }
    let n = q.samples().len();
    let mut ms = vec![Complex::new(T::zero(), T::zero()); n];
    march(q.samples().values(), pg.step(), k, |i, node| ms[i] = node.m);
    if ms.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(ScatterError::NoConvergence(format!("non-finite Jost solution at k = {k}")));
    }
    let ik = imag_unit::<T>() * k;
    Ok(ComplexSamples::from_fn(*x_grid, |x| {
        let i = x_grid.nearest(x);
        let phase = (ik * x).exp();
        if i < n {
            phase * ms[i]
        } else {
            phase
        }
    }))
}

/// `(f(0, k), f'(0, k))`.
pub fn jost_at_origin<T: Real>(q: &Potential<T>, k: Cplx<T>) -> (Cplx<T>, Cplx<T>) {
    let node = march(q.samples().values(), q.grid().step(), k, |_, _| {});
    let ik = imag_unit::<T>() * k;
    (node.m, ik * node.m + node.dm)
}

/// Jost function `f(k) = f(0, k)` on a positive momentum grid.
pub fn jost_function<T: Real>(q: &Potential<T>, k_grid: &UniformGrid<T>) -> Result<JostClosure<T>> {
    let values: Vec<Cplx<T>> = (0..k_grid.len())
        .into_par_iter()
        .map(|i| jost_at_origin(q, re(k_grid.node(i))).0)
        .collect();
    if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(ScatterError::NoConvergence(format!("non-finite Jost function at k = {}", k_grid.node(i))));
    }
    JostClosure::new(ComplexSamples::new(*k_grid, values)?, q.half_integral())
}

/// `S(k) = f(-k) / f(k)`, with `f(-k) = conj f(k)` for real potentials.
pub fn s_matrix<T: Real>(f: &JostClosure<T>) -> Result<ComplexSamples<T>> {
    check_nonvanishing(f)?;
    Ok(f.values().map(|_, v| v.conj() / *v))
}

pub(crate) fn check_nonvanishing<T: Real>(f: &JostClosure<T>) -> Result<()> {
    for (k, v) in f.values().iter() {
        if v.norm() < lit(ZERO_JOST_FLOOR) {
            return Err(ScatterError::ZeroJost { k: k.to_f64_lossy(), modulus: v.norm().to_f64_lossy() });
        }
    }
    Ok(())
}

/// Continuous phase shift `delta` with `S = e^{2 i delta}`, normalized to vanish at
/// the high-momentum end of the grid.
pub fn phase_shift<T: Real>(s: &ComplexSamples<T>) -> Result<RealSamples<T>> {
    let defect = unitarity_defect(s);
    if defect > lit(UNITARITY_TOL) {
        return Err(ScatterError::InvalidInput(format!("|S| deviates from 1 by {defect}")));
    }
    let arg = unwrap_backward(s)?;
    RealSamples::new(*s.grid(), arg.into_iter().map(|a| a * lit(0.5)).collect())
}

/// Unwrapped `arg` of the samples, continued from the principal value at the last node.
pub(crate) fn unwrap_backward<T: Real>(s: &ComplexSamples<T>) -> Result<Vec<T>> {
    let v = s.values();
    let n = v.len();
    let mut out = vec![T::zero(); n];
    out[n - 1] = v[n - 1].arg();
    for i in (0..n - 1).rev() {
        let step = (v[i] / v[i + 1]).arg();
        if step.abs() > T::FRAC_PI_2() {
            return Err(ScatterError::UnwrapAmbiguity {
                k: s.grid().node(i).to_f64_lossy(),
                jump: step.to_f64_lossy(),
            });
        }
        out[i] = out[i + 1] + step;
    }
    Ok(out)
}

/// Negative Dirichlet eigenvalues `-k_j^2` and norming constants `s_j`.
///
/// Zeros of the real function `kappa -> f(i kappa)` are bracketed on 64 points of
/// `(0, sqrt(max |q|)]` and refined by bisection.
pub fn bound_states<T: Real>(q: &Potential<T>) -> (Vec<T>, Vec<T>) {
    let qmax = q.samples().values().iter().fold(T::zero(), |m, v| m.max(-*v));
    if qmax <= T::zero() {
        return (Vec::new(), Vec::new());
    }
    let top = qmax.sqrt();
    let f_on_axis = |kappa: T| jost_at_origin(q, Complex::new(T::zero(), kappa)).0.re;
    let scan = 64;
    let nodes: Vec<T> = (1..=scan).map(|i| top * T::from_usize_lossy(i) / T::from_usize_lossy(scan)).collect();
    let vals: Vec<T> = nodes.iter().map(|&kp| f_on_axis(kp)).collect();
    let mut lo = top * lit(1e-6);
    let mut flo = f_on_axis(lo);
    let mut ks = Vec::new();
    for (kp, fv) in nodes.iter().zip(&vals) {
        if flo * *fv < T::zero() {
            let (mut a, mut b, mut fa) = (lo, *kp, flo);
            for _ in 0..200 {
                let mid = (a + b) * lit(0.5);
                let fm = f_on_axis(mid);
                if fm * fa <= T::zero() {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
                if (b - a) <= T::epsilon() * lit(4.0) * b {
                    break;
                }
            }
            ks.push((a + b) * lit(0.5));
        }
        lo = *kp;
        flo = *fv;
    }
    ks.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let norming = ks.iter().map(|&kj| norming_constant(q, kj)).collect();
    (ks, norming)
}

/// `s_j = -2 i k_j / (fdot(i k_j) f'(0, i k_j))`, `fdot` by a central difference along
/// the imaginary axis with step `k_j * 1e-4`.
pub fn norming_constant<T: Real>(q: &Potential<T>, kappa: T) -> T {
    let d = kappa * lit(1e-4);
    let fp = jost_at_origin(q, Complex::new(T::zero(), kappa + d)).0;
    let fm = jost_at_origin(q, Complex::new(T::zero(), kappa - d)).0;
    // d/dk with k = i kappa: (f(i(kappa+d)) - f(i(kappa-d))) / (2 i d)
    let fdot = (fp - fm) / (imag_unit::<T>() * (d * lit(2.0)));
    let (_, fprime) = jost_at_origin(q, Complex::new(T::zero(), kappa));
    let s = -imag_unit::<T>() * (kappa * lit(2.0)) / (fdot * fprime);
    s.re
}

/// Spectral density `rho'(k) = 2 k^2 / (pi |f(k)|^2)` for `k > 0`.
pub fn spectral_density<T: Real>(f: &JostClosure<T>) -> Result<RealSamples<T>> {
    check_nonvanishing(f)?;
    Ok(f.values().map(|k, v| lit::<T>(2.0) * k * k / (T::PI() * v.norm_sqr())))
}

/// Full forward map: S-matrix on `k_grid` plus bound states.
pub fn scattering_data<T: Real>(q: &Potential<T>, k_grid: &UniformGrid<T>) -> Result<ScatteringData<T>> {
    let f = jost_function(q, k_grid)?;
    let s = s_matrix(&f)?;
    let (ks, norming) = bound_states(q);
    ScatteringData::new(s, ks, norming)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cplx<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn zero_potential_gives_plane_wave() {
        let q = Potential::zero(5.0, 0.05).unwrap();
        let k = c(1.7, 0.0);
        let f = jost_solution(&q, k, q.grid()).unwrap();
        for (x, v) in f.iter() {
            assert!((v - (c(0.0, 1.7) * x).exp()).norm() < 1e-14);
        }
        let kg = UniformGrid::half_offset(0.1, 50).unwrap();
        let jf = jost_function(&q, &kg).unwrap();
        assert!(jf.values().values().iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-14));
        let s = s_matrix(&jf).unwrap();
        assert!(s.values().iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-14));
        assert!(phase_shift(&s).unwrap().values().iter().all(|d| d.abs() < 1e-14));
        assert_eq!(bound_states(&q), (vec![], vec![]));
        let rho = spectral_density(&jf).unwrap();
        for (k, r) in rho.iter() {
            assert!((r - 2.0 * k * k / std::f64::consts::PI).abs() < 1e-12);
        }
    }

    #[test]
    fn beyond_support_is_exact_exponential() {
        let q = Potential::from_fn(3.0, 0.01, |x: f64| (-x).exp()).unwrap();
        let xg = UniformGrid::from_zero(5.0, 0.01).unwrap();
        let k = c(2.0, 0.0);
        let f = jost_solution(&q, k, &xg).unwrap();
        for (x, v) in f.iter().filter(|(x, _)| *x >= 3.0) {
            assert_eq!(*v, (c(0.0, 2.0) * x).exp());
        }
    }

    #[test]
    fn conjugation_symmetry_in_k() {
        let q = Potential::from_fn(8.0, 0.02, |x: f64| (-x).exp() * (3.0 * x).cos()).unwrap();
        let a = jost_solution(&q, c(1.3, 0.0), q.grid()).unwrap();
        let b = jost_solution(&q, c(-1.3, 0.0), q.grid()).unwrap();
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((u.conj() - v).norm() < 1e-13);
        }
    }

    #[test]
    fn grid_refinement_self_oracle() {
        let f0 = |h: f64| {
            let q = Potential::from_fn(20.0, h, |x: f64| (-x).exp()).unwrap();
            jost_at_origin(&q, c(1.0, 0.0)).0
        };
        let coarse = f0(1.0 / 32.0);
        let fine = f0(1.0 / 256.0);
        assert!((coarse - fine).norm() < 1e-4);
        // second-order convergence
        let mid = f0(1.0 / 64.0);
        let ratio = (coarse - fine).norm() / (mid - fine).norm();
        assert!(ratio > 3.5, "ratio {ratio}");
    }

    #[test]
    fn residual_of_the_ode_is_small() {
        let h = 1.0 / 256.0;
        let q = Potential::from_fn(10.0, h, |x: f64| 2.0 * (-x).exp()).unwrap();
        let k = c(1.5, 0.0);
        let f = jost_solution(&q, k, q.grid()).unwrap();
        let v = f.values();
        let qv = q.samples().values();
        let mut worst: f64 = 0.0;
        for i in 1..v.len() - 1 {
            let fpp = (v[i + 1] - v[i] * 2.0 + v[i - 1]) / (h * h);
            worst = worst.max((fpp + v[i] * (k * k) - v[i] * qv[i]).norm());
        }
        assert!(worst < 1e-3, "residual {worst}");
    }

    #[test]
    fn wronskian_identity_at_origin() {
        // f'(0,k) f(-k) - f(k) f'(0,-k) = 2ik (the standard Wronskian)
        let q = Potential::from_fn(10.0, 1.0 / 128.0, |x: f64| 1.5 * (-x).exp()).unwrap();
        for &k in &[0.3, 1.0, 4.0] {
            let (fp, dp) = jost_at_origin(&q, c(k, 0.0));
            let (fm, dm) = jost_at_origin(&q, c(-k, 0.0));
            let w = dp * fm - fp * dm;
            assert!((w - c(0.0, 2.0 * k)).norm() < 2e-4 * k, "k={k} w={w}");
        }
    }

    #[test]
    fn repulsive_potential_has_no_bound_states() {
        let q = Potential::from_fn(20.0, 0.02, |x: f64| (-x).exp()).unwrap();
        assert_eq!(bound_states(&q), (vec![], vec![]));
    }

    #[test]
    fn square_well_bound_state() {
        // depth 5 on [0, 1]: kappa solves k' cot k' = -kappa, k'^2 = 5 - kappa^2
        // the jump carries its mean value so the trapezoid-type march stays second order
        let q = Potential::from_fn(3.0, 1.0 / 1024.0, |x: f64| match x {
            x if (x - 1.0).abs() < 1e-9 => -2.5,
            x if x < 1.0 => -5.0,
            _ => 0.0,
        })
        .unwrap();
        let (ks, ss) = bound_states(&q);
        assert_eq!(ks.len(), 1);
        let g = |kp: f64| {
            let inner = (5.0 - kp * kp).sqrt();
            inner / inner.tan() + kp
        };
        let (mut a, mut b) = (0.01, 2.2);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if g(a) * g(m) <= 0.0 {
                b = m
            } else {
                a = m
            }
        }
        assert!((ks[0] - a).abs() < 1e-3, "{} vs {a}", ks[0]);
        assert!(ss[0] > 0.0);
    }

    #[test]
    fn bargmann_phase_shift() {
        let kg = UniformGrid::half_offset(0.05, 400).unwrap();
        let f = JostClosure::from_fn(&kg, |k| (c(k, 2.0)) / c(k, 1.0), 1.0).unwrap();
        let s = s_matrix(&f).unwrap();
        for (k, v) in s.iter() {
            let kk = c(k, 0.0);
            let exact = ((-kk + c(0.0, 2.0)) * (kk + c(0.0, 1.0))) / ((-kk + c(0.0, 1.0)) * (kk + c(0.0, 2.0)));
            assert!((v - exact).norm() < 1e-13);
        }
        let d = phase_shift(&s).unwrap();
        for (k, v) in d.iter() {
            assert!((v - ((1.0 / k).atan() - (2.0 / k).atan())).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_jost_is_reported() {
        let kg = UniformGrid::half_offset(0.1, 10).unwrap();
        let f = JostClosure::from_fn(&kg, |k| c(k - 0.25, 0.0), 0.0).unwrap();
        assert!(matches!(s_matrix(&f), Err(ScatterError::ZeroJost { .. })));
    }
}
