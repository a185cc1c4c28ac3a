//! Uniform grids and sampled functions.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatterError};
use crate::scalar::{Cplx, Real};

/// Equispaced nodes `start + i * step`, `i = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid<T> {
    start: T,
    step: T,
    count: usize,
}

impl<T: Real> UniformGrid<T> {
    pub fn new(start: T, step: T, count: usize) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(ScatterError::InvalidGrid(format!("step must be positive, got {step}")));
        }
        if count < 2 {
            return Err(ScatterError::InvalidGrid(format!("need at least 2 nodes, got {count}")));
        }
        if !start.is_finite() {
            return Err(ScatterError::InvalidGrid("non-finite start".into()));
        }
        Ok(Self { start, step, count })
    }

    /// Nodes `0, step, ..., end` (the end is rounded to the nearest multiple of `step`).
    pub fn from_zero(end: T, step: T) -> Result<Self> {
        let n = (end / step).round().to_usize().unwrap_or(0);
        Self::new(T::zero(), step, n + 1)
    }

    /// Momentum grid `(i + 1/2) * step`, `i = 0..count`; never contains `k = 0` and its
    /// mirror image is again uniform.
    pub fn half_offset(step: T, count: usize) -> Result<Self> {
        Self::new(step * T::lit(0.5), step, count)
    }

    #[inline]
    pub fn start(&self) -> T {
        self.start
    }

    #[inline]
    pub fn step(&self) -> T {
        self.step
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn node(&self, i: usize) -> T {
        self.start + T::from_usize_lossy(i) * self.step
    }

    #[inline]
    pub fn end(&self) -> T {
        self.node(self.count - 1)
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = T> + '_ {
        (0..self.count).map(move |i| self.node(i))
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: T) -> usize {
        let r = ((x - self.start) / self.step).round();
        if r < T::zero() {
            0
        } else {
            r.to_usize().unwrap_or(usize::MAX).min(self.count - 1)
        }
    }

    /// True for a half-offset grid on the positive axis (the library's momentum grids).
    pub fn is_positive_half_offset(&self) -> bool {
        let rel = (self.start - self.step * T::lit(0.5)).abs() / self.step;
        rel < T::lit(1e-9)
    }

    /// Mirror image `-end, ..., -start, start, ..., end` of a positive half-offset grid.
    pub fn mirrored(&self) -> Self {
        Self { start: -self.end(), step: self.step, count: 2 * self.count }
    }
}

/// Tail model `value(y) ~ coefficient * y^(-rate) + next * y^(-rate-2)` for `|y|`
/// beyond the grid.
///
/// Integer rates carry their natural parity: odd rates give odd tails, even rates
/// even ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailDecay<T, V = T> {
    pub coefficient: V,
    pub rate: T,
    pub next: Option<V>,
}

/// A function sampled on a uniform grid, optionally with an analytic tail model.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled<T, V> {
    grid: UniformGrid<T>,
    values: Vec<V>,
    tail: Option<TailDecay<T, V>>,
}

/// Complex-valued samples (S, f, E, ...).
pub type ComplexSamples<T> = Sampled<T, Cplx<T>>;
/// Real-valued samples (H, F, q, A, ...).
pub type RealSamples<T> = Sampled<T, T>;

impl<T: Real, V: Clone> Sampled<T, V> {
    pub fn new(grid: UniformGrid<T>, values: Vec<V>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(ScatterError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values, tail: None })
    }

    pub fn from_fn(grid: UniformGrid<T>, f: impl Fn(T) -> V) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values, tail: None }
    }

    pub fn with_tail(mut self, tail: TailDecay<T, V>) -> Result<Self> {
        if !(tail.rate > T::zero()) {
            return Err(ScatterError::InvalidInput(format!("tail rate must be positive, got {}", tail.rate)));
        }
        self.tail = Some(tail);
        Ok(self)
    }

    #[inline]
    pub fn grid(&self) -> &UniformGrid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[V] {
        &self.values
    }

    #[inline]
    pub fn tail(&self) -> Option<&TailDecay<T, V>> {
        self.tail.as_ref()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<V> {
        self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &V)> + '_ {
        self.grid.nodes().zip(self.values.iter())
    }

    pub fn map<W: Clone>(&self, f: impl Fn(T, &V) -> W) -> Sampled<T, W> {
        Sampled {
            grid: self.grid,
            values: self.iter().map(|(x, v)| f(x, v)).collect(),
            tail: None,
        }
    }
}

impl<T: Real> RealSamples<T> {
    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Trapezoid approximation of `int |v|`.
    pub fn l1_norm(&self) -> T {
        trapezoid(self.values.iter().map(|v| v.abs()), self.grid.step())
    }

    /// Linear interpolation, clamped at the ends.
    pub fn interpolate(&self, x: T) -> T {
        let g = &self.grid;
        let u = (x - g.start()) / g.step();
        if u <= T::zero() {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        let i = u.floor().to_usize().unwrap_or(last);
        if i >= last {
            return self.values[last];
        }
        let w = u - T::from_usize_lossy(i);
        self.values[i] * (T::one() - w) + self.values[i + 1] * w
    }

    pub fn sup_abs_diff(&self, other: &Self) -> T {
        self.values.iter().zip(&other.values).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

impl<T: Real> ComplexSamples<T> {
    pub fn sup_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn real_part(&self) -> RealSamples<T> {
        self.map(|_, v| v.re)
    }
}

/// Composite trapezoid rule over equispaced values.
pub fn trapezoid<T: Real>(values: impl IntoIterator<Item = T>, step: T) -> T {
    let v: Vec<T> = values.into_iter().collect();
    if v.len() < 2 {
        return T::zero();
    }
    let inner: T = v[1..v.len() - 1].iter().copied().sum();
    (inner + (v[0] + v[v.len() - 1]) * T::lit(0.5)) * step
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_have_no_drift() {
        let g = UniformGrid::new(0.1_f64, 0.1, 100_001).unwrap();
        assert_eq!(g.node(100_000), 0.1 + 100_000.0 * 0.1);
        assert_eq!(g.len(), 100_001);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(UniformGrid::new(0.0_f64, 0.0, 10).is_err());
        assert!(UniformGrid::new(0.0_f64, -1.0, 10).is_err());
        assert!(UniformGrid::new(0.0_f64, 1.0, 1).is_err());
    }

    #[test]
    fn length_must_match() {
        let g = UniformGrid::new(0.0_f64, 1.0, 3).unwrap();
        assert!(matches!(
            RealSamples::new(g, vec![1.0, 2.0]),
            Err(ScatterError::LengthMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn tail_rate_positive() {
        let g = UniformGrid::new(0.0_f64, 1.0, 3).unwrap();
        let s = RealSamples::new(g, vec![1.0; 3]).unwrap();
        assert!(s.with_tail(TailDecay { coefficient: 1.0, rate: 0.0, next: None }).is_err());
    }

    #[test]
    fn half_offset_mirror_is_uniform() {
        let g = UniformGrid::half_offset(0.5_f64, 4).unwrap();
        assert!(g.is_positive_half_offset());
        let m = g.mirrored();
        assert_eq!(m.node(0), -1.75);
        assert_eq!(m.node(3), -0.25);
        assert_eq!(m.node(4), 0.25);
        assert_eq!(m.node(7), 1.75);
    }

    #[test]
    fn trapezoid_linear_exact() {
        let v = (0..11).map(|i| i as f64 * 0.1);
        assert!((trapezoid(v, 0.1) - 0.5).abs() < 1e-14);
    }
}
