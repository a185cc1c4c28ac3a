//! Index normalization by Blaschke factors: data with `ind S = -2J` or `-2J-1` is
//! mapped to an index-zero `S1 = S w^2` or `S1 = S W^2`.
//!
//! Recovering the full potential from the reduced one (re-adding bound states) is not
//! done here.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatterError};
use crate::grid::{ComplexSamples, UniformGrid};
use crate::riemann::winding_index;
use crate::scalar::{Cplx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlaschkeSpec<T> {
    pub bound_ks: Vec<T>,
    /// Required for the odd case.
    pub gamma: Option<T>,
    pub parity: Parity,
}

impl<T: Real> BlaschkeSpec<T> {
    pub fn empty() -> Self {
        Self { bound_ks: Vec::new(), gamma: None, parity: Parity::Even }
    }

    pub fn even(bound_ks: Vec<T>) -> Result<Self> {
        let s = Self { bound_ks, gamma: None, parity: Parity::Even };
        s.validate()?;
        Ok(s)
    }

    pub fn odd(bound_ks: Vec<T>, gamma: T) -> Result<Self> {
        let s = Self { bound_ks, gamma: Some(gamma), parity: Parity::Odd };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, k) in self.bound_ks.iter().enumerate() {
            if !(*k > T::zero()) || !k.is_finite() {
                return Err(ScatterError::InvalidInput(format!("bound state k = {k} must be positive")));
            }
            if self.bound_ks[..i].contains(k) {
                return Err(ScatterError::InvalidInput(format!("bound state k = {k} repeated")));
            }
        }
        match (self.parity, self.gamma) {
            (Parity::Even, None) => Ok(()),
            (Parity::Even, Some(g)) => Err(ScatterError::InvalidGamma(g.to_f64_lossy())),
            (Parity::Odd, None) => Err(ScatterError::InvalidGamma(f64::NAN)),
            (Parity::Odd, Some(g)) if !(g > T::zero()) || self.bound_ks.contains(&g) => {
                Err(ScatterError::InvalidGamma(g.to_f64_lossy()))
            }
            (Parity::Odd, Some(_)) => Ok(()),
        }
    }

    /// The index `S` must have for this spec.
    pub fn expected_index(&self) -> i64 {
        let j = self.bound_ks.len() as i64;
        match self.parity {
            Parity::Even => -2 * j,
            Parity::Odd => -2 * j - 1,
        }
    }
}

/// `w(k) = prod (k - i k_j) / (k + i k_j)`, or `W(k) = k / (k + i gamma) w(k)` in the odd case.
///
/// `w` is unimodular; `W` is not, but `W^2 / |W^2| = (k - i gamma)/(k + i gamma) w^2`
/// carries the same phase and is what [`reduce_index`] applies.
pub fn blaschke<T: Real>(spec: &BlaschkeSpec<T>, k_grid: &UniformGrid<T>) -> Result<ComplexSamples<T>> {
    spec.validate()?;
    Ok(ComplexSamples::from_fn(*k_grid, |k| blaschke_at(spec, k)))
}

fn blaschke_at<T: Real>(spec: &BlaschkeSpec<T>, k: T) -> Cplx<T> {
    let w = spec
        .bound_ks
        .iter()
        .fold(Complex::new(T::one(), T::zero()), |acc, kj| acc * Complex::new(k, -*kj) / Complex::new(k, *kj));
    match spec.gamma {
        Some(g) => w * Complex::new(k, T::zero()) / Complex::new(k, g),
        None => w,
    }
}

/// `S1 = S w^2` (even) or `S1 = S W^2/|W^2|` (odd), after checking `ind S` against the spec.
pub fn reduce_index<T: Real>(s: &ComplexSamples<T>, spec: &BlaschkeSpec<T>) -> Result<ComplexSamples<T>> {
    spec.validate()?;
    let computed = winding_index(s)?;
    let expected = spec.expected_index();
    if computed != expected {
        return Err(ScatterError::IndexMismatch { computed, expected });
    }
    if spec.bound_ks.is_empty() && spec.gamma.is_none() {
        return Ok(s.clone());
    }
    let s1 = s.map(|k, v| {
        let b = blaschke_at(spec, k);
        let b2 = b * b;
        *v * b2 / b2.norm()
    });
    let after = winding_index(&s1)?;
    if after != 0 {
        return Err(ScatterError::IndexMismatch { computed: after, expected: 0 });
    }
    Ok(s1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::unitarity_defect;

    fn c(re: f64, im: f64) -> Cplx<f64> {
        Complex::new(re, im)
    }

    fn grid() -> UniformGrid<f64> {
        UniformGrid::half_offset(0.01, 20000).unwrap()
    }

    fn bargmann_s(k: f64) -> Cplx<f64> {
        (c(k, -2.0) * c(k, 1.0)) / (c(k, -1.0) * c(k, 2.0))
    }

    #[test]
    fn empty_spec_is_identity() {
        let w = blaschke(&BlaschkeSpec::empty(), &grid()).unwrap();
        assert!(w.values().iter().all(|v| *v == c(1.0, 0.0)));
        let s = ComplexSamples::from_fn(grid(), bargmann_s);
        assert_eq!(reduce_index(&s, &BlaschkeSpec::empty()).unwrap(), s);
    }

    #[test]
    fn single_factor_indices() {
        let spec = BlaschkeSpec::even(vec![1.0]).unwrap();
        let w = blaschke(&spec, &grid()).unwrap();
        assert!(unitarity_defect(&w) < 1e-14);
        let w2 = w.map(|_, v| v * v);
        assert_eq!(winding_index(&w2).unwrap(), 2);
        let spec = BlaschkeSpec::odd(vec![], 0.5).unwrap();
        let big_w = blaschke(&spec, &grid()).unwrap();
        assert_eq!(winding_index(&big_w.map(|_, v| v * v)).unwrap(), 1);
    }

    #[test]
    fn even_reduction() {
        let s = ComplexSamples::from_fn(grid(), |k| bargmann_s(k) * c(k, 1.0).powi(2) / c(k, -1.0).powi(2));
        assert_eq!(winding_index(&s).unwrap(), -2);
        let s1 = reduce_index(&s, &BlaschkeSpec::even(vec![1.0]).unwrap()).unwrap();
        assert_eq!(winding_index(&s1).unwrap(), 0);
        assert!(unitarity_defect(&s1) < 1e-12);
        for (k, v) in s1.iter() {
            assert!((v - bargmann_s(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn odd_reduction() {
        let g = 0.5;
        let s = ComplexSamples::from_fn(grid(), |k| c(k, g) / c(k, -g));
        assert_eq!(winding_index(&s).unwrap(), -1);
        let s1 = reduce_index(&s, &BlaschkeSpec::odd(vec![], g).unwrap()).unwrap();
        assert_eq!(winding_index(&s1).unwrap(), 0);
        assert!(s1.values().iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn mismatch_and_bad_gamma() {
        let s = ComplexSamples::from_fn(grid(), bargmann_s);
        let err = reduce_index(&s, &BlaschkeSpec::even(vec![1.0]).unwrap()).unwrap_err();
        assert!(matches!(err, ScatterError::IndexMismatch { computed: 0, expected: -2 }));
        assert!(matches!(BlaschkeSpec::odd(vec![1.0], 1.0), Err(ScatterError::InvalidGamma(_))));
        assert!(matches!(BlaschkeSpec::odd(vec![], -1.0), Err(ScatterError::InvalidGamma(_))));
        assert!(BlaschkeSpec::even(vec![1.0, 1.0]).is_err());
    }
}
