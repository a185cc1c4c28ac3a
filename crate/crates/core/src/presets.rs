//! Named test potentials and the closed forms available for them.
//!
//! Syntax: `zero`, `exp(a=1,c=1)` for `q = c e^{-a x}`, `well(d=5,w=1)` for
//! `q = -d` on `[0, w]`, `bargmann` for the potential with `f(k) = (k+2i)/(k+i)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Result, ScatterError};
use crate::forward::Potential;
use crate::scalar::{lit, Cplx, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Zero,
    Exp { a: f64, c: f64 },
    Well { depth: f64, width: f64 },
    Bargmann,
}

impl Preset {
    pub fn q<T: Real>(&self, x: T) -> T {
        match *self {
            Preset::Zero => T::zero(),
            Preset::Exp { a, c } => lit::<T>(c) * (-lit::<T>(a) * x).exp(),
            Preset::Well { depth, width } => {
                let w = lit::<T>(width);
                if x < w {
                    -lit::<T>(depth)
                } else if x == w {
                    -lit::<T>(depth * 0.5)
                } else {
                    T::zero()
                }
            }
            Preset::Bargmann => {
                let e = (-lit::<T>(2.0) * x).exp();
                let d = lit::<T>(3.0) - e;
                lit::<T>(24.0) * e / (d * d)
            }
        }
    }

    /// Samples on `[0, support_end]`; a well edge that falls on a node gets the mean value.
    pub fn potential<T: Real>(&self, support_end: T, step: T) -> Result<Potential<T>> {
        Potential::from_fn(support_end, step, |x| self.q(x))
    }

    pub fn bound_state_count_hint(&self) -> Option<usize> {
        match *self {
            Preset::Zero | Preset::Bargmann => Some(0),
            Preset::Exp { c, .. } if c >= 0.0 => Some(0),
            Preset::Well { depth, width } if depth > 0.0 => {
                Some(((depth.sqrt() * width / std::f64::consts::PI) + 0.5).floor() as usize)
            }
            Preset::Well { .. } => Some(0),
            Preset::Exp { .. } => None,
        }
    }

    /// Closed-form Jost function where one exists.
    pub fn jost<T: Real>(&self, k: T) -> Option<Cplx<T>> {
        match self {
            Preset::Zero => Some(Complex::new(T::one(), T::zero())),
            Preset::Bargmann => Some(Complex::new(k, lit(2.0)) / Complex::new(k, T::one())),
            _ => None,
        }
    }

    pub fn s_matrix<T: Real>(&self, k: T) -> Option<Cplx<T>> {
        self.jost(k).map(|f| f.conj() / f)
    }

    /// `1/k` coefficient of `f(k) - 1` in units of `i`.
    pub fn jost_a0(&self) -> Option<f64> {
        match self {
            Preset::Zero => Some(0.0),
            Preset::Bargmann => Some(1.0),
            _ => None,
        }
    }

    pub fn krein_kernel<T: Real>(&self, t: T) -> Option<T> {
        match self {
            Preset::Zero => Some(T::zero()),
            Preset::Bargmann => Some(lit::<T>(-0.75) * (-lit::<T>(2.0) * t.abs()).exp()),
            _ => None,
        }
    }

    pub fn marchenko_kernel<T: Real>(&self, x: T) -> Option<T> {
        match self {
            Preset::Zero => Some(T::zero()),
            Preset::Bargmann => Some(lit::<T>(-2.0 / 3.0) * (-x).exp()),
            _ => None,
        }
    }

    /// Positivity margin `min (1 + H~)`.
    pub fn symbol_margin(&self) -> Option<f64> {
        match self {
            Preset::Zero => Some(1.0),
            Preset::Bargmann => Some(0.25),
            _ => None,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Zero => write!(f, "zero"),
            Preset::Exp { a, c } => write!(f, "exp(a={a},c={c})"),
            Preset::Well { depth, width } => write!(f, "well(d={depth},w={width})"),
            Preset::Bargmann => write!(f, "bargmann"),
        }
    }
}

fn params(body: &str, allowed: &[&str]) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| ScatterError::InvalidInput(format!("expected key=value, got '{item}'")))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(ScatterError::InvalidInput(format!("unknown parameter '{k}'")));
        }
        let v: f64 = v.trim().parse().map_err(|_| ScatterError::InvalidInput(format!("bad number '{v}'")))?;
        if !v.is_finite() {
            return Err(ScatterError::InvalidInput(format!("parameter {k} must be finite")));
        }
        out.push((k.to_string(), v));
    }
    Ok(out)
}

fn get(ps: &[(String, f64)], key: &str, default: f64) -> f64 {
    ps.iter().rev().find(|(k, _)| k == key).map_or(default, |(_, v)| *v)
}

impl FromStr for Preset {
    type Err = ScatterError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, body) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], &s[i + 1..s.len() - 1]),
            Some(_) => return Err(ScatterError::InvalidInput(format!("unbalanced parentheses in '{s}'"))),
            None => (s, ""),
        };
        match name.trim() {
            "zero" if body.trim().is_empty() => Ok(Preset::Zero),
            "bargmann" if body.trim().is_empty() => Ok(Preset::Bargmann),
            "exp" => {
                let ps = params(body, &["a", "c"])?;
                let a = get(&ps, "a", 1.0);
                if a <= 0.0 {
                    return Err(ScatterError::InvalidInput("exp preset needs a > 0".into()));
                }
                Ok(Preset::Exp { a, c: get(&ps, "c", 1.0) })
            }
            "well" => {
                let ps = params(body, &["d", "w"])?;
                let width = get(&ps, "w", 1.0);
                if width <= 0.0 {
                    return Err(ScatterError::InvalidInput("well preset needs w > 0".into()));
                }
                Ok(Preset::Well { depth: get(&ps, "d", 5.0), width })
            }
            _ => Err(ScatterError::InvalidInput(format!("unknown preset '{s}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        assert_eq!("zero".parse::<Preset>().unwrap(), Preset::Zero);
        assert_eq!("exp(a=1)".parse::<Preset>().unwrap(), Preset::Exp { a: 1.0, c: 1.0 });
        assert_eq!("well(d=5, w=1)".parse::<Preset>().unwrap(), Preset::Well { depth: 5.0, width: 1.0 });
        assert_eq!(" bargmann ".parse::<Preset>().unwrap(), Preset::Bargmann);
        for p in [Preset::Zero, Preset::Exp { a: 2.0, c: -0.5 }, Preset::Well { depth: 3.0, width: 2.0 }] {
            assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
        assert!("exp(b=1)".parse::<Preset>().is_err());
        assert!("exp(a=0)".parse::<Preset>().is_err());
        assert!("well(d=5".parse::<Preset>().is_err());
        assert!("gauss".parse::<Preset>().is_err());
    }

    #[test]
    fn bargmann_closed_forms_agree() {
        let p = Preset::Bargmann;
        assert!((p.q(0.0f64) - 6.0).abs() < 1e-14);
        let k = 0.7f64;
        let s = p.s_matrix(k).unwrap();
        let direct = (Complex::new(k, -2.0) * Complex::new(k, 1.0)) / (Complex::new(k, -1.0) * Complex::new(k, 2.0));
        assert!((s - direct).norm() < 1e-14);
        assert!((1.0 / p.jost(k).unwrap().norm_sqr() - 1.0 + 3.0 / (k * k + 4.0)).abs() < 1e-14);
    }

    #[test]
    fn well_count() {
        assert_eq!(Preset::Well { depth: 5.0, width: 1.0 }.bound_state_count_hint(), Some(1));
        assert_eq!(Preset::Well { depth: 1.0, width: 1.0 }.bound_state_count_hint(), Some(0));
    }
}
