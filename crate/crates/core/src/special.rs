//! Sine/cosine integrals and exponential panel weights.

use num_complex::Complex;

use crate::scalar::{lit, Cplx, Real};

/// Sine and cosine integrals `(Si(x), Ci(x))`.
///
/// Power series for `|x| <= 2`, continued fraction for `E1(ix)` beyond
/// (modified Lentz). `Ci(0)` is `-inf`.
pub fn sici<T: Real>(x: T) -> (T, T) {
    let eps = T::epsilon();
    let t = x.abs();
    if t == T::zero() {
        return (T::zero(), T::neg_infinity());
    }
    let (si, ci) = if t > lit(2.0) {
        let fpmin = T::min_positive_value() / eps;
        let one = T::one();
        let mut b = Complex::new(one, t);
        let mut c = Complex::new(one / fpmin, T::zero());
        let mut d = Complex::new(one, T::zero()) / b;
        let mut h = d;
        for i in 2..200 {
            let a = -T::from_usize_lossy((i - 1) * (i - 1));
            b += Complex::new(lit(2.0), T::zero());
            d = Complex::new(one, T::zero()) / (d * a + b);
            c = b + Complex::new(a, T::zero()) / c;
            let del = c * d;
            h *= del;
            if (del.re - one).abs() + del.im.abs() < eps {
                break;
            }
        }
        h *= Complex::new(t.cos(), -t.sin());
        (T::FRAC_PI_2() + h.im, -h.re)
    } else {
        let mut sum = T::zero();
        let mut sums = T::zero();
        let mut sumc = T::zero();
        let mut sign = T::one();
        let mut fact = T::one();
        let mut odd = true;
        for k in 1..200 {
            let kf = T::from_usize_lossy(k);
            fact *= t / kf;
            let term = fact / kf;
            sum += sign * term;
            let err = term / sum.abs();
            if odd {
                sign = -sign;
                sums = sum;
                sum = sumc;
            } else {
                sumc = sum;
                sum = sums;
            }
            if err < eps {
                break;
            }
            odd = !odd;
        }
        (sums, sumc + t.ln() + lit(0.577_215_664_901_532_9))
    };
    if x < T::zero() {
        (-si, ci)
    } else {
        (si, ci)
    }
}

/// `int_K^inf sin(k t) / k dk` for `K > 0`; for `t = 0` the right limit `pi/2` is returned.
pub fn sine_tail<T: Real>(cutoff: T, t: T) -> T {
    let s = if t < T::zero() { -T::one() } else { T::one() };
    s * (T::FRAC_PI_2() - sici(cutoff * t.abs()).0)
}

/// `int_K^inf cos(k t) / k^2 dk` for `K > 0`.
pub fn cosine_tail_sq<T: Real>(cutoff: T, t: T) -> T {
    let a = t.abs();
    (cutoff * a).cos() / cutoff - a * (T::FRAC_PI_2() - sici(cutoff * a).0)
}

/// `int_K^inf sin(k t) / k^3 dk` for `K > 0`.
pub fn sine_tail_cube<T: Real>(cutoff: T, t: T) -> T {
    (cutoff * t).sin() / (cutoff * cutoff * lit(2.0)) + t * lit(0.5) * cosine_tail_sq(cutoff, t)
}

/// `int_K^inf cos(k t) / k^4 dk` for `K > 0`.
pub fn cosine_tail_quart<T: Real>(cutoff: T, t: T) -> T {
    (cutoff * t).cos() / (cutoff * cutoff * cutoff * lit(3.0)) - t / lit(3.0) * sine_tail_cube(cutoff, t)
}

/// Weights of `int_0^h e^{z u / h} g(u) du` for `g` linear between `g(0)` and `g(h)`,
/// returned divided by `h`: `(int_0^1 (1-s) e^{zs} ds, int_0^1 s e^{zs} ds)`.
pub fn exp_panel<T: Real>(z: Cplx<T>) -> (Cplx<T>, Cplx<T>) {
    let one = Complex::new(T::one(), T::zero());
    if z.norm() < T::one() {
        // E0 = sum z^n/(n+1)!, E1 = sum z^n/(n! (n+2))
        let mut e0 = Complex::new(T::zero(), T::zero());
        let mut e1 = e0;
        let mut zn_fact = one; // z^n / n!
        for n in 0..40 {
            let nf = T::from_usize_lossy(n);
            e0 += zn_fact / (nf + T::one());
            e1 += zn_fact / (nf + lit(2.0));
            zn_fact = zn_fact * z / (nf + T::one());
        }
        (e0 - e1, e1)
    } else {
        let ez = z.exp();
        let e0 = (ez - one) / z;
        let e1 = ez / z - (ez - one) / (z * z);
        (e0 - e1, e1)
    }
}

/// Weights of `int_0^1 (e^{zs} - 1)/z * w(s) ds` for `w = 1 - s` and `w = s`,
/// stable as `z -> 0`.
pub fn exp_kernel_panel<T: Real>(z: Cplx<T>) -> (Cplx<T>, Cplx<T>) {
    let one = Complex::new(T::one(), T::zero());
    if z.norm() < T::one() {
        // sum_{n>=1} z^{n-1}/(n! (n+1)(n+2)) and sum_{n>=1} z^{n-1}/(n! (n+2))
        let mut pa = Complex::new(T::zero(), T::zero());
        let mut pb = pa;
        let mut zn1_fact = one; // z^{n-1}/n!
        for n in 1..40 {
            let nf = T::from_usize_lossy(n);
            pa += zn1_fact / ((nf + T::one()) * (nf + lit(2.0)));
            pb += zn1_fact / (nf + lit(2.0));
            zn1_fact = zn1_fact * z / (nf + T::one());
        }
        (pa, pb)
    } else {
        let (wa, wb) = exp_panel(z);
        let half = Complex::new(lit(0.5), T::zero());
        ((wa - half) / z, (wb - half) / z)
    }
}

/// `(e^z - 1) / z`, stable near zero.
pub fn phi1<T: Real>(z: Cplx<T>) -> Cplx<T> {
    let one = Complex::new(T::one(), T::zero());
    if z.norm() < lit(1e-3) {
        one + z / T::lit(2.0) + z * z / T::lit(6.0) + z * z * z / T::lit(24.0)
    } else {
        (z.exp() - one) / z
    }
}
