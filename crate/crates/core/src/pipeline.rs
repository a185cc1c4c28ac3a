//! End-to-end inversion `S -> f -> H -> Γ -> A -> q` with optional cross-checks, and the
//! forward/inverse/forward round trip.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatterError};
use crate::forward::{scattering_data, Potential};
use crate::gelfand_levitan::{gl_kernel, gl_potential_at};
use crate::grid::{ComplexSamples, RealSamples, UniformGrid};
use crate::kernel::{kernel_from_jost, marchenko_kernel, KreinKernel, MarchenkoKernel, MIN_SYMBOL_MARGIN};
use crate::krein::{amplitude, potential_from_amplitude, solve_gamma_family};
use crate::marchenko::{hybrid_invert, marchenko_potential, solve_marchenko_family, HybridConfig, MarchenkoOptions};
use crate::reduction::{reduce_index, BlaschkeSpec};
use crate::riemann::{solve_riemann, winding_index, JostClosure};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Krein,
    Marchenko,
    Gl,
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Krein, Method::Marchenko, Method::Gl, Method::Hybrid];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Krein => "krein",
            Method::Marchenko => "marchenko",
            Method::Gl => "gl",
            Method::Hybrid => "hybrid",
        })
    }
}

impl FromStr for Method {
    type Err = ScatterError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "krein" => Ok(Method::Krein),
            "marchenko" => Ok(Method::Marchenko),
            "gl" | "gelfand-levitan" => Ok(Method::Gl),
            "hybrid" => Ok(Method::Hybrid),
            other => Err(ScatterError::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig<T> {
    /// Potential recovered on `[0, x_max]`.
    pub x_max: T,
    /// Toeplitz step; the Krein potential grid has step `h / 2`.
    pub h: T,
    pub method: Method,
    /// Further methods run for comparison.
    pub cross_check: Vec<Method>,
    pub spec: Option<BlaschkeSpec<T>>,
    pub min_margin: T,
    pub marchenko: MarchenkoOptions<T>,
    /// Marchenko grid step, a multiple of `h / 2` dividing `x_max`.
    pub marchenko_step: T,
    /// Length of `F` beyond `2 x_max`.
    pub marchenko_extent: T,
    pub gl_checkpoints: usize,
    pub hybrid_overlap: T,
    /// Interval on which potentials from different methods are compared.
    pub compare_window: (T, T),
}

impl<T: Real> PipelineConfig<T> {
    pub fn new(x_max: T, h: T, method: Method) -> Self {
        Self {
            x_max,
            h,
            method,
            cross_check: Vec::new(),
            spec: None,
            min_margin: lit(MIN_SYMBOL_MARGIN),
            marchenko: MarchenkoOptions { y_tail_tol: lit(1e-9), ..Default::default() },
            marchenko_step: h,
            marchenko_extent: lit(30.0),
            gl_checkpoints: 8,
            hybrid_overlap: lit(0.5),
            compare_window: (lit(0.2), x_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridSummary<T> {
    pub x0: T,
    pub stitch: T,
    pub krein_iterations: usize,
    pub overlap_discrepancy: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy<T> {
    pub a: Method,
    pub b: Method,
    pub sup: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport<T> {
    pub method: Method,
    /// Index of the input `S`.
    pub index: i64,
    /// True when Blaschke factors were applied; `q` is then the reduced potential.
    pub reduced: bool,
    pub riemann_residual: T,
    pub jost_a0: T,
    pub positivity_margin: T,
    /// `2 H(0)`, the Krein value of `A(0)`.
    pub a_zero: T,
    pub q: Potential<T>,
    pub cross: Vec<(Method, Potential<T>)>,
    pub discrepancies: Vec<Discrepancy<T>>,
    pub marchenko_iterations: Option<Vec<Option<usize>>>,
    pub hybrid: Option<HybridSummary<T>>,
    pub notes: Vec<String>,
}

struct Stage<T> {
    jost: JostClosure<T>,
    kernel: KreinKernel<T>,
    s: ComplexSamples<T>,
}

fn multiple_count<T: Real>(length: T, step: T) -> Result<usize> {
    let r = length / step;
    if (r - r.round()).abs() > lit(1e-9) || r < T::one() {
        return Err(ScatterError::InvalidGrid(format!("{length} is not a multiple of {step}")));
    }
    Ok(r.round().to_usize().unwrap_or(0))
}

fn marchenko_f<T: Real>(st: &Stage<T>, cfg: &PipelineConfig<T>) -> Result<MarchenkoKernel<T>> {
    let hm = cfg.marchenko_step;
    let n = ((cfg.x_max * lit(2.0) + cfg.marchenko_extent) / hm).ceil().to_usize().unwrap_or(0);
    marchenko_kernel(&st.s, &UniformGrid::new(T::zero(), hm, n + 1)?)
}

struct MethodOutput<T> {
    q: Potential<T>,
    iterations: Option<Vec<Option<usize>>>,
    hybrid: Option<HybridSummary<T>>,
}

fn run_method<T: Real>(m: Method, st: &Stage<T>, cfg: &PipelineConfig<T>) -> Result<MethodOutput<T>> {
    let plain = |q| MethodOutput { q, iterations: None, hybrid: None };
    match m {
        Method::Krein => {
            let sweep = solve_gamma_family(&st.kernel, cfg.x_max, cfg.h)?;
            Ok(plain(potential_from_amplitude(&amplitude(&sweep), false)?))
        }
        Method::Marchenko => {
            let hm = cfg.marchenko_step;
            let n = multiple_count(cfg.x_max, hm)?;
            let sol = solve_marchenko_family(&marchenko_f(st, cfg)?, &UniformGrid::new(T::zero(), hm, n + 1)?, &cfg.marchenko)?;
            Ok(MethodOutput { q: marchenko_potential(&sol)?, iterations: Some(sol.iterations), hybrid: None })
        }
        Method::Gl => {
            let h = cfg.h;
            let n = multiple_count(cfg.x_max, h)?;
            let per = (n / cfg.gl_checkpoints.max(1)).max(1);
            let count = n / per;
            let step = h * T::from_usize_lossy(per);
            let xs: Vec<T> = (0..=count).map(|j| step * T::from_usize_lossy(j)).collect();
            let tg = UniformGrid::new(T::zero(), h, 2 * n + 8)?;
            let q = gl_potential_at(&gl_kernel(&st.jost, &tg)?, &xs, h)?;
            Ok(plain(Potential::new(RealSamples::new(UniformGrid::new(T::zero(), step, count + 1)?, q)?)?))
        }
        Method::Hybrid => {
            let hcfg = HybridConfig { x_max: cfg.x_max, h: cfg.h, overlap: cfg.hybrid_overlap, marchenko: cfg.marchenko };
            let r = hybrid_invert(&st.kernel, &marchenko_f(st, cfg)?, &hcfg)?;
            let summary = HybridSummary {
                x0: r.x0,
                stitch: r.stitch,
                krein_iterations: r.krein_iterations,
                overlap_discrepancy: r.overlap_discrepancy,
            };
            Ok(MethodOutput { q: r.q, iterations: None, hybrid: Some(summary) })
        }
    }
}

/// `sup |p - q|` over the nodes of the coarser grid inside `window`.
pub fn potential_discrepancy<T: Real>(p: &Potential<T>, q: &Potential<T>, window: (T, T)) -> T {
    let (coarse, fine) = if p.grid().step() >= q.grid().step() { (p, q) } else { (q, p) };
    let slack = fine.grid().step() * lit(1e-6);
    coarse
        .samples()
        .iter()
        .filter(|(x, _)| *x >= window.0 - slack && *x <= window.1 + slack)
        .fold(T::zero(), |m, (x, v)| m.max((fine.samples().interpolate(x) - *v).abs()))
}

/// Invert `S` given on a positive half-offset momentum grid.
pub fn invert<T: Real>(s: &ComplexSamples<T>, cfg: &PipelineConfig<T>) -> Result<PipelineReport<T>> {
    let index = winding_index(s)?;
    let mut notes = Vec::new();
    let (s1, reduced) = match &cfg.spec {
        Some(spec) if !(spec.bound_ks.is_empty() && spec.gamma.is_none()) => {
            notes.push("index reduced by Blaschke factors; bound states are not re-added to q".to_string());
            (reduce_index(s, spec)?, true)
        }
        _ if index != 0 => return Err(ScatterError::NonzeroIndex(index)),
        _ => (s.clone(), false),
    };
    let jost = solve_riemann(&s1)?;
    let riemann_residual = jost.boundary_residual(&s1)?;
    let n = multiple_count(cfg.x_max, cfg.h)?;
    let kernel = kernel_from_jost(&jost, &UniformGrid::new(T::zero(), cfg.h, 2 * n + 8)?)?;
    if kernel.symbol_margin <= cfg.min_margin {
        let (k, v) = jost
            .values()
            .iter()
            .map(|(k, f)| (k, T::one() / f.norm_sqr()))
            .fold((T::zero(), T::infinity()), |a, b| if b.1 < a.1 { b } else { a });
        return Err(ScatterError::SymbolNotPositive { min: v.to_f64_lossy(), k: k.to_f64_lossy() });
    }
    let st = Stage { jost, kernel, s: s1 };
    let main = run_method(cfg.method, &st, cfg)?;
    let mut cross = Vec::new();
    let mut iterations = main.iterations;
    let mut hybrid = main.hybrid;
    for &m in cfg.cross_check.iter().filter(|m| **m != cfg.method) {
        let out = run_method(m, &st, cfg)?;
        iterations = iterations.or(out.iterations);
        hybrid = hybrid.or(out.hybrid);
        cross.push((m, out.q));
    }
    let mut all: Vec<(Method, &Potential<T>)> = vec![(cfg.method, &main.q)];
    all.extend(cross.iter().map(|(m, q)| (*m, q)));
    let mut discrepancies = Vec::new();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let sup = potential_discrepancy(all[i].1, all[j].1, cfg.compare_window);
            discrepancies.push(Discrepancy { a: all[i].0, b: all[j].0, sup });
        }
    }
    Ok(PipelineReport {
        method: cfg.method,
        index,
        reduced,
        riemann_residual,
        jost_a0: st.jost.asymptotic_a0(),
        positivity_margin: st.kernel.symbol_margin,
        a_zero: st.kernel.h0 * lit(2.0),
        q: main.q,
        cross,
        discrepancies,
        marchenko_iterations: iterations,
        hybrid,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrip<T> {
    pub s: ComplexSamples<T>,
    pub s_hat: ComplexSamples<T>,
    pub q_hat: Potential<T>,
    /// Over `[0, q_window]`.
    pub q_sup: T,
    pub q_l1: T,
    pub s_sup: T,
    pub s_l1: T,
}

/// Forward -> invert -> forward. `q` is compared on `[0, q_window]`; the recovered
/// potential is re-forwarded on `[0, x_max]`.
pub fn roundtrip<T: Real>(q: &Potential<T>, k_grid: &UniformGrid<T>, cfg: &PipelineConfig<T>, q_window: T) -> Result<RoundTrip<T>> {
    let data = scattering_data(q, k_grid)?;
    if !data.bound_ks.is_empty() {
        return Err(ScatterError::NonzeroIndex(-2 * data.bound_ks.len() as i64));
    }
    let report = invert(&data.s, cfg)?;
    let q_hat = report.q;
    let back = scattering_data(&q_hat, k_grid)?;
    let mut q_sup = T::zero();
    let mut q_l1 = T::zero();
    let hq = q_hat.grid().step();
    let slack = hq * lit(1e-6);
    for (x, v) in q_hat.samples().iter().filter(|(x, _)| *x <= q_window + slack) {
        let d = (*v - q.samples().interpolate(x)).abs();
        q_sup = q_sup.max(d);
        q_l1 += d * hq;
    }
    let s_sup = data.s.sup_abs_diff(&back.s);
    let s_l1 = data.s.values().iter().zip(back.s.values()).map(|(a, b)| (*a - *b).norm()).sum::<T>() * k_grid.step();
    Ok(RoundTrip { s: data.s, s_hat: back.s, q_hat, q_sup, q_l1, s_sup, s_l1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;
    use crate::reduction::BlaschkeSpec;
    use num_complex::Complex;

    fn s_of(p: Preset, kg: &UniformGrid<f64>) -> ComplexSamples<f64> {
        ComplexSamples::from_fn(*kg, |k| p.s_matrix(k).unwrap())
    }

    #[test]
    fn zero_data_every_method() {
        let kg = UniformGrid::half_offset(0.05, 2000).unwrap();
        let mut cfg = PipelineConfig::new(2.0, 1.0 / 16.0, Method::Krein);
        cfg.cross_check = Method::ALL.to_vec();
        let r = invert(&s_of(Preset::Zero, &kg), &cfg).unwrap();
        assert!(r.q.samples().sup_norm() < 1e-8);
        for (_, q) in &r.cross {
            assert!(q.samples().sup_norm() < 1e-8);
        }
        assert_eq!(r.discrepancies.len(), 6);
        assert_eq!(r.index, 0);
    }

    #[test]
    fn bargmann_methods_agree() {
        let kg = UniformGrid::half_offset(0.01, 10000).unwrap();
        let mut cfg = PipelineConfig::new(3.0, 1.0 / 32.0, Method::Krein);
        cfg.cross_check = vec![Method::Gl, Method::Hybrid];
        let r = invert(&s_of(Preset::Bargmann, &kg), &cfg).unwrap();
        assert!((r.a_zero + 1.5).abs() < 1e-3, "{} {} {}", r.a_zero, r.positivity_margin, r.jost_a0);
        assert!((r.positivity_margin - 0.25).abs() < 1e-3);
        assert!((r.jost_a0 - 1.0).abs() < 1e-2);
        for (x, v) in r.q.samples().iter().filter(|(x, _)| *x >= 0.2) {
            assert!((v - Preset::Bargmann.q(x)).abs() < 5e-3, "x={x}");
        }
        assert!(r.discrepancies.iter().all(|d| d.sup < 5e-3), "{:?}", r.discrepancies);
        assert!(r.hybrid.is_some());
    }

    #[test]
    fn index_errors() {
        let kg = UniformGrid::half_offset(0.01, 10000).unwrap();
        let s = ComplexSamples::from_fn(kg, |k| {
            Preset::Bargmann.s_matrix(k).unwrap() * Complex::new(k, 1.0).powi(2) / Complex::new(k, -1.0).powi(2)
        });
        let mut cfg = PipelineConfig::new(2.0, 1.0 / 16.0, Method::Krein);
        assert!(matches!(invert(&s, &cfg), Err(ScatterError::NonzeroIndex(-2))));
        cfg.spec = Some(BlaschkeSpec::even(vec![1.0]).unwrap());
        let r = invert(&s, &cfg).unwrap();
        assert!(r.reduced);
        assert_eq!(r.index, -2);
        assert!((r.q.samples().values()[40] - Preset::Bargmann.q(1.25f64)).abs() < 5e-3);
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("born".parse::<Method>().is_err());
    }

    #[test]
    fn zero_roundtrip() {
        let q = Potential::zero(4.0, 1.0 / 32.0).unwrap();
        let kg = UniformGrid::half_offset(0.05, 400).unwrap();
        let cfg = PipelineConfig::new(4.0, 1.0 / 16.0, Method::Krein);
        let r = roundtrip(&q, &kg, &cfg, 2.0).unwrap();
        assert!(r.q_sup < 1e-8 && r.s_sup < 1e-8);
    }
}
