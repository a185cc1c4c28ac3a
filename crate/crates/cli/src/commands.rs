use std::path::{Path, PathBuf};

use krein_core::forward::{bound_states, phase_shift, unitarity_defect};
use krein_core::riemann::{check_admissibility, AdmissibilityReport};
use krein_core::{
    invert, jost_function, kernel_from_jost, roundtrip, s_matrix, solve_riemann, winding_index, ComplexSamples,
    Method, Potential, Preset, UniformGrid,
};
use log::{info, warn};
use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;
use crate::io::{self, ingest_complex, ingest_real};

pub struct Context {
    pub cfg: Config,
    pub out: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn preset(s: &str) -> Result<Preset, CliError> {
    s.parse::<Preset>().map_err(|e| CliError::Config(e.to_string()))
}

fn uniform_from_zero(xs: &[f64]) -> Option<UniformGrid<f64>> {
    let h = xs[1] - xs[0];
    let uniform = xs.iter().enumerate().all(|(i, x)| (x - i as f64 * h).abs() <= 1e-9 * h);
    (xs[0] == 0.0 && uniform).then(|| UniformGrid::new(0.0, h, xs.len()).ok()).flatten()
}

fn load_potential(cfg: &Config) -> Result<(Potential<f64>, String), CliError> {
    if let Some(p) = &cfg.io.potential {
        let path = cfg.resolve(p);
        let (xs, _) = io::read_real(&path)?;
        let grid = match uniform_from_zero(&xs) {
            Some(g) => g,
            None => {
                if xs[0] > 0.0 {
                    return Err(CliError::Ingest(format!("{}: potential samples must start at x = 0", path.display())));
                }
                let step = cfg.potential_step();
                let n = (xs[xs.len() - 1] / step + 1e-9).floor() as usize;
                UniformGrid::new(0.0, step, n + 1)?
            }
        };
        let (q, _) = ingest_real(&path, &grid, cfg.tolerances.resample)?;
        return Ok((Potential::new(q)?, path.display().to_string()));
    }
    if let Some(name) = &cfg.presets.potential {
        let p = preset(name)?;
        return Ok((p.potential(cfg.potential_support(), cfg.potential_step())?, p.to_string()));
    }
    Err(CliError::Ingest("no potential given: set presets.potential or io.potential".into()))
}

struct SData {
    s: ComplexSamples<f64>,
    source: String,
    resample_residual: Option<f64>,
}

fn load_s(cfg: &Config) -> Result<SData, CliError> {
    let kg = cfg.k_grid()?;
    if let Some(p) = &cfg.io.s_matrix {
        let path = cfg.resolve(p);
        let (s, r) = ingest_complex(&path, &kg, cfg.tolerances.resample)?;
        return Ok(SData { s, source: path.display().to_string(), resample_residual: r });
    }
    let from_forward = |p: Preset| -> Result<SData, CliError> {
        let q = p.potential(cfg.potential_support(), cfg.potential_step())?;
        let s = s_matrix(&jost_function(&q, &kg)?)?;
        Ok(SData { s, source: format!("{p} (forward)"), resample_residual: None })
    };
    if let Some(name) = &cfg.presets.scattering {
        let p = preset(name)?;
        return match p.s_matrix::<f64>(1.0) {
            Some(_) => Ok(SData {
                s: ComplexSamples::from_fn(kg, |k| p.s_matrix(k).unwrap_or_default()),
                source: format!("{p} (closed form)"),
                resample_residual: None,
            }),
            None => from_forward(p),
        };
    }
    if let Some(name) = &cfg.presets.potential {
        return from_forward(preset(name)?);
    }
    Err(CliError::Ingest("no scattering data given: set io.s_matrix, presets.scattering or presets.potential".into()))
}

#[derive(Serialize)]
struct ForwardSummary {
    potential: String,
    support: f64,
    step: f64,
    k_step: f64,
    k_points: usize,
    unitarity_defect: f64,
    half_integral: f64,
    bound_ks: Vec<f64>,
    norming: Vec<f64>,
}

pub fn forward(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let (q, source) = load_potential(&ctx.cfg)?;
    let kg = ctx.cfg.k_grid()?;
    let f = jost_function(&q, &kg)?;
    let s = s_matrix(&f)?;
    let delta = phase_shift(&s)?;
    let (ks, norming) = bound_states(&q);
    info!("forward: {} bound state(s)", ks.len());
    let files = vec![
        ctx.path("s_matrix.csv"),
        ctx.path("phase_shift.csv"),
        ctx.path("jost.csv"),
        ctx.path("bound_states.csv"),
        ctx.path("forward.json"),
    ];
    io::write_complex(&files[0], "k", &s)?;
    io::write_real(&files[1], "k", "delta", &delta)?;
    io::write_complex(&files[2], "k", f.values())?;
    let rows: Vec<(f64, f64)> = ks.iter().copied().zip(norming.iter().copied()).collect();
    io::write_pairs(&files[3], ["k", "norming"], &rows)?;
    let summary = ForwardSummary {
        potential: source,
        support: q.support_end(),
        step: q.grid().step(),
        k_step: kg.step(),
        k_points: kg.len(),
        unitarity_defect: unitarity_defect(&s),
        half_integral: q.half_integral(),
        bound_ks: ks,
        norming,
    };
    io::write_json(&files[4], &summary)?;
    Ok(files)
}

#[derive(Serialize)]
struct CrossEntry {
    method: Method,
    file: String,
    step: f64,
}

#[derive(Serialize)]
struct DiscrepancyEntry {
    a: Method,
    b: Method,
    sup: f64,
}

#[derive(Serialize)]
struct HybridEntry {
    x0: f64,
    stitch: f64,
    krein_iterations: usize,
    overlap_discrepancy: f64,
}

#[derive(Serialize)]
struct InvertReport {
    source: String,
    method: Method,
    index: i64,
    reduced: bool,
    unitarity_defect: f64,
    resample_residual: Option<f64>,
    riemann_residual: f64,
    jost_a0: f64,
    positivity_margin: f64,
    a_zero: f64,
    q_file: String,
    q_step: f64,
    q_points: usize,
    cross: Vec<CrossEntry>,
    discrepancies: Vec<DiscrepancyEntry>,
    marchenko_iterations: Option<Vec<Option<usize>>>,
    hybrid: Option<HybridEntry>,
    notes: Vec<String>,
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn invert_cmd(ctx: &Context, method: Method) -> Result<Vec<PathBuf>, CliError> {
    let data = load_s(&ctx.cfg)?;
    let pcfg = ctx.cfg.pipeline(method)?;
    let r = invert(&data.s, &pcfg)?;
    let mut files = vec![ctx.path("q.csv")];
    io::write_real(&files[0], "x", "q", r.q.samples())?;
    let mut cross = Vec::new();
    for (m, q) in &r.cross {
        let p = ctx.path(&format!("q_{m}.csv"));
        io::write_real(&p, "x", "q", q.samples())?;
        cross.push(CrossEntry { method: *m, file: file_name(&p), step: q.grid().step() });
        files.push(p);
    }
    let report = InvertReport {
        source: data.source,
        method: r.method,
        index: r.index,
        reduced: r.reduced,
        unitarity_defect: unitarity_defect(&data.s),
        resample_residual: data.resample_residual,
        riemann_residual: r.riemann_residual,
        jost_a0: r.jost_a0,
        positivity_margin: r.positivity_margin,
        a_zero: r.a_zero,
        q_file: file_name(&files[0]),
        q_step: r.q.grid().step(),
        q_points: r.q.samples().len(),
        cross,
        discrepancies: r.discrepancies.iter().map(|d| DiscrepancyEntry { a: d.a, b: d.b, sup: d.sup }).collect(),
        marchenko_iterations: r.marchenko_iterations.clone(),
        hybrid: r.hybrid.as_ref().map(|h| HybridEntry {
            x0: h.x0,
            stitch: h.stitch,
            krein_iterations: h.krein_iterations,
            overlap_discrepancy: h.overlap_discrepancy,
        }),
        notes: r.notes.clone(),
    };
    let p = ctx.path("report.json");
    io::write_json(&p, &report)?;
    files.push(p);
    Ok(files)
}

#[derive(Serialize)]
struct RoundTripReport {
    potential: String,
    method: Method,
    q_window: f64,
    q_sup: f64,
    q_l1: f64,
    s_sup: f64,
    s_l1: f64,
    tolerance_q: f64,
    tolerance_s: f64,
    within_tolerance: bool,
}

pub fn roundtrip_cmd(ctx: &Context, method: Method) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &ctx.cfg;
    let (q, source) = load_potential(cfg)?;
    let kg = cfg.k_grid()?;
    let window = cfg.q_window.unwrap_or(cfg.grids.x_max);
    let rt = roundtrip(&q, &kg, &cfg.pipeline(method)?, window)?;
    let t = &cfg.tolerances;
    let within = rt.q_sup <= t.roundtrip_q && rt.s_sup <= t.roundtrip_s;
    if !within {
        warn!("round-trip defects q {:.3e}, S {:.3e} exceed the configured tolerances", rt.q_sup, rt.s_sup);
    }
    let files = vec![ctx.path("q_hat.csv"), ctx.path("s_hat.csv"), ctx.path("roundtrip.json")];
    io::write_real(&files[0], "x", "q", rt.q_hat.samples())?;
    io::write_complex(&files[1], "k", &rt.s_hat)?;
    let report = RoundTripReport {
        potential: source,
        method,
        q_window: window,
        q_sup: rt.q_sup,
        q_l1: rt.q_l1,
        s_sup: rt.s_sup,
        s_l1: rt.s_l1,
        tolerance_q: t.roundtrip_q,
        tolerance_s: t.roundtrip_s,
        within_tolerance: within,
    };
    io::write_json(&files[2], &report)?;
    Ok(files)
}

#[derive(Serialize)]
struct CheckReport {
    source: String,
    resample_residual: Option<f64>,
    #[serde(flatten)]
    admissibility: AdmissibilityReport,
    admissible: bool,
}

fn symbol_margin(s: &ComplexSamples<f64>, cfg: &Config) -> Option<f64> {
    let h = cfg.grids.x_step;
    let n = (cfg.grids.t_max.unwrap_or(2.0 * cfg.grids.x_max) / h).round() as usize;
    let result = solve_riemann(s).and_then(|f| {
        let tg = UniformGrid::new(0.0, h, n + 8)?;
        kernel_from_jost(&f, &tg)
    });
    match result {
        Ok(k) => Some(k.symbol_margin),
        Err(e) => {
            warn!("positivity margin unavailable: {e}");
            None
        }
    }
}

pub fn check(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let data = load_s(&ctx.cfg)?;
    let margin = match winding_index(&data.s) {
        Ok(0) => symbol_margin(&data.s, &ctx.cfg),
        _ => None,
    };
    let xg = UniformGrid::from_zero(2.0 * ctx.cfg.grids.x_max, ctx.cfg.grids.x_step)?;
    let adm = check_admissibility(&data.s, &xg, margin);
    let admissible = adm.unitarity_defect < 1e-6
        && adm.index.is_some()
        && adm.f_l1.is_finite()
        && adm.positivity_margin.map_or(adm.index != Some(0), |c| c > ctx.cfg.tolerances.min_margin);
    let report = CheckReport { source: data.source, resample_residual: data.resample_residual, admissibility: adm, admissible };
    let p = ctx.path("admissibility.json");
    io::write_json(&p, &report)?;
    Ok(vec![p])
}
