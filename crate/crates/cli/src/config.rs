//! The run configuration: one JSON document per run.

use std::fs;
use std::path::{Path, PathBuf};

use krein_core::reduction::BlaschkeSpec;
use krein_core::{Method, PipelineConfig, UniformGrid};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    pub k_max: f64,
    pub k_step: f64,
    pub x_max: f64,
    pub x_step: f64,
    /// Defaults to `2 x_max`, the extent the Toeplitz sweep reads.
    pub t_max: Option<f64>,
    /// Defaults to `x_step`.
    pub t_step: Option<f64>,
    /// Marchenko grid step, a multiple of `x_step / 2` dividing `x_max`; defaults to `x_step`.
    pub marchenko_step: Option<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Self { k_max: 100.0, k_step: 0.01, x_max: 5.0, x_step: 1.0 / 64.0, t_max: None, t_step: None, marchenko_step: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub min_margin: f64,
    /// Resampling residual above which a warning is logged.
    pub resample: f64,
    pub marchenko: f64,
    pub marchenko_y_tail: f64,
    pub marchenko_max_iter: usize,
    pub roundtrip_q: f64,
    pub roundtrip_s: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            min_margin: 1e-6,
            resample: 1e-6,
            marchenko: 1e-12,
            marchenko_y_tail: 1e-9,
            marchenko_max_iter: 1000,
            roundtrip_q: 5e-3,
            roundtrip_s: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Presets {
    /// Builtin potential, e.g. `exp(a=1)`.
    pub potential: Option<String>,
    /// Builtin scattering data with a closed-form S, e.g. `bargmann`.
    pub scattering: Option<String>,
    /// Support of a sampled preset potential; defaults to `2 x_max`.
    pub support: Option<f64>,
    /// Sampling step of a preset potential; defaults to `x_step / 4`.
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Io {
    /// CSV `(x, value)` potential.
    pub potential: Option<PathBuf>,
    /// CSV `(k, re, im)` scattering matrix on `k > 0`.
    pub s_matrix: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundStates {
    pub ks: Vec<f64>,
    /// Present for odd index.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub grids: Grids,
    pub method: Method,
    pub cross_check: Vec<Method>,
    pub tolerances: Tolerances,
    pub presets: Presets,
    pub bound_states: Option<BoundStates>,
    pub io: Io,
    /// Upper end of the window on which round-trip q defects are measured.
    pub q_window: Option<f64>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            grids: Grids::default(),
            method: Method::Krein,
            cross_check: Vec::new(),
            tolerances: Tolerances::default(),
            presets: Presets::default(),
            bound_states: None,
            io: Io::default(),
            q_window: None,
            base_dir: PathBuf::from("."),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn whole(name: &str, len: f64, step: f64) -> Result<usize, CliError> {
    let r = len / step;
    if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
        return Err(CliError::Config(format!("{name} = {len} is not a multiple of its step {step}")));
    }
    Ok(r.round() as usize)
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        let mut cfg: Config =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grids;
        positive("k_max", g.k_max)?;
        positive("k_step", g.k_step)?;
        positive("x_max", g.x_max)?;
        positive("x_step", g.x_step)?;
        whole("k_max", g.k_max, g.k_step)?;
        whole("x_max", g.x_max, g.x_step)?;
        if let Some(ts) = g.t_step {
            if (ts - g.x_step).abs() > 1e-12 * g.x_step {
                return Err(CliError::Config(format!("t_step {ts} must equal x_step {}", g.x_step)));
            }
        }
        if let Some(tm) = g.t_max {
            if tm < 2.0 * g.x_max {
                return Err(CliError::Config(format!("t_max {tm} must be at least 2 x_max = {}", 2.0 * g.x_max)));
            }
        }
        let t = &self.tolerances;
        positive("min_margin", t.min_margin)?;
        positive("resample tolerance", t.resample)?;
        positive("marchenko tolerance", t.marchenko)?;
        positive("marchenko_y_tail", t.marchenko_y_tail)?;
        if let Some(w) = self.q_window {
            positive("q_window", w)?;
        }
        if let Some(s) = self.presets.support {
            positive("presets.support", s)?;
        }
        if let Some(s) = self.presets.step {
            positive("presets.step", s)?;
        }
        self.blaschke()?;
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn k_grid(&self) -> Result<UniformGrid<f64>, CliError> {
        let n = whole("k_max", self.grids.k_max, self.grids.k_step)?;
        Ok(UniformGrid::half_offset(self.grids.k_step, n)?)
    }

    pub fn potential_support(&self) -> f64 {
        self.presets.support.unwrap_or(2.0 * self.grids.x_max)
    }

    pub fn potential_step(&self) -> f64 {
        self.presets.step.unwrap_or(self.grids.x_step / 4.0)
    }

    pub fn blaschke(&self) -> Result<Option<BlaschkeSpec<f64>>, CliError> {
        match &self.bound_states {
            None => Ok(None),
            Some(b) => {
                let spec = match b.gamma {
                    Some(g) => BlaschkeSpec::odd(b.ks.clone(), g),
                    None => BlaschkeSpec::even(b.ks.clone()),
                };
                spec.map(Some).map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }

    pub fn pipeline(&self, method: Method) -> Result<PipelineConfig<f64>, CliError> {
        let g = &self.grids;
        let t = &self.tolerances;
        let mut p = PipelineConfig::new(g.x_max, g.x_step, method);
        p.cross_check = self.cross_check.iter().copied().filter(|m| *m != method).collect();
        p.spec = self.blaschke()?;
        p.min_margin = t.min_margin;
        p.marchenko.tol = t.marchenko;
        p.marchenko.y_tail_tol = t.marchenko_y_tail;
        p.marchenko.max_iter = t.marchenko_max_iter;
        if let Some(hm) = g.marchenko_step {
            positive("marchenko_step", hm)?;
            p.marchenko_step = hm;
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg: Config = serde_json::from_str(r#"{"grids": {"x_max": 2.0, "x_step": 0.0625}, "method": "marchenko"}"#).unwrap();
        assert_eq!(cfg.method, Method::Marchenko);
        assert_eq!(cfg.grids.k_step, 0.01);
        cfg.validate().unwrap();
        assert_eq!(cfg.k_grid().unwrap().len(), 10000);
        assert_eq!(cfg.potential_support(), 4.0);
    }

    #[test]
    fn rejects_bad_grids() {
        let mut cfg = Config::default();
        cfg.grids.x_max = 1.01;
        assert!(cfg.validate().is_err());
        let mut cfg = Config::default();
        cfg.grids.t_step = Some(0.5);
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<Config>(r#"{"grid": {}}"#).is_err());
    }
}
