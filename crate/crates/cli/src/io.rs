//! CSV ingestion and emission, and cubic resampling onto uniform grids.
//!
//! Files carry a header row and either `(axis, value)` or `(axis, re, im)` columns.

use std::fs;
use std::path::Path;

use krein_core::{ComplexSamples, Cplx, RealSamples, UniformGrid};
use log::{info, warn};
use num_complex::Complex;

use crate::error::CliError;

fn csv_err(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Csv { path: path.to_path_buf(), msg: msg.into() }
}

fn read_columns(path: &Path, width: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_err(path, e.to_string()))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e.to_string()))?;
        if rec.len() != width {
            return Err(csv_err(path, format!("row {}: expected {width} columns, found {}", i + 2, rec.len())));
        }
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| csv_err(path, format!("row {}: non-numeric or non-finite field", i + 2)))?;
        rows.push(row);
    }
    if rows.len() < 4 {
        return Err(csv_err(path, format!("need at least 4 samples, found {}", rows.len())));
    }
    if rows.windows(2).any(|w| w[1][0] <= w[0][0]) {
        return Err(csv_err(path, "axis column must be strictly increasing"));
    }
    Ok(rows)
}

pub fn read_real(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let rows = read_columns(path, 2)?;
    Ok(rows.into_iter().map(|r| (r[0], r[1])).unzip())
}

pub fn read_complex(path: &Path) -> Result<(Vec<f64>, Vec<Cplx<f64>>), CliError> {
    let rows = read_columns(path, 3)?;
    Ok(rows.into_iter().map(|r| (r[0], Complex::new(r[1], r[2]))).unzip())
}

fn create_dir_for(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    }
    Ok(())
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<(), CliError> {
    create_dir_for(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e.to_string()))?;
    w.write_record(header).map_err(|e| csv_err(path, e.to_string()))?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| csv_err(path, e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(path.to_path_buf(), e))
}

pub fn write_real(path: &Path, axis: &str, value: &str, s: &RealSamples<f64>) -> Result<(), CliError> {
    write_rows(path, &[axis, value], s.iter().map(|(x, v)| vec![x, *v]))
}

pub fn write_complex(path: &Path, axis: &str, s: &ComplexSamples<f64>) -> Result<(), CliError> {
    write_rows(path, &[axis, "re", "im"], s.iter().map(|(x, v)| vec![x, v.re, v.im]))
}

pub fn write_pairs(path: &Path, header: [&str; 2], rows: &[(f64, f64)]) -> Result<(), CliError> {
    write_rows(path, &header, rows.iter().map(|(a, b)| vec![*a, *b]))
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    create_dir_for(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Ingest(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Natural cubic spline through `(xs, ys)`.
pub struct Spline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    pub fn new(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let rhs = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
                let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
                c[i] = h1 / diag;
                d[i] = (rhs - h0 * d[i - 1]) / diag;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Self { xs: xs.to_vec(), ys: ys.to_vec(), m }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = self.xs.partition_point(|v| *v <= x).clamp(1, n - 1) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

fn matches_grid(xs: &[f64], grid: &UniformGrid<f64>) -> bool {
    xs.len() == grid.len() && xs.iter().zip(grid.nodes()).all(|(a, b)| (a - b).abs() <= 1e-9 * grid.step())
}

fn check_cover(path: &Path, xs: &[f64], grid: &UniformGrid<f64>) -> Result<(), CliError> {
    let slack = 1e-9 * grid.step();
    if grid.start() < xs[0] - slack || grid.end() > xs[xs.len() - 1] + slack {
        return Err(csv_err(
            path,
            format!(
                "samples cover [{}, {}] but the configured grid needs [{}, {}]",
                xs[0],
                xs[xs.len() - 1],
                grid.start(),
                grid.end()
            ),
        ));
    }
    Ok(())
}

/// Residual of resampling: the spline of the uniform samples, evaluated back at the input nodes.
fn back_residual(grid: &UniformGrid<f64>, parts: &[(&[f64], Vec<f64>)], xs: &[f64]) -> f64 {
    let nodes: Vec<f64> = grid.nodes().collect();
    let mut r: f64 = 0.0;
    for (ys, resampled) in parts {
        let back = Spline::new(&nodes, resampled);
        for (x, y) in xs.iter().zip(ys.iter()).filter(|(x, _)| **x >= grid.start() && **x <= grid.end()) {
            r = r.max((back.eval(*x) - y).abs());
        }
    }
    r
}

/// Complex samples on `grid`; data not already on it are resampled by natural cubic splines
/// of the real and imaginary parts. Returns the resampling residual when resampling happened.
pub fn ingest_complex(
    path: &Path,
    grid: &UniformGrid<f64>,
    tol: f64,
) -> Result<(ComplexSamples<f64>, Option<f64>), CliError> {
    let (xs, vs) = read_complex(path)?;
    if matches_grid(&xs, grid) {
        return Ok((ComplexSamples::new(*grid, vs)?, None));
    }
    check_cover(path, &xs, grid)?;
    let re: Vec<f64> = vs.iter().map(|v| v.re).collect();
    let im: Vec<f64> = vs.iter().map(|v| v.im).collect();
    let (sr, si) = (Spline::new(&xs, &re), Spline::new(&xs, &im));
    let nodes: Vec<f64> = grid.nodes().collect();
    let out_re: Vec<f64> = nodes.iter().map(|k| sr.eval(*k)).collect();
    let out_im: Vec<f64> = nodes.iter().map(|k| si.eval(*k)).collect();
    let residual = back_residual(grid, &[(&re, out_re.clone()), (&im, out_im.clone())], &xs);
    report_resampling(path, xs.len(), grid.len(), residual, tol);
    let values = out_re.into_iter().zip(out_im).map(|(a, b)| Complex::new(a, b)).collect();
    Ok((ComplexSamples::new(*grid, values)?, Some(residual)))
}

/// Real samples on `grid`, resampled as in [`ingest_complex`].
pub fn ingest_real(path: &Path, grid: &UniformGrid<f64>, tol: f64) -> Result<(RealSamples<f64>, Option<f64>), CliError> {
    let (xs, vs) = read_real(path)?;
    if matches_grid(&xs, grid) {
        return Ok((RealSamples::new(*grid, vs)?, None));
    }
    check_cover(path, &xs, grid)?;
    let sp = Spline::new(&xs, &vs);
    let out: Vec<f64> = grid.nodes().map(|x| sp.eval(x)).collect();
    let residual = back_residual(grid, &[(&vs, out.clone())], &xs);
    report_resampling(path, xs.len(), grid.len(), residual, tol);
    Ok((RealSamples::new(*grid, out)?, Some(residual)))
}

fn report_resampling(path: &Path, from: usize, to: usize, residual: f64, tol: f64) {
    if residual > tol {
        warn!(
            "{}: resampled {from} samples onto {to} grid nodes; residual {residual:.3e} exceeds tolerance {tol:.1e}",
            path.display()
        );
    } else {
        info!("{}: resampled {from} samples onto {to} grid nodes (residual {residual:.3e})", path.display());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubic_interior_and_lines() {
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 * 0.1).powf(1.3)).collect();
        let line: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let s = Spline::new(&xs, &line);
        for x in [0.05, 0.77, 3.1] {
            assert!((s.eval(x) - (2.0 * x - 1.0)).abs() < 1e-12);
        }
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let s = Spline::new(&xs, &ys);
        assert!((s.eval(2.0) - 2.0f64.sin()).abs() < 1e-4);
    }

    #[test]
    fn roundtrip_and_resample() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let g = UniformGrid::half_offset(0.1, 50).unwrap();
        let s = ComplexSamples::from_fn(g, |k| Complex::new(0.0, k).exp());
        write_complex(&p, "k", &s).unwrap();
        let (back, r) = ingest_complex(&p, &g, 1e-6).unwrap();
        assert_eq!(back, s);
        assert!(r.is_none());
        let fine = UniformGrid::new(0.1, 0.05, 90).unwrap();
        let (re, r) = ingest_complex(&p, &fine, 1e-6).unwrap();
        assert!(r.unwrap() < 1e-3);
        for (k, v) in re.iter() {
            assert!((v - Complex::new(0.0, k).exp()).norm() < 1e-3);
        }
        let wide = UniformGrid::half_offset(0.1, 80).unwrap();
        assert!(ingest_complex(&p, &wide, 1e-6).is_err());
    }
}
