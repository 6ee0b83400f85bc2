//! Padé logarithm error tables.

use std::path::Path;

use crystal_core::kinematics::{incompressible_error, log_error_diagnostics, IncompressibleError, LogErrorDiagnostics};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::output::{num, CsvOut};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub e1: f64,
    pub e2: f64,
    pub error: IncompressibleError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSurface {
    /// Row-major over `e1`, then `e2`.
    pub grid: Vec<SurfacePoint>,
    /// Index into `grid` of the largest absolute error.
    pub argmax: usize,
    pub sweep: Vec<(f64, LogErrorDiagnostics)>,
}

impl ErrorSurface {
    pub fn max(&self) -> &SurfacePoint {
        &self.grid[self.argmax]
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Thread pool capped by `CRYSTAL_RELAX_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("CRYSTAL_RELAX_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::config(format!("CRYSTAL_RELAX_THREADS must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))
}

pub fn error_surface(cfg: &RunConfig) -> Result<ErrorSurface, CliError> {
    let axis = linspace(cfg.grid_min, cfg.grid_max, cfg.grid_points);
    let pool = thread_pool()?;
    let grid: Vec<SurfacePoint> = pool.install(|| {
        axis.par_iter()
            .flat_map_iter(|&e1| {
                axis.iter().map(move |&e2| {
                    incompressible_error(e1, e2).map(|error| SurfacePoint { e1, e2, error })
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })
    .map_err(CliError::config)?;
    // First index wins on ties so the result does not depend on scheduling.
    let argmax = grid
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.error.absolute > grid[best].error.absolute { i } else { best });
    let sweep = linspace(0.0, cfg.norm_max, cfg.norm_points)
        .into_iter()
        .map(|e| log_error_diagnostics(e).map(|d| (e, d)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::config)?;
    Ok(ErrorSurface { grid, argmax, sweep })
}

/// Writes the grid to `<output>` and the 1-D sweep to `<stem>_bound.csv`.
pub fn run_error_surface(cfg: &RunConfig, out_dir: &Path) -> Result<ErrorSurface, CliError> {
    let surface = error_surface(cfg)?;
    let header = ["E1", "E2", "E3", "absolute", "relative"].map(String::from);
    let grid_path = out_dir.join(&cfg.output);
    let mut csv = CsvOut::create(&grid_path, &header)?;
    for p in &surface.grid {
        csv.row(&[
            num(p.e1),
            num(p.e2),
            num(p.error.e3),
            num(p.error.absolute),
            num(p.error.relative),
        ])?;
    }
    csv.flush()?;

    let stem = Path::new(&cfg.output)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("error-surface");
    let bound_path = out_dir.join(format!("{stem}_bound.csv"));
    let mut csv = CsvOut::create(&bound_path, &["norm_E", "upper_bound", "err1d"].map(String::from))?;
    for (e, d) in &surface.sweep {
        csv.row(&[num(*e), num(d.upper_bound), num(d.err1d)])?;
    }
    csv.flush()?;
    Ok(surface)
}
