//! Batch drivers for the crystal plasticity engine: material-point paths,
//! the drift study, Padé error tables, small FEM cases and pole figures.

use std::io;
use std::path::{Path, PathBuf};

pub mod config;
pub mod drift;
pub mod fem_case;
pub mod output;
pub mod point;
pub mod pole;
pub mod surface;

pub use config::{ConfigError, Integrator, Mode, RunConfig, StrainPath};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("step {step}: {source}")]
    Solver {
        step: usize,
        #[source]
        source: crystal_core::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn config(msg: impl std::fmt::Display) -> Self {
        CliError::Config(ConfigError(msg.to_string()))
    }

    /// 2 for configuration and I/O problems, 3 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Solver { .. } => 3,
        }
    }
}

/// Human-readable outcome of a run, printed by the binary.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<String, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let out = out_dir.join(&cfg.output);
    Ok(match cfg.mode {
        Mode::Point => {
            let s = point::run_point_driver(cfg, out_dir)?;
            format!("point: {} steps -> {}", s.steps, s.output.display())
        }
        Mode::Drift => {
            let r = drift::run_drift_study(cfg, out_dir)?;
            let mut lines = vec![format!(
                "drift: reference dt = {:e} ({} steps)",
                cfg.dt_ref, r.reference_steps
            )];
            for c in &r.cases {
                let name = match c.integrator {
                    Integrator::Relax => "relax".to_string(),
                    Integrator::Naive { passes } => format!("naive{passes}"),
                };
                lines.push(format!(
                    "  dt = {:<8e} {:<7} xi dev = {:.3e}  eps_p dev = {:.3e}  max e_gamma = {:.3e}",
                    c.dt, name, c.xi_deviation, c.eps_p_deviation, c.max_hardening_residual
                ));
            }
            lines.push(format!("  -> {}", out.display()));
            lines.join("\n")
        }
        Mode::ErrorSurface => {
            let s = surface::run_error_surface(cfg, out_dir)?;
            let m = s.max();
            format!(
                "error-surface: max {:.6} at E1 = {}, E2 = {} (relative {:.4}%) -> {}",
                m.error.absolute,
                m.e1,
                m.e2,
                100.0 * m.error.relative,
                out.display()
            )
        }
        Mode::Fem => {
            let r = fem_case::run_fem_case(cfg, out_dir)?;
            format!(
                "fem: {} steps, final sigma33 = {:.6e} Pa -> {}, {}",
                r.rows.len(),
                r.rows.last().map_or(0.0, |row| row.sigma33),
                r.reaction_csv.display(),
                r.state_dump.display()
            )
        }
        Mode::Pole => {
            let f = pole::run_pole_figure(cfg, out_dir)?;
            format!(
                "pole: {} points, {} skipped -> {}",
                f.points.len(),
                f.skipped,
                out.display()
            )
        }
    })
}
