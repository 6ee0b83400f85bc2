//! Drift of the naive staggered scheme against dynamic relaxation.

use std::path::Path;

use crystal_core::constitutive::Crystal;
use crystal_core::voigt::strain_norm;

use crate::config::{Integrator, RunConfig};
use crate::output::{num, CsvOut};
use crate::point::{integrate_path, PointRow};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct DriftCase {
    pub dt: f64,
    pub integrator: Integrator,
    pub steps: usize,
    /// `‖ξ − ξ_ref‖ / ‖ξ_ref‖` at the end of the path.
    pub xi_deviation: f64,
    /// `‖ε_p − ε_p,ref‖ / ‖ε_p,ref‖` at the end of the path.
    pub eps_p_deviation: f64,
    /// Largest `‖e_γ‖/‖ξ_s‖` over the run.
    pub max_hardening_residual: f64,
    /// Largest `‖e_ε‖/‖ε‖` over the run.
    pub max_flow_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub reference: PointRow,
    pub reference_steps: usize,
    pub cases: Vec<DriftCase>,
}

impl DriftReport {
    pub fn case(&self, dt: f64, relax: bool) -> Option<&DriftCase> {
        self.cases
            .iter()
            .find(|c| c.dt == dt && matches!(c.integrator, Integrator::Relax) == relax)
    }
}

fn step_count(duration: f64, dt: f64) -> Result<usize, CliError> {
    let n = (duration / dt).round();
    if n < 1.0 || ((n * dt - duration).abs() > 1e-9 * duration) {
        return Err(CliError::config(format!(
            "duration {duration} is not a whole number of steps of {dt}"
        )));
    }
    Ok(n as usize)
}

fn terminal(crystal: &Crystal, cfg: &RunConfig, dt: f64, integrator: Integrator) -> Result<(Vec<PointRow>, usize), CliError> {
    let steps = step_count(cfg.duration, dt)?;
    let rows = integrate_path(crystal, &cfg.path, dt, steps, integrator, &cfg.relaxation, |_| Ok(()))?;
    Ok((rows, steps))
}

/// Runs the configured path with the reference step and, for every drift
/// step size, with both the naive scheme and dynamic relaxation.
pub fn drift_study(cfg: &RunConfig) -> Result<DriftReport, CliError> {
    let crystal = Crystal::new(cfg.material.clone(), cfg.orientation).map_err(CliError::config)?;
    let passes = match cfg.integrator {
        Integrator::Naive { passes } => passes,
        Integrator::Relax => 2,
    };
    let (ref_rows, reference_steps) = terminal(&crystal, cfg, cfg.dt_ref, Integrator::Relax)?;
    let reference = ref_rows.last().cloned().expect("at least one step");
    let xi_ref = reference.xi.norm();
    let ep_ref = strain_norm(&reference.eps_p);

    let mut cases = Vec::new();
    for &dt in &cfg.drift_dts {
        for integrator in [Integrator::Naive { passes }, Integrator::Relax] {
            let (rows, steps) = terminal(&crystal, cfg, dt, integrator)?;
            let last = rows.last().expect("at least one step");
            let fold = |f: fn(&PointRow) -> f64| rows.iter().map(f).fold(0.0_f64, f64::max);
            cases.push(DriftCase {
                dt,
                integrator,
                steps,
                xi_deviation: (last.xi - reference.xi).norm() / xi_ref,
                eps_p_deviation: if ep_ref > 0.0 {
                    strain_norm(&(last.eps_p - reference.eps_p)) / ep_ref
                } else {
                    strain_norm(&last.eps_p)
                },
                max_hardening_residual: fold(|r| r.hardening_residual),
                max_flow_residual: fold(|r| r.flow_residual),
            });
        }
    }
    Ok(DriftReport {
        reference,
        reference_steps,
        cases,
    })
}

pub fn run_drift_study(cfg: &RunConfig, out_dir: &Path) -> Result<DriftReport, CliError> {
    let report = drift_study(cfg)?;
    let header: Vec<String> = [
        "dt",
        "method",
        "steps",
        "xi_deviation",
        "eps_p_deviation",
        "max_hardening_residual",
        "max_flow_residual",
    ]
    .map(String::from)
    .to_vec();
    let path = out_dir.join(&cfg.output);
    let mut csv = CsvOut::create(&path, &header)?;
    for c in &report.cases {
        let method = match c.integrator {
            Integrator::Relax => "relax".to_string(),
            Integrator::Naive { passes } => format!("naive{passes}"),
        };
        csv.row(&[
            num(c.dt),
            method,
            c.steps.to_string(),
            num(c.xi_deviation),
            num(c.eps_p_deviation),
            num(c.max_hardening_residual),
            num(c.max_flow_residual),
        ])?;
    }
    csv.flush()?;
    Ok(report)
}
