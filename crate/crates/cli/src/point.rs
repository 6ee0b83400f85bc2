//! Material-point integration along a prescribed deformation path.

use std::path::Path;

use crystal_core::constitutive::{coupled_residuals, stress_and_tangent, Crystal, MaterialState};
use crystal_core::kinematics::{green_lagrange, pade_hencky};
use crystal_core::stagger::{naive_integrate, update_point, RelaxationConfig};
use crystal_core::{SlipVector, NUM_SLIP};
use nalgebra::Vector6;

use crate::config::{Integrator, RunConfig, StrainPath};
use crate::output::{CsvOut, VOIGT_LABELS};
use crate::CliError;

/// One converged step of a material-point run.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRow {
    pub time: f64,
    pub green: Vector6<f64>,
    pub eps_p: Vector6<f64>,
    /// Hencky-conjugate stress `C(ε − ε_p)`.
    pub sigma: Vector6<f64>,
    pub pk2: Vector6<f64>,
    pub xi: SlipVector,
    pub substeps: usize,
    pub omega_last: f64,
    /// `‖e_ε‖/‖ε‖` of the coupled system at the committed state.
    pub flow_residual: f64,
    /// `‖e_γ‖/‖ξ_s‖` of the coupled system at the committed state.
    pub hardening_residual: f64,
}

/// Integrates `steps` steps of size `dt`; `observe` sees each row as it is
/// produced. On failure returns the 1-based step that failed.
pub fn integrate_path(
    crystal: &Crystal,
    path: &StrainPath,
    dt: f64,
    steps: usize,
    integrator: Integrator,
    relaxation: &RelaxationConfig,
    mut observe: impl FnMut(&PointRow) -> Result<(), CliError>,
) -> Result<Vec<PointRow>, CliError> {
    let mut state = MaterialState::initial(&crystal.params);
    let mut rows = Vec::with_capacity(steps);
    for step in 1..=steps {
        let f = path.deformation(step, dt);
        let green = green_lagrange(&f);
        let solver = |source| CliError::Solver { step, source };
        let (new, sigma, pk2, hencky, substeps, omega_last) = match integrator {
            Integrator::Relax => {
                let upd = update_point(&green, &f, &state, dt, crystal, relaxation).map_err(solver)?;
                let omega = upd.trace.omegas.last().copied().unwrap_or(relaxation.omega0);
                (
                    upd.state,
                    upd.response.sigma,
                    upd.response.pk2,
                    upd.strain.hencky,
                    upd.trace.substeps,
                    omega,
                )
            }
            Integrator::Naive { passes } => {
                let strain = pade_hencky(&green).map_err(solver)?;
                let new = naive_integrate(&strain.hencky, &f, &state, dt, crystal, passes, &relaxation.newton)
                    .map_err(solver)?;
                let resp = stress_and_tangent(&strain, &new.eps_p, &new.xi, dt, crystal).map_err(solver)?;
                (new, resp.sigma, resp.pk2, strain.hencky, passes, 1.0)
            }
        };
        let res = coupled_residuals(&hencky, &state, &new, dt, crystal).map_err(solver)?;
        let row = PointRow {
            time: step as f64 * dt,
            green,
            eps_p: new.eps_p,
            sigma,
            pk2,
            xi: new.xi,
            substeps,
            omega_last,
            flow_residual: res.flow_relative(&hencky),
            hardening_residual: res.hardening_relative(&state.xi),
        };
        observe(&row)?;
        rows.push(row);
        state = new;
    }
    Ok(rows)
}

pub fn point_header() -> Vec<String> {
    let mut h = vec!["time".to_string()];
    for prefix in ["E", "eps_p", "sigma"] {
        h.extend(VOIGT_LABELS.iter().map(|l| format!("{prefix}{l}")));
    }
    h.extend((1..=NUM_SLIP).map(|a| format!("xi{a}")));
    h.push("substeps".into());
    h.push("omega_last".into());
    h
}

pub fn point_record(row: &PointRow) -> Vec<String> {
    let mut r = vec![crate::output::num(row.time)];
    for v in [&row.green, &row.eps_p, &row.sigma] {
        r.extend(v.iter().map(|x| crate::output::num(*x)));
    }
    r.extend(row.xi.iter().map(|x| crate::output::num(*x)));
    r.push(row.substeps.to_string());
    r.push(crate::output::num(row.omega_last));
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub steps: usize,
    pub final_row: Option<PointRow>,
    pub output: std::path::PathBuf,
}

/// Runs the configured path and streams rows to `<out>/<output>`. Rows
/// already written stay on disk when a step fails.
pub fn run_point_driver(cfg: &RunConfig, out_dir: &Path) -> Result<PointSummary, CliError> {
    let crystal = Crystal::new(cfg.material.clone(), cfg.orientation).map_err(CliError::config)?;
    let file = out_dir.join(&cfg.output);
    let mut csv = CsvOut::create(&file, &point_header())?;
    let result = integrate_path(
        &crystal,
        &cfg.path,
        cfg.dt,
        cfg.steps,
        cfg.integrator,
        &cfg.relaxation,
        |row| csv.row(&point_record(row)),
    );
    csv.flush()?;
    let rows = result?;
    Ok(PointSummary {
        steps: rows.len(),
        final_row: rows.last().cloned(),
        output: file,
    })
}
