//! Displacement-controlled FEM runs read from a mesh file.
//!
//! Two files are written into the output directory:
//!
//! * `<output>`: one row per step with `step, time, u3, E33, reaction_z,
//!   sigma33`, where `u3` is the prescribed displacement of the driven
//!   z-DOFs, `E33 = u3 / length` and `sigma33 = reaction_z / area`.
//! * `<stem>_state.csv`: the final Gauss-point state, one row per point with
//!   `element, gauss, eps_p_norm, xi1..xi12`. `element` is the mesh label.

use std::path::{Path, PathBuf};

use crystal_core::constitutive::{Crystal, MaterialState};
use crystal_core::fem::{gauss_states, parse_mesh, solve_with_observer, Mesh, SolverConfig};
use crystal_core::voigt::strain_norm;
use crystal_core::NUM_SLIP;

use crate::config::RunConfig;
use crate::output::{num, CsvOut};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionRow {
    pub step: usize,
    pub time: f64,
    pub u3: f64,
    pub e33: f64,
    pub reaction: f64,
    pub sigma33: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FemReport {
    pub rows: Vec<ReactionRow>,
    pub reaction_csv: PathBuf,
    pub state_dump: PathBuf,
}

pub fn solver_config(cfg: &RunConfig) -> SolverConfig {
    SolverConfig {
        dt: cfg.dt,
        steps: cfg.steps,
        rel_tol: cfg.fem_tol,
        max_iter: cfg.fem_max_iter,
        max_bisections: cfg.fem_bisections,
        relaxation: cfg.relaxation,
        ..SolverConfig::default()
    }
}

/// Bounding-box height along z and cross-section in x-y.
fn extents(mesh: &Mesh) -> (f64, f64) {
    let span = |k: usize| {
        let (lo, hi) = mesh
            .nodes
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x[k]), hi.max(x[k])));
        hi - lo
    };
    (span(2), span(0) * span(1))
}

pub fn load_mesh(cfg: &RunConfig) -> Result<Mesh, CliError> {
    let path = cfg
        .mesh
        .as_ref()
        .ok_or_else(|| CliError::config("fem mode needs a mesh file"))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let spec = parse_mesh(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Mesh::build(spec, cfg.eas_modes, &MaterialState::initial(&cfg.material))
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Runs the case on an already built mesh; `on_row` sees each step.
pub fn run_mesh(
    cfg: &RunConfig,
    mesh: &mut Mesh,
    mut on_row: impl FnMut(&ReactionRow) -> Result<(), CliError>,
) -> Result<Vec<ReactionRow>, CliError> {
    let crystal = Crystal::new(cfg.material.clone(), cfg.orientation).map_err(CliError::config)?;
    let (height, section) = extents(mesh);
    let length = cfg.length.unwrap_or(height);
    let area = cfg.area.unwrap_or(section);
    if !(length > 0.0 && area > 0.0) {
        return Err(CliError::config("length and area must be positive"));
    }
    let driven = mesh.constraints.iter().find(|c| c.dof == 2 && c.rate != 0.0).cloned();
    let solver = solver_config(cfg);
    let mut rows = Vec::new();
    let mut sink_err = None;
    let result = solve_with_observer(mesh, &crystal, &solver, |m, rec| {
        let u3 = driven.as_ref().map_or(0.0, |c| c.at(rec.time));
        let reaction = m.driven_reaction(&rec.internal_force, 2);
        let row = ReactionRow {
            step: rec.step,
            time: rec.time,
            u3,
            e33: u3 / length,
            reaction,
            sigma33: reaction / area,
        };
        if sink_err.is_none() {
            if let Err(e) = on_row(&row) {
                sink_err = Some(e);
            }
        }
        rows.push(row);
    });
    if let Some(e) = sink_err {
        return Err(e);
    }
    result.map_err(|source| CliError::Solver {
        step: rows.len() + 1,
        source,
    })?;
    Ok(rows)
}

pub fn reaction_header() -> Vec<String> {
    ["step", "time", "u3", "E33", "reaction_z", "sigma33"].map(String::from).to_vec()
}

pub fn write_state_dump(mesh: &Mesh, path: &Path) -> Result<(), CliError> {
    let mut header = vec!["element".to_string(), "gauss".into(), "eps_p_norm".into()];
    header.extend((1..=NUM_SLIP).map(|a| format!("xi{a}")));
    let mut csv = CsvOut::create(path, &header)?;
    for (e, g, state) in gauss_states(mesh) {
        let mut row = vec![
            mesh.element_labels[e].to_string(),
            (g + 1).to_string(),
            num(strain_norm(&state.eps_p)),
        ];
        row.extend(state.xi.iter().map(|x| num(*x)));
        csv.row(&row)?;
    }
    csv.flush()
}

/// Runs the mesh case. The reaction CSV is flushed and the state dump
/// written even when a step fails; the solver error is returned afterwards.
pub fn run_fem_case(cfg: &RunConfig, out_dir: &Path) -> Result<FemReport, CliError> {
    let mut mesh = load_mesh(cfg)?;
    let reaction_csv = out_dir.join(&cfg.output);
    let stem = Path::new(&cfg.output)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("fem");
    let state_dump = out_dir.join(format!("{stem}_state.csv"));
    let mut csv = CsvOut::create(&reaction_csv, &reaction_header())?;
    let result = run_mesh(cfg, &mut mesh, |r| {
        csv.row(&[
            r.step.to_string(),
            num(r.time),
            num(r.u3),
            num(r.e33),
            num(r.reaction),
            num(r.sigma33),
        ])
    });
    csv.flush()?;
    write_state_dump(&mesh, &state_dump)?;
    Ok(FemReport {
        rows: result?,
        reaction_csv,
        state_dump,
    })
}
