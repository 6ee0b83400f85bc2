//! Displacement-controlled Newton solver with step bisection.

use nalgebra::{DMatrix, DVector};

use super::hex8::{element_force_stiffness, ElementResponse, Vector12};
use super::mesh::Mesh;
use crate::constitutive::{Crystal, MaterialState};
use crate::stagger::RelaxationConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub steps: usize,
    /// `‖r‖ ≤ rel_tol · ‖f_ext + reaction‖ + floor`.
    pub rel_tol: f64,
    /// Absolute floor as a fraction of `C11 · V^(2/3)`.
    pub abs_tol: f64,
    pub max_iter: usize,
    pub max_bisections: usize,
    pub relaxation: RelaxationConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            steps: 1,
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_iter: 25,
            max_bisections: 4,
            relaxation: RelaxationConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol >= 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        self.relaxation.validate()
    }
}

/// Converged state of one schedule step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// Newton iterations summed over bisected substeps.
    pub iterations: usize,
    pub bisections: usize,
    /// Largest relaxation substep count over all Gauss points.
    pub max_substeps: usize,
    /// Internal force at every DOF; at constrained DOFs these are the reactions.
    pub internal_force: DVector<f64>,
}

struct Trial {
    u: DVector<f64>,
    alphas: Vec<Vector12>,
    responses: Vec<ElementResponse>,
    f_int: DVector<f64>,
    iterations: usize,
}

fn evaluate(
    mesh: &Mesh,
    u: &DVector<f64>,
    alphas: &[Vector12],
    crystal: &Crystal,
    dt: f64,
    cfg: &RelaxationConfig,
) -> Result<Vec<ElementResponse>> {
    mesh.elements
        .iter()
        .enumerate()
        .map(|(e, el)| {
            let ue = mesh.element_displacement(e, u);
            element_force_stiffness(e, el, &ue, &alphas[e], crystal, dt, cfg)
        })
        .collect()
}

fn newton(mesh: &Mesh, crystal: &Crystal, cfg: &SolverConfig, t0: f64, t1: f64) -> Result<Trial> {
    let n = mesh.num_dofs();
    let dt = t1 - t0;
    let mut u = mesh.displacement.clone();
    let mut constrained = vec![false; n];
    for c in &mesh.constraints {
        u[c.global_dof()] = c.at(t1);
        constrained[c.global_dof()] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !constrained[i]).collect();
    let mut f_ext = DVector::<f64>::zeros(n);
    for l in &mesh.loads {
        f_ext[3 * l.node + l.dof] += l.force;
    }
    let volume = mesh.volume();
    let floor = cfg.abs_tol * crystal.params.elasticity.c11 * volume.powf(2.0 / 3.0);
    let sizes: Vec<f64> = mesh.elements.iter().map(|el| el.volume().cbrt()).collect();
    let mut alphas: Vec<Vector12> = mesh.elements.iter().map(|el| el.alpha).collect();

    for iter in 0..=cfg.max_iter {
        let responses = evaluate(mesh, &u, &alphas, crystal, dt, &cfg.relaxation)?;
        let mut f_int = DVector::<f64>::zeros(n);
        let mut f_cond = DVector::<f64>::zeros(n);
        let mut k = DMatrix::<f64>::zeros(n, n);
        for (el, r) in mesh.elements.iter().zip(&responses) {
            for a in 0..8 {
                for i in 0..3 {
                    let gi = 3 * el.node_ids[a] + i;
                    f_int[gi] += r.f_int[3 * a + i];
                    f_cond[gi] += r.f_condensed[3 * a + i];
                    for b in 0..8 {
                        for j in 0..3 {
                            k[(gi, 3 * el.node_ids[b] + j)] += r.stiffness[(3 * a + i, 3 * b + j)];
                        }
                    }
                }
            }
        }

        let residual = free.iter().map(|&i| (f_ext[i] - f_int[i]).powi(2)).sum::<f64>().sqrt();
        let reference = (0..n)
            .map(|i| if constrained[i] { f_int[i] } else { f_ext[i] })
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        let enhanced = responses
            .iter()
            .zip(&sizes)
            .map(|(r, h)| r.f_alpha.norm() / h)
            .fold(0.0_f64, f64::max);
        let target = cfg.rel_tol * reference + floor;
        if !residual.is_finite() || !enhanced.is_finite() {
            break;
        }
        if residual <= target && enhanced <= target {
            return Ok(Trial {
                u,
                alphas,
                responses,
                f_int,
                iterations: iter,
            });
        }
        if iter == cfg.max_iter {
            break;
        }

        let m = free.len();
        let mut du = DVector::zeros(n);
        if m > 0 {
            let kff = DMatrix::from_fn(m, m, |r, c| k[(free[r], free[c])]);
            let rhs = DVector::from_fn(m, |r, _| f_ext[free[r]] - f_cond[free[r]]);
            let sol = kff.lu().solve(&rhs).ok_or(Error::Singular("global stiffness"))?;
            for (r, &i) in free.iter().enumerate() {
                du[i] = sol[r];
            }
        }
        for (e, r) in responses.iter().enumerate() {
            let due = mesh.element_displacement(e, &du);
            let flat = super::hex8::Vector24::from_column_slice(due.as_slice());
            alphas[e] += r.recovery.delta_alpha(&flat);
        }
        u += du;
    }
    Err(Error::NewtonDiverged {
        time: t1,
        bisections: 0,
    })
}

fn commit(mesh: &mut Mesh, trial: Trial, t1: f64) -> (usize, usize) {
    let mut max_substeps = 0;
    for ((el, alpha), r) in mesh.elements.iter_mut().zip(trial.alphas).zip(trial.responses) {
        el.alpha = alpha;
        el.gauss_states = r.states;
        el.green = r.green;
        el.pk2 = r.pk2;
        max_substeps = max_substeps.max(r.max_substeps);
    }
    mesh.displacement = trial.u;
    mesh.time = t1;
    (trial.iterations, max_substeps)
}

struct Advance {
    iterations: usize,
    bisections: usize,
    max_substeps: usize,
    f_int: DVector<f64>,
}

fn advance(mesh: &mut Mesh, crystal: &Crystal, cfg: &SolverConfig, t0: f64, t1: f64, depth: usize) -> Result<Advance> {
    match newton(mesh, crystal, cfg, t0, t1) {
        Ok(trial) => {
            let f_int = trial.f_int.clone();
            let (iterations, max_substeps) = commit(mesh, trial, t1);
            Ok(Advance {
                iterations,
                bisections: depth,
                max_substeps,
                f_int,
            })
        }
        Err(_) if depth < cfg.max_bisections => {
            let mid = 0.5 * (t0 + t1);
            let a = advance(mesh, crystal, cfg, t0, mid, depth + 1)?;
            let b = advance(mesh, crystal, cfg, mid, t1, depth + 1)?;
            Ok(Advance {
                iterations: a.iterations + b.iterations,
                bisections: a.bisections.max(b.bisections),
                max_substeps: a.max_substeps.max(b.max_substeps),
                f_int: b.f_int,
            })
        }
        Err(Error::NewtonDiverged { time, .. }) => Err(Error::NewtonDiverged { time, bisections: depth }),
        Err(other) => Err(other),
    }
}

/// Runs `cfg.steps` steps of size `cfg.dt` from the mesh's current time,
/// calling `observe` after each converged step. The mesh holds the last
/// converged state when an error is returned.
pub fn solve_with_observer(
    mesh: &mut Mesh,
    crystal: &Crystal,
    cfg: &SolverConfig,
    mut observe: impl FnMut(&Mesh, &StepRecord),
) -> Result<Vec<StepRecord>> {
    cfg.validate()?;
    let mut history = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let t0 = mesh.time;
        let t1 = t0 + cfg.dt;
        let adv = advance(mesh, crystal, cfg, t0, t1, 0)?;
        let record = StepRecord {
            step,
            time: t1,
            iterations: adv.iterations,
            bisections: adv.bisections,
            max_substeps: adv.max_substeps,
            internal_force: adv.f_int,
        };
        observe(mesh, &record);
        history.push(record);
    }
    Ok(history)
}

pub fn solve_displacement_control(mesh: &mut Mesh, crystal: &Crystal, cfg: &SolverConfig) -> Result<Vec<StepRecord>> {
    solve_with_observer(mesh, crystal, cfg, |_, _| {})
}

/// Gauss-point state snapshot for reporting.
pub fn gauss_states(mesh: &Mesh) -> impl Iterator<Item = (usize, usize, &MaterialState)> {
    mesh.elements
        .iter()
        .enumerate()
        .flat_map(|(e, el)| el.gauss_states.iter().enumerate().map(move |(g, s)| (e, g, s)))
}
