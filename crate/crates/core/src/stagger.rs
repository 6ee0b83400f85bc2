//! Implicit staggered coupling of flow and hardening.
//!
//! The composed map `Ξ⋆(ξ) = Ξ[Γ(ξ), ξ]` (flow solve with frozen `ξ`, then the
//! linear hardening solve) has the coupled solution as its fixed point.
//! [`relax_integrate`] finds that fixed point with Aitken-type dynamic
//! relaxation:
//!
//! ```text
//! r_i     = Ξ⋆(ξ^i) − ξ^i
//! ω_i     = ω_{i−1} [1 + (r_{i−1} − r_i)·r_i / ‖r_{i−1} − r_i‖²]
//! ξ^{i+1} = (1 − ω_i) ξ^i + ω_i Ξ⋆(ξ^i)
//! ```
//!
//! [`naive_integrate`] runs a fixed number of unrelaxed passes with no
//! convergence check; with two passes it is the classical staggered scheme
//! whose error accumulates over time steps.

use nalgebra::{Matrix3, Vector6};

use crate::constitutive::{
    hardening_predictor, resolved_tau, solve_flow, solve_hardening, stress_and_tangent, Crystal, MaterialState,
    NewtonSettings, StressResponse,
};
use crate::kinematics::{pade_hencky, update_elastic_f, StrainState};
use crate::{Error, Result, SlipVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationConfig {
    pub omega0: f64,
    /// Relative residual tolerance `‖r_i‖ ≤ eps_rel ‖r_0‖`.
    pub eps_rel: f64,
    /// Absolute residual floor (Pa); covers `r_0 = 0` steps.
    pub abs_floor: f64,
    pub max_substeps: usize,
    /// Clamp interval for `ω`, inside `]0, 2[`.
    pub omega_bounds: (f64, f64),
    /// Start the relaxation from the forward-Euler active-set estimate
    /// instead of `ξ_s`.
    pub use_predictor: bool,
    pub newton: NewtonSettings,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            omega0: 0.5,
            eps_rel: 1e-8,
            abs_floor: 1e-3,
            max_substeps: 200,
            omega_bounds: (0.05, 1.95),
            use_predictor: false,
            newton: NewtonSettings::default(),
        }
    }
}

impl RelaxationConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.omega_bounds;
        if !(lo > 0.0 && hi < 2.0 && lo < hi) {
            return Err(Error::InvalidParameter(format!("omega bounds ({lo}, {hi}) must lie in ]0, 2[")));
        }
        if !(self.omega0 >= lo && self.omega0 <= hi) {
            return Err(Error::InvalidParameter(format!("omega0 = {} outside bounds", self.omega0)));
        }
        if !(self.eps_rel > 0.0) {
            return Err(Error::InvalidParameter("eps_rel must be positive".into()));
        }
        if self.max_substeps == 0 {
            return Err(Error::InvalidParameter("max_substeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-substep history of one relaxation loop.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelaxationTrace {
    /// `‖r_i‖` (Pa), one per evaluation of `Ξ⋆`.
    pub residual_norms: Vec<f64>,
    /// `ω_i` applied after each residual; empty slot for the converged one.
    pub omegas: Vec<f64>,
    pub substeps: usize,
    pub converged: bool,
}

impl RelaxationTrace {
    pub fn last_omega(&self) -> f64 {
        self.omegas.last().copied().unwrap_or(f64::NAN)
    }
}

/// Image of `Ξ⋆` and the flow byproducts.
#[derive(Debug, Clone, PartialEq)]
pub struct StarImage {
    pub xi_tilde: SlipVector,
    pub dgamma: SlipVector,
    pub eps_p: Vector6<f64>,
}

/// `Ξ⋆(ξ)`: flow solve with `ξ` frozen, then the hardening solve.
pub fn xi_star(
    xi: &SlipVector,
    eps: &Vector6<f64>,
    state_old: &MaterialState,
    dt: f64,
    crystal: &Crystal,
    newton: &NewtonSettings,
) -> Result<StarImage> {
    let flow = solve_flow(eps, &state_old.eps_p, xi, dt, crystal, newton)?;
    let xi_tilde = solve_hardening(&state_old.xi, &flow.dgamma, crystal)?;
    Ok(StarImage {
        xi_tilde,
        dgamma: flow.dgamma,
        eps_p: flow.eps_p,
    })
}

/// Aitken update of the relaxation factor, clamped to `bounds`.
///
/// A stalled residual (`r_prev == r_curr`) leaves `ω` unchanged.
pub fn omega_update(omega_prev: f64, r_prev: &[f64], r_curr: &[f64], bounds: (f64, f64)) -> f64 {
    let (num, den) = r_prev
        .iter()
        .zip(r_curr)
        .fold((0.0, 0.0), |(num, den), (p, c)| {
            let d = p - c;
            (num + d * c, den + d * d)
        });
    if den == 0.0 {
        return omega_prev;
    }
    (omega_prev * (1.0 + num / den)).clamp(bounds.0, bounds.1)
}

fn commit(
    f: &Matrix3<f64>,
    state_old: &MaterialState,
    xi: SlipVector,
    image: StarImage,
    crystal: &Crystal,
) -> Result<MaterialState> {
    let split = update_elastic_f(f, &state_old.fp, &image.dgamma, &crystal.systems)?;
    Ok(MaterialState {
        eps_p: image.eps_p,
        xi,
        fp: split.plastic,
        dgamma: image.dgamma,
    })
}

fn predicted_start(eps: &Vector6<f64>, state_old: &MaterialState, crystal: &Crystal) -> SlipVector {
    let tau_trial = resolved_tau(&(eps - state_old.eps_p), &crystal.systems);
    let pred = hardening_predictor(&state_old.xi, &tau_trial, crystal);
    if pred.singular {
        return state_old.xi;
    }
    let p = &crystal.params;
    let sat = p.saturation();
    let h = crystal.coupling();
    let abs_dg = pred.dgamma.abs();
    let start = SlipVector::from_fn(|a, _| {
        state_old.xi[a]
            + (0..crate::NUM_SLIP)
                .map(|b| p.h0 * h[(a, b)] * (1.0 - state_old.xi[b] / sat) * abs_dg[b])
                .sum::<f64>()
    });
    if start.iter().all(|&x| x > 0.0 && x.is_finite()) {
        start
    } else {
        state_old.xi
    }
}

/// Dynamic relaxation of the flow/hardening coupling over one time step.
///
/// `eps` is the total Hencky strain at the end of the step and `f` the
/// deformation gradient used to update `F_p`. On convergence the committed
/// state carries the last relaxed `ξ^i` together with its own flow solution
/// `Γ(ξ^i)`.
pub fn relax_integrate(
    eps: &Vector6<f64>,
    f: &Matrix3<f64>,
    state_old: &MaterialState,
    dt: f64,
    crystal: &Crystal,
    cfg: &RelaxationConfig,
) -> Result<(MaterialState, RelaxationTrace)> {
    cfg.validate()?;
    let mut trace = RelaxationTrace::default();
    let mut xi = if cfg.use_predictor {
        predicted_start(eps, state_old, crystal)
    } else {
        state_old.xi
    };

    let image = xi_star(&xi, eps, state_old, dt, crystal, &cfg.newton)?;
    let mut r_prev = image.xi_tilde - xi;
    let r0 = r_prev.norm();
    trace.residual_norms.push(r0);
    trace.substeps = 1;
    if r0 <= cfg.abs_floor {
        trace.converged = true;
        return Ok((commit(f, state_old, xi, image, crystal)?, trace));
    }
    let mut omega = cfg.omega0;
    trace.omegas.push(omega);
    let mut next = (1.0 - omega) * xi + omega * image.xi_tilde;

    while trace.substeps < cfg.max_substeps {
        xi = next;
        let image = xi_star(&xi, eps, state_old, dt, crystal, &cfg.newton)?;
        let r = image.xi_tilde - xi;
        let norm = r.norm();
        trace.residual_norms.push(norm);
        trace.substeps += 1;
        if norm <= cfg.eps_rel * r0 || norm <= cfg.abs_floor {
            trace.converged = true;
            return Ok((commit(f, state_old, xi, image, crystal)?, trace));
        }
        omega = omega_update(omega, r_prev.as_slice(), r.as_slice(), cfg.omega_bounds);
        trace.omegas.push(omega);
        next = (1.0 - omega) * xi + omega * image.xi_tilde;
        r_prev = r;
    }
    Err(Error::RelaxationNotConverged {
        substeps: trace.substeps,
        last_residual: trace.residual_norms.last().copied().unwrap_or(f64::NAN),
    })
}

/// Result of a full material-point update from a Green–Lagrange strain.
#[derive(Debug, Clone, PartialEq)]
pub struct PointUpdate {
    pub state: MaterialState,
    pub strain: StrainState,
    pub response: StressResponse,
    pub trace: RelaxationTrace,
}

/// Padé Hencky strain, relaxed constitutive update and stress/tangent at the
/// committed state, in the order the element and the point driver both need.
pub fn update_point(
    green: &Vector6<f64>,
    f: &Matrix3<f64>,
    state_old: &MaterialState,
    dt: f64,
    crystal: &Crystal,
    cfg: &RelaxationConfig,
) -> Result<PointUpdate> {
    let strain = pade_hencky(green)?;
    let (state, trace) = relax_integrate(&strain.hencky, f, state_old, dt, crystal, cfg)?;
    let response = stress_and_tangent(&strain, &state.eps_p, &state.xi, dt, crystal)?;
    Ok(PointUpdate {
        state,
        strain,
        response,
        trace,
    })
}

/// Classical staggered update: `passes` rounds of `Γ` then `Ξ`, no relaxation
/// and no convergence check.
pub fn naive_integrate(
    eps: &Vector6<f64>,
    f: &Matrix3<f64>,
    state_old: &MaterialState,
    dt: f64,
    crystal: &Crystal,
    passes: usize,
    newton: &NewtonSettings,
) -> Result<MaterialState> {
    if passes == 0 {
        return Err(Error::InvalidParameter("passes must be >= 1".into()));
    }
    let mut xi = state_old.xi;
    let mut last = None;
    for _ in 0..passes {
        let image = xi_star(&xi, eps, state_old, dt, crystal, newton)?;
        xi = image.xi_tilde;
        last = Some(image);
    }
    let image = last.expect("at least one pass");
    commit(f, state_old, xi, image, crystal)
}
