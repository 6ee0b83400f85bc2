//! Backward-Euler integration of the visco-plastic slip law at one point.
//!
//! The coupled system in `(ε_p, ξ)` is split into two pieces that are solved
//! separately:
//!
//! - the flow law, Newton on `ε_p` with the slip resistances frozen
//!   ([`solve_flow`]);
//! - the saturation hardening law, which is linear in `ξ` once the slip
//!   increments are known ([`solve_hardening`]).
//!
//! Tying the two together is the job of [`crate::stagger`].

use nalgebra::{Matrix3, Matrix6, Vector6};

use crate::kinematics::{conjugate_stress, tangent_transform, StrainState};
use crate::lattice::{fcc_slip_systems, rotate_and_project, ElasticityVoigt, Orientation, SlipSystem};
use crate::voigt::strain_norm;
use crate::{Error, Result, SlipMatrix, SlipVector, NUM_SLIP};

/// Largest admissible `|τ/ξ|` before the power law is considered overflowed.
pub const RATIO_CAP: f64 = 4.0;

/// Slip-law, hardening and elastic constants; uniform over the 12 systems.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    /// Reference slip rate (1/s).
    pub gamma_dot_0: f64,
    /// Hardening modulus (Pa).
    pub h0: f64,
    /// Initial slip resistance (Pa).
    pub xi0: f64,
    /// Saturation stress (Pa).
    pub xi_inf: f64,
    /// Optional replacement for `xi_inf`, used to force softening.
    pub xi_inf_star: Option<f64>,
    /// Latent hardening ratio.
    pub q: f64,
    /// Rate exponent.
    pub n: f64,
    pub elasticity: ElasticityVoigt,
}

impl MaterialParams {
    /// Pure aluminium.
    pub fn aluminum() -> Self {
        Self {
            gamma_dot_0: 0.001,
            h0: 75e6,
            xi0: 31e6,
            xi_inf: 63e6,
            xi_inf_star: None,
            q: 1.4,
            n: 30.0,
            elasticity: ElasticityVoigt::aluminum(),
        }
    }

    /// The softening value of the saturation stress for aluminium (Pa).
    pub const ALUMINUM_XI_INF_STAR: f64 = 7e6;

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma_dot_0", self.gamma_dot_0),
            ("h0", self.h0),
            ("xi0", self.xi0),
            ("xi_inf", self.xi_inf),
            ("xi_inf_star", self.xi_inf_star.unwrap_or(1.0)),
            ("q", self.q),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.n >= 1.0) {
            return Err(Error::InvalidParameter(format!("n must be >= 1, got {}", self.n)));
        }
        Ok(())
    }

    /// Effective saturation stress (`xi_inf_star` when set).
    pub fn saturation(&self) -> f64 {
        self.xi_inf_star.unwrap_or(self.xi_inf)
    }

    /// `h_αβ`: 1 on the diagonal, `q` elsewhere.
    pub fn coupling(&self) -> SlipMatrix {
        SlipMatrix::from_fn(|a, b| if a == b { 1.0 } else { self.q })
    }
}

/// Material constants plus the slip systems in the sample frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Crystal {
    pub params: MaterialParams,
    pub orientation: Orientation,
    pub systems: Vec<SlipSystem>,
    coupling: SlipMatrix,
}

impl Crystal {
    pub fn new(params: MaterialParams, orientation: Orientation) -> Result<Self> {
        params.validate()?;
        let systems = rotate_and_project(&fcc_slip_systems(), &orientation, &params.elasticity);
        let coupling = params.coupling();
        Ok(Self {
            params,
            orientation,
            systems,
            coupling,
        })
    }

    pub fn coupling(&self) -> &SlipMatrix {
        &self.coupling
    }

    pub fn elasticity(&self) -> &Matrix6<f64> {
        &self.params.elasticity.matrix
    }
}

/// History variables at one material point.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialState {
    /// Plastic Hencky strain, strain-like Voigt.
    pub eps_p: Vector6<f64>,
    /// Slip resistances (Pa).
    pub xi: SlipVector,
    /// Plastic deformation gradient.
    pub fp: Matrix3<f64>,
    /// Slip increments of the last committed step.
    pub dgamma: SlipVector,
}

impl MaterialState {
    pub fn initial(params: &MaterialParams) -> Self {
        Self {
            eps_p: Vector6::zeros(),
            xi: SlipVector::repeat(params.xi0),
            fp: Matrix3::identity(),
            dgamma: SlipVector::zeros(),
        }
    }
}

/// Resolved shear stresses `τ_α = P_α · (ε − ε_p)`.
pub fn resolved_tau(elastic_strain: &Vector6<f64>, systems: &[SlipSystem]) -> SlipVector {
    SlipVector::from_iterator(systems.iter().map(|s| s.projection.dot(elastic_strain)))
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `|r|^p` through `exp(p log|r|)`, with `0^0 = 1`.
fn abs_pow(r: f64, p: f64) -> f64 {
    if r == 0.0 {
        if p == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (p * r.abs().ln()).exp()
    }
}

fn check_resistances(xi: &SlipVector) -> Result<()> {
    match xi.iter().position(|&x| !(x > 0.0)) {
        Some(system) => Err(Error::NonPositiveResistance {
            system,
            value: xi[system],
        }),
        None => Ok(()),
    }
}

/// Flow residual, its Jacobian and the slip increments at one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowEvaluation {
    pub residual: Vector6<f64>,
    pub jacobian: Matrix6<f64>,
    pub dgamma: SlipVector,
    pub tau: SlipVector,
}

/// Backward-Euler flow residual
/// `ε_p − ε_p,old − Δt Σ M_α γ̇₀ |τ_α/ξ_α|ⁿ sgn τ_α` and its `ε_p` Jacobian.
pub fn flow_residual_jacobian(
    eps: &Vector6<f64>,
    eps_p_new: &Vector6<f64>,
    eps_p_old: &Vector6<f64>,
    xi: &SlipVector,
    dt: f64,
    crystal: &Crystal,
) -> Result<FlowEvaluation> {
    check_resistances(xi)?;
    if !(dt >= 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be >= 0, got {dt}")));
    }
    let p = &crystal.params;
    let tau = resolved_tau(&(eps - eps_p_new), &crystal.systems);
    let mut residual = eps_p_new - eps_p_old;
    let mut jacobian = Matrix6::identity();
    let mut dgamma = SlipVector::zeros();
    for (a, s) in crystal.systems.iter().enumerate() {
        let ratio = tau[a] / xi[a];
        if ratio.abs() > RATIO_CAP {
            return Err(Error::RatioOverflow {
                system: a,
                ratio: ratio.abs(),
                cap: RATIO_CAP,
            });
        }
        if dt == 0.0 || ratio == 0.0 {
            continue;
        }
        let rate = dt * p.gamma_dot_0;
        dgamma[a] = rate * abs_pow(ratio, p.n) * sgn(ratio);
        residual -= s.schmid * dgamma[a];
        let coef = rate * p.n / xi[a] * abs_pow(ratio, p.n - 1.0);
        jacobian += coef * s.schmid * s.projection.transpose();
    }
    Ok(FlowEvaluation {
        residual,
        jacobian,
        dgamma,
        tau,
    })
}

/// Newton settings for the flow solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Relative tolerance on the residual norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub eps_p: Vector6<f64>,
    pub dgamma: SlipVector,
    /// Flow Jacobian at the converged point.
    pub jacobian: Matrix6<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Newton iteration on `ε_p` with `ξ` frozen, starting from `ε_p,old`.
///
/// Converged when `‖e_ε‖ ≤ tol · (‖ε‖ + ‖ε_p,old‖)`.
pub fn solve_flow(
    eps: &Vector6<f64>,
    eps_p_old: &Vector6<f64>,
    xi: &SlipVector,
    dt: f64,
    crystal: &Crystal,
    settings: &NewtonSettings,
) -> Result<FlowSolution> {
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidParameter("flow tolerance must be positive".into()));
    }
    let target = settings.tol * (strain_norm(eps) + strain_norm(eps_p_old)).max(1e-16);
    let mut eps_p = *eps_p_old;
    let mut residual_norm = f64::INFINITY;
    for iterations in 0..=settings.max_iter {
        let eval = flow_residual_jacobian(eps, &eps_p, eps_p_old, xi, dt, crystal)?;
        residual_norm = strain_norm(&eval.residual);
        if residual_norm <= target {
            return Ok(FlowSolution {
                eps_p,
                dgamma: eval.dgamma,
                jacobian: eval.jacobian,
                iterations,
                residual_norm,
            });
        }
        if iterations == settings.max_iter {
            break;
        }
        let step = eval
            .jacobian
            .lu()
            .solve(&(-eval.residual))
            .ok_or(Error::Singular("flow Jacobian"))?;
        eps_p += step;
    }
    Err(Error::FlowNotConverged {
        iterations: settings.max_iter,
        residual: residual_norm,
    })
}

fn hardening_system(dgamma: &SlipVector, crystal: &Crystal) -> (SlipMatrix, SlipVector) {
    let p = &crystal.params;
    let h = crystal.coupling();
    let sat = p.saturation();
    let abs_dg = dgamma.abs();
    let matrix = SlipMatrix::from_fn(|a, g| {
        let delta = if a == g { 1.0 } else { 0.0 };
        delta + p.h0 * h[(a, g)] * abs_dg[g] / sat
    });
    let load = p.h0 * (h * abs_dg);
    (matrix, load)
}

/// Implicit saturation hardening solve, linear in `ξ` for given `Δγ`:
/// `(δ_αγ + h₀ h_αγ |Δγ_γ| / ξ∞) ξ_γ = ξ_old,α + h₀ Σ_β h_αβ |Δγ_β|`.
pub fn solve_hardening(xi_old: &SlipVector, dgamma: &SlipVector, crystal: &Crystal) -> Result<SlipVector> {
    let (matrix, load) = hardening_system(dgamma, crystal);
    matrix
        .lu()
        .solve(&(xi_old + load))
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::Singular("hardening system"))
}

/// Hardening residual `e_γ` at `(ξ_new, Δγ)`.
pub fn hardening_residual(
    xi_new: &SlipVector,
    xi_old: &SlipVector,
    dgamma: &SlipVector,
    crystal: &Crystal,
) -> SlipVector {
    let (matrix, load) = hardening_system(dgamma, crystal);
    matrix * xi_new - xi_old - load
}

/// Output of the forward-Euler active-set predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct HardeningPrediction {
    pub dgamma: SlipVector,
    pub active: Vec<usize>,
    /// Set when the active-set system was singular and the estimate zeroed.
    pub singular: bool,
}

/// Rate-independent estimate of `Δγ` from trial resolved stresses.
///
/// Solves `τ*_α − s_α(ξ_α + T_αβ s_β Δγ_β) − (P_α·M_β) Δγ_β = 0` on the set
/// `|τ*_α| ≥ ξ_α`, dropping systems whose increment opposes `τ*`.
pub fn hardening_predictor(xi_old: &SlipVector, tau_trial: &SlipVector, crystal: &Crystal) -> HardeningPrediction {
    let p = &crystal.params;
    let h = crystal.coupling();
    let sat = p.saturation();
    let signs = tau_trial.map(sgn);
    let mut active: Vec<usize> = (0..NUM_SLIP)
        .filter(|&a| tau_trial[a] != 0.0 && tau_trial[a].abs() >= xi_old[a])
        .collect();
    let mut dgamma = SlipVector::zeros();
    for _pass in 0..NUM_SLIP {
        dgamma = SlipVector::zeros();
        if active.is_empty() {
            break;
        }
        let k = active.len();
        let matrix = nalgebra::DMatrix::from_fn(k, k, |i, j| {
            let (a, b) = (active[i], active[j]);
            let t = p.h0 * h[(a, b)] * (1.0 - xi_old[b] / sat);
            signs[a] * t * signs[b]
                + crystal.systems[a]
                    .projection
                    .dot(&crystal.systems[b].schmid)
        });
        let rhs = nalgebra::DVector::from_fn(k, |i, _| {
            let a = active[i];
            tau_trial[a] - signs[a] * xi_old[a]
        });
        let solved = matrix
            .lu()
            .solve(&rhs)
            .filter(|x| x.iter().all(|v| v.is_finite()));
        let Some(solution) = solved else {
            return HardeningPrediction {
                dgamma: SlipVector::zeros(),
                active,
                singular: true,
            };
        };
        for (i, &a) in active.iter().enumerate() {
            dgamma[a] = solution[i];
        }
        let before = active.len();
        active.retain(|&a| tau_trial[a] * dgamma[a] >= 0.0);
        if active.len() == before {
            break;
        }
    }
    // Whatever remains inconsistent after the passes is dropped.
    for a in 0..NUM_SLIP {
        if tau_trial[a] * dgamma[a] < 0.0 || !active.contains(&a) {
            dgamma[a] = 0.0;
        }
    }
    HardeningPrediction {
        dgamma,
        active,
        singular: false,
    }
}

/// Stress and tangent at a converged point.
#[derive(Debug, Clone, PartialEq)]
pub struct StressResponse {
    /// Stress conjugate to the Hencky strain, stress-like Voigt.
    pub sigma: Vector6<f64>,
    /// Second Piola–Kirchhoff stress.
    pub pk2: Vector6<f64>,
    /// Algorithmic `dσ/dε` with `ξ` frozen.
    pub dsigma_deps: Matrix6<f64>,
    /// `dS/dE`.
    pub tangent: Matrix6<f64>,
}

/// `σ = C (ε − ε_p)`, `S = (dε/dE)ᵀ σ`, and the consistent tangent.
///
/// With the flow residual `R(ε_p; ε)`, `∂R/∂ε = I − J`, so
/// `∂ε_p/∂ε = I − J⁻¹` and `dσ/dε = C J⁻¹`.
pub fn stress_and_tangent(
    strain: &StrainState,
    eps_p: &Vector6<f64>,
    xi: &SlipVector,
    dt: f64,
    crystal: &Crystal,
) -> Result<StressResponse> {
    let c = crystal.elasticity();
    let sigma = c * (strain.hencky - eps_p);
    let eval = flow_residual_jacobian(&strain.hencky, eps_p, eps_p, xi, dt, crystal)?;
    let j_inv = eval
        .jacobian
        .try_inverse()
        .ok_or(Error::Singular("flow Jacobian"))?;
    let dsigma_deps = c * j_inv;
    let dsigma_deps = 0.5 * (dsigma_deps + dsigma_deps.transpose());
    let pk2 = conjugate_stress(&sigma, strain);
    let tangent = tangent_transform(&dsigma_deps, &sigma, strain)?;
    Ok(StressResponse {
        sigma,
        pk2,
        dsigma_deps,
        tangent,
    })
}

/// Both boxed residuals of the coupled system evaluated at a committed state.
///
/// The slip increments are recomputed from the flow law at `(ε, ε_p,new, ξ_new)`
/// so that flow and hardening are checked against the same `Δγ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledResiduals {
    pub flow: Vector6<f64>,
    pub hardening: SlipVector,
    pub dgamma: SlipVector,
}

impl CoupledResiduals {
    /// `‖e_ε‖ / ‖ε‖`.
    pub fn flow_relative(&self, eps: &Vector6<f64>) -> f64 {
        strain_norm(&self.flow) / strain_norm(eps).max(f64::MIN_POSITIVE)
    }

    /// `‖e_γ‖ / ‖ξ_old‖`.
    pub fn hardening_relative(&self, xi_old: &SlipVector) -> f64 {
        self.hardening.norm() / xi_old.norm()
    }
}

pub fn coupled_residuals(
    eps: &Vector6<f64>,
    old: &MaterialState,
    new: &MaterialState,
    dt: f64,
    crystal: &Crystal,
) -> Result<CoupledResiduals> {
    let eval = flow_residual_jacobian(eps, &new.eps_p, &old.eps_p, &new.xi, dt, crystal)?;
    let hardening = hardening_residual(&new.xi, &old.xi, &eval.dgamma, crystal);
    Ok(CoupledResiduals {
        flow: eval.residual,
        hardening,
        dgamma: eval.dgamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn crystal() -> Crystal {
        Crystal::new(MaterialParams::aluminum(), Orientation::new(0.25 * PI, 0.0)).unwrap()
    }

    /// Strain whose largest resolved shear stress equals `ratio · ξ0`.
    fn strain_at_ratio(c: &Crystal, ratio: f64) -> Vector6<f64> {
        let dir = Vector6::new(-0.3, -0.2, 1.0, 0.1, 0.05, -0.02);
        let tau = resolved_tau(&dir, &c.systems);
        let max = tau.abs().max();
        dir * (ratio * c.params.xi0 / max)
    }

    #[test]
    fn coupling_matrix_pattern() {
        let h = MaterialParams::aluminum().coupling();
        assert_eq!(h[(3, 3)], 1.0);
        assert_eq!(h[(3, 4)], 1.4);
    }

    #[test]
    fn params_validation() {
        let mut p = MaterialParams::aluminum();
        assert!(p.validate().is_ok());
        p.n = 0.5;
        assert!(p.validate().is_err());
        let mut p = MaterialParams::aluminum();
        p.h0 = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn zero_elastic_strain_zero_tau() {
        let c = crystal();
        let e = Vector6::new(1e-3, 2e-3, -1e-3, 4e-4, 0.0, 1e-4);
        assert_eq!(resolved_tau(&(e - e), &c.systems), SlipVector::zeros());
    }

    #[test]
    fn dt_zero_gives_identity_jacobian() {
        let c = crystal();
        let eps = strain_at_ratio(&c, 1.05);
        let old = Vector6::new(1e-4, -1e-4, 0.0, 0.0, 2e-5, 0.0);
        let new = Vector6::new(2e-4, -1e-4, 0.0, 0.0, 2e-5, 0.0);
        let xi = SlipVector::repeat(31e6);
        let ev = flow_residual_jacobian(&eps, &new, &old, &xi, 0.0, &c).unwrap();
        assert_eq!(ev.residual, new - old);
        assert_eq!(ev.jacobian, Matrix6::identity());
        let sol = solve_flow(&eps, &old, &xi, 0.0, &c, &NewtonSettings::default()).unwrap();
        assert_eq!(sol.eps_p, old);
        assert!(sol.iterations <= 1);
    }

    #[test]
    fn overflow_guard() {
        let c = crystal();
        let eps = strain_at_ratio(&c, 4.5);
        let xi = SlipVector::repeat(31e6);
        let err = flow_residual_jacobian(&eps, &Vector6::zeros(), &Vector6::zeros(), &xi, 1e-3, &c);
        assert!(matches!(err, Err(Error::RatioOverflow { .. })));
    }

    #[test]
    fn elastic_step_has_no_flow() {
        let c = crystal();
        let eps = strain_at_ratio(&c, 0.5);
        let xi = SlipVector::repeat(31e6);
        let sol = solve_flow(&eps, &Vector6::zeros(), &xi, 1e-3, &c, &NewtonSettings::default()).unwrap();
        assert!(sol.eps_p.norm() < 1e-12);
        assert!(sol.dgamma.abs().max() < 1e-9 * 1e-6);
    }

    #[test]
    fn flow_solve_converges_and_is_traceless() {
        let c = crystal();
        let eps = strain_at_ratio(&c, 1.3);
        let xi = SlipVector::repeat(31e6);
        let sol = solve_flow(&eps, &Vector6::zeros(), &xi, 1e-3, &c, &NewtonSettings::default()).unwrap();
        assert!(sol.eps_p.norm() > 0.0);
        assert!((sol.eps_p[0] + sol.eps_p[1] + sol.eps_p[2]).abs() < 1e-10);
        let ev = flow_residual_jacobian(&eps, &sol.eps_p, &Vector6::zeros(), &xi, 1e-3, &c).unwrap();
        assert!(strain_norm(&ev.residual) < 1e-10 * strain_norm(&eps));
        let tau = resolved_tau(&(eps - sol.eps_p), &c.systems);
        for a in 0..NUM_SLIP {
            assert!(tau[a] * sol.dgamma[a] >= 0.0);
        }
    }

    #[test]
    fn hardening_identity_and_scalar_form() {
        let c = crystal();
        let xi = SlipVector::from_fn(|a, _| 31e6 + 1e5 * a as f64);
        assert_eq!(solve_hardening(&xi, &SlipVector::zeros(), &c).unwrap(), xi);

        // Scalar form: (ξ_old + h0|Δγ|) / (1 + h0|Δγ|/ξ∞).
        let (xi_old, h0, sat, dg): (f64, f64, f64, f64) = (31e6, 75e6, 63e6, 1e-3);
        let expected = (xi_old + h0 * dg) / (1.0 + h0 * dg / sat);
        assert!((expected - 3.1038e7).abs() < 1e3);
        // Row 0 only couples to systems with nonzero slip, so q drops out.
        let mut dgamma = SlipVector::zeros();
        dgamma[0] = dg;
        let out = solve_hardening(&SlipVector::repeat(xi_old), &dgamma, &c).unwrap();
        assert!((out[0] - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn predictor_cases() {
        let c = crystal();
        let xi = SlipVector::repeat(31e6);
        let tau = SlipVector::repeat(1e6);
        let pred = hardening_predictor(&xi, &tau, &c);
        assert_eq!(pred.dgamma, SlipVector::zeros());
        assert!(pred.active.is_empty());

        // One active system with T = 0 (ξ_old at saturation).
        let mut xi = SlipVector::repeat(63e6);
        xi[2] = 63e6;
        let mut tau = SlipVector::repeat(1e6);
        tau[2] = -70e6;
        let pred = hardening_predictor(&xi, &tau, &c);
        let pm = c.systems[2].projection.dot(&c.systems[2].schmid);
        let expected = (70e6 - 63e6) * -1.0 / pm;
        assert!((pred.dgamma[2] - expected).abs() < 1e-12 * expected.abs());
        assert!(!pred.singular);
    }

    #[test]
    fn stress_at_zero_plastic_strain_is_elastic() {
        let c = crystal();
        let strain = crate::kinematics::pade_hencky(&Vector6::new(1e-5, -2e-5, 3e-5, 0.0, 1e-5, 0.0)).unwrap();
        let r = stress_and_tangent(&strain, &Vector6::zeros(), &SlipVector::repeat(31e6), 1e-3, &c).unwrap();
        assert!((r.sigma - c.elasticity() * strain.hencky).norm() < 1e-9);
        assert!((r.dsigma_deps - c.elasticity()).norm() < 1e-6);
    }
}
