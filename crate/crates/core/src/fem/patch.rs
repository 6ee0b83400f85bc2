//! Patch test on a 2×2×2 cube with a distorted interior node.

use nalgebra::{Matrix3, Vector3};

use super::hex8::EasModes;
use super::mesh::{block, boundary_nodes, prescribe_linear, Mesh};
use super::solver::{solve_displacement_control, SolverConfig};
use crate::constitutive::{Crystal, MaterialParams, MaterialState};
use crate::lattice::Orientation;
use crate::stagger::update_point;
use crate::voigt::{strain_norm, stress_norm};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSetup {
    /// Interior node offset as a fraction of the element size.
    pub distortion: f64,
    /// Boundary field `u = A·X`.
    pub grad: Matrix3<f64>,
    pub element_size: f64,
    pub dt: f64,
    pub modes: EasModes,
    pub crystal: Crystal,
    /// Newton tolerance; tighter than the solver default so that the
    /// reported deviations measure the element, not the stopping rule.
    pub rel_tol: f64,
}

impl PatchSetup {
    pub fn new(distortion: f64) -> Self {
        Self {
            distortion,
            grad: Matrix3::new(1e-3, 2e-4, 0.0, 0.0, -5e-4, 3e-4, 1e-4, 0.0, 2e-3),
            element_size: 1.0,
            dt: 1e-3,
            modes: EasModes::default(),
            crystal: Crystal::new(MaterialParams::aluminum(), Orientation::new(0.3, 0.7))
                .expect("tabulated parameters are valid"),
            rel_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchReport {
    /// `max ‖E − E_exact‖ / ‖E_exact‖` over all Gauss points.
    pub strain_deviation: f64,
    /// `max ‖S − S_exact‖ / ‖S_exact‖` over all Gauss points.
    pub stress_deviation: f64,
    pub max_alpha: f64,
    pub newton_iterations: usize,
}

// Fixed oblique unit direction for the interior node offset.
const OFFSET_DIR: [f64; 3] = [0.6, -0.48, 0.64];

pub fn patch_test(distortion: f64) -> Result<PatchReport> {
    run_patch(&PatchSetup::new(distortion))
}

pub fn run_patch(setup: &PatchSetup) -> Result<PatchReport> {
    let h = setup.element_size;
    let mut spec = block(2, 2, 2, Vector3::repeat(2.0 * h));
    let centre = 13;
    spec.nodes[centre] += setup.distortion * h * Vector3::from(OFFSET_DIR);
    let boundary = boundary_nodes(&spec);
    prescribe_linear(&mut spec, &boundary, &setup.grad);

    let initial = MaterialState::initial(&setup.crystal.params);
    let mut mesh = Mesh::build(spec, setup.modes, &initial)?;
    let cfg = SolverConfig {
        dt: setup.dt,
        steps: 1,
        rel_tol: setup.rel_tol,
        abs_tol: 0.0,
        ..SolverConfig::default()
    };
    let history = solve_displacement_control(&mut mesh, &setup.crystal, &cfg)?;

    let f = Matrix3::identity() + setup.grad;
    let exact_green = crate::kinematics::green_lagrange_from_gradient(&setup.grad);
    let exact = update_point(&exact_green, &f, &initial, setup.dt, &setup.crystal, &cfg.relaxation)?;
    let exact_s = exact.response.pk2;

    let mut report = PatchReport {
        strain_deviation: 0.0,
        stress_deviation: 0.0,
        max_alpha: 0.0,
        newton_iterations: history.iter().map(|r| r.iterations).sum(),
    };
    for el in &mesh.elements {
        report.max_alpha = report.max_alpha.max(el.alpha.amax());
        for (e, s) in el.green.iter().zip(&el.pk2) {
            report.strain_deviation = report
                .strain_deviation
                .max(strain_norm(&(e - exact_green)) / strain_norm(&exact_green));
            report.stress_deviation = report.stress_deviation.max(stress_norm(&(s - exact_s)) / stress_norm(&exact_s));
        }
    }
    Ok(report)
}
