use std::f64::consts::PI;

use crystal_core::constitutive::{coupled_residuals, Crystal, MaterialParams, MaterialState};
use crystal_core::kinematics::{green_lagrange, pade_hencky};
use crystal_core::lattice::Orientation;
use crystal_core::stagger::{naive_integrate, relax_integrate, RelaxationConfig};
use nalgebra::{Matrix3, Vector6};

fn crystal() -> Crystal {
    Crystal::new(MaterialParams::aluminum(), Orientation::new(0.25 * PI, 0.0)).unwrap()
}

fn compression(t: f64, rate: f64) -> (Matrix3<f64>, Vector6<f64>) {
    let mut f = Matrix3::identity();
    f[(2, 2)] = 1.0 - rate * t;
    (f, pade_hencky(&green_lagrange(&f)).unwrap().hencky)
}

/// Relaxed state after `steps` steps of uniaxial compression.
fn loaded_state(c: &Crystal, dt: f64, steps: usize) -> MaterialState {
    let cfg = RelaxationConfig::default();
    let mut state = MaterialState::initial(&c.params);
    for k in 1..=steps {
        let (f, eps) = compression(k as f64 * dt, 0.3);
        state = relax_integrate(&eps, &f, &state, dt, c, &cfg).unwrap().0;
    }
    state
}

#[test]
fn elastic_step_converges_in_one_substep() {
    let c = crystal();
    let (f, eps) = compression(1e-3, 1e-3);
    let old = MaterialState::initial(&c.params);
    let (state, trace) = relax_integrate(&eps, &f, &old, 1e-3, &c, &RelaxationConfig::default()).unwrap();
    assert!(trace.converged);
    assert_eq!(trace.substeps, 1);
    assert!(state.eps_p.norm() < 1e-12);
}

#[test]
fn relaxed_fixed_point_satisfies_both_residuals() {
    let c = crystal();
    let dt = 0.0075;
    let cfg = RelaxationConfig {
        eps_rel: 1e-10,
        abs_floor: 0.0,
        ..RelaxationConfig::default()
    };
    let mut state = MaterialState::initial(&c.params);
    let mut plastic = 0;
    for k in 1..=30 {
        let (f, eps) = compression(k as f64 * dt, 0.3);
        let (new, trace) = relax_integrate(&eps, &f, &state, dt, &c, &cfg).unwrap();
        let res = coupled_residuals(&eps, &state, &new, dt, &c).unwrap();
        assert!(res.flow_relative(&eps) < 1e-8, "step {k}");
        assert!(res.hardening_relative(&state.xi) < 1e-8, "step {k}");
        for w in &trace.omegas {
            assert!((0.05..=1.95).contains(w));
        }
        if trace.substeps > 1 {
            plastic += 1;
        }
        state = new;
    }
    assert!(plastic > 10, "path should be plastic, got {plastic} relaxed steps");
}

#[test]
fn many_naive_passes_approach_the_relaxed_state() {
    let c = crystal();
    let dt = 0.0075;
    let old = loaded_state(&c, dt, 10);
    let (f, eps) = compression(11.0 * dt, 0.3);
    let cfg = RelaxationConfig {
        eps_rel: 1e-12,
        abs_floor: 0.0,
        ..RelaxationConfig::default()
    };
    let relaxed = relax_integrate(&eps, &f, &old, dt, &c, &cfg).unwrap().0;
    let naive2 = naive_integrate(&eps, &f, &old, dt, &c, 2, &cfg.newton).unwrap();
    let naive100 = naive_integrate(&eps, &f, &old, dt, &c, 100, &cfg.newton).unwrap();
    let dev = |s: &MaterialState| (s.xi - relaxed.xi).norm() / relaxed.xi.norm();
    assert!(dev(&naive100) < 1e-6, "{}", dev(&naive100));
    assert!(dev(&naive2) > dev(&naive100));
}

#[test]
fn naive_two_pass_leaves_a_larger_hardening_residual() {
    let c = crystal();
    let dt = 0.0075;
    let old = loaded_state(&c, dt, 10);
    let (f, eps) = compression(11.0 * dt, 0.3);
    let cfg = RelaxationConfig::default();
    let relaxed = relax_integrate(&eps, &f, &old, dt, &c, &cfg).unwrap().0;
    let naive = naive_integrate(&eps, &f, &old, dt, &c, 2, &cfg.newton).unwrap();
    let r = |s: &MaterialState| {
        coupled_residuals(&eps, &old, s, dt, &c)
            .unwrap()
            .hardening_relative(&old.xi)
    };
    assert!(r(&naive) > 10.0 * r(&relaxed), "naive {} relax {}", r(&naive), r(&relaxed));
}

#[test]
fn relaxation_is_deterministic() {
    let c = crystal();
    let a = loaded_state(&c, 0.0075, 20);
    let b = loaded_state(&c, 0.0075, 20);
    assert_eq!(a, b);
}

#[test]
fn predictor_does_not_change_the_fixed_point() {
    let c = crystal();
    let dt = 0.0075;
    let old = loaded_state(&c, dt, 10);
    let (f, eps) = compression(11.0 * dt, 0.3);
    let tight = RelaxationConfig {
        eps_rel: 1e-12,
        abs_floor: 0.0,
        ..RelaxationConfig::default()
    };
    let without = relax_integrate(&eps, &f, &old, dt, &c, &tight).unwrap().0;
    let predicted = RelaxationConfig {
        use_predictor: true,
        ..tight
    };
    let with = relax_integrate(&eps, &f, &old, dt, &c, &predicted).unwrap().0;
    assert!((with.xi - without.xi).norm() < 1e-9 * with.xi.norm());
}

#[test]
fn substep_budget_is_enforced() {
    let c = crystal();
    let dt = 0.0075;
    let old = loaded_state(&c, dt, 10);
    let (f, eps) = compression(11.0 * dt, 0.3);
    let cfg = RelaxationConfig {
        max_substeps: 2,
        eps_rel: 1e-14,
        abs_floor: 0.0,
        ..RelaxationConfig::default()
    };
    let err = relax_integrate(&eps, &f, &old, dt, &c, &cfg).unwrap_err();
    assert!(err.to_string().contains("did not converge"), "{err}");
}
