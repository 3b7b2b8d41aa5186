mod common;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use common::{max_abs, unitary};
use holonomic::gates::table1;
use holonomic::lambda_model::{hamiltonian, ControlPoint};
use holonomic::propagate::{evolve, gate_error, EvolveOptions};
use holonomic::qmat::{basis, c, eigh, expi, hermitian_deviation, CMatrix};
use holonomic::rydberg::{
    closed_form_effective, effective_lambda, full_hamiltonian, james_effective, map_controls, oscillating_terms,
    secular_effective, v12_condition, OscillatingTerm, RydbergFullDrive, RydbergParams, V12Mode, IDX_00, IDX_01,
    IDX_0R, IDX_10, IDX_11, IDX_1R, IDX_R0, IDX_R1, IDX_RR,
};
use holonomic::schedule::{plan_two_qubit, PlanConfig};
use holonomic::Error;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn reference_params() -> RydbergParams {
    let mut p = RydbergParams {
        omega11: C64::from(1.0),
        omega20: C64::from(0.5),
        omega21: C64::from(-0.5),
        delta: 38.0,
        v12: 0.0,
    };
    p.v12 = v12_condition(&p).unwrap();
    p
}

#[test]
fn full_hamiltonian_at_zero_matches_hand_assembly() {
    let p = reference_params();
    let h = full_hamiltonian(&p, 0.0);
    let mut oracle = CMatrix::zeros(9, 9);
    let mut link = |a: usize, b: usize, v: f64| {
        oracle[(a, b)] += c(v, 0.0);
        oracle[(b, a)] += c(v, 0.0);
    };
    // at t = 0 each factor (e^{∓iΔt} + e^{±iΔt}) or (e^{iΔt} + e^{3iΔt}) equals 2
    for (a, b, v) in [
        (IDX_R0, IDX_10, 1.0),
        (IDX_R1, IDX_11, 1.0),
        (IDX_0R, IDX_00, 0.5),
        (IDX_1R, IDX_10, 0.5),
        (IDX_0R, IDX_01, -0.5),
        (IDX_1R, IDX_11, -0.5),
        (IDX_RR, IDX_1R, 1.0),
        (IDX_RR, IDX_R0, 0.5),
        (IDX_RR, IDX_R1, -0.5),
    ] {
        link(a, b, 2.0 * v);
    }
    oracle[(IDX_RR, IDX_RR)] = c(p.v12 - 2.0 * p.delta, 0.0);
    assert!(max_abs(&(h - oracle)) < 1e-14);
}

#[test]
fn undriven_full_hamiltonian_is_rr_shift() {
    let p = RydbergParams {
        omega11: C64::from(0.0),
        omega20: C64::from(0.0),
        omega21: C64::from(0.0),
        delta: 5.0,
        v12: 3.0,
    };
    let h = full_hamiltonian(&p, 0.7);
    let mut expect = CMatrix::zeros(9, 9);
    expect[(IDX_RR, IDX_RR)] = c(-7.0, 0.0);
    assert_eq!(h, expect);
    assert_eq!(v12_condition(&RydbergParams { v12: 0.0, ..p }).unwrap(), 10.0);
}

#[test]
fn v12_at_simulation_defaults() {
    let o11 = TAU * 1e7;
    let delta = 38.0 * o11;
    let omega_eff = 2.0 * o11 * o11 / delta;
    for (theta, phi) in [(0.0, 0.0), (FRAC_PI_2, 0.3), (PI, 2.0)] {
        let p = RydbergParams::from_controls(omega_eff, theta, phi, delta).unwrap();
        assert!((p.omega11.norm() - o11).abs() < 1e-6 * o11);
        let expect = 2.0 * delta - 8.0 * o11 * o11 / (3.0 * delta);
        assert!((p.v12 - expect).abs() < 1e-9 * delta);
    }
}

#[test]
fn control_mapping() {
    let (o11, o20, o21) = map_controls(2.0, 0.0, 1.3, 40.0).unwrap();
    assert!((o11 - C64::from(40.0f64.sqrt())).norm() < 1e-12);
    assert_eq!(o20.norm(), 0.0);
    assert!((o21 + o11).norm() < 1e-12);
    assert!(matches!(map_controls(1.0, 0.0, 0.0, 0.0), Err(Error::InvalidParameter { .. })));
    let p = RydbergParams::from_controls(1.0, 0.0, 0.0, 1.0).unwrap();
    assert_eq!(p.validity_warnings().len(), 2);
    assert!(reference_params().validity_warnings().is_empty());
}

#[test]
fn single_term_is_static_commutator() {
    let p = reference_params();
    let term = oscillating_terms(&p)[0].clone();
    let james = james_effective(std::slice::from_ref(&term)).unwrap();
    let expect = (term.h.adjoint() * &term.h - &term.h * term.h.adjoint()) * c(1.0 / term.omega, 0.0);
    assert!(max_abs(&(james.at(0.0) - &expect)) < 1e-14);
    assert!(max_abs(&(james.at(1.7) - &expect)) < 1e-14);
    assert_eq!(james.cross_amplitude(), 0.0);
}

#[test]
fn james_rejects_bad_terms() {
    let h = CMatrix::identity(2, 2);
    let dup = [
        OscillatingTerm { h: h.clone(), omega: 1.0 },
        OscillatingTerm { h: h.clone(), omega: 1.0 },
    ];
    assert!(matches!(james_effective(&dup), Err(Error::DuplicateFrequency(_))));
    assert!(james_effective(&[OscillatingTerm { h, omega: 0.0 }]).is_err());
    assert!(james_effective(&[]).is_err());
}

#[test]
fn reference_pair_reproduces_closed_form() {
    let p = reference_params();
    let secular = secular_effective(&p).unwrap();
    assert!(max_abs(&(&secular - closed_form_effective(&p))) <= 1e-12);
    assert!(secular[(IDX_RR, IDX_RR)].norm() <= 1e-12);
    assert!((secular[(IDX_RR, IDX_10)] - p.omega11 * p.omega20 * (2.0 / p.delta)).norm() <= 1e-12);
}

#[test]
fn effective_lambda_spectrum() {
    let o11 = 1.0;
    let delta = 38.0;
    let omega_eff = 2.0 * o11 * o11 / delta;
    let p = RydbergParams::from_controls(omega_eff, 1.0, 0.4, delta).unwrap();
    let (mut e, _) = eigh(&effective_lambda(&p));
    e.sort_by(f64::total_cmp);
    assert!((e[0] + omega_eff).abs() < 1e-12 && e[1].abs() < 1e-12 && (e[2] - omega_eff).abs() < 1e-12);
    let pure = RydbergParams::from_controls(omega_eff, 0.0, 0.0, delta).unwrap();
    let h = effective_lambda(&pure);
    assert_eq!(h[(0, 1)].norm(), 0.0);
    assert!(h[(0, 2)].norm() > 0.0);
}

#[test]
fn controlled_structure_in_full_model() {
    let o11 = TAU * 1e7;
    let delta = 38.0 * o11;
    let spec = table1("CNOT").unwrap();
    let plan = plan_two_qubit(spec.theta0, spec.phi0, spec.gamma_plus, &PlanConfig::two_qubit_default(o11, delta))
        .unwrap();
    let drive = RydbergFullDrive::new(delta, V12Mode::Envelope).unwrap();
    let r = evolve(&plan, &drive, &EvolveOptions::default()).unwrap();
    for k in [IDX_00, IDX_01] {
        let out = &r.final_unitary * basis(9, k);
        let kept = out[k].norm_sqr();
        assert!(1.0 - kept <= 1e-2, "state {k}: population {kept}");
        let err = gate_error(&r.final_unitary, &CMatrix::identity(1, 1), &[k]).unwrap();
        assert!(err.leakage <= 1e-2 && err.error <= 1e-2);
    }
    assert!(matches!(RydbergFullDrive::new(-1.0, V12Mode::Envelope), Err(Error::InvalidParameter { .. })));
}

fn params() -> impl Strategy<Value = RydbergParams> {
    (0.1f64..1.5, 0.0f64..=PI, -PI..PI, 10.0f64..60.0).prop_map(|(o11, theta, phi, delta)| {
        let omega_eff = 2.0 * o11 * o11 / delta;
        RydbergParams::from_controls(omega_eff, theta, phi, delta).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_hamiltonian_is_hermitian(p in params(), t in -10.0f64..10.0) {
        prop_assert!(hermitian_deviation(&full_hamiltonian(&p, t)) <= 1e-12);
    }

    #[test]
    fn james_output_is_hermitian_and_tuned(p in params(), t in -10.0f64..10.0) {
        let james = james_effective(&oscillating_terms(&p)).unwrap();
        prop_assert!(hermitian_deviation(&james.at(t)) <= 1e-12);
        let secular = secular_effective(&p).unwrap();
        prop_assert!(secular[(IDX_RR, IDX_RR)].norm() <= 1e-12);
        prop_assert!(max_abs(&(secular - closed_form_effective(&p))) <= 1e-12);
    }

    #[test]
    fn mapping_round_trips_to_lambda(omega_eff in 0.0f64..3.0, theta in 0.0f64..=PI, phi in -4.0f64..4.0, delta in 1.0f64..100.0) {
        let p = RydbergParams::from_controls(omega_eff, theta, phi, delta).unwrap();
        let lambda = hamiltonian(&ControlPoint::new(omega_eff, theta, phi).unwrap());
        prop_assert!(max_abs(&(effective_lambda(&p) - lambda)) <= 1e-12);
    }

    #[test]
    fn commuting_terms_have_no_cross_terms(basis_u in unitary(4), z in prop::collection::vec(-2.0f64..2.0, 16)) {
        let diag = |k: usize| CMatrix::from_diagonal(&nalgebra::DVector::from_fn(4, |i, _| c(z[4 * k + 2 * i % 4], z[4 * k + (2 * i + 1) % 4]) * expi(i as f64)));
        let h1 = &basis_u * diag(0) * basis_u.adjoint();
        let h2 = &basis_u * diag(2) * basis_u.adjoint();
        let james = james_effective(&[OscillatingTerm { h: h1, omega: 1.0 }, OscillatingTerm { h: h2, omega: 3.0 }]).unwrap();
        prop_assert!(james.cross_amplitude() <= 1e-12);
    }
}
