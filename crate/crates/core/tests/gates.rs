mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

use common::{max_abs, unitary};
use holonomic::gates::{
    cnot, controlled, controlled_phase_spec, cphase, cphase_with_control_phase, decompose, parse_angle, table1,
    GateSpec, TABLE1_LABELS,
};
use holonomic::lambda_model::holonomy_gate;
use holonomic::qmat::{c, distance_up_to_phase, expi, identity, pauli_x, relative_phase, CMatrix};
use holonomic::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

#[test]
fn table_entries() {
    let expect = [
        ("X", (FRAC_PI_2, 0.0, PI)),
        ("Y", (FRAC_PI_2, FRAC_PI_2, PI)),
        ("Z", (0.0, 0.0, PI)),
        ("H", (FRAC_PI_4, 0.0, PI)),
        ("S", (0.0, 0.0, FRAC_PI_6)),
        ("CNOT", (FRAC_PI_2, 0.0, PI)),
    ];
    for (label, (t, p, g)) in expect {
        let spec = table1(label).unwrap();
        assert_eq!((spec.theta0, spec.phi0, spec.gamma_plus), (t, p, g), "{label}");
    }
    let cp = table1("CPHASE(pi)").unwrap();
    assert!((cp.gamma_plus - PI / 3.0).abs() < 1e-15);
    assert_eq!(cp.qubits, 2);
    assert!(matches!(table1("T"), Err(Error::UnknownGate(_))));
    assert!(matches!(table1("CPHASE(abc)"), Err(Error::UnknownGate(_))));
}

#[test]
fn every_table_spec_realizes_its_target() {
    for label in TABLE1_LABELS {
        let spec = if label == "CPHASE" { table1("CPHASE(pi/2)") } else { table1(label) }.unwrap();
        assert!(distance_up_to_phase(&spec.realized(), &spec.target).unwrap() <= 1e-10, "{label}");
        assert!((expi(spec.global_phase) - expi(relative_phase(&spec.target, &spec.realized()))).norm() < 1e-12);
    }
}

#[test]
fn controlled_forms() {
    let x = table1("X").unwrap();
    assert!(distance_up_to_phase(&controlled(&x), &cnot()).unwrap() <= 1e-12);
    let idle = GateSpec::from_parameters("id", 0.4, 0.2, 0.0).unwrap();
    assert!(max_abs(&(controlled(&idle) - identity(4))) < 1e-15);
    let gamma = 0.9;
    let loop_cp = controlled(&GateSpec::from_parameters("cp", 0.0, 0.0, gamma / 3.0).unwrap());
    assert!(max_abs(&(&loop_cp - cphase_with_control_phase(gamma))) < 1e-12);
    let conditional = (loop_cp[(3, 3)] / loop_cp[(2, 2)]).arg();
    assert!((expi(conditional) - expi(gamma)).norm() < 1e-12);
    // the local phase on the control's |1⟩ block is what separates it from CPhase
    assert!(distance_up_to_phase(&loop_cp, &cphase(gamma)).unwrap() > 1e-3);
    let spec = controlled_phase_spec(gamma).unwrap();
    assert!(distance_up_to_phase(&spec.realized(), &spec.target).unwrap() <= 1e-12);
}

#[test]
fn decompose_special_cases() {
    let id = decompose(&identity(2)).unwrap();
    assert_eq!((id.theta0, id.phi0, id.gamma_plus), (0.0, 0.0, 0.0));
    let x = decompose(&pauli_x()).unwrap();
    assert!((x.theta0 - FRAC_PI_2).abs() < 1e-12);
    assert!(x.phi0.abs() < 1e-12);
    assert!(distance_up_to_phase(&holonomy_gate(x.theta0, x.phi0, x.gamma_plus), &pauli_x()).unwrap() <= 1e-12);
    let not_unitary = identity(2) * c(1.5, 0.0);
    assert!(matches!(decompose(&not_unitary), Err(Error::NotUnitary { .. })));
    assert!(matches!(decompose(&identity(3)), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn decompose_fifty_random_unitaries() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(99);
    for _ in 0..50 {
        let h = CMatrix::from_fn(2, 2, |_, _| c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)));
        let u = holonomic::qmat::expm_skew(&(&h + h.adjoint()), 1.0).unwrap();
        let spec = decompose(&u).unwrap();
        let back = holonomy_gate(spec.theta0, spec.phi0, spec.gamma_plus);
        assert!(distance_up_to_phase(&back, &u).unwrap() <= 1e-10);
    }
}

#[test]
fn angle_parsing() {
    assert_eq!(parse_angle("1.5"), Some(1.5));
    assert_eq!(parse_angle("pi"), Some(PI));
    assert_eq!(parse_angle("pi/2"), Some(FRAC_PI_2));
    assert_eq!(parse_angle("-pi/4"), Some(-FRAC_PI_4));
    assert_eq!(parse_angle("2*pi"), Some(2.0 * PI));
    assert_eq!(parse_angle("0.5pi"), Some(0.5 * PI));
    assert_eq!(parse_angle("tau"), None);
    assert_eq!(parse_angle("pi/x"), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn decompose_round_trips(u in unitary(2), a in -4.0f64..4.0) {
        let target = &u * expi(a);
        let spec = decompose(&target).unwrap();
        prop_assert!((0.0..=PI / 3.0 + 1e-12).contains(&spec.gamma_plus));
        prop_assert!((0.0..=PI).contains(&spec.theta0));
        prop_assert!(distance_up_to_phase(&spec.realized(), &target).unwrap() <= 1e-10);
    }

    #[test]
    fn decompose_near_identity(eps in -1e-9f64..1e-9, a in -4.0f64..4.0) {
        let u = holonomic::qmat::expm_skew(&pauli_x(), eps).unwrap() * expi(a);
        let spec = decompose(&u).unwrap();
        prop_assert!(distance_up_to_phase(&spec.realized(), &u).unwrap() <= 1e-10);
    }
}
