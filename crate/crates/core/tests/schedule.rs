use std::f64::consts::{FRAC_PI_2, PI, TAU};

use holonomic::adiabatic::transition_operator;
use holonomic::lambda_model::{accumulate_phases, holonomy_gate, EigenLabel, IDX_0};
use holonomic::propagate::{propagator_between, LambdaDrive};
use holonomic::qmat::{distance_up_to_phase, hs_norm, identity};
use holonomic::schedule::{
    audit, flipped_pairs, plan_single_qubit, plan_two_qubit, wrap_to_pi, DriveMode, PlanConfig, RampTiming, Schedule,
    Segment, SegmentTag, Violation,
};
use holonomic::Error;
use proptest::prelude::*;

const OMEGA: f64 = TAU * 1e7;

fn single(theta0: f64, phi0: f64, gamma: f64) -> Schedule {
    plan_single_qubit(theta0, phi0, gamma, &PlanConfig::single_qubit_default()).unwrap()
}

fn two_qubit_config() -> PlanConfig {
    PlanConfig::two_qubit_default(OMEGA, 38.0 * OMEGA)
}

#[test]
fn sigma_x_plan_audits_clean_with_requested_phase() {
    let plan = single(FRAC_PI_2, 0.0, PI);
    let report = audit(&plan);
    assert!(report.is_clean(), "{:?}", report.violations);
    assert!((report.gamma_plus - PI).abs() < 1e-9);
    assert!(report.area_mod_2pi.abs() < 1e-9);
    assert_eq!(plan.n_per_step, Some([5; 5]));
    assert_eq!(plan.pulse_plan().iter().filter(|p| p.step == 2).count(), 5);
}

#[test]
fn step_areas_follow_flip_rules() {
    let report = audit(&single(FRAC_PI_2, 0.0, PI));
    assert!((report.step_areas[&1] - 5.0 * PI).abs() < 1e-9);
    assert!((report.step_areas[&2] - 5.0 * FRAC_PI_2).abs() < 1e-9);
    assert!((report.step_areas[&3] - 5.0 * PI).abs() < 1e-9);
    use EigenLabel::*;
    assert_eq!(flipped_pairs(PI), vec![(Plus, Dark), (Minus, Dark)]);
    assert_eq!(flipped_pairs(FRAC_PI_2), vec![(Plus, Minus)]);
    assert!(flipped_pairs(TAU).is_empty());
}

#[test]
fn audit_flags_open_area() {
    let s = Schedule::new(vec![Segment::pulse(PI / OMEGA, OMEGA, 0.5, 0.0, 1)], DriveMode::Burst);
    let report = audit(&s);
    assert!(report.violations.iter().any(|v| matches!(v, Violation::AreaNotClosed { .. })));
}

#[test]
fn audit_flags_discontinuity() {
    let s = Schedule::new(
        vec![
            Segment::ramp(1e-8, (0.0, 1.0), (0.0, 0.0), 1),
            Segment::ramp(1e-8, (1.2, 0.0), (0.0, 0.0), 1),
        ],
        DriveMode::Burst,
    );
    assert!(audit(&s)
        .violations
        .iter()
        .any(|v| matches!(v, Violation::Discontinuity { index: 1, .. })));
}

#[test]
fn audit_flags_structural_problems() {
    assert!(audit(&Schedule::new(vec![], DriveMode::Burst))
        .violations
        .contains(&Violation::Empty));
    let driven_ramp = Schedule::new(
        vec![Segment {
            omega: OMEGA,
            ..Segment::ramp(TAU / OMEGA, (0.0, 0.0), (0.0, 1.0), 4)
        }],
        DriveMode::Burst,
    );
    assert!(audit(&driven_ramp).violations.contains(&Violation::DrivenRamp { index: 0 }));
    let moving_pulse = Schedule::new(
        vec![Segment {
            theta_end: 0.3,
            ..Segment::pulse(TAU / OMEGA, OMEGA, 0.0, 0.0, 1)
        }],
        DriveMode::Burst,
    );
    assert!(audit(&moving_pulse).violations.contains(&Violation::PulseMovesAngles { index: 0 }));
}

#[test]
fn trivial_phase_gives_identity_loop() {
    let plan = single(1.1, 0.4, 0.0);
    assert!(audit(&plan).is_clean());
    let u = propagator_between(&plan, &LambdaDrive, 0.0, plan.duration(), plan.duration() / 2048.0).unwrap();
    let block = u.view((IDX_0, IDX_0), (2, 2)).into_owned();
    assert!(distance_up_to_phase(&block, &identity(2)).unwrap() < 1e-9);
}

#[test]
fn south_pole_start_skips_step_one() {
    let plan = single(PI, 0.0, 0.5);
    assert!(plan.segments().iter().all(|s| s.step != 1));
    assert!(audit(&plan).is_clean());
}

#[test]
fn two_qubit_programs() {
    let cfg = two_qubit_config();
    let cnot = plan_two_qubit(FRAC_PI_2, 0.0, PI, &cfg).unwrap();
    assert!(audit(&cnot).is_clean());
    assert!(cnot.segments().iter().all(|s| s.step != 4));
    assert_eq!(cnot.gate.as_ref().unwrap().qubits, 2);
    assert_eq!(cnot.pulse_plan().iter().filter(|p| p.step == 1).count(), 3);
    assert_eq!(cnot.pulse_plan().iter().filter(|p| p.step == 2).count(), 5);

    let gamma = 1.3;
    let cp = plan_two_qubit(0.0, 0.0, gamma / 3.0, &cfg).unwrap();
    let report = audit(&cp);
    assert!(report.is_clean());
    assert!((report.gamma_plus - gamma / 3.0).abs() < 1e-9);

    let idle = plan_two_qubit(0.7, 0.2, 0.0, &cfg).unwrap();
    assert!(audit(&idle).is_clean());
    assert!(accumulate_phases(&idle, idle.duration()).unwrap().gamma_plus().abs() < 1e-12);
}

#[test]
fn two_qubit_ramps_are_whole_detuning_periods() {
    let cfg = two_qubit_config();
    let period = cfg.gap_quantum.unwrap();
    let plan = plan_two_qubit(FRAC_PI_2, 0.0, PI, &cfg).unwrap();
    for s in plan.segments().iter().filter(|s| s.tag == SegmentTag::Ramp) {
        let cycles = s.duration / period;
        assert!((cycles - cycles.round()).abs() < 1e-9 && cycles >= 1.0, "{cycles}");
    }
}

#[test]
fn omitting_step_four_leaves_phases_unchanged() {
    let cfg = PlanConfig::single_qubit_default();
    for (t0, p0, g) in [(FRAC_PI_2, 0.0, PI), (0.9, 0.3, 0.4), (2.0, -1.0, 1.7)] {
        let with = plan_single_qubit(t0, p0, g, &cfg).unwrap();
        let without = plan_two_qubit(t0, p0, g, &cfg).unwrap();
        let a = accumulate_phases(&with, with.duration()).unwrap();
        let b = accumulate_phases(&without, without.duration()).unwrap();
        assert_eq!(a.gamma, b.gamma);
        for k in 0..3 {
            assert!(wrap_to_pi(a.alpha[k] - b.alpha[k]).abs() < 1e-9);
        }
    }
}

#[test]
fn invalid_plans_are_rejected() {
    let cfg = PlanConfig::single_qubit_default();
    assert!(matches!(plan_single_qubit(4.0, 0.0, 1.0, &cfg), Err(Error::InvalidParameter { .. })));
    assert!(matches!(plan_single_qubit(1.0, f64::NAN, 1.0, &cfg), Err(Error::InvalidParameter { .. })));
    let zero_n = PlanConfig {
        n_per_step: [5, 0, 5, 1, 5],
        ..cfg.clone()
    };
    assert!(matches!(plan_single_qubit(1.0, 0.0, 1.0, &zero_n), Err(Error::InvalidParameter { .. })));
    let bad_ramp = PlanConfig {
        ramp: RampTiming::Rate(0.0),
        ..cfg
    };
    assert!(plan_single_qubit(1.0, 0.0, 1.0, &bad_ramp).is_err());
}

#[test]
fn schedule_text_rejects_malformed_lines() {
    let bad = "drive burst\n1e-9 0 0 1 0 0 ramp\n";
    assert!(matches!(Schedule::from_text(bad), Err(Error::ScheduleParse { line: 2, .. })));
    let tag = "1e-9 0 0 1 0 0 wiggle 1\n";
    assert!(matches!(Schedule::from_text(tag), Err(Error::ScheduleParse { line: 1, .. })));
    let number = "# comment\n\n1e-9 x 0 1 0 0 ramp 1\n";
    assert!(matches!(Schedule::from_text(number), Err(Error::ScheduleParse { line: 3, .. })));
}

#[test]
fn rescaling_keeps_shape() {
    let plan = single(0.8, 0.1, 0.6);
    let stretched = plan.rescaled(3.0 * plan.duration()).unwrap();
    assert!((stretched.duration() - 3.0 * plan.duration()).abs() < 1e-20);
    assert_eq!(stretched.segments().len(), plan.segments().len());
    assert!(plan.rescaled(0.0).is_err());
}

fn config() -> impl Strategy<Value = PlanConfig> {
    (1usize..=6, 1usize..=6, 1usize..=6, prop::bool::ANY, 5e-9f64..5e-8).prop_map(|(a, b, c, cont, ramp)| PlanConfig {
        n_per_step: [a, b, c, 1, a],
        ramp: RampTiming::StepDuration(ramp),
        drive: if cont { DriveMode::Continuous } else { DriveMode::Burst },
        ..PlanConfig::single_qubit_default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_plan_audits_clean(
        theta in 0.0f64..=PI, phi in -4.0f64..4.0, g in -3.0f64..3.0, cfg in config(), two in prop::bool::ANY,
    ) {
        let plan = if two {
            plan_two_qubit(theta, phi, g, &cfg).unwrap()
        } else {
            plan_single_qubit(theta, phi, g, &cfg).unwrap()
        };
        let report = audit(&plan);
        prop_assert!(report.is_clean(), "{:?}", report.violations);
        prop_assert!((report.gamma_plus - g).abs() <= 1e-9);
        let (first, last) = (plan.initial_control().unwrap(), plan.final_control().unwrap());
        prop_assert!((first.theta - last.theta).abs() <= 1e-12);
    }

    #[test]
    fn instantaneous_flips_cancel_transitions(theta in 0.0f64..=PI, phi in -4.0f64..4.0, g in -3.0f64..3.0) {
        let plan = single(theta, phi, g);
        let (reduced, flips) = plan.instantaneous_flip_model();
        let u = transition_operator(&reduced, &flips).unwrap();
        prop_assert!(hs_norm(&(u - identity(3))) <= 1e-12);
    }

    #[test]
    fn text_form_round_trips_exactly(theta in 0.0f64..=PI, phi in -4.0f64..4.0, g in -3.0f64..3.0, cfg in config()) {
        let plan = plan_single_qubit(theta, phi, g, &cfg).unwrap();
        let text = plan.to_text();
        let back = Schedule::from_text(&text).unwrap();
        prop_assert_eq!(back.segments(), plan.segments());
        prop_assert_eq!(back.drive, plan.drive);
        prop_assert_eq!(back.n_per_step, plan.n_per_step);
        prop_assert_eq!(back.to_text(), text);
    }
}

#[test]
fn planned_holonomy_matches_closed_form_for_default_loops() {
    for (t0, p0, g) in [(0.3, 1.1, 0.7), (2.5, -0.4, 2.0)] {
        let plan = single(t0, p0, g);
        let u = propagator_between(&plan, &LambdaDrive, 0.0, plan.duration(), plan.duration() / 4096.0).unwrap();
        let block = u.view((IDX_0, IDX_0), (2, 2)).into_owned();
        assert!(distance_up_to_phase(&block, &holonomy_gate(t0, p0, g)).unwrap() < 1e-6);
    }
}
