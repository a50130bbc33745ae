mod common;

use common::*;
use hh_inverse::{presets, ParameterKind, ParameterVector};

const TOLERANCE: f64 = 1e-3;

fn check_near_truth(s: presets::Setup, kind: ParameterKind, seed: u64) {
    let p = problem(&s);
    let obs = observe(&s, 0.05, 11);
    for x in iterates_near(&truth_of(&s, kind), seed) {
        let err = gradient_mismatch(&p, &x, &obs, 1e-5);
        assert!(
            err < TOLERANCE,
            "{kind} at {:?}: relative error {err:e}",
            x.values
        );
    }
}

#[test]
fn conductance_gradient_matches_finite_differences() {
    check_near_truth(
        presets::conductance_example(),
        ParameterKind::Conductances,
        1,
    );
}

#[test]
fn exponent_gradient_matches_finite_differences() {
    check_near_truth(presets::exponent_example(), ParameterKind::Exponents, 2);
}

#[test]
fn conductance_gradient_at_zero_guess() {
    let s = presets::conductance_example();
    let p = problem(&s);
    let obs = observe(&s, 0.05, 11);
    let zero = ParameterVector::new(ParameterKind::Conductances, [0.0; 3]);
    assert!(gradient_mismatch(&p, &zero, &obs, 1e-3) < TOLERANCE);
}

#[test]
// The misfit is strongly curved in the exponents near the truth, so the
// difference step has to be small for the truncation error to fall below 1e-3.
fn exponent_gradient_at_truth_with_noisy_data() {
    let s = presets::exponent_example();
    let p = problem(&s);
    let obs = observe(&s, 0.01, 4);
    let x = truth_of(&s, ParameterKind::Exponents);
    let err = gradient_mismatch(&p, &x, &obs, 1e-6);
    assert!(err < TOLERANCE, "{err:e}");
}
