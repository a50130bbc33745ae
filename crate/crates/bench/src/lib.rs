//! Fixtures shared by the benchmarks.

use hh_inverse::{add_noise, presets, InverseProblem, NoiseSpec, Observation, ParameterVector};

/// A reference problem, its noisy observation at 1% and an iterate away from the truth.
pub struct Fixture {
    pub problem: InverseProblem,
    pub observation: Observation,
    pub iterate: ParameterVector,
}

fn fixture(s: presets::Setup, truth: ParameterVector, iterate: [f64; 3]) -> Fixture {
    let problem = InverseProblem {
        consts: s.consts,
        conductances: s.conductances,
        exponents: s.exponents,
        grid: s.grid,
    };
    let clean = problem.forward(&truth).expect("reference forward solve");
    let observation = add_noise(
        &s.grid,
        &clean.v,
        &NoiseSpec {
            epsilon: 0.01,
            seed: 1,
        },
    )
    .expect("valid noise");
    Fixture {
        problem,
        observation,
        iterate: ParameterVector::new(truth.kind, iterate),
    }
}

pub fn conductances() -> Fixture {
    let s = presets::conductance_example();
    fixture(
        s,
        ParameterVector::conductances(s.conductances),
        [100.0, 30.0, 0.5],
    )
}

pub fn exponents() -> Fixture {
    let s = presets::exponent_table_example();
    fixture(s, ParameterVector::exponents(s.exponents), [2.5, 0.8, 3.5])
}
