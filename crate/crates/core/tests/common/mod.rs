#![allow(dead_code)]

use hh_inverse::{
    add_noise, presets, InverseProblem, NoiseSpec, Observation, ParameterKind, ParameterVector,
    Trajectory,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn problem(s: &presets::Setup) -> InverseProblem {
    InverseProblem {
        consts: s.consts,
        conductances: s.conductances,
        exponents: s.exponents,
        grid: s.grid,
    }
}

pub fn truth_of(s: &presets::Setup, kind: ParameterKind) -> ParameterVector {
    match kind {
        ParameterKind::Conductances => ParameterVector::conductances(s.conductances),
        ParameterKind::Exponents => ParameterVector::exponents(s.exponents),
    }
}

pub fn clean_trace(s: &presets::Setup) -> Trajectory {
    hh_inverse::solve_forward(&s.consts, &s.conductances, &s.exponents, &s.grid).unwrap()
}

pub fn observe(s: &presets::Setup, epsilon: f64, seed: u64) -> Observation {
    add_noise(&s.grid, &clean_trace(s).v, &NoiseSpec { epsilon, seed }).unwrap()
}

/// Central-difference gradient of `J(x) = ½‖V^δ - F(x)‖²` with relative step `rel_step`.
pub fn fd_gradient(
    p: &InverseProblem,
    x: &ParameterVector,
    obs: &Observation,
    rel_step: f64,
) -> [f64; 3] {
    let mut grad = [0.0; 3];
    for (i, g) in grad.iter_mut().enumerate() {
        let h = rel_step * x.values[i].abs().max(1.0);
        let mut plus = *x;
        let mut minus = *x;
        plus.values[i] += h;
        minus.values[i] -= h;
        *g = (p.misfit(&plus, obs).unwrap() - p.misfit(&minus, obs).unwrap()) / (2.0 * h);
    }
    grad
}

/// Worst componentwise relative error between the adjoint direction `X`
/// and `-∇J` from central differences.
pub fn gradient_mismatch(
    p: &InverseProblem,
    x: &ParameterVector,
    obs: &Observation,
    rel_step: f64,
) -> f64 {
    let (direction, _) = p.landweber_direction(x, obs).unwrap();
    let fd = fd_gradient(p, x, obs, rel_step);
    direction
        .iter()
        .zip(fd)
        .map(|(d, f)| (d + f).abs() / f.abs())
        .fold(0.0, f64::max)
}

/// Five iterates drawn componentwise within ±20% of the truth.
pub fn iterates_near(truth: &ParameterVector, seed: u64) -> Vec<ParameterVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..5)
        .map(|_| {
            let mut x = *truth;
            for v in &mut x.values {
                *v *= 1.0 + rng.random_range(-0.2..=0.2);
            }
            x
        })
        .collect()
}
