//! Synthetic measurements and the error metrics used to judge a run.
//!
//! Norms on `[0, T]` are discrete L² norms computed with the composite
//! trapezoid rule on the uniform grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landweber::ParameterVector;
use crate::model::TimeGrid;

/// Name of the pseudo-random generator recorded in run metadata.
pub const NOISE_GENERATOR: &str = "ChaCha20Rng(rand_chacha 0.9, seed_from_u64)";

/// Composite trapezoid rule for samples spaced `dt` apart.
pub fn trapezoid(dt: f64, values: &[f64]) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => dt * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Discrete L²(0, T) norm of a signal sampled on `grid`.
pub fn l2_norm(grid: &TimeGrid, signal: &[f64]) -> Result<f64> {
    grid.check_len(signal.len())?;
    Ok(l2_norm_unchecked(grid.dt(), signal))
}

#[inline]
pub(crate) fn l2_norm_unchecked(dt: f64, signal: &[f64]) -> f64 {
    let n = signal.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = signal[1..n - 1].iter().map(|x| x * x).sum();
    let ends = 0.5 * (signal[0] * signal[0] + signal[n - 1] * signal[n - 1]);
    (dt * (ends + inner)).sqrt()
}

/// Relative amplitude and seed of multiplicative uniform noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub epsilon: f64,
    pub seed: u64,
}

/// A (possibly noisy) voltage record together with its noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub grid: TimeGrid,
    pub v_delta: Vec<f64>,
    /// Bound on `‖V - V^δ‖` in the unsquared L² norm (mV·ms^½).
    pub delta: f64,
    pub epsilon: f64,
}

impl Observation {
    /// Wraps externally supplied samples; the caller vouches for `delta`.
    pub fn new(grid: TimeGrid, v_delta: Vec<f64>, delta: f64, epsilon: f64) -> Result<Self> {
        grid.check_len(v_delta.len())?;
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "delta must be non-negative, got {delta}"
            )));
        }
        if let Some(bad) = v_delta.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "observation sample {bad} is not finite"
            )));
        }
        Ok(Self {
            grid,
            v_delta,
            delta,
            epsilon,
        })
    }
}

/// Perturbs every sample as `V + V·r` with `r` uniform on `[-ε, ε]`.
///
/// Draws are `r = ε(2u - 1)` with `u` uniform on `[0, 1)` from a ChaCha20
/// stream seeded by `spec.seed`, one draw per node in grid order. Equal
/// seeds therefore give proportional perturbations across noise levels.
/// The returned `delta` is `ε‖V‖`.
pub fn add_noise(grid: &TimeGrid, clean: &[f64], spec: &NoiseSpec) -> Result<Observation> {
    grid.check_len(clean.len())?;
    if !(spec.epsilon.is_finite() && spec.epsilon >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise amplitude must be non-negative, got {}",
            spec.epsilon
        )));
    }
    let v_delta = if spec.epsilon == 0.0 {
        clean.to_vec()
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
        clean
            .iter()
            .map(|&v| {
                let u: f64 = rng.random();
                v + v * (spec.epsilon * (2.0 * u - 1.0))
            })
            .collect()
    };
    Ok(Observation {
        grid: *grid,
        v_delta,
        delta: spec.epsilon * l2_norm_unchecked(grid.dt(), clean),
        epsilon: spec.epsilon,
    })
}

/// `‖V^δ - V_sim‖` on the observation grid.
pub fn residual_norm(observation: &Observation, simulated: &[f64]) -> Result<f64> {
    observation.grid.check_len(simulated.len())?;
    let diff: Vec<f64> = observation
        .v_delta
        .iter()
        .zip(simulated)
        .map(|(d, s)| d - s)
        .collect();
    Ok(l2_norm_unchecked(observation.grid.dt(), &diff))
}

/// `100 · ‖truth - iterate‖ / ‖truth‖` with Euclidean norms on ℝ³.
pub fn percent_error(truth: &ParameterVector, iterate: &ParameterVector) -> Result<f64> {
    if truth.kind != iterate.kind {
        return Err(Error::KindMismatch {
            expected: truth.kind.name(),
            actual: iterate.kind.name(),
        });
    }
    let norm = euclid(truth.values);
    if norm == 0.0 {
        return Err(Error::Domain(
            "percent error is undefined for a zero truth vector".into(),
        ));
    }
    let diff = [
        truth.values[0] - iterate.values[0],
        truth.values[1] - iterate.values[1],
        truth.values[2] - iterate.values[2],
    ];
    Ok(100.0 * euclid(diff) / norm)
}

pub(crate) fn euclid(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}
