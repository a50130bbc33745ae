//! Voltage-dependent opening and closing rates of the three gating variables.
//!
//! All potentials are in mV relative to rest and all rates in 1/ms. The
//! sodium activation and potassium activation rates contain the function
//! `x / (e^x - 1)`, which has a removable singularity at `x = 0`
//! (V = 25 mV for `m`, V = 10 mV for `n`). Near that point both the
//! function and its derivative are evaluated from their Taylor series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this |x| the series expansions of `x / (e^x - 1)` are used.
const SERIES_THRESHOLD: f64 = 1e-4;

/// A gating variable of the squid-axon membrane model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    /// Sodium activation.
    M,
    /// Potassium activation.
    N,
    /// Sodium inactivation.
    H,
}

impl Gate {
    pub const ALL: [Gate; 3] = [Gate::M, Gate::N, Gate::H];

    /// Opening rate α(V).
    #[inline]
    pub fn alpha(self, v: f64) -> f64 {
        match self {
            Gate::M => exprel_inv((25.0 - v) / 10.0),
            Gate::N => 0.1 * exprel_inv((10.0 - v) / 10.0),
            Gate::H => 0.07 * (-v / 20.0).exp(),
        }
    }

    /// Closing rate β(V).
    #[inline]
    pub fn beta(self, v: f64) -> f64 {
        match self {
            Gate::M => 4.0 * (-v / 18.0).exp(),
            Gate::N => 0.125 * (-v / 80.0).exp(),
            Gate::H => logistic((v - 30.0) / 10.0),
        }
    }

    /// dα/dV.
    #[inline]
    pub fn alpha_prime(self, v: f64) -> f64 {
        match self {
            Gate::M => -0.1 * exprel_inv_prime((25.0 - v) / 10.0),
            Gate::N => -0.01 * exprel_inv_prime((10.0 - v) / 10.0),
            Gate::H => -0.0035 * (-v / 20.0).exp(),
        }
    }

    /// dβ/dV.
    #[inline]
    pub fn beta_prime(self, v: f64) -> f64 {
        match self {
            Gate::M => -(4.0 / 18.0) * (-v / 18.0).exp(),
            Gate::N => -(0.125 / 80.0) * (-v / 80.0).exp(),
            Gate::H => {
                let s = logistic((v - 30.0) / 10.0);
                0.1 * s * (1.0 - s)
            }
        }
    }

    /// Rates and their voltage derivatives, sharing the exponentials.
    #[inline]
    pub fn kinetics(self, v: f64) -> Kinetics {
        match self {
            Gate::M => {
                let (f, df) = exprel_inv_with_prime((25.0 - v) / 10.0);
                let beta = 4.0 * (-v / 18.0).exp();
                Kinetics {
                    alpha: f,
                    beta,
                    alpha_prime: -0.1 * df,
                    beta_prime: -beta / 18.0,
                }
            }
            Gate::N => {
                let (f, df) = exprel_inv_with_prime((10.0 - v) / 10.0);
                let beta = 0.125 * (-v / 80.0).exp();
                Kinetics {
                    alpha: 0.1 * f,
                    beta,
                    alpha_prime: -0.01 * df,
                    beta_prime: -beta / 80.0,
                }
            }
            Gate::H => {
                let alpha = 0.07 * (-v / 20.0).exp();
                let beta = logistic((v - 30.0) / 10.0);
                Kinetics {
                    alpha,
                    beta,
                    alpha_prime: -alpha / 20.0,
                    beta_prime: 0.1 * beta * (1.0 - beta),
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::M => "m",
            Gate::N => "n",
            Gate::H => "h",
        }
    }
}

/// α, β and their derivatives at one voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinetics {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_prime: f64,
    pub beta_prime: f64,
}

impl Kinetics {
    /// Relaxation rate α + β of the linearised gate equation.
    #[inline]
    pub fn relaxation(&self) -> f64 {
        self.alpha + self.beta
    }

    /// ∂/∂V of `α(V)(1 - x) - β(V)x`.
    #[inline]
    pub fn voltage_sensitivity(&self, x: f64) -> f64 {
        (1.0 - x) * self.alpha_prime - x * self.beta_prime
    }
}

/// `x / (e^x - 1)`, continuous through `x = 0`.
#[inline]
fn exprel_inv(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        1.0 - x / 2.0 + x * x / 12.0
    } else {
        x / x.exp_m1()
    }
}

/// d/dx of `x / (e^x - 1)`.
#[inline]
fn exprel_inv_prime(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        -0.5 + x / 6.0 - x * x * x / 180.0
    } else if x > 0.0 {
        // Rewritten in e^{-x} so large positive x does not overflow.
        let em = (-x).exp();
        let d = -(-x).exp_m1();
        (d - x) * em / (d * d)
    } else {
        let d = x.exp_m1();
        (d - x * x.exp()) / (d * d)
    }
}

/// `x / (e^x - 1)` and its derivative from a single exponential.
#[inline]
fn exprel_inv_with_prime(x: f64) -> (f64, f64) {
    if x.abs() < SERIES_THRESHOLD {
        (
            1.0 - x / 2.0 + x * x / 12.0,
            -0.5 + x / 6.0 - x * x * x / 180.0,
        )
    } else if x > 0.0 {
        let em = (-x).exp();
        let d = -(-x).exp_m1();
        (x * em / d, (d - x) * em / (d * d))
    } else {
        let d = x.exp_m1();
        (x / d, (d - x * (d + 1.0)) / (d * d))
    }
}

/// `1 / (1 + e^{-y})`.
#[inline]
fn logistic(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

fn check_voltage(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "membrane potential must be finite, got {v}"
        )))
    }
}

/// Opening rate of `gate` at potential `v` (mV), in 1/ms.
pub fn rate_alpha(gate: Gate, v: f64) -> Result<f64> {
    check_voltage(v)?;
    Ok(gate.alpha(v))
}

/// Closing rate of `gate` at potential `v` (mV), in 1/ms.
pub fn rate_beta(gate: Gate, v: f64) -> Result<f64> {
    check_voltage(v)?;
    Ok(gate.beta(v))
}

pub fn rate_alpha_prime(gate: Gate, v: f64) -> Result<f64> {
    check_voltage(v)?;
    Ok(gate.alpha_prime(v))
}

pub fn rate_beta_prime(gate: Gate, v: f64) -> Result<f64> {
    check_voltage(v)?;
    Ok(gate.beta_prime(v))
}

/// Voltage-clamp equilibrium α/(α+β) of `gate` held at `v`.
pub fn gating_steady_state(gate: Gate, v: f64) -> Result<f64> {
    check_voltage(v)?;
    let a = gate.alpha(v);
    let s = a + gate.beta(v);
    if s == 0.0 || !s.is_finite() {
        return Err(Error::Domain(format!(
            "degenerate rates for gate {} at v={v}: alpha+beta={s}",
            gate.name()
        )));
    }
    Ok(a / s)
}
