//! Parameter identification for the space-clamped Hodgkin–Huxley membrane.
//!
//! The crate solves the forward problem with fixed-step explicit Euler and
//! recovers either the maximal conductances `(G_Na, G_K, G_L)` or the gating
//! exponents `(a, b, c)` from a noisy voltage trace. Gradients come from an
//! adjoint sweep; the update is a nonlinear Landweber step stopped by the
//! discrepancy principle.
//!
//! ```
//! use hh_inverse::{presets, noise, InverseProblem, ParameterKind, ParameterVector, StoppingRule};
//!
//! let s = presets::conductance_example();
//! let problem = InverseProblem {
//!     consts: s.consts,
//!     conductances: s.conductances,
//!     exponents: s.exponents,
//!     grid: s.grid,
//! };
//! let truth = ParameterVector::conductances(s.conductances);
//! let clean = problem.forward(&truth).unwrap();
//! let obs = noise::add_noise(&s.grid, &clean.v, &noise::NoiseSpec { epsilon: 0.25, seed: 7 }).unwrap();
//! let rule = StoppingRule::new(2.01, obs.delta, 200).unwrap();
//! let guess = ParameterVector::new(ParameterKind::Conductances, [0.0; 3]);
//! let run = hh_inverse::run_inversion(&problem, &guess, &obs, &rule, Some(&truth)).unwrap();
//! assert!(run.k_star >= 1);
//! ```

pub mod adjoint;
pub mod error;
pub mod forward;
pub mod landweber;
pub mod model;
pub mod noise;
pub mod presets;
pub mod rates;

pub use adjoint::{
    solve_adjoint_conductances, solve_adjoint_exponents, AdjointTrajectory, ResidualSignal,
};
pub use error::{Error, Result, Sweep};
pub use forward::{solve_forward, Trajectory};
pub use landweber::{
    gradient_conductances, gradient_exponents, landweber_step, run_inversion, run_inversion_with,
    step_size, InverseProblem, IterationRecord, ParameterKind, ParameterVector, RunResult,
    StepControl, StopReason, StoppingRule,
};
pub use model::{
    ionic_currents, Conductances, Exponents, IonicCurrents, ModelConstants, State, TimeGrid,
};
pub use noise::{add_noise, l2_norm, percent_error, residual_norm, NoiseSpec, Observation};
pub use rates::{
    gating_steady_state, rate_alpha, rate_alpha_prime, rate_beta, rate_beta_prime, Gate,
};
