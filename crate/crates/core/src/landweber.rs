//! Nonlinear Landweber iteration with discrepancy-principle stopping.
//!
//! Each iteration solves the forward problem at the current iterate, tests
//! the residual against `τδ`, solves the adjoint system, assembles the
//! gradient `X = F'(x)^*(V^δ - F(x))` and moves to `x + w X` with
//! `w = ‖V^δ - F(x)‖² / ‖X‖²`.
//!
//! Far from the solution that literal step can overshoot into parameters
//! where explicit Euler blows up. [`StepControl::Safeguarded`] therefore
//! scales `w` by a factor `f ≤ 1` that is halved until the residual
//! decreases and doubled again after every accepted step.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::adjoint::{
    check_same_grid, solve_adjoint_conductances, solve_adjoint_exponents, AdjointTrajectory,
    ResidualSignal,
};
use crate::error::{Error, Result, Sweep};
use crate::forward::{solve_forward, Trajectory};
use crate::model::{gate_pow, Conductances, Exponents, ModelConstants, TimeGrid, GATE_FLOOR};
use crate::noise::{euclid, l2_norm_unchecked, percent_error, Observation};

/// Default iteration cap when none is configured.
pub const DEFAULT_MAX_ITERATIONS: usize = 500_000;

/// Residuals below this end a run even when `τδ` is smaller (noise-free data).
pub const RESIDUAL_FLOOR: f64 = 1e-10;

/// A safeguarded run gives up once the step factor drops below this.
pub const MIN_STEP_FACTOR: f64 = 1e-15;

/// How the step length `w` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepControl {
    /// `x + wX` exactly as computed.
    Plain,
    /// `x + f·wX` with `f` halved until the residual decreases.
    #[default]
    Safeguarded,
}

impl StepControl {
    pub fn name(self) -> &'static str {
        match self {
            StepControl::Plain => "plain",
            StepControl::Safeguarded => "safeguarded",
        }
    }
}

impl fmt::Display for StepControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StepControl {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(StepControl::Plain),
            "safeguarded" => Ok(StepControl::Safeguarded),
            other => Err(Error::InvalidInput(format!(
                "unknown step control {other:?}, expected plain or safeguarded"
            ))),
        }
    }
}

/// Which triple is being recovered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterKind {
    Conductances,
    Exponents,
}

impl ParameterKind {
    pub fn name(self) -> &'static str {
        match self {
            ParameterKind::Conductances => "conductances",
            ParameterKind::Exponents => "exponents",
        }
    }

    /// Column labels of the three components.
    pub fn labels(self) -> [&'static str; 3] {
        match self {
            ParameterKind::Conductances => ["g_na", "g_k", "g_l"],
            ParameterKind::Exponents => ["a", "b", "c"],
        }
    }
}

impl fmt::Display for ParameterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The unknown triple of an inversion, tagged with its kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub kind: ParameterKind,
    pub values: [f64; 3],
}

impl ParameterVector {
    pub fn new(kind: ParameterKind, values: [f64; 3]) -> Self {
        Self { kind, values }
    }

    pub fn conductances(g: Conductances) -> Self {
        Self::new(ParameterKind::Conductances, g.to_array())
    }

    pub fn exponents(e: Exponents) -> Self {
        Self::new(ParameterKind::Exponents, e.to_array())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }
}

/// Discrepancy-principle stopping rule: stop once `‖V^δ - F(x_k)‖ ≤ τδ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub tau: f64,
    pub delta: f64,
    pub max_iterations: usize,
}

impl StoppingRule {
    pub fn new(tau: f64, delta: f64, max_iterations: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 2.0) {
            return Err(Error::InvalidInput(format!("tau must exceed 2, got {tau}")));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "delta must be non-negative, got {delta}"
            )));
        }
        if max_iterations < 1 {
            return Err(Error::InvalidInput(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(Self {
            tau,
            delta,
            max_iterations,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.tau * self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub k: usize,
    pub iterate: ParameterVector,
    pub residual_norm: f64,
    /// Only present when the true parameters were supplied.
    pub percent_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Discrepancy,
    MaxIterations,
    ZeroGradient,
    /// Residual fell below [`RESIDUAL_FLOOR`] before reaching `τδ`.
    ResidualFloor,
    /// No step down to [`MIN_STEP_FACTOR`]·w reduced the residual.
    Stagnation,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Discrepancy => "discrepancy",
            StopReason::MaxIterations => "max_iterations",
            StopReason::ZeroGradient => "zero_gradient",
            StopReason::ResidualFloor => "residual_floor",
            StopReason::Stagnation => "stagnation",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub records: Vec<IterationRecord>,
    pub k_star: usize,
    pub stop_reason: StopReason,
    pub final_iterate: ParameterVector,
    pub rule: StoppingRule,
    pub step_control: StepControl,
    /// Trial steps discarded by the safeguard.
    pub rejected_steps: usize,
}

impl RunResult {
    /// The record of the stopping iterate.
    pub fn final_record(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("a run records at least one iteration")
    }

    /// Checks that `k_star` is the first index with residual ≤ `τδ`.
    pub fn discrepancy_is_minimal(&self) -> bool {
        let threshold = self.rule.threshold();
        let (last, earlier) = match self.records.split_last() {
            Some(split) => split,
            None => return false,
        };
        last.k == self.k_star
            && last.residual_norm <= threshold
            && earlier.iter().all(|r| r.residual_norm > threshold)
    }
}

/// Fixed data of an inversion: the constants, both parameter triples (the
/// unknown one is ignored in favour of the iterate) and the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseProblem {
    pub consts: ModelConstants,
    pub conductances: Conductances,
    pub exponents: Exponents,
    pub grid: TimeGrid,
}

impl InverseProblem {
    /// Conductances and exponents with the unknown triple replaced by `x`.
    pub fn parameters_at(&self, x: &ParameterVector) -> (Conductances, Exponents) {
        match x.kind {
            ParameterKind::Conductances => (Conductances::from_array(x.values), self.exponents),
            ParameterKind::Exponents => (self.conductances, Exponents::from_array(x.values)),
        }
    }

    pub fn forward(&self, x: &ParameterVector) -> Result<Trajectory> {
        let (g, e) = self.parameters_at(x);
        solve_forward(&self.consts, &g, &e, &self.grid)
    }

    /// Misfit `½‖V^δ - F(x)‖²`.
    pub fn misfit(&self, x: &ParameterVector, observation: &Observation) -> Result<f64> {
        let r = self.evaluate(x, observation)?.norm;
        Ok(0.5 * r * r)
    }

    /// `F'(x)^*(V^δ - F(x))` together with the residual norm at `x`.
    pub fn landweber_direction(
        &self,
        x: &ParameterVector,
        observation: &Observation,
    ) -> Result<([f64; 3], f64)> {
        let eval = self.evaluate(x, observation)?;
        Ok((self.direction_from(x, &eval.fwd, &eval.resid)?, eval.norm))
    }

    fn direction_from(
        &self,
        x: &ParameterVector,
        fwd: &Trajectory,
        resid: &ResidualSignal,
    ) -> Result<[f64; 3]> {
        let (g, e) = self.parameters_at(x);
        match x.kind {
            ParameterKind::Conductances => {
                let adj = solve_adjoint_conductances(&self.consts, &g, &e, fwd, resid)?;
                gradient_conductances(fwd, &adj, &self.consts, &e)
            }
            ParameterKind::Exponents => {
                let adj = solve_adjoint_exponents(&self.consts, &g, &e, fwd, resid)?;
                gradient_exponents(fwd, &adj, &self.consts, &g, &e)
            }
        }
    }
}

fn check_pair(fwd: &Trajectory, adj: &AdjointTrajectory) -> Result<()> {
    check_same_grid(&fwd.grid, &adj.grid)?;
    fwd.grid.check_len(fwd.v.len())?;
    fwd.grid.check_len(adj.u.len())
}

/// `Σ_{j<N} Δt · f_j · U_j`, the quadrature dual to the Euler recursion.
///
/// Since `U(T) = 0`, this is the trapezoid rule plus `½Δt f_0 U_0`.
fn adjoint_quadrature(dt: f64, u: &[f64], integrand: impl Fn(usize) -> f64) -> f64 {
    let n = u.len() - 1;
    dt * (0..n).map(|j| integrand(j) * u[j]).sum::<f64>()
}

/// Gradient `(X_Na, X_K, X_L)` of the conductance problem.
pub fn gradient_conductances(
    fwd: &Trajectory,
    adj: &AdjointTrajectory,
    consts: &ModelConstants,
    e: &Exponents,
) -> Result<[f64; 3]> {
    check_pair(fwd, adj)?;
    let dt = fwd.grid.dt();
    let x_na = adjoint_quadrature(dt, &adj.u, |j| {
        gate_pow(fwd.m[j], e.a) * gate_pow(fwd.h[j], e.b) * (fwd.v[j] - consts.e_na)
    });
    let x_k = adjoint_quadrature(dt, &adj.u, |j| {
        gate_pow(fwd.n[j], e.c) * (fwd.v[j] - consts.e_k)
    });
    let x_l = adjoint_quadrature(dt, &adj.u, |j| fwd.v[j] - consts.e_l);
    Ok([x_na, x_k, x_l])
}

/// Gradient `(X_a, X_b, X_c)` of the exponent problem.
pub fn gradient_exponents(
    fwd: &Trajectory,
    adj: &AdjointTrajectory,
    consts: &ModelConstants,
    g: &Conductances,
    e_iter: &Exponents,
) -> Result<[f64; 3]> {
    check_pair(fwd, adj)?;
    if [&fwd.m, &fwd.n, &fwd.h]
        .iter()
        .any(|s| s.iter().any(|&x| x <= 0.0))
    {
        log::warn!("non-positive gate sample; logarithms use the floor {GATE_FLOOR}");
    }
    let dt = fwd.grid.dt();
    let sodium = |j: usize| {
        g.g_na
            * (fwd.v[j] - consts.e_na)
            * gate_pow(fwd.m[j], e_iter.a)
            * gate_pow(fwd.h[j], e_iter.b)
    };
    let x_a = adjoint_quadrature(dt, &adj.u, |j| sodium(j) * fwd.m[j].max(GATE_FLOOR).ln());
    let x_b = adjoint_quadrature(dt, &adj.u, |j| sodium(j) * fwd.h[j].max(GATE_FLOOR).ln());
    let x_c = adjoint_quadrature(dt, &adj.u, |j| {
        let n = fwd.n[j].max(GATE_FLOOR);
        g.g_k * (fwd.v[j] - consts.e_k) * n.powf(e_iter.c) * n.ln()
    });
    Ok([x_a, x_b, x_c])
}

/// Step length `w = ‖residual‖² / ‖gradient‖²`.
pub fn step_size(residual_norm: f64, gradient: [f64; 3]) -> Result<f64> {
    if !(residual_norm.is_finite() && residual_norm >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "residual norm must be non-negative, got {residual_norm}"
        )));
    }
    if residual_norm == 0.0 {
        return Ok(0.0);
    }
    let g2 = euclid(gradient).powi(2);
    if g2 == 0.0 {
        return Err(Error::ZeroGradient {
            residual: residual_norm,
            iteration: 0,
        });
    }
    Ok(residual_norm * residual_norm / g2)
}

/// `iterate + w · gradient`.
pub fn landweber_step(
    iterate: &ParameterVector,
    w: f64,
    gradient: [f64; 3],
) -> Result<ParameterVector> {
    let mut next = *iterate;
    for (x, d) in next.values.iter_mut().zip(gradient) {
        *x += w * d;
    }
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Divergence {
            sweep: Sweep::Update,
            step: 0,
            iteration: None,
        })
    }
}

/// Runs the Landweber iteration from `initial` with the default
/// [`StepControl`] until the discrepancy principle, the iteration cap, a
/// vanishing gradient or the residual floor stops it.
///
/// The kind of `initial` selects the unknown triple; the other triple is
/// read from `problem` and never modified.
pub fn run_inversion(
    problem: &InverseProblem,
    initial: &ParameterVector,
    observation: &Observation,
    rule: &StoppingRule,
    truth: Option<&ParameterVector>,
) -> Result<RunResult> {
    run_inversion_with(
        problem,
        initial,
        observation,
        rule,
        StepControl::default(),
        truth,
    )
}

/// Residual of the forward solution at one iterate.
struct Evaluated {
    fwd: Trajectory,
    resid: ResidualSignal,
    norm: f64,
}

impl InverseProblem {
    fn evaluate(&self, x: &ParameterVector, observation: &Observation) -> Result<Evaluated> {
        let fwd = self.forward(x)?;
        let resid = ResidualSignal::between(observation, &fwd)?;
        let norm = l2_norm_unchecked(self.grid.dt(), &resid.values);
        if !norm.is_finite() {
            return Err(Error::Divergence {
                sweep: Sweep::Forward,
                step: self.grid.n_steps(),
                iteration: None,
            });
        }
        Ok(Evaluated { fwd, resid, norm })
    }
}

/// [`run_inversion`] with an explicit step control.
pub fn run_inversion_with(
    problem: &InverseProblem,
    initial: &ParameterVector,
    observation: &Observation,
    rule: &StoppingRule,
    step_control: StepControl,
    truth: Option<&ParameterVector>,
) -> Result<RunResult> {
    let rule = StoppingRule::new(rule.tau, rule.delta, rule.max_iterations)?;
    check_same_grid(&problem.grid, &observation.grid)?;
    problem.grid.check_len(observation.v_delta.len())?;
    if !initial.is_finite() {
        return Err(Error::InvalidInput(format!(
            "initial guess must be finite: {:?}",
            initial.values
        )));
    }
    if let Some(t) = truth {
        if t.kind != initial.kind {
            return Err(Error::KindMismatch {
                expected: initial.kind.name(),
                actual: t.kind.name(),
            });
        }
    }

    let threshold = rule.threshold();
    let mut records = Vec::new();
    let mut x = *initial;
    let mut k = 1;
    let mut factor = 1.0f64;
    let mut rejected = 0usize;
    let mut current = problem
        .evaluate(&x, observation)
        .map_err(|e| e.at_iteration(k))?;
    loop {
        let res = current.norm;
        let err = truth.map(|t| percent_error(t, &x)).transpose()?;
        records.push(IterationRecord {
            k,
            iterate: x,
            residual_norm: res,
            percent_error: err,
        });

        let stop = if res <= threshold {
            Some(StopReason::Discrepancy)
        } else if res <= RESIDUAL_FLOOR {
            Some(StopReason::ResidualFloor)
        } else if k >= rule.max_iterations {
            Some(StopReason::MaxIterations)
        } else {
            None
        };
        if let Some(stop_reason) = stop {
            return Ok(finish(records, stop_reason, rule, step_control, rejected));
        }

        let direction = problem
            .direction_from(&x, &current.fwd, &current.resid)
            .map_err(|e| e.at_iteration(k))?;
        let w = match step_size(res, direction) {
            Ok(w) => w,
            Err(Error::ZeroGradient { .. }) => {
                log::warn!("zero gradient at iteration {k} with residual {res}");
                return Ok(finish(
                    records,
                    StopReason::ZeroGradient,
                    rule,
                    step_control,
                    rejected,
                ));
            }
            Err(e) => return Err(e),
        };

        match step_control {
            StepControl::Plain => {
                x = landweber_step(&x, w, direction).map_err(|e| e.at_iteration(k))?;
                current = problem
                    .evaluate(&x, observation)
                    .map_err(|e| e.at_iteration(k + 1))?;
            }
            StepControl::Safeguarded => loop {
                let accepted = landweber_step(&x, factor * w, direction)
                    .and_then(|trial| Ok((trial, problem.evaluate(&trial, observation)?)))
                    .ok()
                    .filter(|(_, eval)| eval.norm < res);
                if let Some((trial, eval)) = accepted {
                    x = trial;
                    current = eval;
                    factor = (2.0 * factor).min(1.0);
                    break;
                }
                factor *= 0.5;
                rejected += 1;
                if factor < MIN_STEP_FACTOR {
                    log::warn!("no descent at iteration {k} with residual {res}");
                    return Ok(finish(
                        records,
                        StopReason::Stagnation,
                        rule,
                        step_control,
                        rejected,
                    ));
                }
            },
        }
        if k % 10_000 == 0 {
            log::debug!(
                "iteration {k}: residual {res:.6e}, threshold {threshold:.6e}, factor {factor:.3e}"
            );
        }
        k += 1;
    }
}

fn finish(
    records: Vec<IterationRecord>,
    stop_reason: StopReason,
    rule: StoppingRule,
    step_control: StepControl,
    rejected_steps: usize,
) -> RunResult {
    let last = *records.last().expect("at least one record");
    RunResult {
        k_star: last.k,
        final_iterate: last.iterate,
        records,
        stop_reason,
        rule,
        step_control,
        rejected_steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{add_noise, NoiseSpec};
    use crate::presets;

    fn problem(s: &presets::Setup) -> InverseProblem {
        InverseProblem {
            consts: s.consts,
            conductances: s.conductances,
            exponents: s.exponents,
            grid: s.grid,
        }
    }

    #[test]
    fn step_size_cases() {
        assert_eq!(step_size(0.0, [1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(step_size(0.0, [0.0; 3]).unwrap(), 0.0);
        assert_eq!(step_size(2.0, [2.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            step_size(1.0, [0.0; 3]),
            Err(Error::ZeroGradient { .. })
        ));
        assert!(step_size(-1.0, [1.0; 3]).is_err());
    }

    #[test]
    fn update_cases() {
        let x = ParameterVector::new(ParameterKind::Exponents, [0.5, -1.0, 2.0]);
        assert_eq!(landweber_step(&x, 0.0, [7.0, 8.0, 9.0]).unwrap(), x);
        let zero = ParameterVector::new(ParameterKind::Conductances, [0.0; 3]);
        let next = landweber_step(&zero, 1.0, [1.0, 2.0, 3.0]).unwrap();
        assert_eq!(next.values, [1.0, 2.0, 3.0]);
        assert_eq!(next.kind, ParameterKind::Conductances);
        assert!(matches!(
            landweber_step(&zero, f64::INFINITY, [1.0, 0.0, 0.0]),
            Err(Error::Divergence {
                sweep: Sweep::Update,
                ..
            })
        ));
    }

    #[test]
    fn stopping_rule_validation() {
        assert!(StoppingRule::new(2.01, 1.0, 10).is_ok());
        assert!(StoppingRule::new(2.0, 1.0, 10).is_err());
        assert!(StoppingRule::new(2.5, -1.0, 10).is_err());
        assert!(StoppingRule::new(2.5, 1.0, 0).is_err());
    }

    #[test]
    fn gradient_vanishes_with_zero_adjoint() {
        let s = presets::conductance_example();
        let fwd = solve_forward(&s.consts, &s.conductances, &s.exponents, &s.grid).unwrap();
        let zero = AdjointTrajectory {
            grid: s.grid,
            u: vec![0.0; s.grid.len()],
            p: vec![0.0; s.grid.len()],
            q: vec![0.0; s.grid.len()],
            r: vec![0.0; s.grid.len()],
        };
        assert_eq!(
            gradient_conductances(&fwd, &zero, &s.consts, &s.exponents).unwrap(),
            [0.0; 3]
        );
        assert_eq!(
            gradient_exponents(&fwd, &zero, &s.consts, &s.conductances, &s.exponents).unwrap(),
            [0.0; 3]
        );
    }

    #[test]
    fn gradient_components_vanish_without_drive() {
        let s = presets::conductance_example();
        let len = s.grid.len();
        let ones = vec![1.0; len];
        let adj = AdjointTrajectory {
            grid: s.grid,
            u: ones.clone(),
            p: ones.clone(),
            q: ones.clone(),
            r: ones.clone(),
        };
        let fwd = Trajectory {
            grid: s.grid,
            v: vec![s.consts.e_na; len],
            m: vec![1.0; len],
            n: vec![0.3; len],
            h: vec![0.6; len],
        };
        let gc = gradient_conductances(&fwd, &adj, &s.consts, &s.exponents).unwrap();
        assert_eq!(gc[0], 0.0);
        assert!(gc[1] != 0.0 && gc[2] != 0.0);
        let fwd_m1 = Trajectory {
            v: vec![-10.0; len],
            ..fwd
        };
        let ge =
            gradient_exponents(&fwd_m1, &adj, &s.consts, &s.conductances, &s.exponents).unwrap();
        assert_eq!(ge[0], 0.0);
        assert!(ge[1] != 0.0 && ge[2] != 0.0);
    }

    #[test]
    fn loose_threshold_stops_immediately() {
        let s = presets::conductance_example();
        let p = problem(&s);
        let truth = ParameterVector::conductances(s.conductances);
        let fwd = p.forward(&truth).unwrap();
        let obs = add_noise(
            &s.grid,
            &fwd.v,
            &NoiseSpec {
                epsilon: 0.05,
                seed: 1,
            },
        )
        .unwrap();
        let guess = ParameterVector::new(ParameterKind::Conductances, [10.0, 5.0, 1.0]);
        let rule = StoppingRule::new(2.01, 1e6, 100).unwrap();
        let run = run_inversion(&p, &guess, &obs, &rule, Some(&truth)).unwrap();
        assert_eq!(run.k_star, 1);
        assert_eq!(run.final_iterate, guess);
        assert_eq!(run.stop_reason, StopReason::Discrepancy);
        assert!(run.discrepancy_is_minimal());
    }

    #[test]
    fn cap_and_record_indices() {
        let s = presets::exponent_table_example();
        let p = problem(&s);
        let truth = ParameterVector::exponents(s.exponents);
        let fwd = p.forward(&truth).unwrap();
        let obs = add_noise(
            &s.grid,
            &fwd.v,
            &NoiseSpec {
                epsilon: 0.01,
                seed: 5,
            },
        )
        .unwrap();
        let guess = ParameterVector::new(ParameterKind::Exponents, [0.0; 3]);
        let rule = StoppingRule::new(2.01, obs.delta, 25).unwrap();
        let run = run_inversion(&p, &guess, &obs, &rule, Some(&truth)).unwrap();
        assert_eq!(run.stop_reason, StopReason::MaxIterations);
        assert_eq!(run.records.len(), 25);
        assert!(run.records.iter().enumerate().all(|(i, r)| r.k == i + 1));
        assert!(run.records.iter().all(|r| r.percent_error.is_some()));
        assert_eq!(run.final_iterate, run.final_record().iterate);
    }

    #[test]
    fn exact_data_at_truth_hits_the_floor() {
        let s = presets::conductance_example();
        let p = problem(&s);
        let truth = ParameterVector::conductances(s.conductances);
        let fwd = p.forward(&truth).unwrap();
        let obs = add_noise(
            &s.grid,
            &fwd.v,
            &NoiseSpec {
                epsilon: 0.0,
                seed: 0,
            },
        )
        .unwrap();
        let rule = StoppingRule::new(2.01, 0.0, 10).unwrap();
        let run = run_inversion(&p, &truth, &obs, &rule, None).unwrap();
        // zero residual satisfies res ≤ τ·0
        assert_eq!(run.k_star, 1);
        assert_eq!(run.stop_reason, StopReason::Discrepancy);
        assert!(run.final_record().percent_error.is_none());
    }

    #[test]
    fn plain_step_from_zero_exponents_diverges() {
        let s = presets::exponent_example();
        let p = problem(&s);
        let truth = ParameterVector::exponents(s.exponents);
        let fwd = p.forward(&truth).unwrap();
        let obs = add_noise(
            &s.grid,
            &fwd.v,
            &NoiseSpec {
                epsilon: 0.01,
                seed: 5,
            },
        )
        .unwrap();
        let guess = ParameterVector::new(ParameterKind::Exponents, [0.0; 3]);
        let rule = StoppingRule::new(2.01, obs.delta, 25).unwrap();
        let err =
            run_inversion_with(&p, &guess, &obs, &rule, StepControl::Plain, None).unwrap_err();
        assert!(matches!(
            err,
            Error::Divergence {
                sweep: Sweep::Forward,
                iteration: Some(1),
                ..
            }
        ));
    }

    #[test]
    fn safeguarded_residuals_decrease() {
        let s = presets::conductance_example();
        let p = problem(&s);
        let truth = ParameterVector::conductances(s.conductances);
        let fwd = p.forward(&truth).unwrap();
        let obs = add_noise(
            &s.grid,
            &fwd.v,
            &NoiseSpec {
                epsilon: 0.01,
                seed: 2,
            },
        )
        .unwrap();
        let guess = ParameterVector::new(ParameterKind::Conductances, [0.0; 3]);
        let rule = StoppingRule::new(2.01, obs.delta, 200).unwrap();
        let run = run_inversion(&p, &guess, &obs, &rule, Some(&truth)).unwrap();
        assert_eq!(run.step_control, StepControl::Safeguarded);
        assert!(run
            .records
            .windows(2)
            .all(|w| w[1].residual_norm < w[0].residual_norm));
        assert!(run.rejected_steps > 0);
    }

    #[test]
    fn step_control_round_trips_through_strings() {
        for c in [StepControl::Plain, StepControl::Safeguarded] {
            assert_eq!(c.name().parse::<StepControl>().unwrap(), c);
        }
        assert!("line_search".parse::<StepControl>().is_err());
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let s = presets::conductance_example();
        let p = problem(&s);
        let fwd = p
            .forward(&ParameterVector::conductances(s.conductances))
            .unwrap();
        let obs = add_noise(
            &s.grid,
            &fwd.v,
            &NoiseSpec {
                epsilon: 0.01,
                seed: 0,
            },
        )
        .unwrap();
        let rule = StoppingRule::new(2.01, obs.delta, 10).unwrap();
        let guess = ParameterVector::new(ParameterKind::Conductances, [0.0; 3]);
        let truth = ParameterVector::exponents(s.exponents);
        assert!(matches!(
            run_inversion(&p, &guess, &obs, &rule, Some(&truth)),
            Err(Error::KindMismatch { .. })
        ));
    }
}
