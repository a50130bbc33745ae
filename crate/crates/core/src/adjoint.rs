//! Backward adjoint sweeps that turn a data residual into parameter-space
//! sensitivities.
//!
//! Both inverse problems share one adjoint system in the variables
//! `(U, P, Q, R)`:
//!
//! ```text
//! C_M U' = (G_Na m^a h^b + G_K n^c + G_L) U + S_m P + S_n Q + S_h R + (V^δ - V)
//!     P' = (α_m + β_m) P - a G_Na m^(a-1) h^b (V - E_Na) U
//!     Q' = (α_n + β_n) Q - c G_K  n^(c-1)     (V - E_K)  U
//!     R' = (α_h + β_h) R - b G_Na m^a h^(b-1) (V - E_Na) U
//! U(T) = P(T) = Q(T) = R(T) = 0
//! ```
//!
//! with `S_x = (1 - x) α_x'(V) - x β_x'(V)`. In the conductance problem the
//! conductances are the current iterate and the exponents are fixed; in the
//! exponent problem the roles swap.
//!
//! The sweep steps from node `j` to node `j - 1` with every coefficient and
//! the residual sampled at node `j`. This is exactly the transpose of the
//! forward Euler recursion, so gradients assembled from the result are the
//! exact derivatives of the discrete misfit `½‖V^δ - V‖²` (trapezoid norm).
//! The residual forcing carries the trapezoid weight, halved at `T`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Sweep};
use crate::forward::Trajectory;
use crate::model::{gate_pow, Conductances, Exponents, ModelConstants, TimeGrid, GATE_FLOOR};
use crate::noise::Observation;
use crate::rates::Gate;

/// Adjoint states sampled on the forward grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointTrajectory {
    pub grid: TimeGrid,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
}

impl AdjointTrajectory {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// `V^δ - V` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSignal {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl ResidualSignal {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values })
    }

    /// Observation minus simulated potential.
    pub fn between(observation: &Observation, fwd: &Trajectory) -> Result<Self> {
        check_same_grid(&observation.grid, &fwd.grid)?;
        fwd.grid.check_len(observation.v_delta.len())?;
        let values = observation
            .v_delta
            .iter()
            .zip(&fwd.v)
            .map(|(d, v)| d - v)
            .collect();
        Ok(Self {
            grid: fwd.grid,
            values,
        })
    }
}

pub(crate) fn check_same_grid(a: &TimeGrid, b: &TimeGrid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch {
            expected: a.len(),
            actual: b.len(),
        })
    }
}

/// Adjoint of the conductance problem at conductance iterate `g`.
pub fn solve_adjoint_conductances(
    consts: &ModelConstants,
    g: &Conductances,
    e: &Exponents,
    fwd: &Trajectory,
    resid: &ResidualSignal,
) -> Result<AdjointTrajectory> {
    backward_sweep(consts, g, e, fwd, resid)
}

/// Adjoint of the exponent problem at exponent iterate `e_iter`.
pub fn solve_adjoint_exponents(
    consts: &ModelConstants,
    g: &Conductances,
    e_iter: &Exponents,
    fwd: &Trajectory,
    resid: &ResidualSignal,
) -> Result<AdjointTrajectory> {
    backward_sweep(consts, g, e_iter, fwd, resid)
}

fn backward_sweep(
    consts: &ModelConstants,
    g: &Conductances,
    e: &Exponents,
    fwd: &Trajectory,
    resid: &ResidualSignal,
) -> Result<AdjointTrajectory> {
    check_same_grid(&fwd.grid, &resid.grid)?;
    let len = fwd.grid.len();
    fwd.grid.check_len(fwd.v.len())?;
    fwd.grid.check_len(resid.values.len())?;

    let dt = fwd.grid.dt();
    let dt_c = dt / consts.c_m;
    let mut adj = AdjointTrajectory {
        grid: fwd.grid,
        u: vec![0.0; len],
        p: vec![0.0; len],
        q: vec![0.0; len],
        r: vec![0.0; len],
    };

    for j in (1..len).rev() {
        let (v, m, n, h) = (fwd.v[j], fwd.m[j], fwd.n[j], fwd.h[j]);
        let km = Gate::M.kinetics(v);
        let kn = Gate::N.kinetics(v);
        let kh = Gate::H.kinetics(v);

        let (mf, nf, hf) = (m.max(GATE_FLOOR), n.max(GATE_FLOOR), h.max(GATE_FLOOR));
        let m_a = gate_pow(mf, e.a);
        let h_b = gate_pow(hf, e.b);
        let n_c = gate_pow(nf, e.c);
        let na_drive = g.g_na * (v - consts.e_na);
        let k_drive = g.g_k * (v - consts.e_k);
        let leak_total = g.g_na * m_a * h_b + g.g_k * n_c + g.g_l;

        let weight = if j == len - 1 { 0.5 } else { 1.0 };
        let (u, p, q, r) = (adj.u[j], adj.p[j], adj.q[j], adj.r[j]);

        let u_rate = leak_total * u
            + km.voltage_sensitivity(m) * p
            + kn.voltage_sensitivity(n) * q
            + kh.voltage_sensitivity(h) * r
            + weight * resid.values[j];
        // x^(p-1) as x^p / x on the floored gates
        let p_rate = km.relaxation() * p - e.a * (m_a / mf) * h_b * na_drive * u;
        let q_rate = kn.relaxation() * q - e.c * (n_c / nf) * k_drive * u;
        let r_rate = kh.relaxation() * r - e.b * m_a * (h_b / hf) * na_drive * u;

        let next = (
            u - dt_c * u_rate,
            p - dt * p_rate,
            q - dt * q_rate,
            r - dt * r_rate,
        );
        if !(next.0.is_finite() && next.1.is_finite() && next.2.is_finite() && next.3.is_finite()) {
            return Err(Error::Divergence {
                sweep: Sweep::Adjoint,
                step: j - 1,
                iteration: None,
            });
        }
        adj.u[j - 1] = next.0;
        adj.p[j - 1] = next.1;
        adj.q[j - 1] = next.2;
        adj.r[j - 1] = next.3;
    }
    Ok(adj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::solve_forward;
    use crate::noise::{add_noise, NoiseSpec};
    use crate::presets;

    fn observed_setup() -> (presets::Setup, Trajectory, ResidualSignal) {
        let s = presets::conductance_example();
        let truth = solve_forward(&s.consts, &s.conductances, &s.exponents, &s.grid).unwrap();
        let obs = add_noise(
            &s.grid,
            &truth.v,
            &NoiseSpec {
                epsilon: 0.05,
                seed: 3,
            },
        )
        .unwrap();
        let guess = Conductances::new(100.0, 30.0, 0.5);
        let fwd = solve_forward(&s.consts, &guess, &s.exponents, &s.grid).unwrap();
        let resid = ResidualSignal::between(&obs, &fwd).unwrap();
        (s, fwd, resid)
    }

    #[test]
    fn zero_residual_gives_zero_adjoint() {
        let (s, fwd, resid) = observed_setup();
        let zero = ResidualSignal::new(resid.grid, vec![0.0; resid.values.len()]).unwrap();
        let g = Conductances::new(100.0, 30.0, 0.5);
        let a = solve_adjoint_conductances(&s.consts, &g, &s.exponents, &fwd, &zero).unwrap();
        let b = solve_adjoint_exponents(&s.consts, &g, &s.exponents, &fwd, &zero).unwrap();
        for adj in [a, b] {
            for seq in [&adj.u, &adj.p, &adj.q, &adj.r] {
                assert!(seq.iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn terminal_values_are_zero() {
        let (s, fwd, resid) = observed_setup();
        let g = Conductances::new(100.0, 30.0, 0.5);
        let adj = solve_adjoint_conductances(&s.consts, &g, &s.exponents, &fwd, &resid).unwrap();
        let last = adj.len() - 1;
        assert_eq!(adj.len(), fwd.len());
        assert_eq!(
            (adj.u[last], adj.p[last], adj.q[last], adj.r[last]),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert!(adj.u[..last].iter().any(|&x| x != 0.0));
    }

    #[test]
    fn linear_in_the_residual() {
        let (s, fwd, resid) = observed_setup();
        let g = Conductances::new(100.0, 30.0, 0.5);
        let base = solve_adjoint_exponents(&s.consts, &g, &s.exponents, &fwd, &resid).unwrap();
        for lambda in [-1.0, 2.0, 10.0] {
            let scaled = ResidualSignal::new(
                resid.grid,
                resid.values.iter().map(|x| lambda * x).collect(),
            )
            .unwrap();
            let adj = solve_adjoint_exponents(&s.consts, &g, &s.exponents, &fwd, &scaled).unwrap();
            for (a, b) in [
                (&adj.u, &base.u),
                (&adj.p, &base.p),
                (&adj.q, &base.q),
                (&adj.r, &base.r),
            ] {
                let scale = b.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
                for (x, y) in a.iter().zip(b) {
                    assert!((x - lambda * y).abs() <= 1e-10 * lambda.abs() * scale);
                }
            }
        }
    }

    #[test]
    fn zero_conductances_with_zero_residual_stay_zero() {
        let (s, fwd, resid) = observed_setup();
        let zero_g = Conductances::new(0.0, 0.0, 0.0);
        let zero = ResidualSignal::new(resid.grid, vec![0.0; resid.values.len()]).unwrap();
        let adj =
            solve_adjoint_conductances(&s.consts, &zero_g, &s.exponents, &fwd, &zero).unwrap();
        assert!(adj.u.iter().chain(&adj.p).all(|&x| x == 0.0));
        // With forcing but no conductances the P, Q, R sources vanish.
        let adj =
            solve_adjoint_conductances(&s.consts, &zero_g, &s.exponents, &fwd, &resid).unwrap();
        assert!(adj.p.iter().chain(&adj.q).chain(&adj.r).all(|&x| x == 0.0));
        assert!(adj.u.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let (s, fwd, _) = observed_setup();
        let other = TimeGrid::new(5.0, 0.02).unwrap();
        let bad = ResidualSignal::new(other, vec![0.0; other.len()]).unwrap();
        let g = Conductances::new(1.0, 1.0, 1.0);
        assert!(matches!(
            solve_adjoint_conductances(&s.consts, &g, &s.exponents, &fwd, &bad),
            Err(Error::GridMismatch { .. })
        ));
    }
}
