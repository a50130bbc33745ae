//! Fixed-step explicit Euler solution of the membrane equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Sweep};
use crate::model::{currents_unchecked, Conductances, Exponents, ModelConstants, State, TimeGrid};
use crate::rates::Gate;

/// Membrane potential and gates sampled at every node of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub v: Vec<f64>,
    pub m: Vec<f64>,
    pub n: Vec<f64>,
    pub h: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn state(&self, j: usize) -> State {
        State {
            v: self.v[j],
            m: self.m[j],
            n: self.n[j],
            h: self.h[j],
        }
    }
}

#[inline]
fn gate_rhs(gate: Gate, v: f64, x: f64) -> f64 {
    gate.alpha(v) * (1.0 - x) - gate.beta(v) * x
}

/// Integrates the membrane system from the initial state in `consts`.
///
/// `V_{j+1} = V_j + (dt/C_M)(I_ext - I_Na - I_K - I_L)` and each gate takes
/// an Euler step of `α(V)(1 - x) - β(V)x`, all evaluated at node `j`.
pub fn solve_forward(
    consts: &ModelConstants,
    g: &Conductances,
    e: &Exponents,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    consts.validate()?;
    g.validate()?;
    e.validate()?;

    let len = grid.len();
    let dt = grid.dt();
    let mut traj = Trajectory {
        grid: *grid,
        v: Vec::with_capacity(len),
        m: Vec::with_capacity(len),
        n: Vec::with_capacity(len),
        h: Vec::with_capacity(len),
    };
    let mut s = consts.initial_state();
    traj.push(s);
    for step in 1..len {
        let i = currents_unchecked(consts, g, e, &s);
        let next = State {
            v: s.v + dt / consts.c_m * (consts.i_ext - i.total()),
            m: s.m + dt * gate_rhs(Gate::M, s.v, s.m),
            n: s.n + dt * gate_rhs(Gate::N, s.v, s.n),
            h: s.h + dt * gate_rhs(Gate::H, s.v, s.h),
        };
        if !(next.v.is_finite() && next.m.is_finite() && next.n.is_finite() && next.h.is_finite()) {
            return Err(Error::Divergence {
                sweep: Sweep::Forward,
                step,
                iteration: None,
            });
        }
        traj.push(next);
        s = next;
    }
    Ok(traj)
}

impl Trajectory {
    fn push(&mut self, s: State) {
        self.v.push(s.v);
        self.m.push(s.m);
        self.n.push(s.n);
        self.h.push(s.h);
    }
}
