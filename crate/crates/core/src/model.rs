//! Model data: physical constants, parameter triples, the time grid and
//! the membrane state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gate values are clamped to at least this before real powers and logs.
pub const GATE_FLOOR: f64 = 1e-12;

/// Fixed physical data of a space-clamped membrane patch.
///
/// Units: `c_m` in µF/cm², potentials in mV, `i_ext` in µA/cm². Gating
/// initial values are dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    pub c_m: f64,
    pub e_na: f64,
    pub e_k: f64,
    pub e_l: f64,
    pub i_ext: f64,
    pub v0: f64,
    pub m0: f64,
    pub n0: f64,
    pub h0: f64,
}

impl ModelConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c_m", self.c_m),
            ("e_na", self.e_na),
            ("e_k", self.e_k),
            ("e_l", self.e_l),
            ("i_ext", self.i_ext),
            ("v0", self.v0),
            ("m0", self.m0),
            ("n0", self.n0),
            ("h0", self.h0),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite, got {value}"
                )));
            }
        }
        if self.c_m <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "c_m must be positive, got {}",
                self.c_m
            )));
        }
        for (name, value) in [("m0", self.m0), ("n0", self.n0), ("h0", self.h0)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidInput(format!(
                    "{name} must lie in [0, 1], got {value}"
                )));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> State {
        State {
            v: self.v0,
            m: self.m0,
            n: self.n0,
            h: self.h0,
        }
    }
}

/// Maximal specific conductances in mS/cm².
///
/// Iterates of the inversion are unconstrained, so negative values are legal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conductances {
    pub g_na: f64,
    pub g_k: f64,
    pub g_l: f64,
}

impl Conductances {
    pub fn new(g_na: f64, g_k: f64, g_l: f64) -> Self {
        Self { g_na, g_k, g_l }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.g_na, self.g_k, self.g_l]
    }

    pub fn from_array([g_na, g_k, g_l]: [f64; 3]) -> Self {
        Self { g_na, g_k, g_l }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite_triple("conductances", self.to_array())
    }
}

/// Real-valued gating exponents: `m^a h^b` for sodium, `n^c` for potassium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Exponents {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn from_array([a, b, c]: [f64; 3]) -> Self {
        Self { a, b, c }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite_triple("exponents", self.to_array())
    }
}

fn check_finite_triple(what: &str, values: [f64; 3]) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} must be finite, got {values:?}"
        )))
    }
}

/// Uniform time grid on `[0, t_end]` with `n_steps + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct TimeGrid {
    t_end: f64,
    dt: f64,
    n_steps: usize,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    t_end: f64,
    dt: f64,
}

impl TryFrom<GridSpec> for TimeGrid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        TimeGrid::new(spec.t_end, spec.dt)
    }
}

impl From<TimeGrid> for GridSpec {
    fn from(grid: TimeGrid) -> Self {
        GridSpec {
            t_end: grid.t_end,
            dt: grid.dt,
        }
    }
}

impl TimeGrid {
    /// Builds the grid; `t_end` must be an integer multiple of `dt`.
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidInput(format!(
                "t_end must be positive, got {t_end}"
            )));
        }
        let steps = (t_end / dt).round();
        if steps < 1.0 || steps > u32::MAX as f64 {
            return Err(Error::InvalidInput(format!(
                "t_end/dt = {} does not give a usable step count",
                t_end / dt
            )));
        }
        let n_steps = steps as usize;
        if (n_steps as f64 * dt - t_end).abs() > 1e-12 * t_end {
            return Err(Error::InvalidInput(format!(
                "t_end={t_end} is not an integer multiple of dt={dt}"
            )));
        }
        Ok(Self { t_end, dt, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.time(j))
    }

    pub(crate) fn check_len(&self, actual: usize) -> Result<()> {
        if actual == self.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: self.len(),
                actual,
            })
        }
    }
}

/// Instantaneous membrane state `(V, m, n, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub v: f64,
    pub m: f64,
    pub n: f64,
    pub h: f64,
}

/// Sodium, potassium and leak current densities in µA/cm².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonicCurrents {
    pub i_na: f64,
    pub i_k: f64,
    pub i_l: f64,
}

impl IonicCurrents {
    pub fn total(&self) -> f64 {
        self.i_na + self.i_k + self.i_l
    }
}

/// `max(x, GATE_FLOOR)^p`.
#[inline]
pub(crate) fn gate_pow(x: f64, p: f64) -> f64 {
    let x = x.max(GATE_FLOOR);
    // small integer exponents are the common case and powi is much cheaper
    if p == p.trunc() && p.abs() <= 16.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

/// Sodium and potassium channel open fractions `m^a h^b` and `n^c`.
#[inline]
pub(crate) fn open_fractions(e: &Exponents, m: f64, n: f64, h: f64) -> (f64, f64) {
    (gate_pow(m, e.a) * gate_pow(h, e.b), gate_pow(n, e.c))
}

#[inline]
pub(crate) fn currents_unchecked(
    consts: &ModelConstants,
    g: &Conductances,
    e: &Exponents,
    s: &State,
) -> IonicCurrents {
    let (na_open, k_open) = open_fractions(e, s.m, s.n, s.h);
    IonicCurrents {
        i_na: g.g_na * na_open * (s.v - consts.e_na),
        i_k: g.g_k * k_open * (s.v - consts.e_k),
        i_l: g.g_l * (s.v - consts.e_l),
    }
}

/// Ionic current densities for one membrane state.
///
/// Gate values that are non-positive are only accepted with integer
/// exponents; otherwise the real power is undefined.
pub fn ionic_currents(
    consts: &ModelConstants,
    g: &Conductances,
    e: &Exponents,
    state: &State,
) -> Result<IonicCurrents> {
    for (gate, x, p) in [
        ("m", state.m, e.a),
        ("h", state.h, e.b),
        ("n", state.n, e.c),
    ] {
        if !x.is_finite() || !p.is_finite() {
            return Err(Error::Domain(format!("{gate}={x} raised to {p}")));
        }
        if x <= 0.0 && p.fract() != 0.0 {
            return Err(Error::Domain(format!(
                "non-positive gate {gate}={x} raised to non-integer power {p}"
            )));
        }
    }
    if !state.v.is_finite() {
        return Err(Error::Domain(format!(
            "membrane potential must be finite, got {}",
            state.v
        )));
    }
    Ok(currents_unchecked(consts, g, e, state))
}
