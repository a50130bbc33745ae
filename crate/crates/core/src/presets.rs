//! The two reference experiments on squid-axon constants: recovering
//! conductances over 10 ms and recovering gating exponents over 5 ms, both
//! sampled with Δt = 0.02 ms.
//!
//! The exponent inversion starts from `(0, 0, 0)`, where the total
//! conductance is about 156 mS/cm² and explicit Euler at Δt = 0.02 is
//! unstable (Δt·G/C_M > 2). [`exponent_table_example`] therefore halves the
//! step for runs that start there.

use crate::model::{Conductances, Exponents, ModelConstants, TimeGrid};

/// Noise levels used for the reference result tables.
pub const TABLE_EPSILONS: [f64; 5] = [1.25, 0.25, 0.05, 0.01, 0.002];

/// Discrepancy factor used in the reference experiments.
pub const REFERENCE_TAU: f64 = 2.01;

/// Constants, true parameters and grid of one reference experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    pub consts: ModelConstants,
    pub conductances: Conductances,
    pub exponents: Exponents,
    pub grid: TimeGrid,
}

pub fn squid_constants() -> ModelConstants {
    ModelConstants {
        c_m: 1.0,
        e_na: 115.0,
        e_k: -12.0,
        e_l: 10.598,
        i_ext: 0.0,
        v0: -25.0,
        m0: 0.5,
        n0: 0.4,
        h0: 0.4,
    }
}

fn setup(t_end: f64) -> Setup {
    Setup {
        consts: squid_constants(),
        conductances: Conductances::new(120.0, 36.0, 0.3),
        exponents: Exponents::new(3.0, 1.0, 4.0),
        grid: TimeGrid::new(t_end, 0.02).expect("reference grid is valid"),
    }
}

/// Conductance-recovery experiment, T = 10 ms.
pub fn conductance_example() -> Setup {
    setup(10.0)
}

/// Exponent-recovery experiment, T = 5 ms.
pub fn exponent_example() -> Setup {
    setup(5.0)
}

/// Step used for exponent inversions that start from `(0, 0, 0)`.
pub const EXPONENT_TABLE_DT: f64 = 0.01;

/// Exponent-recovery experiment on the finer grid that keeps Euler stable
/// at the zero initial guess.
pub fn exponent_table_example() -> Setup {
    Setup {
        grid: TimeGrid::new(5.0, EXPONENT_TABLE_DT).expect("reference grid is valid"),
        ..setup(5.0)
    }
}
