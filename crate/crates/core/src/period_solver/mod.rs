//! Residue-vanishing systems for the 1-form `omega = F dz` and for the
//! perturbation `g0` of the Gauss map.

mod ansatz;
mod perturb;
mod select;
mod solve;
mod system;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::rational::{cpair, RationalFn};

pub use ansatz::{
    build_ansatz_alternative, build_ansatz_basic, build_ansatz_correction, build_ansatz_simple_ends,
    default_c, family_from_h, with_infinity_terms, AnsatzFamily, AnsatzKind,
};
pub use perturb::{perturb_to_maxface, PerturbMode, Perturbation};
pub use solve::{solve_complete_ends, solve_simple_ends};
pub use system::{assemble_residue_system, nullspace, Moment, ResidueSystem, RowLabel};

/// Knobs shared by the solvers.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub seed: u64,
    /// Relative singular-value cutoff for kernels.
    pub rank_tol: f64,
    /// A pole counts as present when its presence ratio reaches this.
    pub presence_tol: f64,
    /// Random kernel vectors tried when selecting a solution.
    pub samples: usize,
    /// Accepted residual of the imposed residue conditions.
    pub residual_tol: f64,
    /// Point `c` of the `h`-ansatz; defaults to [`default_c`].
    #[serde(with = "cpair::option")]
    pub c: Option<Complex64>,
    pub newton_iterations: usize,
    pub newton_seeds: usize,
    /// Disk on which `sup |g0|` is normalised to `epsilon / 2`.
    #[serde(with = "cpair::option")]
    pub control_center: Option<Complex64>,
    pub control_radius: f64,
    pub perturb_mode: PerturbMode,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            seed: 0,
            rank_tol: 1e-9,
            presence_tol: 1e-6,
            samples: 64,
            residual_tol: 1e-9,
            c: None,
            newton_iterations: 100,
            newton_seeds: 8,
            control_center: None,
            control_radius: 0.5,
            perturb_mode: PerturbMode::Strict,
        }
    }
}

/// Pole orders of `omega` and `g^2 omega` at one end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndOrders {
    pub omega: i32,
    pub g2_omega: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    /// Kernel dimension of the main stage.
    pub nullspace_dim: usize,
    /// Kernel dimension of every stage, main stage first.
    pub stage_dims: Vec<usize>,
    /// Largest imposed residue condition, evaluated on the returned data.
    pub residual: f64,
    #[serde(with = "cpair::vec")]
    pub coeffs: Vec<Complex64>,
    pub labels: Vec<String>,
    pub end_orders: BTreeMap<String, EndOrders>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// `sum c_u basis_u`
pub fn combine(basis: &[RationalFn], coeffs: &[Complex64]) -> RationalFn {
    basis
        .iter()
        .zip(coeffs)
        .filter(|(_, c)| c.norm() > 0.0)
        .fold(RationalFn::zero(), |acc, (b, &c)| acc.add(&b.scale(c)))
}
