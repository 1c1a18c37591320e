//! Weierstrass data for genus-zero complete maximal maps and maxfaces in
//! Lorentz-Minkowski space `E^3_1`.
//!
//! The crate is organised bottom-up:
//!
//! * [`rational`]: complex polynomials and rational functions on the
//!   Riemann sphere: roots, arithmetic, orders, Laurent data and residues.
//! * [`gauss_map`]: Blaschke products and Gauss maps with a prescribed
//!   singular curve.
//! * [`period_solver`]: residue-vanishing linear systems producing the
//!   height differential, simple ends and the maxface perturbation.
//! * [`weierstrass`]: the immersion, the induced metric and every check a
//!   complete maximal map has to pass.
//! * [`sampler`]: meshing, spanning-tree integration and OBJ/CSV export.
//! * [`pipeline`]: JSON job specifications and the demo fixtures.

pub mod error;
pub mod fixtures;
pub mod gauss_map;
pub mod linalg;
pub mod period_solver;
pub mod pipeline;
pub mod quadrature;
pub mod rational;
pub mod sampler;
pub mod weierstrass;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use rational::{Divisor, PointExt, Poly, RationalFn};
pub use weierstrass::{SurfacePoint, VerificationReport, WeierstrassData};
