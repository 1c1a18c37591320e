//! Complex polynomials and rational functions on the Riemann sphere.

pub mod cpair;
mod func;
mod laurent;
mod point;
mod poly;
mod roots;

pub use func::{residue_of_product, RationalFn};
pub use laurent::Laurent;
pub use point::{lex_cmp as lex_cmp_points, same_point, Divisor, PointExt, TAU_GCD};
pub use poly::Poly;
pub use roots::{poly_roots, TAU_CLUSTER};

#[cfg(test)]
mod tests;
