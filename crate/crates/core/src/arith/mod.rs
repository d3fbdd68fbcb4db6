//! Arithmetic over F_p and F_{p²}, supersingularity, modular polynomials.

mod curve;
mod field;
pub mod modpoly;
pub mod poly;

pub use curve::{find_seed_j, is_supersingular_fp, phi_neighbors, twist_codes, CurveCode};
pub use field::{FieldCtx, Fp2Elem, MAX_P};
pub use modpoly::{ModularPolynomial, ReducedModPoly};
