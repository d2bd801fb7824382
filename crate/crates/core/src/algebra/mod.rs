//! Exact polynomial ring `Q[J1, J2, J3, x1, x2, x3, kappa, c1]` and the
//! Lie-Poisson bracket of the so(4) / e(3) / so(3,1) pencil.
//!
//! Everything here is exact: an identity such as `{H, K} = 0` is checked as
//! equality of polynomials, never up to a tolerance.

mod bracket;
mod poly;

pub use bracket::{jacobi_defect, poisson_bracket, StructureTable};
pub use poly::{CompiledPoly, Monomial, Poly, PolyParseError, Var, NVARS};
