//! Topology of isoenergy surfaces for the Kovalevskaya integrable case on so(4).
//!
//! The crate is organised bottom-up:
//!
//! - [`algebra`]: exact polynomials and the pencil Lie-Poisson bracket.
//! - [`system`]: Casimirs, Hamiltonian, the integral `K`, numeric evaluation
//!   and projection onto isoenergy surfaces.
//! - [`molecule`]: labeled molecules (Fomenko-Zieschang invariants) and their
//!   text format.
//! - [`homology`]: integer gluing matrices, Smith normal form and `H1`.
//! - [`classify`]: manifold classes, rewrite moves, the base-case dictionary
//!   and type propagation along identification arrows.
//! - [`scanner`]: sampling, component counting and critical values of `K`.
//! - [`corpus`]: loader for the shipped molecule corpus and arrow table.

pub mod algebra;
pub mod classify;
pub mod corpus;
pub mod homology;
pub mod molecule;
pub mod scanner;
pub mod system;

pub use algebra::{poisson_bracket, Poly, Var};
pub use classify::{classify, ManifoldClass};
pub use homology::{first_homology, AbelianGroup};
pub use molecule::{parse_molecule, Molecule};
pub use system::{OrbitParams, PhasePoint};
