//! Graded-commutative differential polynomials over jet coordinates.
//!
//! Every [`Expression`] is kept in canonical form: even factors sorted with
//! exponents, odd factors strictly sorted with the Koszul sign of the
//! sorting permutation folded into the rational coefficient.

mod expr;
mod grading;
mod signature;

pub use expr::{int, rat, Atom, Expression, JetCoord, Rational, Side, Term};
pub use grading::{Grading, Parity};
pub use signature::{GeneratorSpec, IndexRange, Role, Signature};
