//! Exact symbolic calculus of variations on jet spaces and the classical
//! Batalin–Vilkovisky formalism.
//!
//! The crate is organised bottom-up:
//!
//! - [`graded`]: graded commutative polynomials in jet coordinates with exact
//!   rational coefficients and Koszul signs;
//! - [`jet`]: total and variational derivatives, divergence tests and witnesses;
//! - [`variational`]: theories, symmetries, Noether identities, on-shell
//!   reduction and exact evaluation of functionals on polynomial sections;
//! - [`bv`]: field–antifield extensions, antibracket, Koszul–Tate differential
//!   and the classical master equation;
//! - [`models`]: built-in example theories;
//! - [`frontend`]: expression and model-file parsing and formatting.
//!
//! Expensive loops run through [`exec`], which uses rayon when the
//! `parallel` feature is enabled (the default) and is sequential otherwise.

pub mod bv;
pub mod error;
pub mod exec;
pub mod frontend;
pub mod graded;
pub mod jet;
pub mod models;
pub mod variational;

pub use error::{Error, ParseError, ParseErrorKind, Result, SourcePos};
pub use exec::ExecPolicy;
pub use graded::{Atom, Expression, GeneratorSpec, Grading, IndexRange, JetCoord, Parity, Rational, Role, Side, Signature};
pub use variational::{LocalFunctional, NoetherOperator, Section, Theory};
