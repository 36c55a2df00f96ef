//! Factorization of noncommutative polynomials over finite fields.
//!
//! Inputs are arithmetic formulas in noncommuting variables. The pipeline
//! linearizes the formula, brings the linear pencil into atomic block form and
//! reads off irreducible factors as algebraic branching programs.

pub mod abp;
pub mod cli;
pub mod error;
pub mod expr;
pub mod field;
pub mod higman;
pub mod invsub;
pub mod linfact;
pub mod linmat;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
pub use field::{Fe, FieldCtx, Matrix, Subspace, UniPoly};
