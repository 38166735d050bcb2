//! Bounded-width solving for constraint satisfaction problems whose template
//! is preserved by three Jónsson operations witnessing congruence
//! distributivity (the variety class CD(4)).
//!
//! The pipeline: certify the algebra, replace its terms by retractive
//! iterates, compute the greatest (k-1,k)-strategy, then shrink it with
//! ideal reductions and simple reductions until every coordinate is fixed.

pub mod algebra;
pub mod congruence;
pub mod error;
pub mod ideals;
pub mod jonsson;
pub mod oracle;
pub mod power;
pub mod reductions;
pub mod relstruct;
pub mod strategy;

pub use algebra::{FiniteAlgebra, Op, OperationTable, TermExpr};
pub use congruence::Congruence;
pub use error::{Error, Result};
pub use ideals::{Carrier, IdealSide};
pub use power::{ElemSet, Power};
pub use relstruct::{Assignment, RelStructure};
pub use strategy::{Consistency, Strategy};
pub use reductions::{solve, SolveOptions, SolveOutcome, SolveTrace};

/// Version of the JSON file formats read and written by this crate.
pub const SCHEMA_VERSION: u32 = 1;
