//! Subregularity of set-valued mappings under a nonlinear gauge: primal and dual slopes,
//! coderivatives, error-bound moduli and the implication audit between criteria.

// `!(a < b)` is used on purpose so that NaN lands on the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod corpus;
pub mod criteria;
pub mod dual_slopes;
pub mod error;
pub mod ext;
pub mod mappings;
pub mod oracle;
pub mod primal_slopes;
pub mod problem;
pub mod spaces;

pub use error::{Error, Result};
pub use problem::{Hypotheses, Problem, ProblemSpec, Sampling};
