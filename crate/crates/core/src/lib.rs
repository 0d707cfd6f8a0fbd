//! Parsing, execution and exact analysis of fully probabilistic pGCL
//! programs.
//!
//! * [`parser`] / [`pretty`]: concrete syntax, round-tripping.
//! * [`semantics`]: the small-step relation, the successor function `T` and
//!   the weight functions `α` and `℘`.
//! * [`explorer`]: monotone partial sums of expected outcome, termination
//!   probability and expected runtime, with certified lower bounds.
//! * [`chain`]: exact solving of finite-state programs as absorbing Markov
//!   chains.
//! * [`reductions`]: generators for the halting-problem reduction programs.
//! * [`sampler`]: seeded Monte-Carlo runs for statistical cross-checks.

pub mod ast;
pub mod chain;
pub mod explorer;
pub mod parser;
pub mod pretty;
pub mod rational;
pub mod reductions;
pub mod sampler;
pub mod semantics;
pub mod valuation;

pub use ast::{ArithExpr, BoolExpr, CmpOp, Program};
pub use parser::{parse, parse_valuation, ParseError};
pub use pretty::pretty;
pub use rational::Rational;
pub use semantics::{Branch, Continuation, State, StepResult};
pub use valuation::Valuation;
