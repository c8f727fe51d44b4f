//! Stochastic graph rewriting over typed directed multigraphs.
//!
//! DPO and SqPO direct derivations, rule composition and its operator
//! representation on truncated state bases, weighted species generated by
//! rewriting, and the CTMC / embedded DTMC machinery built on pattern-count
//! observables. Two instances ship with the crate: planar rooted binary trees
//! grown by Rémy's rules, and a birth-death process on vertex-only graphs.

pub mod algebra;
pub mod canon;
pub mod condition;
pub mod graph;
pub mod instances;
pub mod json;
pub mod linalg;
pub mod markov;
pub mod operator;
pub mod rewrite;
pub mod species;

/// Exact rational coefficients.
pub type Q = num_rational::BigRational;
