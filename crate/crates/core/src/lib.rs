//! Equivalence verification for versions of dataflow DAGs.
//!
//! Two versions of a workflow are compared by decomposing the pair into
//! windows that a pluggable equivalence verifier can reason about, then
//! searching over decompositions until every changed region is proven
//! equivalent, a counterexample is found, or the search is exhausted.

pub mod accel;
pub mod corpus;
pub mod decompose;
pub mod edit;
pub mod orchestrator;
pub mod ev;
pub mod io;
pub mod window;
pub mod workflow;
