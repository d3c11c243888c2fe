//! Exact decision procedures for causal-effect identifiability in
//! semi-Markovian models, plus machinery to *prove* the negative answers.
//!
//! The crate answers two questions about a causal graph `G` over observed
//! variables `V` with latent confounding drawn as bidirected edges:
//!
//! * **Identifiability** — is the interventional distribution `P_x(Y)`
//!   computable from the observational distribution `P(V)` alone?
//!   ([`id::id`])
//! * **G-identifiability** — is it computable from a collection of
//!   interventional inputs `Q[A_0], …, Q[A_m]` (each "all of `V` except
//!   `A_i` held fixed"), assuming a strictly positive observational
//!   distribution? ([`gid::gid`])
//!
//! Positive answers come with a symbolic estimand ([`estimand::Estimand`])
//! that evaluates to exact rationals against concrete input tables.
//! Negative answers can be certified by [`witness::build_witness`], which
//! synthesizes two discrete models that agree on every given input but
//! disagree on the query — and verifies the pair by exhaustive enumeration
//! before returning it.
//!
//! All arithmetic is exact (arbitrary-precision rationals); all set and
//! iteration orders are canonical (lexicographic), so every run of every
//! operation is bit-for-bit deterministic.
//!
//! The enumeration kernels are data-parallel via rayon when the `parallel`
//! feature (default) is enabled; disabling it yields a dependency-free
//! sequential build with identical results. See [`exec`].

pub mod error;
pub mod estimand;
pub mod exec;
pub mod graph;
pub mod id;
pub mod gid;
pub mod linalg;
pub mod rational;
pub mod sem;
pub mod table;
pub mod witness;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use estimand::Estimand;
pub use graph::{CausalGraph, VarId, VarSet};
pub use rational::Rat;
pub use sem::DiscreteSem;
pub use table::DistTable;
