//! Bandits with fixed, known expert advice.
//!
//! The crate covers four layers:
//!
//! - [`policy_sets`]: validated policy sets and the structured families
//!   (flower, all-but-one uniform, epsilon-uniform, multi-task).
//! - [`divergences`]: similarity indices `S`, `S*`, `TV`, the KL width `D*`
//!   and the usual pairwise divergences.
//! - [`learners`]: EXP4 over the policy set and online stochastic mirror
//!   descent over the convex hull of the policies, built on the simplex
//!   solvers in [`hull`].
//! - [`environments`] and [`harness`]: loss sources, lower-bound instance
//!   families and a seeded Monte Carlo regret estimator.
//!
//! All logarithms are natural.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod divergences;
pub mod environments;
mod error;
pub mod harness;
pub mod hull;
pub mod learners;
pub mod policy_sets;
pub mod sampling;

pub use error::{Error, Result};
pub use policy_sets::{PolicyOrdering, PolicySet};
