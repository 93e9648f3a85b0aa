//! Models for randomized congestion signalling.
//!
//! A population of `N` agents repeatedly chooses between two congestible
//! actions `A` and `B`. A central agent observes the previous allocation and
//! sends either per-agent noisy cost reports ([`scalar`]) or one broadcast pair
//! of cost intervals ([`interval`]). Injected uncertainty de-synchronizes the
//! agents' greedy responses and suppresses flapping.
//!
//! The crate is split into:
//!
//! - [`cost`]: per-action cost functions, social cost and the social optimum.
//! - [`population`]: agent-type distributions and their materialization.
//! - [`scalar`] / [`interval`]: the two signalling schemes and decision rules.
//! - [`analytics`]: exact next-step laws, expected costs, concentration bounds,
//!   the fixed-point map and interval-scheme choice probabilities.
//! - [`sim`]: a seeded, reproducible closed-loop simulator.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod cost;
mod error;
pub mod interval;
pub mod population;
pub mod rng;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};

/// One of the two congestible resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    A,
    B,
}
