//! Offline reinforcement learning with differentially private statistics.
//!
//! Tabular learners ([`apvi::dp_apvi`], [`apvi::apvi`]) release noisy visit
//! counts and run Bernstein-style pessimistic value iteration on the
//! projected counts. Linear-MDP learners ([`vapvi::dp_vapvi`],
//! [`vapvi::vapvi`], [`vapvi::pevi`]) run pessimistic least-squares value
//! iteration on (noised) regression statistics.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod apvi;
pub mod counts;
pub mod envs;
pub mod error;
pub mod learned;
pub mod linalg;
pub mod mdp;
pub mod privacy;
pub mod regression;
pub mod vapvi;

pub use error::{Error, Result};
pub use learned::{Diagnostics, LearnedPolicy};
pub use mdp::{Dataset, Dims, LinearMdp, Policy, TabularMdp, Transition};

use rand::SeedableRng;

/// The generator used throughout: ChaCha8 seeded from a `u64`.
pub type Rng64 = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng64 {
    Rng64::seed_from_u64(seed)
}
