use alloc::string::String;
use alloc::vec::Vec;

use crate::mdp::{Dims, Policy};
use crate::privacy::Ledger;

/// Output of a pessimistic learner: the greedy policy plus the tables that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedPolicy {
    pub policy: Policy,
    dims: Dims,
    /// Clipped pessimistic Q, `[h][s][a]`.
    q: Vec<f64>,
    /// `[h][s]` with a terminal zero row at `h = H`.
    v: Vec<f64>,
    /// Pessimism bonus, `[h][s][a]`.
    bonus: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl LearnedPolicy {
    pub(crate) fn new(policy: Policy, q: Vec<f64>, v: Vec<f64>, bonus: Vec<f64>, diagnostics: Diagnostics) -> Self {
        let dims = policy.dims();
        LearnedPolicy { policy, dims, q, v, bonus, diagnostics }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[self.dims.hsa(h, s, a)]
    }

    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.dims.states + s]
    }

    pub fn bonus(&self, h: usize, s: usize, a: usize) -> f64 {
        self.bonus[self.dims.hsa(h, s, a)]
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q
    }

    pub fn v_table(&self) -> &[f64] {
        &self.v
    }

    pub fn bonus_table(&self) -> &[f64] {
        &self.bonus
    }

    /// Same policy and tables, ignoring diagnostics.
    pub fn same_tables(&self, other: &LearnedPolicy) -> bool {
        self.policy == other.policy && self.q == other.q && self.v == other.v && self.bonus == other.bonus
    }
}

/// Run metadata: privacy ledger, named scalars and conditioning events.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub ledger: Ledger,
    pub scalars: Vec<(String, f64)>,
    /// Number of Gram matrices whose spectrum had to be lifted to the floor.
    pub eigen_clamps: usize,
}

impl Diagnostics {
    pub fn new(ledger: Ledger) -> Self {
        Diagnostics { ledger, scalars: Vec::new(), eigen_clamps: 0 }
    }

    pub fn push(&mut self, name: &str, value: f64) {
        self.scalars.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.scalars.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}
