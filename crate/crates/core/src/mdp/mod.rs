//! Finite-horizon MDPs, policies and offline datasets.
//!
//! All step indices are zero-based: `h = 0` is the first decision step and
//! `h = horizon - 1` the last. A value table at step `h` is therefore bounded
//! by `horizon - h`.

mod eval;
mod linear;
mod sample;

pub use eval::{
    exact_policy_value, occupancy, solve_optimal, OccupancyTable, OptimalSolution, PolicyValue,
};
pub use linear::{tabularize, validate_linear_mdp, LinearMdp, ValidationReport, Violation};
pub use sample::{monte_carlo_value, sample_dataset, MonteCarloEstimate};

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::error::{dim_err, Error, Result};

/// Tolerance on probability-vector sums.
pub const PROB_TOL: f64 = 1e-12;

/// Tabular, time-inhomogeneous finite-horizon MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    states: usize,
    actions: usize,
    horizon: usize,
    transitions: Vec<f64>,
    rewards: Vec<f64>,
    initial: Vec<f64>,
}

impl TabularMdp {
    /// `transitions` is `[h][s][a][s']` and `rewards` is `[h][s][a]`, both
    /// flattened row-major.
    pub fn new(
        states: usize,
        actions: usize,
        horizon: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if states == 0 || actions == 0 || horizon == 0 {
            return Err(dim_err!("S, A and H must be positive (got {states}, {actions}, {horizon})"));
        }
        let rows = horizon * states * actions;
        if transitions.len() != rows * states {
            return Err(dim_err!("transitions has {} entries, expected {}", transitions.len(), rows * states));
        }
        if rewards.len() != rows {
            return Err(dim_err!("rewards has {} entries, expected {rows}", rewards.len()));
        }
        if initial.len() != states {
            return Err(dim_err!("initial distribution has {} entries, expected {states}", initial.len()));
        }
        for (row, p) in transitions.chunks(states).enumerate() {
            check_probability_vector(p).map_err(|msg| {
                let (h, s, a) = (row / (states * actions), (row / actions) % states, row % actions);
                Error::InvalidModel(alloc::format!("P[{h}][{s}][{a}] {msg}"))
            })?;
        }
        if let Some((i, r)) = rewards.iter().enumerate().find(|(_, r)| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidModel(alloc::format!("reward #{i} = {r} is outside [0, 1]")));
        }
        check_probability_vector(&initial)
            .map_err(|msg| Error::InvalidModel(alloc::format!("initial distribution {msg}")))?;
        Ok(TabularMdp { states, actions, horizon, transitions, rewards, initial })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn transition(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let row = (h * self.states + s) * self.actions + a;
        &self.transitions[row * self.states..(row + 1) * self.states]
    }

    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.rewards[(h * self.states + s) * self.actions + a]
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Flattened `[h][s][a][s']`.
    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// Flattened `[h][s][a]`.
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn dims(&self) -> Dims {
        Dims { states: self.states, actions: self.actions, horizon: self.horizon }
    }
}

/// State, action and horizon sizes shared by models, datasets and learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub states: usize,
    pub actions: usize,
    pub horizon: usize,
}

impl Dims {
    pub fn sa(&self) -> usize {
        self.states * self.actions
    }

    pub(crate) fn hsa(&self, h: usize, s: usize, a: usize) -> usize {
        (h * self.states + s) * self.actions + a
    }
}

fn check_probability_vector(p: &[f64]) -> core::result::Result<(), alloc::string::String> {
    if let Some(v) = p.iter().find(|v| !(**v >= 0.0)) {
        return Err(alloc::format!("has a negative or non-finite entry {v}"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(alloc::format!("sums to {sum}"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum PolicyTable {
    Deterministic(Vec<usize>),
    Stochastic(Vec<f64>),
}

/// Per-step policy, either a chosen action per `(h, s)` or a distribution over
/// actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    dims: Dims,
    table: PolicyTable,
}

impl Policy {
    /// `actions` is indexed `[h][s]`.
    pub fn deterministic(dims: Dims, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != dims.horizon * dims.states {
            return Err(dim_err!("policy table has {} entries, expected {}", actions.len(), dims.horizon * dims.states));
        }
        if let Some(a) = actions.iter().find(|&&a| a >= dims.actions) {
            return Err(dim_err!("action index {a} out of range for A = {}", dims.actions));
        }
        Ok(Policy { dims, table: PolicyTable::Deterministic(actions) })
    }

    /// `probs` is indexed `[h][s][a]`.
    pub fn stochastic(dims: Dims, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != dims.horizon * dims.sa() {
            return Err(dim_err!("policy table has {} entries, expected {}", probs.len(), dims.horizon * dims.sa()));
        }
        for (i, row) in probs.chunks(dims.actions).enumerate() {
            check_probability_vector(row).map_err(|msg| {
                Error::InvalidParameter(alloc::format!(
                    "policy row (h={}, s={}) {msg}",
                    i / dims.states,
                    i % dims.states
                ))
            })?;
        }
        Ok(Policy { dims, table: PolicyTable::Stochastic(probs) })
    }

    pub fn uniform(dims: Dims) -> Self {
        let p = 1.0 / dims.actions as f64;
        Policy { dims, table: PolicyTable::Stochastic(vec![p; dims.horizon * dims.sa()]) }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.table, PolicyTable::Deterministic(_))
    }

    /// Chosen action of a deterministic policy.
    pub fn action(&self, h: usize, s: usize) -> Option<usize> {
        match &self.table {
            PolicyTable::Deterministic(t) => Some(t[h * self.dims.states + s]),
            PolicyTable::Stochastic(_) => None,
        }
    }

    pub fn prob(&self, h: usize, s: usize, a: usize) -> f64 {
        match &self.table {
            PolicyTable::Deterministic(t) => {
                if t[h * self.dims.states + s] == a {
                    1.0
                } else {
                    0.0
                }
            }
            PolicyTable::Stochastic(p) => p[self.dims.hsa(h, s, a)],
        }
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, h: usize, s: usize, rng: &mut R) -> usize {
        match &self.table {
            PolicyTable::Deterministic(t) => t[h * self.dims.states + s],
            PolicyTable::Stochastic(p) => {
                let start = self.dims.hsa(h, s, 0);
                sample_categorical(&p[start..start + self.dims.actions], rng)
            }
        }
    }

    pub(crate) fn check_dims(&self, dims: Dims) -> Result<()> {
        if self.dims != dims {
            return Err(dim_err!("policy dims {:?} do not match model dims {:?}", self.dims, dims));
        }
        Ok(())
    }
}

/// One `(s_h, a_h, r_h, s_{h+1})` tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// Offline episodic data: every trajectory has exactly `horizon` transitions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    horizon: usize,
    trajectories: Vec<Vec<Transition>>,
}

impl Dataset {
    pub fn new(horizon: usize, trajectories: Vec<Vec<Transition>>) -> Result<Self> {
        for (i, t) in trajectories.iter().enumerate() {
            if t.len() != horizon {
                return Err(dim_err!("trajectory {i} has {} steps, expected {horizon}", t.len()));
            }
            if let Some(tr) = t.iter().find(|tr| !(0.0..=1.0).contains(&tr.reward)) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "trajectory {i} has reward {} outside [0, 1]",
                    tr.reward
                )));
            }
        }
        Ok(Dataset { horizon, trajectories })
    }

    pub fn empty(horizon: usize) -> Self {
        Dataset { horizon, trajectories: Vec::new() }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of trajectories.
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn trajectories(&self) -> &[Vec<Transition>] {
        &self.trajectories
    }

    /// All transitions recorded at step `h`, one per trajectory.
    pub fn step(&self, h: usize) -> impl Iterator<Item = &Transition> + '_ {
        self.trajectories.iter().map(move |t| &t[h])
    }

    /// Checks every state and action index against `dims`.
    pub fn check_indices(&self, dims: Dims) -> Result<()> {
        if self.horizon != dims.horizon {
            return Err(dim_err!("dataset horizon {} does not match H = {}", self.horizon, dims.horizon));
        }
        for (i, traj) in self.trajectories.iter().enumerate() {
            for (h, tr) in traj.iter().enumerate() {
                if tr.state >= dims.states || tr.next_state >= dims.states || tr.action >= dims.actions {
                    return Err(dim_err!(
                        "trajectory {i}, step {h}: ({}, {}, {}) out of range for S = {}, A = {}",
                        tr.state,
                        tr.action,
                        tr.next_state,
                        dims.states,
                        dims.actions
                    ));
                }
            }
        }
        Ok(())
    }

    /// Splits into the first `k` trajectories and the rest.
    pub fn split_at(&self, k: usize) -> (Dataset, Dataset) {
        let k = k.min(self.len());
        (
            Dataset { horizon: self.horizon, trajectories: self.trajectories[..k].to_vec() },
            Dataset { horizon: self.horizon, trajectories: self.trajectories[k..].to_vec() },
        )
    }
}

/// Draws an index from a probability vector. Zero-probability entries are
/// never returned.
pub(crate) fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Greedy action with ties broken toward the lowest index.
pub fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_val = values[0];
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    (best, best_val)
}
