//! Synthetic environments and behavior policies used by the experiments.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::mdp::{Dims, LinearMdp, Policy, TabularMdp};

pub const BINARY_STATES: usize = 2;
pub const BINARY_ACTIONS: usize = 100;
pub const BINARY_DIM: usize = 10;
const ACTION_BITS: usize = 8;

/// 8-bit binary encoding of `a`, most significant bit first.
pub fn action_bits(a: usize) -> [f64; ACTION_BITS] {
    let mut out = [0.0; ACTION_BITS];
    for (i, bit) in out.iter_mut().enumerate() {
        *bit = ((a >> (ACTION_BITS - 1 - i)) & 1) as f64;
    }
    out
}

/// `phi(s, a) = (bits(a), delta, 1 - delta)` with `delta = 1` iff
/// `1{s = 0} == 1{a = 0}`.
pub fn binary_feature(s: usize, a: usize) -> [f64; BINARY_DIM] {
    let mut phi = [0.0; BINARY_DIM];
    phi[..ACTION_BITS].copy_from_slice(&action_bits(a));
    let delta = if (s == 0) == (a == 0) { 1.0 } else { 0.0 };
    phi[8] = delta;
    phi[9] = 1.0 - delta;
    phi
}

/// Two-state, 100-action linear MDP with `d = 10`. Per step, `alpha_1`,
/// `alpha_2` and `r` are drawn uniformly from `[0, 1]`; the initial
/// distribution is uniform.
pub fn binary_action_mdp<R: Rng + ?Sized>(horizon: usize, rng: &mut R) -> Result<LinearMdp> {
    let (ns, na, d) = (BINARY_STATES, BINARY_ACTIONS, BINARY_DIM);
    let mut features = Vec::with_capacity(ns * na * d);
    for s in 0..ns {
        for a in 0..na {
            features.extend_from_slice(&binary_feature(s, a));
        }
    }
    let mut measures = Vec::with_capacity(horizon * ns * d);
    let mut reward_weights = Vec::with_capacity(horizon * d);
    for _ in 0..horizon {
        let a1: f64 = rng.gen();
        let a2: f64 = rng.gen();
        let r: f64 = rng.gen();
        let mut nu0 = [0.0; BINARY_DIM];
        nu0[8] = a1;
        nu0[9] = a2;
        let mut nu1 = [0.0; BINARY_DIM];
        nu1[8] = 1.0 - a1;
        nu1[9] = 1.0 - a2;
        measures.extend_from_slice(&nu0);
        measures.extend_from_slice(&nu1);
        let e = r / 8.0;
        reward_weights.extend_from_slice(&[e, 0.0, e, 0.5 - r / 2.0, e, 0.0, e, 0.0, r / 2.0, 0.5 - r / 2.0]);
    }
    LinearMdp::new(ns, na, horizon, d, features, measures, reward_weights, vec![0.5, 0.5])
}

/// [`binary_action_mdp`] drawn from a ChaCha stream seeded with `seed`.
pub fn build_binary_action_mdp(horizon: usize, seed: u64) -> Result<LinearMdp> {
    binary_action_mdp(horizon, &mut crate::seeded_rng(seed))
}

/// Picks action 0 with probability `p` and each other action with
/// probability `(1 - p) / 99`, at every step and state.
pub fn binary_action_behavior(horizon: usize, p: f64) -> Result<Policy> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("p = {p} must lie in (0, 1)")));
    }
    let rest = (1.0 - p) / (BINARY_ACTIONS - 1) as f64;
    let mut row = vec![rest; BINARY_ACTIONS];
    row[0] = p;
    let dims = Dims { states: BINARY_STATES, actions: BINARY_ACTIONS, horizon };
    let probs = row.iter().copied().cycle().take(horizon * BINARY_STATES * BINARY_ACTIONS).collect();
    Policy::stochastic(dims, probs)
}

fn dirichlet_row<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = row.iter().sum();
    for p in &mut row {
        *p /= total;
    }
    let last = len - 1;
    row[last] = (1.0 - row[..last].iter().sum::<f64>()).max(0.0);
    row
}

/// Tabular MDP with flat-Dirichlet transition rows, uniform `[0, 1]` mean
/// rewards and a uniform initial distribution.
pub fn random_tabular_mdp<R: Rng + ?Sized>(states: usize, actions: usize, horizon: usize, rng: &mut R) -> Result<TabularMdp> {
    if states == 0 || actions == 0 || horizon == 0 {
        return Err(Error::InvalidParameter("S, A and H must be positive".into()));
    }
    let mut transitions = Vec::with_capacity(horizon * states * actions * states);
    for _ in 0..horizon * states * actions {
        transitions.extend(dirichlet_row(states, rng));
    }
    let rewards = (0..horizon * states * actions).map(|_| rng.gen::<f64>()).collect();
    let initial = vec![1.0 / states as f64; states];
    TabularMdp::new(states, actions, horizon, transitions, rewards, initial)
}

/// Mixes a deterministic policy with the uniform one: the greedy action keeps
/// `1 - eps + eps / A`, every other action gets `eps / A`.
pub fn epsilon_greedy(pi: &Policy, eps: f64) -> Result<Policy> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(alloc::format!("eps = {eps} must lie in [0, 1]")));
    }
    let dims = pi.dims();
    let na = dims.actions;
    let mut probs = Vec::with_capacity(dims.horizon * dims.sa());
    for h in 0..dims.horizon {
        for s in 0..dims.states {
            for a in 0..na {
                probs.push((1.0 - eps) * pi.prob(h, s, a) + eps / na as f64);
            }
        }
    }
    Policy::stochastic(dims, probs)
}
