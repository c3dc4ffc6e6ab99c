use alloc::vec::Vec;
use rand::Rng;

use super::{sample_categorical, Dataset, Policy, TabularMdp, Transition};
use crate::error::{Error, Result};

/// Rolls out `count` i.i.d. trajectories of `mu`. Observed rewards are
/// Bernoulli draws with mean `r_h(s, a)`.
pub fn sample_dataset<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    mu: &Policy,
    count: usize,
    rng: &mut R,
) -> Result<Dataset> {
    mu.check_dims(mdp.dims())?;
    let horizon = mdp.horizon();
    let trajectories = (0..count)
        .map(|_| {
            let mut s = sample_categorical(mdp.initial(), rng);
            (0..horizon)
                .map(|h| {
                    let a = mu.sample_action(h, s, rng);
                    let reward = if rng.gen::<f64>() < mdp.reward(h, s, a) { 1.0 } else { 0.0 };
                    let next_state = sample_categorical(mdp.transition(h, s, a), rng);
                    let tr = Transition { state: s, action: a, reward, next_state };
                    s = next_state;
                    tr
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Dataset::new(horizon, trajectories)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Sample mean of the return `sum_h r_h(s_h, a_h)` over independent rollouts,
/// accumulating the mean reward of each visited pair.
pub fn monte_carlo_value<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    pi: &Policy,
    rollouts: usize,
    rng: &mut R,
) -> Result<MonteCarloEstimate> {
    if rollouts == 0 {
        return Err(Error::InvalidParameter("rollouts must be at least 1".into()));
    }
    pi.check_dims(mdp.dims())?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..rollouts {
        let mut s = sample_categorical(mdp.initial(), rng);
        let mut ret = 0.0;
        for h in 0..mdp.horizon() {
            let a = pi.sample_action(h, s, rng);
            ret += mdp.reward(h, s, a);
            s = sample_categorical(mdp.transition(h, s, a), rng);
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    let n = rollouts as f64;
    let mean = sum / n;
    let std_error = if rollouts > 1 {
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        libm::sqrt(var / n)
    } else {
        0.0
    };
    Ok(MonteCarloEstimate { mean, std_error })
}
