use alloc::vec::Vec;

use super::{Dims, TabularMdp, PROB_TOL};
use crate::error::{dim_err, Error, Result};
use crate::linalg::dot;

/// Linear MDP over a finite state-action space: `P_h(s'|s,a) = <phi(s,a), nu_h(s')>`
/// and `r_h(s,a) = <phi(s,a), theta_h>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMdp {
    states: usize,
    actions: usize,
    horizon: usize,
    dim: usize,
    features: Vec<f64>,
    measures: Vec<f64>,
    reward_weights: Vec<f64>,
    initial: Vec<f64>,
}

impl LinearMdp {
    /// `features` is `[s][a][d]`, `measures` is `[h][s'][d]`, `reward_weights`
    /// is `[h][d]`. Only shapes are checked here; see [`validate_linear_mdp`].
    pub fn new(
        states: usize,
        actions: usize,
        horizon: usize,
        dim: usize,
        features: Vec<f64>,
        measures: Vec<f64>,
        reward_weights: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if states == 0 || actions == 0 || horizon == 0 || dim == 0 {
            return Err(dim_err!("S, A, H and d must be positive"));
        }
        if features.len() != states * actions * dim {
            return Err(dim_err!("features has {} entries, expected {}", features.len(), states * actions * dim));
        }
        if measures.len() != horizon * states * dim {
            return Err(dim_err!("measures has {} entries, expected {}", measures.len(), horizon * states * dim));
        }
        if reward_weights.len() != horizon * dim {
            return Err(dim_err!("reward weights have {} entries, expected {}", reward_weights.len(), horizon * dim));
        }
        if initial.len() != states {
            return Err(dim_err!("initial distribution has {} entries, expected {states}", initial.len()));
        }
        Ok(LinearMdp { states, actions, horizon, dim, features, measures, reward_weights, initial })
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

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dims(&self) -> Dims {
        Dims { states: self.states, actions: self.actions, horizon: self.horizon }
    }

    pub fn feature(&self, s: usize, a: usize) -> &[f64] {
        let i = (s * self.actions + a) * self.dim;
        &self.features[i..i + self.dim]
    }

    pub fn measure(&self, h: usize, next: usize) -> &[f64] {
        let i = (h * self.states + next) * self.dim;
        &self.measures[i..i + self.dim]
    }

    pub fn reward_weight(&self, h: usize) -> &[f64] {
        &self.reward_weights[h * self.dim..(h + 1) * self.dim]
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn reward_weights(&self) -> &[f64] {
        &self.reward_weights
    }

    /// Unclipped `<phi(s,a), nu_h(s')>`.
    pub fn transition_prob(&self, h: usize, s: usize, a: usize, next: usize) -> f64 {
        dot(self.feature(s, a), self.measure(h, next))
    }

    /// Unclipped `<phi(s,a), theta_h>`.
    pub fn mean_reward(&self, h: usize, s: usize, a: usize) -> f64 {
        dot(self.feature(s, a), self.reward_weight(h))
    }

    /// Same model with every reward weight multiplied by `factor`.
    pub fn with_scaled_rewards(&self, factor: f64) -> LinearMdp {
        let mut out = self.clone();
        out.reward_weights.iter_mut().for_each(|w| *w *= factor);
        out
    }

    /// Same model with `nu_h(next)` replaced.
    pub fn with_measure(&self, h: usize, next: usize, measure: &[f64]) -> Result<LinearMdp> {
        if measure.len() != self.dim {
            return Err(dim_err!("measure has {} entries, expected {}", measure.len(), self.dim));
        }
        let mut out = self.clone();
        let i = (h * self.states + next) * self.dim;
        out.measures[i..i + self.dim].copy_from_slice(measure);
        Ok(out)
    }
}

/// One violated linear-MDP constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeTransition { h: usize, s: usize, a: usize, next: usize, value: f64 },
    TransitionRowSum { h: usize, s: usize, a: usize, sum: f64 },
    RewardOutOfRange { h: usize, s: usize, a: usize, value: f64 },
    InitialDistribution { sum: f64, min: f64 },
}

impl Violation {
    /// Distance outside the admissible range.
    pub fn magnitude(&self) -> f64 {
        match *self {
            Violation::NegativeTransition { value, .. } => -value,
            Violation::TransitionRowSum { sum, .. } => (sum - 1.0).abs(),
            Violation::RewardOutOfRange { value, .. } => {
                if value < 0.0 {
                    -value
                } else {
                    value - 1.0
                }
            }
            Violation::InitialDistribution { sum, min } => (sum - 1.0).abs().max(-min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self) -> Option<&Violation> {
        self.violations.iter().max_by(|a, b| a.magnitude().total_cmp(&b.magnitude()))
    }
}

/// Scans every `(h, s, a, s')` for negative or non-normalized transitions and
/// every `(h, s, a)` for rewards outside `[0, 1]`, all with tolerance `1e-12`.
pub fn validate_linear_mdp(lin: &LinearMdp) -> ValidationReport {
    let mut violations = Vec::new();
    for h in 0..lin.horizon {
        for s in 0..lin.states {
            for a in 0..lin.actions {
                let mut sum = 0.0;
                for next in 0..lin.states {
                    let p = lin.transition_prob(h, s, a, next);
                    if p < -PROB_TOL {
                        violations.push(Violation::NegativeTransition { h, s, a, next, value: p });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > PROB_TOL {
                    violations.push(Violation::TransitionRowSum { h, s, a, sum });
                }
                let r = lin.mean_reward(h, s, a);
                if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&r) {
                    violations.push(Violation::RewardOutOfRange { h, s, a, value: r });
                }
            }
        }
    }
    let sum: f64 = lin.initial.iter().sum();
    let min = lin.initial.iter().copied().fold(f64::INFINITY, f64::min);
    if (sum - 1.0).abs() > PROB_TOL || min < 0.0 {
        violations.push(Violation::InitialDistribution { sum, min });
    }
    ValidationReport { violations }
}

/// Materializes the tabular model. Sub-tolerance negative probabilities are
/// clipped to zero and the row renormalized; rewards are clipped to `[0, 1]`.
pub fn tabularize(lin: &LinearMdp) -> Result<TabularMdp> {
    let report = validate_linear_mdp(lin);
    if let Some(worst) = report.worst() {
        return Err(Error::InvalidModel(alloc::format!(
            "{} linear-MDP constraint violation(s), worst: {worst:?}",
            report.violations.len()
        )));
    }
    let (ns, na, nh) = (lin.states, lin.actions, lin.horizon);
    let mut transitions = Vec::with_capacity(nh * ns * na * ns);
    let mut rewards = Vec::with_capacity(nh * ns * na);
    for h in 0..nh {
        for s in 0..ns {
            for a in 0..na {
                let start = transitions.len();
                transitions.extend((0..ns).map(|next| lin.transition_prob(h, s, a, next).max(0.0)));
                let row = &mut transitions[start..];
                let sum: f64 = row.iter().sum();
                if sum != 1.0 {
                    row.iter_mut().for_each(|p| *p /= sum);
                }
                rewards.push(lin.mean_reward(h, s, a).clamp(0.0, 1.0));
            }
        }
    }
    TabularMdp::new(ns, na, nh, transitions, rewards, lin.initial.clone())
}
