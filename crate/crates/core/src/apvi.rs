//! Pessimistic value iteration on tabular MDPs with a Bernstein-type bonus
//! computed from private counts (DP-APVI), and its non-private reduction
//! (APVI).

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::counts::{
    consistent_counts, empirical_kernel, noisy_counts, private_kernel, raw_counts, CountMechanism, PrivateKernel,
    ReleaseParams,
};
use crate::error::{dim_err, Error, Result};
use crate::learned::{Diagnostics, LearnedPolicy};
use crate::linalg::dot;
use crate::mdp::{argmax, Dataset, Dims, OccupancyTable, Policy};
use crate::privacy::{BudgetKind, Ledger};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApviConfig {
    /// Multiplier of the variance term.
    pub c1: f64,
    /// Multiplier of the privacy term `S H E ι / ñ`.
    pub c2: f64,
    /// Penalty multiplier `C` for pairs with `ñ <= E`; `None` means `H + 1`.
    pub penalty: Option<f64>,
    pub delta: f64,
    pub mechanism: CountMechanism,
}

impl Default for ApviConfig {
    fn default() -> Self {
        ApviConfig {
            c1: core::f64::consts::SQRT_2,
            c2: 16.0,
            penalty: None,
            delta: 0.1,
            mechanism: CountMechanism::Gaussian { rho: 0.0 },
        }
    }
}

impl ApviConfig {
    pub fn with_rho(rho: f64) -> Self {
        ApviConfig { mechanism: CountMechanism::Gaussian { rho }, ..Default::default() }
    }

    pub fn with_epsilon(epsilon: f64) -> Self {
        ApviConfig { mechanism: CountMechanism::Laplace { epsilon }, ..Default::default() }
    }

    pub fn penalty_multiplier(&self, horizon: usize) -> f64 {
        self.penalty.unwrap_or(horizon as f64 + 1.0)
    }

    pub fn validate(&self, horizon: usize) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidBudget(alloc::format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return Err(Error::InvalidParameter("C1 and C2 must be non-negative".into()));
        }
        let c = self.penalty_multiplier(horizon);
        if !(c > 1.0) {
            return Err(Error::InvalidParameter(alloc::format!("penalty multiplier C = {c} must exceed 1")));
        }
        Ok(())
    }
}

/// Quantities the bonus needs besides the per-pair inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonusParams {
    pub c1: f64,
    pub c2: f64,
    pub penalty: f64,
    pub states: usize,
    pub horizon: usize,
    /// `ι = ln(HSA/δ)`
    pub iota: f64,
    /// Uniform count-noise bound `E`.
    pub noise_bound: f64,
}

impl BonusParams {
    pub fn new(cfg: &ApviConfig, dims: Dims, noise_bound: f64) -> Self {
        BonusParams {
            c1: cfg.c1,
            c2: cfg.c2,
            penalty: cfg.penalty_multiplier(dims.horizon),
            states: dims.states,
            horizon: dims.horizon,
            iota: libm::log((dims.horizon * dims.states * dims.actions) as f64 / cfg.delta),
            noise_bound,
        }
    }
}

/// Population variance of `values` under `probs`.
pub fn variance_under(probs: &[f64], values: &[f64]) -> f64 {
    let mean = dot(probs, values);
    let second: f64 = probs.iter().zip(values).map(|(p, v)| p * v * v).sum();
    (second - mean * mean).max(0.0)
}

/// `C1 sqrt(Var_P(V) ι / (ñ - E)) + C2 S H E ι / ñ` when `ñ > E`, otherwise `C H`.
pub fn bernstein_bonus(p_row: &[f64], v_next: &[f64], n_tilde: f64, params: &BonusParams) -> f64 {
    let e = params.noise_bound;
    if n_tilde > e {
        let var = variance_under(p_row, v_next);
        params.c1 * libm::sqrt(var * params.iota / (n_tilde - e))
            + params.c2 * params.states as f64 * params.horizon as f64 * e * params.iota / n_tilde
    } else {
        params.penalty * params.horizon as f64
    }
}

fn check_reward(reward: &[f64], dims: Dims) -> Result<()> {
    if reward.len() != dims.horizon * dims.sa() {
        return Err(dim_err!("reward table has {} entries, expected {}", reward.len(), dims.horizon * dims.sa()));
    }
    if let Some(r) = reward.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::InvalidParameter(alloc::format!("reward {r} outside [0, 1]")));
    }
    Ok(())
}

/// Backward loop shared by both learners: `Q̃ = r + P̃ Ṽ'`, subtract the bonus,
/// clip to `[0, H - h]`, act greedily (lowest index on ties).
fn pessimistic_backup(
    dims: Dims,
    reward: &[f64],
    kernel: &PrivateKernel,
    pair_counts: &[f64],
    params: &BonusParams,
    diagnostics: Diagnostics,
) -> LearnedPolicy {
    let (ns, na, nh) = (dims.states, dims.actions, dims.horizon);
    let mut q = vec![0.0; nh * ns * na];
    let mut bonus = vec![0.0; nh * ns * na];
    let mut v = vec![0.0; (nh + 1) * ns];
    let mut actions = vec![0usize; nh * ns];
    for h in (0..nh).rev() {
        let cap = (nh - h) as f64;
        let (head, tail) = v.split_at_mut((h + 1) * ns);
        let v_next = &tail[..ns];
        for s in 0..ns {
            for a in 0..na {
                let idx = dims.hsa(h, s, a);
                let p_row = kernel.row(h, s, a);
                let q_tilde = reward[idx] + dot(p_row, v_next);
                let gamma = bernstein_bonus(p_row, v_next, pair_counts[idx], params);
                bonus[idx] = gamma;
                q[idx] = (q_tilde - gamma).min(cap).max(0.0);
            }
            let start = dims.hsa(h, s, 0);
            let (best, best_val) = argmax(&q[start..start + na]);
            actions[h * ns + s] = best;
            head[h * ns + s] = best_val;
        }
    }
    let policy = Policy::deterministic(dims, actions).expect("greedy actions are in range");
    LearnedPolicy::new(policy, q, v, bonus, diagnostics)
}

/// DP-APVI: privatize the counts, build the private kernel and run pessimistic
/// value iteration with the Bernstein bonus. `reward` is the known mean
/// reward table `[h][s][a]`.
pub fn dp_apvi<R: Rng + ?Sized>(
    data: &Dataset,
    dims: Dims,
    reward: &[f64],
    cfg: &ApviConfig,
    rng: &mut R,
) -> Result<LearnedPolicy> {
    cfg.validate(dims.horizon)?;
    check_reward(reward, dims)?;
    let params = ReleaseParams::new(dims, cfg.mechanism, cfg.delta)?;
    let mut accountant = params.accountant()?;
    let raw = raw_counts(data, dims)?;
    let noisy = noisy_counts(&raw, &params, rng, &mut accountant)?;
    let noise_bound = params.noise_bound();
    let consistent = consistent_counts(&noisy, noise_bound);
    let kernel = private_kernel(&consistent, noise_bound);
    let bonus_params = BonusParams::new(cfg, dims, noise_bound);

    let mut diagnostics = Diagnostics::new(accountant.finish()?);
    diagnostics.push("noise_bound", noise_bound);
    diagnostics.push("noise_scale", params.noise_scale());
    diagnostics.push("iota", bonus_params.iota);
    diagnostics.push("penalty", bonus_params.penalty);
    diagnostics.push("fallback_rows", fallback_rows(&kernel) as f64);
    Ok(pessimistic_backup(dims, reward, &kernel, consistent.pair_counts(), &bonus_params, diagnostics))
}

/// APVI: the same backward loop on raw counts and the empirical kernel, with
/// no noise bound.
pub fn apvi(data: &Dataset, dims: Dims, reward: &[f64], cfg: &ApviConfig) -> Result<LearnedPolicy> {
    cfg.validate(dims.horizon)?;
    check_reward(reward, dims)?;
    let raw = raw_counts(data, dims)?;
    let kernel = empirical_kernel(&raw);
    let bonus_params = BonusParams::new(cfg, dims, 0.0);
    let kind = match cfg.mechanism {
        CountMechanism::Gaussian { .. } => BudgetKind::Zcdp,
        CountMechanism::Laplace { .. } => BudgetKind::Pure,
    };
    let mut diagnostics = Diagnostics::new(Ledger::noiseless(kind));
    diagnostics.push("noise_bound", 0.0);
    diagnostics.push("noise_scale", 0.0);
    diagnostics.push("iota", bonus_params.iota);
    diagnostics.push("penalty", bonus_params.penalty);
    diagnostics.push("fallback_rows", fallback_rows(&kernel) as f64);
    Ok(pessimistic_backup(dims, reward, &kernel, raw.pair_counts(), &bonus_params, diagnostics))
}

fn fallback_rows(kernel: &PrivateKernel) -> usize {
    let d = kernel.dims();
    (0..d.horizon)
        .flat_map(|h| (0..d.states).flat_map(move |s| (0..d.actions).map(move |a| (h, s, a))))
        .filter(|&(h, s, a)| kernel.is_fallback(h, s, a))
        .count()
}

/// Sample size above which the tabular guarantee applies, up to its unknown
/// absolute constant: `max(H^2, E) / d_m * ι` where `d_m` is the smallest
/// positive behavior occupancy. `None` if the behavior reaches nothing.
pub fn sample_size_threshold(behavior: &OccupancyTable, noise_bound: f64, iota: f64) -> Option<f64> {
    let h = behavior.dims().horizon as f64;
    behavior.min_positive().map(|dm| (h * h).max(noise_bound) / dm * iota)
}

/// Per-pair visit counts `[h][s][a]` of a dataset, for diagnostics.
pub fn visit_counts(data: &Dataset, dims: Dims) -> Result<Vec<f64>> {
    Ok(raw_counts(data, dims)?.pair_counts().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Transition;
    use crate::seeded_rng;

    fn params(noise_bound: f64, iota: f64) -> BonusParams {
        BonusParams { c1: core::f64::consts::SQRT_2, c2: 16.0, penalty: 3.0, states: 2, horizon: 2, iota, noise_bound }
    }

    #[test]
    fn bonus_penalizes_low_counts() {
        assert_eq!(bernstein_bonus(&[0.5, 0.5], &[0.0, 1.0], 4.0, &params(4.0, 1.0)), 6.0);
    }

    #[test]
    fn bonus_without_variance() {
        let b = bernstein_bonus(&[0.3, 0.7], &[1.0, 1.0], 10.0, &params(2.0, 1.5));
        assert!((b - 16.0 * 2.0 * 2.0 * 2.0 * 1.5 / 10.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_bonus_arithmetic() {
        let b = bernstein_bonus(&[0.5, 0.5], &[0.0, 2.0], 8.0, &params(0.0, 1.0));
        assert!((b - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_dataset_is_fully_penalized() {
        let dims = Dims { states: 2, actions: 3, horizon: 3 };
        let reward = vec![0.7; 18];
        let out = apvi(&Dataset::empty(3), dims, &reward, &ApviConfig::default()).unwrap();
        assert!(out.v_table().iter().all(|&v| v == 0.0));
        assert!((0..3).all(|h| (0..2).all(|s| out.policy.action(h, s) == Some(0))));
    }

    #[test]
    fn config_validation() {
        let dims = Dims { states: 1, actions: 1, horizon: 1 };
        let cfg = ApviConfig { penalty: Some(1.0), ..Default::default() };
        assert!(apvi(&Dataset::empty(1), dims, &[0.5], &cfg).is_err());
        assert!(apvi(&Dataset::empty(1), dims, &[0.5, 0.5], &ApviConfig::default()).is_err());
    }

    #[test]
    fn ledger_has_two_halves() {
        let dims = Dims { states: 2, actions: 1, horizon: 2 };
        let tr = Transition { state: 0, action: 0, reward: 1.0, next_state: 1 };
        let data = Dataset::new(2, vec![vec![tr, tr]; 5]).unwrap();
        let out = dp_apvi(&data, dims, &[0.5; 4], &ApviConfig::with_rho(2.0), &mut seeded_rng(1)).unwrap();
        let ledger = &out.diagnostics.ledger;
        assert_eq!(ledger.releases.len(), 2);
        assert_eq!(ledger.total(), 2.0);
    }
}
