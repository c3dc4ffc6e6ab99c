//! Variance-aware pessimistic value iteration for linear MDPs with private
//! regression statistics (DP-VAPVI), its noiseless reduction (VAPVI), and the
//! LSVI-based PEVI baseline.
//!
//! Each backward step estimates the conditional variance of the next-step
//! value by two ridge regressions (on `V^2` and `V`), reweights the Bellman
//! regression by the clipped variance estimate, and subtracts an elliptical
//! bonus. The private variant perturbs the five per-step statistics (two
//! Gram matrices, three moment vectors) with Gaussian noise at `rho / (5H)`
//! each.

use alloc::borrow::Cow;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::error::{dim_err, Error, Result};
use crate::learned::{Diagnostics, LearnedPolicy};
use crate::linalg::{dot, Matrix, SymmetricEigen};
use crate::mdp::{argmax, occupancy, tabularize, Dataset, Dims, LinearMdp, Policy, PolicyValue, TabularMdp};
use crate::privacy::{gaussian_noise, gaussian_sigma, symmetric_noise_matrix, Accountant, NoiseMatrixSpec};
use crate::regression::{ConditionedGram, GramAccumulator};

/// The feature map `phi(s, a)` over the finite state-action space. This is
/// all a linear-MDP learner knows about the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    states: usize,
    actions: usize,
    dim: usize,
    features: Vec<f64>,
}

impl FeatureMap {
    /// `features` is `[s][a][d]`.
    pub fn new(states: usize, actions: usize, dim: usize, features: Vec<f64>) -> Result<Self> {
        if features.len() != states * actions * dim || dim == 0 {
            return Err(dim_err!("features have {} entries, expected {}", features.len(), states * actions * dim));
        }
        Ok(FeatureMap { states, actions, dim, features })
    }

    pub fn from_linear(lin: &LinearMdp) -> Self {
        FeatureMap { states: lin.states(), actions: lin.actions(), dim: lin.dim(), features: lin.features().to_vec() }
    }

    pub fn get(&self, s: usize, a: usize) -> &[f64] {
        let i = (s * self.actions + a) * self.dim;
        &self.features[i..i + self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PessimismMode {
    /// Adds the privacy term `D / K` with `D` built from `kappa`.
    Theory,
    /// Drops `D`; only the elliptical bonus remains.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VapviConfig {
    /// Total zCDP budget; zero is noiseless mode.
    pub rho: f64,
    pub delta: f64,
    /// Ridge parameter; also the eigenvalue floor of every Gram matrix.
    pub lambda: f64,
    /// Bonus multiplier.
    pub c: f64,
    /// Constants inside the noise-matrix shift `E`.
    pub c1: f64,
    pub c2: f64,
    /// Multiplier on `D`.
    pub c_d: f64,
    /// Use disjoint halves of the data for the variance and value regressions.
    pub split_data: bool,
    pub mode: PessimismMode,
    /// Feature coverage `min_h lambda_min(E_mu[phi phi^T])`, needed by theory mode.
    pub kappa: Option<f64>,
    /// Skip variance weighting (all weights 1). Ablation only.
    pub unit_weights: bool,
}

impl Default for VapviConfig {
    fn default() -> Self {
        VapviConfig {
            rho: 0.0,
            delta: 0.1,
            lambda: 1.0,
            c: 1.0,
            c1: 1.0,
            c2: 1.0,
            c_d: 1.0,
            split_data: false,
            mode: PessimismMode::Empirical,
            kappa: None,
            unit_weights: false,
        }
    }
}

impl VapviConfig {
    pub fn with_rho(rho: f64) -> Self {
        VapviConfig { rho, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return Err(Error::InvalidBudget(alloc::format!("rho = {} must be non-negative", self.rho)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidBudget(alloc::format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("lambda = {} must be positive", self.lambda)));
        }
        if !(self.c > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("C = {} must be positive", self.c)));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c_d >= 0.0) {
            return Err(Error::InvalidParameter("c1, c2 must be positive and c_D non-negative".into()));
        }
        Ok(())
    }
}

/// Noise calibration and the additive privacy pessimism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PessimismConstants {
    /// Per-release budget `rho / (5H)`.
    pub rho0: f64,
    /// `2H sqrt(5Hd ln(10Hd/delta) / rho)`
    pub l: f64,
    /// `sqrt(10Hd/rho) (2 + (ln(5 c1 H/delta) / (c2 d))^{2/3})`
    pub e: f64,
    pub kappa: Option<f64>,
    /// `c_D (H^2 L / kappa + H^4 E sqrt(d) / kappa^{3/2} + H^3 sqrt(d))`, zero
    /// in empirical or noiseless mode.
    pub d: f64,
}

/// Fills in the noise constants. In noiseless mode all are zero; in theory
/// mode with a positive budget `kappa` must be known and positive.
pub fn compute_constants(horizon: usize, dim: usize, cfg: &VapviConfig) -> Result<PessimismConstants> {
    cfg.validate()?;
    let kappa = cfg.kappa;
    if cfg.rho == 0.0 {
        return Ok(PessimismConstants { rho0: 0.0, l: 0.0, e: 0.0, kappa, d: 0.0 });
    }
    let h = horizon as f64;
    let d = dim as f64;
    let rho = cfg.rho;
    let rho0 = rho / (5.0 * h);
    let l = 2.0 * h * libm::sqrt(5.0 * h * d * libm::log(10.0 * h * d / cfg.delta) / rho);
    let ratio = libm::log(5.0 * cfg.c1 * h / cfg.delta) / (cfg.c2 * d);
    let e = libm::sqrt(10.0 * h * d / rho) * (2.0 + libm::pow(ratio.max(0.0), 2.0 / 3.0));
    let d_term = match cfg.mode {
        PessimismMode::Empirical => 0.0,
        PessimismMode::Theory => {
            let k = match kappa {
                Some(k) if k > 0.0 => k,
                other => {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "theory mode needs a positive feature coverage kappa, got {other:?}"
                    )))
                }
            };
            let sqrt_d = libm::sqrt(d);
            cfg.c_d * (h * h * l / k + libm::pow(h, 4.0) * e * sqrt_d / libm::pow(k, 1.5) + h * h * h * sqrt_d)
        }
    };
    Ok(PessimismConstants { rho0, l, e, kappa, d: d_term })
}

/// Sample-size conditions of the linear guarantee that have explicit
/// constants: `[M1, M3, M4]`.
pub fn sample_size_gates(horizon: usize, dim: usize, lambda: f64, delta: f64, consts: &PessimismConstants) -> Option<[f64; 3]> {
    let kappa = consts.kappa.filter(|&k| k > 0.0)?;
    let h = horizon as f64;
    let d = dim as f64;
    let log_term = libm::log(2.0 * d * h / delta);
    let h4 = libm::pow(h, 4.0);
    let m1 = (2.0 * lambda)
        .max(128.0 * log_term)
        .max(128.0 * h4 * log_term / (kappa * kappa))
        .max(core::f64::consts::SQRT_2 * consts.l / libm::sqrt(d * kappa));
    let m3 = (512.0 * h4 * log_term / (kappa * kappa)).max(4.0 * lambda * h * h / kappa);
    let m4 = (h * h * consts.l * consts.l / (d * kappa))
        .max(libm::pow(h, 6.0) * consts.e * consts.e / (kappa * kappa))
        .max(h4 * kappa);
    Some([m1, m3, m4])
}

/// `E_mu[phi phi^T]` at step `h` under the behavior occupancy.
pub fn behavior_gram(lin: &LinearMdp, behavior: &Policy) -> Result<Vec<Matrix>> {
    let tab = tabularize(lin)?;
    let occ = occupancy(&tab, behavior)?;
    let dim = lin.dim();
    Ok((0..lin.horizon())
        .map(|h| {
            let mut m = Matrix::zeros(dim);
            for s in 0..lin.states() {
                for a in 0..lin.actions() {
                    let w = occ.get(h, s, a);
                    if w > 0.0 {
                        m.add_outer(lin.feature(s, a), w);
                    }
                }
            }
            m
        })
        .collect())
}

/// `kappa = min_h lambda_min(E_mu[phi phi^T])`, computed exactly from the
/// behavior occupancy.
pub fn feature_coverage(lin: &LinearMdp, behavior: &Policy) -> Result<f64> {
    Ok(behavior_gram(lin, behavior)?
        .iter()
        .map(|m| SymmetricEigen::new(m).min_value())
        .fold(f64::INFINITY, f64::min))
}

/// `max |r + V(s') - (r + P V)(s,a)| / sigma_V(s,a)` over reachable `s'`,
/// with `sigma_V^2 = max(1, Var_P V)`. Evaluated at the given value tables,
/// so it lower-bounds the supremum over all bounded `V`.
pub fn bellman_noise_ratio(mdp: &TabularMdp, values: &PolicyValue) -> f64 {
    let mut worst = 0.0f64;
    for h in 0..mdp.horizon() {
        let v_next = values.v_row(h + 1);
        for s in 0..mdp.states() {
            for a in 0..mdp.actions() {
                let p = mdp.transition(h, s, a);
                let mean = dot(p, v_next);
                let second: f64 = p.iter().zip(v_next).map(|(q, v)| q * v * v).sum();
                let sigma = libm::sqrt((second - mean * mean).max(1.0));
                for (next, &q) in p.iter().enumerate() {
                    if q > 0.0 {
                        worst = worst.max((v_next[next] - mean).abs() / sigma);
                    }
                }
            }
        }
    }
    worst
}

/// Noise added to the statistics of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepNoise {
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub phi3: Vec<f64>,
    pub k1: Matrix,
    pub k2: Matrix,
}

/// Draws the `5H` noise terms (steps in increasing order; per step
/// `phi1, phi2, phi3, K1, K2`) and declares each release.
pub fn draw_noise<R: Rng + ?Sized>(
    horizon: usize,
    dim: usize,
    consts: &PessimismConstants,
    rng: &mut R,
    accountant: &mut Accountant,
) -> Result<Vec<StepNoise>> {
    let h = horizon as f64;
    let rho0 = consts.rho0;
    let sens_sq = 2.0 * h * h;
    let sens_lin = 2.0 * h;
    let sens_gram = core::f64::consts::FRAC_1_SQRT_2;
    let sigma1 = gaussian_sigma(sens_sq, rho0)?;
    let sigma23 = gaussian_sigma(sens_lin, rho0)?;
    let spec = NoiseMatrixSpec { dim, rho0, shift: consts.e };
    let vec_noise = |sigma: f64, rng: &mut R| -> Vec<f64> { (0..dim).map(|_| gaussian_noise(sigma, rng)).collect() };
    let mut out = Vec::with_capacity(horizon);
    for step in 0..horizon {
        let phi1 = vec_noise(sigma1, rng);
        let phi2 = vec_noise(sigma23, rng);
        let phi3 = vec_noise(sigma23, rng);
        let k1 = symmetric_noise_matrix(&spec, rng)?;
        let k2 = symmetric_noise_matrix(&spec, rng)?;
        accountant.record(alloc::format!("phi1[{step}]"), sens_sq, rho0, sigma1);
        accountant.record(alloc::format!("phi2[{step}]"), sens_lin, rho0, sigma23);
        accountant.record(alloc::format!("phi3[{step}]"), sens_lin, rho0, sigma23);
        accountant.record(alloc::format!("K1[{step}]"), sens_gram, rho0, spec.entry_sigma());
        accountant.record(alloc::format!("K2[{step}]"), sens_gram, rho0, spec.entry_sigma());
        out.push(StepNoise { phi1, phi2, phi3, k1, k2 });
    }
    Ok(out)
}

/// Result of the variance stage at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate {
    /// `max(1, Var)` per `[s][a]`.
    pub sigma2: Vec<f64>,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub gram: ConditionedGram,
}

/// Noise terms of the variance stage.
#[derive(Debug, Clone, Copy)]
pub struct VarianceNoise<'a> {
    pub k1: &'a Matrix,
    pub phi1: &'a [f64],
    pub phi2: &'a [f64],
}

/// Estimates `Var_P(V_next)(s, a)` from `data_prime` at step `h`:
/// regress `V(s')^2` and `V(s')` on `phi`, clip each prediction to its range
/// (`[0, (H-h)^2]` and `[0, H-h]`), and return `max(1, second - first^2)`.
pub fn estimate_variance(
    features: &FeatureMap,
    data_prime: &Dataset,
    h: usize,
    v_next: &[f64],
    lambda: f64,
    noise: Option<VarianceNoise<'_>>,
) -> Result<VarianceEstimate> {
    let horizon = data_prime.horizon();
    if h >= horizon {
        return Err(dim_err!("step {h} out of range for H = {horizon}"));
    }
    if v_next.len() != features.states() {
        return Err(dim_err!("value vector has {} entries, expected {}", v_next.len(), features.states()));
    }
    let dim = features.dim();
    let mut acc = GramAccumulator::new(dim, lambda)?;
    let mut rhs_theta = vec![0.0; dim];
    for tr in data_prime.step(h) {
        let phi = features.get(tr.state, tr.action);
        let v = v_next[tr.next_state];
        acc.add_sample(phi, v * v, 1.0);
        for (b, p) in rhs_theta.iter_mut().zip(phi) {
            *b += p * v;
        }
    }
    if let Some(n) = noise {
        acc.add_matrix_noise(n.k1)?;
        acc.add_rhs_noise(n.phi1)?;
        for (b, p) in rhs_theta.iter_mut().zip(n.phi2) {
            *b += p;
        }
    }
    let gram = acc.condition()?;
    let beta = gram.solve(acc.rhs());
    let theta = gram.solve(&rhs_theta);
    let cap = (horizon - h) as f64;
    let mut sigma2 = Vec::with_capacity(features.states() * features.actions());
    for s in 0..features.states() {
        for a in 0..features.actions() {
            let phi = features.get(s, a);
            let second = dot(phi, &beta).clamp(0.0, cap * cap);
            let first = dot(phi, &theta).clamp(0.0, cap);
            sigma2.push((second - first * first).max(1.0));
        }
    }
    Ok(VarianceEstimate { sigma2, beta, theta, gram })
}

/// Returns `(D, D')`: halves of `data` when splitting, otherwise `data` twice.
pub fn data_splits<'a>(data: &'a Dataset, cfg: &VapviConfig) -> (Cow<'a, Dataset>, Cow<'a, Dataset>) {
    if cfg.split_data {
        let half = data.len() / 2;
        let (first, rest) = data.split_at(half);
        let (second, _) = rest.split_at(half);
        (Cow::Owned(first), Cow::Owned(second))
    } else {
        (Cow::Borrowed(data), Cow::Borrowed(data))
    }
}

fn check_inputs(data: &Dataset, data_prime: &Dataset, features: &FeatureMap) -> Result<Dims> {
    let dims = Dims { states: features.states(), actions: features.actions(), horizon: data.horizon() };
    if dims.horizon == 0 {
        return Err(dim_err!("horizon must be positive"));
    }
    if data_prime.horizon() != data.horizon() {
        return Err(dim_err!("split horizons differ ({} vs {})", data.horizon(), data_prime.horizon()));
    }
    if data.len() != data_prime.len() {
        return Err(dim_err!("splits have {} and {} trajectories", data.len(), data_prime.len()));
    }
    data.check_indices(dims)?;
    data_prime.check_indices(dims)?;
    Ok(dims)
}

/// `D / K` with the empty-data convention `0 / 0 = 0` and `D / 0 = inf`.
fn privacy_pessimism(d: f64, episodes: usize) -> f64 {
    if d == 0.0 {
        0.0
    } else if episodes == 0 {
        f64::INFINITY
    } else {
        d / episodes as f64
    }
}

fn variance_aware_backup(
    data: &Dataset,
    data_prime: &Dataset,
    features: &FeatureMap,
    cfg: &VapviConfig,
    consts: &PessimismConstants,
    noise: Option<&[StepNoise]>,
    mut diagnostics: Diagnostics,
) -> Result<LearnedPolicy> {
    let dims = check_inputs(data, data_prime, features)?;
    let (ns, na, nh) = (dims.states, dims.actions, dims.horizon);
    let dim = features.dim();
    let bonus_scale = cfg.c * libm::sqrt(dim as f64);
    let extra = privacy_pessimism(consts.d, data.len());

    let mut q = vec![0.0; nh * ns * na];
    let mut bonus = vec![0.0; nh * ns * na];
    let mut v = vec![0.0; (nh + 1) * ns];
    let mut actions = vec![0usize; nh * ns];
    let mut clamps = 0usize;
    let mut min_sigma2 = f64::INFINITY;
    let mut max_sigma2 = 0.0f64;

    for h in (0..nh).rev() {
        let v_next: Vec<f64> = v[(h + 1) * ns..(h + 2) * ns].to_vec();
        let step_noise = noise.map(|n| &n[h]);

        let sigma2 = if cfg.unit_weights {
            vec![1.0; ns * na]
        } else {
            let var_noise = step_noise.map(|n| VarianceNoise { k1: &n.k1, phi1: &n.phi1, phi2: &n.phi2 });
            let est = estimate_variance(features, data_prime, h, &v_next, cfg.lambda, var_noise)?;
            clamps += usize::from(est.gram.clamped);
            est.sigma2
        };
        for &s2 in &sigma2 {
            min_sigma2 = min_sigma2.min(s2);
            max_sigma2 = max_sigma2.max(s2);
        }

        let mut acc = GramAccumulator::new(dim, cfg.lambda)?;
        for tr in data.step(h) {
            let phi = features.get(tr.state, tr.action);
            acc.add_sample(phi, tr.reward + v_next[tr.next_state], sigma2[tr.state * na + tr.action]);
        }
        if let Some(n) = step_noise {
            acc.add_matrix_noise(&n.k2)?;
            acc.add_rhs_noise(&n.phi3)?;
        }
        let gram = acc.condition()?;
        clamps += usize::from(gram.clamped);
        let w = gram.solve(acc.rhs());

        let cap = (nh - h) as f64;
        for s in 0..ns {
            for a in 0..na {
                let phi = features.get(s, a);
                let idx = dims.hsa(h, s, a);
                let gamma = bonus_scale * libm::sqrt(gram.inverse_quad(phi).max(0.0)) + extra;
                bonus[idx] = gamma;
                q[idx] = (dot(phi, &w) - gamma).min(cap).max(0.0);
            }
            let start = dims.hsa(h, s, 0);
            let (best, best_val) = argmax(&q[start..start + na]);
            actions[h * ns + s] = best;
            v[h * ns + s] = best_val;
        }
    }

    diagnostics.eigen_clamps = clamps;
    diagnostics.push("rho0", consts.rho0);
    diagnostics.push("L", consts.l);
    diagnostics.push("E", consts.e);
    diagnostics.push("D", consts.d);
    if let Some(k) = consts.kappa {
        diagnostics.push("kappa", k);
        if k > 0.0 && cfg.lambda >= k {
            // the guarantee needs 0 < lambda < kappa; recorded, not enforced
            diagnostics.push("lambda_exceeds_kappa", 1.0);
        }
    }
    if let Some([m1, m3, m4]) = sample_size_gates(nh, dim, cfg.lambda, cfg.delta, consts) {
        diagnostics.push("M1", m1);
        diagnostics.push("M3", m3);
        diagnostics.push("M4", m4);
    }
    diagnostics.push("min_sigma2", min_sigma2);
    diagnostics.push("max_sigma2", max_sigma2);
    let policy = Policy::deterministic(dims, actions).expect("greedy actions are in range");
    Ok(LearnedPolicy::new(policy, q, v, bonus, diagnostics))
}

/// DP-VAPVI. `data` feeds the value regression and `data_prime` the variance
/// regression; pass the same dataset twice to skip splitting.
pub fn dp_vapvi<R: Rng + ?Sized>(
    data: &Dataset,
    data_prime: &Dataset,
    features: &FeatureMap,
    cfg: &VapviConfig,
    rng: &mut R,
) -> Result<LearnedPolicy> {
    let consts = compute_constants(data.horizon(), features.dim(), cfg)?;
    let mut accountant = Accountant::zcdp(cfg.rho)?;
    let noise = if cfg.rho > 0.0 {
        Some(draw_noise(data.horizon(), features.dim(), &consts, rng, &mut accountant)?)
    } else {
        None
    };
    let diagnostics = Diagnostics::new(accountant.finish()?);
    variance_aware_backup(data, data_prime, features, cfg, &consts, noise.as_deref(), diagnostics)
}

/// VAPVI: the same backward loop without any noise and with `D = 0`.
pub fn vapvi(data: &Dataset, data_prime: &Dataset, features: &FeatureMap, cfg: &VapviConfig) -> Result<LearnedPolicy> {
    let noiseless = VapviConfig { rho: 0.0, ..*cfg };
    let consts = compute_constants(data.horizon(), features.dim(), &noiseless)?;
    let diagnostics = Diagnostics::new(Accountant::zcdp(0.0)?.finish()?);
    variance_aware_backup(data, data_prime, features, &noiseless, &consts, None, diagnostics)
}

/// Bonus coefficient of PEVI: `c d H sqrt(ln(2 d K / delta))`, with `K`
/// floored at 1.
pub fn pevi_beta(dim: usize, horizon: usize, episodes: usize, c: f64, delta: f64) -> f64 {
    let iota = libm::log(2.0 * dim as f64 * episodes.max(1) as f64 / delta);
    c * dim as f64 * horizon as f64 * libm::sqrt(iota)
}

/// PEVI: unweighted LSVI with bonus `beta sqrt(phi^T Lambda^{-1} phi)`.
pub fn pevi(data: &Dataset, features: &FeatureMap, cfg: &VapviConfig) -> Result<LearnedPolicy> {
    cfg.validate()?;
    let dims = check_inputs(data, data, features)?;
    let (ns, na, nh) = (dims.states, dims.actions, dims.horizon);
    let dim = features.dim();
    let beta = pevi_beta(dim, nh, data.len(), cfg.c, cfg.delta);
    let mut q = vec![0.0; nh * ns * na];
    let mut bonus = vec![0.0; nh * ns * na];
    let mut v = vec![0.0; (nh + 1) * ns];
    let mut actions = vec![0usize; nh * ns];
    let mut clamps = 0usize;
    for h in (0..nh).rev() {
        let mut acc = GramAccumulator::new(dim, cfg.lambda)?;
        for tr in data.step(h) {
            let y = tr.reward + v[(h + 1) * ns + tr.next_state];
            acc.add_sample(features.get(tr.state, tr.action), y, 1.0);
        }
        let gram = acc.condition()?;
        clamps += usize::from(gram.clamped);
        let w = gram.solve(acc.rhs());
        let cap = (nh - h) as f64;
        for s in 0..ns {
            for a in 0..na {
                let phi = features.get(s, a);
                let idx = dims.hsa(h, s, a);
                let gamma = beta * libm::sqrt(gram.inverse_quad(phi).max(0.0));
                bonus[idx] = gamma;
                q[idx] = (dot(phi, &w) - gamma).min(cap).max(0.0);
            }
            let start = dims.hsa(h, s, 0);
            let (best, best_val) = argmax(&q[start..start + na]);
            actions[h * ns + s] = best;
            v[h * ns + s] = best_val;
        }
    }
    let mut diagnostics = Diagnostics::new(Accountant::zcdp(0.0)?.finish()?);
    diagnostics.eigen_clamps = clamps;
    diagnostics.push("beta", beta);
    let policy = Policy::deterministic(dims, actions).expect("greedy actions are in range");
    Ok(LearnedPolicy::new(policy, q, v, bonus, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Transition;
    use crate::seeded_rng;

    fn toy_features() -> FeatureMap {
        FeatureMap::new(2, 2, 2, vec![1.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn noiseless_constants_vanish() {
        let c = compute_constants(20, 10, &VapviConfig::default()).unwrap();
        assert_eq!((c.rho0, c.l, c.e, c.d), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn unit_rho0_substitution() {
        let (h, d, delta) = (20usize, 10usize, 0.1);
        let cfg = VapviConfig { rho: 5.0 * h as f64, delta, ..Default::default() };
        let c = compute_constants(h, d, &cfg).unwrap();
        assert!((c.rho0 - 1.0).abs() < 1e-15);
        let expected = 2.0 * h as f64 * libm::sqrt(d as f64 * libm::log(10.0 * (h * d) as f64 / delta));
        assert!((c.l - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn theory_mode_needs_kappa() {
        let cfg = VapviConfig { rho: 1.0, mode: PessimismMode::Theory, ..Default::default() };
        assert!(compute_constants(5, 3, &cfg).is_err());
        let cfg = VapviConfig { kappa: Some(0.0), ..cfg };
        assert!(compute_constants(5, 3, &cfg).is_err());
        let cfg = VapviConfig { kappa: Some(0.1), ..cfg };
        assert!(compute_constants(5, 3, &cfg).unwrap().d > 0.0);
    }

    #[test]
    fn zero_value_gives_unit_variance() {
        let tr = Transition { state: 0, action: 1, reward: 1.0, next_state: 1 };
        let data = Dataset::new(2, vec![vec![tr, tr]; 4]).unwrap();
        let est = estimate_variance(&toy_features(), &data, 0, &[0.0, 0.0], 1.0, None).unwrap();
        assert!(est.beta.iter().chain(&est.theta).all(|&x| x == 0.0));
        assert!(est.sigma2.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn empty_data_is_fully_pessimistic() {
        let data = Dataset::empty(3);
        let out = vapvi(&data, &data, &toy_features(), &VapviConfig::default()).unwrap();
        assert!(out.q_table().iter().all(|&q| q == 0.0));
        assert!(out.bonus_table().iter().all(|&b| b > 0.0));
        assert!((0..3).all(|h| out.policy.action(h, 0) == Some(0)));
        let p = pevi(&data, &toy_features(), &VapviConfig::default()).unwrap();
        assert!(p.v_table().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn private_ledger_has_five_releases_per_step() {
        let tr = Transition { state: 1, action: 0, reward: 0.0, next_state: 0 };
        let data = Dataset::new(4, vec![vec![tr; 4]; 3]).unwrap();
        let out = dp_vapvi(&data, &data, &toy_features(), &VapviConfig::with_rho(2.0), &mut seeded_rng(5)).unwrap();
        let ledger = &out.diagnostics.ledger;
        assert_eq!(ledger.releases.len(), 20);
        assert!((ledger.total() - 2.0).abs() < 1e-12);
        assert!(ledger.releases.iter().all(|r| (r.budget - 0.1).abs() < 1e-15));
    }

    #[test]
    fn mismatched_splits_rejected() {
        let tr = Transition { state: 0, action: 0, reward: 0.0, next_state: 0 };
        let a = Dataset::new(1, vec![vec![tr]; 2]).unwrap();
        let b = Dataset::new(1, vec![vec![tr]; 3]).unwrap();
        assert!(vapvi(&a, &b, &toy_features(), &VapviConfig::default()).is_err());
    }

    #[test]
    fn split_halves() {
        let tr = Transition { state: 0, action: 0, reward: 0.0, next_state: 0 };
        let data = Dataset::new(1, vec![vec![tr]; 5]).unwrap();
        let cfg = VapviConfig { split_data: true, ..Default::default() };
        let (d, dp) = data_splits(&data, &cfg);
        assert_eq!((d.len(), dp.len()), (2, 2));
    }
}
