//! Private visitation counts for tabular learners.
//!
//! Pipeline: exact tallies `n` -> noisy, clamped counts `n'` -> consistent
//! counts `ñ` (children sum exactly to the parent, all non-negative) -> a
//! private transition kernel that is a probability vector in every row.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::error::{dim_err, Error, Result};
use crate::mdp::{Dataset, Dims};
use crate::privacy::{gaussian_noise, gaussian_sigma, laplace_noise, laplace_scale, Accountant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountStage {
    Raw,
    Noisy,
    Consistent,
}

/// `n[h][s][a]` and `n[h][s][a][s']`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTables {
    dims: Dims,
    stage: CountStage,
    n_sa: Vec<f64>,
    n_sas: Vec<f64>,
}

impl CountTables {
    pub fn zeros(dims: Dims) -> Self {
        let rows = dims.horizon * dims.sa();
        CountTables { dims, stage: CountStage::Raw, n_sa: vec![0.0; rows], n_sas: vec![0.0; rows * dims.states] }
    }

    /// Builds tables from flat `[h][s][a]` and `[h][s][a][s']` arrays.
    pub fn from_parts(dims: Dims, stage: CountStage, n_sa: Vec<f64>, n_sas: Vec<f64>) -> Result<Self> {
        let rows = dims.horizon * dims.sa();
        if n_sa.len() != rows || n_sas.len() != rows * dims.states {
            return Err(dim_err!(
                "count arrays have {} and {} entries, expected {rows} and {}",
                n_sa.len(),
                n_sas.len(),
                rows * dims.states
            ));
        }
        Ok(CountTables { dims, stage, n_sa, n_sas })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn stage(&self) -> CountStage {
        self.stage
    }

    pub fn n_sa(&self, h: usize, s: usize, a: usize) -> f64 {
        self.n_sa[self.dims.hsa(h, s, a)]
    }

    /// Child counts `n[h][s][a][.]`.
    pub fn n_sas(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let row = self.dims.hsa(h, s, a);
        &self.n_sas[row * self.dims.states..(row + 1) * self.dims.states]
    }

    /// Flattened `[h][s][a]`.
    pub fn pair_counts(&self) -> &[f64] {
        &self.n_sa
    }

    /// Flattened `[h][s][a][s']`.
    pub fn transition_counts(&self) -> &[f64] {
        &self.n_sas
    }
}

/// Exact tallies of every `(h, s, a)` and `(h, s, a, s')`.
pub fn raw_counts(data: &Dataset, dims: Dims) -> Result<CountTables> {
    data.check_indices(dims)?;
    let mut counts = CountTables::zeros(dims);
    for traj in data.trajectories() {
        for (h, tr) in traj.iter().enumerate() {
            let row = dims.hsa(h, tr.state, tr.action);
            counts.n_sa[row] += 1.0;
            counts.n_sas[row * dims.states + tr.next_state] += 1.0;
        }
    }
    Ok(counts)
}

/// Noise distribution used for the count release.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountMechanism {
    /// Two Gaussian releases (pair counts and transition counts), each rho/2-zCDP.
    Gaussian { rho: f64 },
    /// One Laplace release of all counts with l1 sensitivity 4H, epsilon-DP.
    Laplace { epsilon: f64 },
}

/// Calibration of the count release.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReleaseParams {
    pub dims: Dims,
    pub mechanism: CountMechanism,
    /// Failure probability of the uniform noise bound.
    pub delta: f64,
}

impl ReleaseParams {
    pub fn new(dims: Dims, mechanism: CountMechanism, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidBudget(alloc::format!("delta = {delta} must lie in (0, 1)")));
        }
        let budget = match mechanism {
            CountMechanism::Gaussian { rho } => rho,
            CountMechanism::Laplace { epsilon } => epsilon,
        };
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(Error::InvalidBudget(alloc::format!("count budget {budget} must be non-negative")));
        }
        Ok(ReleaseParams { dims, mechanism, delta })
    }

    pub fn noiseless(dims: Dims, delta: f64) -> Result<Self> {
        Self::new(dims, CountMechanism::Gaussian { rho: 0.0 }, delta)
    }

    pub fn is_noiseless(&self) -> bool {
        match self.mechanism {
            CountMechanism::Gaussian { rho } => rho == 0.0,
            CountMechanism::Laplace { epsilon } => epsilon == 0.0,
        }
    }

    fn horizon(&self) -> f64 {
        self.dims.horizon as f64
    }

    /// `ln(4 H S^2 A / delta)`
    fn log_term(&self) -> f64 {
        let d = self.dims;
        libm::log(4.0 * (d.horizon * d.states * d.states * d.actions) as f64 / self.delta)
    }

    /// Per-entry Gaussian variance `2H / rho`, or `2 b^2` for Laplace.
    pub fn sigma2(&self) -> f64 {
        if self.is_noiseless() {
            return 0.0;
        }
        match self.mechanism {
            CountMechanism::Gaussian { rho } => 2.0 * self.horizon() / rho,
            CountMechanism::Laplace { .. } => 2.0 * self.noise_scale() * self.noise_scale(),
        }
    }

    /// Gaussian sigma or Laplace scale `4H / epsilon`.
    pub fn noise_scale(&self) -> f64 {
        if self.is_noiseless() {
            return 0.0;
        }
        match self.mechanism {
            CountMechanism::Gaussian { .. } => libm::sqrt(self.sigma2()),
            CountMechanism::Laplace { epsilon } => 4.0 * self.horizon() / epsilon,
        }
    }

    /// Uniform high-probability bound on the count noise:
    /// `4 sqrt(H ln(4HS^2A/delta) / rho)` (Gaussian) or
    /// `(4H/epsilon) ln(4HS^2A/delta)` (Laplace). Zero in noiseless mode.
    pub fn noise_bound(&self) -> f64 {
        if self.is_noiseless() {
            return 0.0;
        }
        match self.mechanism {
            CountMechanism::Gaussian { rho } => 4.0 * libm::sqrt(self.horizon() * self.log_term() / rho),
            CountMechanism::Laplace { epsilon } => 4.0 * self.horizon() / epsilon * self.log_term(),
        }
    }

    /// Accountant matching the mechanism's budget.
    pub fn accountant(&self) -> Result<Accountant> {
        match self.mechanism {
            CountMechanism::Gaussian { rho } => Accountant::zcdp(rho),
            CountMechanism::Laplace { epsilon } => Accountant::pure(epsilon),
        }
    }
}

/// `n' = max(0, n + noise)` entrywise with independent noise per entry. The
/// releases are declared on `accountant`.
pub fn noisy_counts<R: Rng + ?Sized>(
    n: &CountTables,
    params: &ReleaseParams,
    rng: &mut R,
    accountant: &mut Accountant,
) -> Result<CountTables> {
    if n.stage != CountStage::Raw {
        return Err(Error::InvalidParameter("noisy_counts expects raw counts".into()));
    }
    if n.dims != params.dims {
        return Err(dim_err!("count dims {:?} do not match release dims {:?}", n.dims, params.dims));
    }
    let mut out = n.clone();
    out.stage = CountStage::Noisy;
    if params.is_noiseless() {
        return Ok(out);
    }
    let horizon = params.horizon();
    match params.mechanism {
        CountMechanism::Gaussian { rho } => {
            let sensitivity = libm::sqrt(2.0 * horizon);
            let sigma = gaussian_sigma(sensitivity, rho / 2.0)?;
            for v in out.n_sa.iter_mut().chain(out.n_sas.iter_mut()) {
                *v = (*v + gaussian_noise(sigma, rng)).max(0.0);
            }
            accountant.record("pair_counts", sensitivity, rho / 2.0, sigma);
            accountant.record("transition_counts", sensitivity, rho / 2.0, sigma);
        }
        CountMechanism::Laplace { epsilon } => {
            let sensitivity = 4.0 * horizon;
            let scale = laplace_scale(sensitivity, epsilon)?;
            for v in out.n_sa.iter_mut().chain(out.n_sas.iter_mut()) {
                *v = (*v + laplace_noise(scale, rng)).max(0.0);
            }
            accountant.record("all_counts", sensitivity, epsilon, scale);
        }
    }
    Ok(out)
}

/// Solution of one consistency projection.
#[derive(Debug, Clone, PartialEq)]
pub struct RowProjection {
    pub x: Vec<f64>,
    /// Achieved `max_i |x_i - n_i|`.
    pub objective: f64,
}

/// Solves `min_x max_i |x_i - n_i|` subject to `x >= 0` and
/// `|sum(x) - total| <= slack`.
///
/// For a fixed level `t` the reachable sums form the interval
/// `[sum max(0, n_i - t), sum (n_i + t)]`, which widens monotonically in `t`,
/// so the optimum is the smallest `t` at which that interval meets
/// `[total - slack, total + slack]`. Each side is piecewise linear in `t` and
/// is inverted exactly. When the sum must rise, every coordinate moves up by
/// the same amount; when it must fall, coordinates are lowered by the same
/// amount and pinned at zero.
pub fn project_row(n: &[f64], total: f64, slack: f64) -> RowProjection {
    let len = n.len();
    if len == 0 {
        return RowProjection { x: Vec::new(), objective: 0.0 };
    }
    let lower_target = total - slack;
    let upper_target = (total + slack).max(0.0);
    let t_min = n.iter().fold(0.0f64, |m, &v| m.max(-v));
    let sum_n: f64 = n.iter().sum();
    let high_at_min = sum_n + len as f64 * t_min;
    let low_at_min: f64 = n.iter().map(|&v| (v - t_min).max(0.0)).sum();

    let x: Vec<f64> = if high_at_min < lower_target {
        let t = (lower_target - sum_n) / len as f64;
        n.iter().map(|&v| v + t).collect()
    } else if low_at_min > upper_target {
        let t = lower_level(n, upper_target);
        n.iter().map(|&v| (v - t).max(0.0)).collect()
    } else {
        let lo: Vec<f64> = n.iter().map(|&v| (v - t_min).max(0.0)).collect();
        if low_at_min >= lower_target {
            lo
        } else {
            let hi: Vec<f64> = n.iter().map(|&v| v + t_min).collect();
            water_fill(&lo, &hi, lower_target)
        }
    };
    let objective = x.iter().zip(n).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    RowProjection { x, objective }
}

/// Level `t` with `sum_i max(0, n_i - t) = target`, for
/// `0 <= target < sum_i max(0, n_i)`.
fn lower_level(n: &[f64], target: f64) -> f64 {
    let mut sorted: Vec<f64> = n.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    for k in 0..sorted.len() {
        prefix += sorted[k];
        let t = (prefix - target) / (k + 1) as f64;
        let next = sorted.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
        if t >= next {
            return t;
        }
    }
    sorted[0]
}

/// `x_i = min(hi_i, lo_i + c)` with `c` chosen so that `sum x = target`.
fn water_fill(lo: &[f64], hi: &[f64], target: f64) -> Vec<f64> {
    let need = target - lo.iter().sum::<f64>();
    let mut gaps: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| h - l).collect();
    gaps.sort_by(f64::total_cmp);
    let mut filled = 0.0;
    let mut level = gaps.last().copied().unwrap_or(0.0);
    for (k, &g) in gaps.iter().enumerate() {
        let remaining = gaps.len() - k;
        if filled + g * remaining as f64 >= need {
            level = (need - filled) / remaining as f64;
            break;
        }
        filled += g;
    }
    lo.iter().zip(hi).map(|(&l, &h)| (l + level).min(h)).collect()
}

/// Projects every `(h, s, a)` row of `n'` independently with slack
/// `noise_bound / 2` and sets each parent count to the exact sum of its
/// children.
pub fn consistent_counts(n_prime: &CountTables, noise_bound: f64) -> CountTables {
    let dims = n_prime.dims;
    let ns = dims.states;
    let mut out = n_prime.clone();
    out.stage = CountStage::Consistent;
    for row in 0..dims.horizon * dims.sa() {
        let children = &n_prime.n_sas[row * ns..(row + 1) * ns];
        let proj = project_row(children, n_prime.n_sa[row], noise_bound / 2.0);
        out.n_sa[row] = proj.x.iter().sum();
        out.n_sas[row * ns..(row + 1) * ns].copy_from_slice(&proj.x);
    }
    out
}

/// Private transition kernel: `ñ(s'|s,a) / ñ(s,a)` where `ñ(s,a) > E`,
/// uniform otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivateKernel {
    dims: Dims,
    probs: Vec<f64>,
    fallback: Vec<bool>,
}

impl PrivateKernel {
    pub fn row(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let row = self.dims.hsa(h, s, a);
        &self.probs[row * self.dims.states..(row + 1) * self.dims.states]
    }

    /// True where the row fell back to the uniform distribution.
    pub fn is_fallback(&self, h: usize, s: usize, a: usize) -> bool {
        self.fallback[self.dims.hsa(h, s, a)]
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }
}

pub fn private_kernel(n_tilde: &CountTables, noise_bound: f64) -> PrivateKernel {
    let dims = n_tilde.dims;
    let ns = dims.states;
    let rows = dims.horizon * dims.sa();
    let mut probs = vec![0.0; rows * ns];
    let mut fallback = vec![false; rows];
    let uniform = 1.0 / ns as f64;
    for row in 0..rows {
        let total = n_tilde.n_sa[row];
        let out = &mut probs[row * ns..(row + 1) * ns];
        if total > noise_bound {
            for (p, c) in out.iter_mut().zip(&n_tilde.n_sas[row * ns..(row + 1) * ns]) {
                *p = c / total;
            }
        } else {
            out.fill(uniform);
            fallback[row] = true;
        }
    }
    PrivateKernel { dims, probs, fallback }
}

/// Non-private empirical kernel `n(s'|s,a) / n(s,a)`, uniform on unvisited
/// pairs. Works directly on raw tallies.
pub fn empirical_kernel(n: &CountTables) -> PrivateKernel {
    private_kernel(n, 0.0)
}
