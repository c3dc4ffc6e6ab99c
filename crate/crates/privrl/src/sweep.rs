//! Experiment configuration and the (algorithm × budget × K × seed) sweep.

use std::path::PathBuf;
use std::time::Instant;

use privrl_core::apvi::{apvi, dp_apvi, ApviConfig};
use privrl_core::counts::CountMechanism;
use privrl_core::mdp::{exact_policy_value, sample_dataset, solve_optimal};
use privrl_core::vapvi::{data_splits, dp_vapvi, feature_coverage, pevi, vapvi, FeatureMap, PessimismMode, VapviConfig};
use privrl_core::{seeded_rng, Dataset, Dims, LearnedPolicy, Policy, TabularMdp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{BehaviorSpec, EnvSpec, Environment};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgKind {
    DpApvi,
    Apvi,
    DpVapvi,
    Vapvi,
    Pevi,
}

impl AlgKind {
    pub fn name(self) -> &'static str {
        match self {
            AlgKind::DpApvi => "dp-apvi",
            AlgKind::Apvi => "apvi",
            AlgKind::DpVapvi => "dp-vapvi",
            AlgKind::Vapvi => "vapvi",
            AlgKind::Pevi => "pevi",
        }
    }

    pub fn is_private(self) -> bool {
        matches!(self, AlgKind::DpApvi | AlgKind::DpVapvi)
    }

    pub fn parse(name: &str) -> Option<Self> {
        [AlgKind::DpApvi, AlgKind::Apvi, AlgKind::DpVapvi, AlgKind::Vapvi, AlgKind::Pevi]
            .into_iter()
            .find(|a| a.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Theory,
    Empirical,
}

/// One algorithm entry. Unset fields take the algorithm's defaults. For the
/// tabular learners `c1`/`c2` multiply the two bonus terms; for the linear
/// learners they are the constants inside the noise shift `E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgSpec {
    pub alg: AlgKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    /// Unvisited-pair penalty multiplier of the tabular learners.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<f64>,
    /// Use the Laplace mechanism (budget read as epsilon) in DP-APVI.
    #[serde(default)]
    pub laplace: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Bonus multiplier of the linear learners.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_d: Option<f64>,
    #[serde(default)]
    pub split_data: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
}

impl AlgSpec {
    pub fn new(alg: AlgKind) -> Self {
        AlgSpec {
            alg,
            delta: None,
            c1: None,
            c2: None,
            penalty: None,
            laplace: false,
            lambda: None,
            c: None,
            c_d: None,
            split_data: false,
            mode: None,
        }
    }

    pub fn apvi_config(&self, budget: f64) -> ApviConfig {
        let base = ApviConfig::default();
        ApviConfig {
            c1: self.c1.unwrap_or(base.c1),
            c2: self.c2.unwrap_or(base.c2),
            penalty: self.penalty.or(base.penalty),
            delta: self.delta.unwrap_or(base.delta),
            mechanism: if self.laplace {
                CountMechanism::Laplace { epsilon: budget }
            } else {
                CountMechanism::Gaussian { rho: budget }
            },
        }
    }

    pub fn vapvi_config(&self, rho: f64, kappa: Option<f64>) -> VapviConfig {
        let base = VapviConfig::default();
        VapviConfig {
            rho,
            delta: self.delta.unwrap_or(base.delta),
            lambda: self.lambda.unwrap_or(base.lambda),
            c: self.c.unwrap_or(base.c),
            c1: self.c1.unwrap_or(base.c1),
            c2: self.c2.unwrap_or(base.c2),
            c_d: self.c_d.unwrap_or(base.c_d),
            split_data: self.split_data,
            mode: match self.mode {
                Some(Mode::Theory) => PessimismMode::Theory,
                _ => PessimismMode::Empirical,
            },
            kappa,
            unit_weights: false,
        }
    }
}

fn default_seeds() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    /// Defaults to the environment's natural behavior policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behavior: Option<BehaviorSpec>,
    pub algorithms: Vec<AlgSpec>,
    /// Dataset sizes (`n` or `K`).
    pub sizes: Vec<usize>,
    /// Budgets for the private algorithms; non-private ones run once per cell.
    #[serde(default)]
    pub rhos: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// Record wall-clock runtimes; off by default so outputs are byte-stable.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("algorithm list is empty".into()));
        }
        if self.sizes.is_empty() {
            return Err(Error::Config("size grid is empty".into()));
        }
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if self.algorithms.iter().any(|a| a.alg.is_private()) && self.rhos.is_empty() {
            return Err(Error::Config("private algorithms need a non-empty rho grid".into()));
        }
        if let Some(bad) = self.rhos.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::Config(format!("budget {bad} must be finite and non-negative")));
        }
        Ok(())
    }

    pub fn behavior_spec(&self) -> BehaviorSpec {
        self.behavior.unwrap_or_else(|| BehaviorSpec::default_for(&self.env))
    }

    /// `(algorithm index, budget)` pairs in output order.
    pub fn variants(&self) -> Vec<(usize, Option<f64>)> {
        let mut out = Vec::new();
        for (i, a) in self.algorithms.iter().enumerate() {
            if a.alg.is_private() {
                out.extend(self.rhos.iter().map(|&r| (i, Some(r))));
            } else {
                out.push((i, None));
            }
        }
        out
    }
}

/// One scored run. `rho = None` is written as `inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub alg: String,
    pub env: String,
    pub horizon: usize,
    pub episodes: usize,
    pub rho: Option<f64>,
    pub seed: u64,
    /// `v* - v^pi`; NaN when the run failed.
    pub subopt: f64,
    pub runtime_ms: f64,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `master` with SplitMix64.
pub fn mix_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |h, &p| splitmix64(h ^ splitmix64(p)))
}

fn name_tag(name: &str) -> u64 {
    // FNV-1a
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Seed of the dataset for size `k` and repetition `rep`. It does not depend
/// on the algorithm, so all learners in a cell see the same data.
pub fn data_seed(master: u64, k: usize, rep: usize) -> u64 {
    mix_seed(master, &[name_tag("data"), k as u64, rep as u64])
}

/// Seed of a learner's privacy noise on a given dataset.
pub fn noise_seed(data_seed: u64, alg: AlgKind, budget: Option<f64>) -> u64 {
    mix_seed(data_seed, &[name_tag(alg.name()), budget.map_or(u64::MAX, f64::to_bits)])
}

/// Everything fixed across a sweep: the environment, its tabular model, the
/// behavior policy and the optimal value.
#[derive(Debug, Clone)]
pub struct SweepContext {
    pub env_name: String,
    pub env: Environment,
    pub mdp: TabularMdp,
    pub behavior: Policy,
    pub features: FeatureMap,
    pub optimal_value: f64,
    /// Exact behavior feature coverage, computed when theory mode needs it.
    pub kappa: Option<f64>,
}

/// One-hot features over the `S·A` pairs, so linear learners can run on a
/// tabular model.
pub fn one_hot_features(dims: Dims) -> FeatureMap {
    let d = dims.sa();
    let mut f = vec![0.0; d * d];
    for i in 0..d {
        f[i * d + i] = 1.0;
    }
    FeatureMap::new(dims.states, dims.actions, d, f).expect("square one-hot table")
}

impl SweepContext {
    pub fn new(env_spec: &EnvSpec, behavior: BehaviorSpec, need_kappa: bool) -> Result<Self> {
        let env = env_spec.build()?;
        let mdp = env.to_tabular()?;
        let behavior = behavior.build(&mdp)?;
        let features = match env.linear() {
            Some(lin) => FeatureMap::from_linear(lin),
            None => one_hot_features(mdp.dims()),
        };
        let kappa = match (need_kappa, env.linear()) {
            (false, _) => None,
            (true, Some(lin)) => Some(feature_coverage(lin, &behavior)?),
            (true, None) => {
                // one-hot features: kappa is the smallest pair occupancy
                let occ = privrl_core::mdp::occupancy(&mdp, &behavior)?;
                let d = mdp.dims();
                Some(
                    (0..d.horizon)
                        .flat_map(|h| occ.step(h).to_vec())
                        .fold(f64::INFINITY, f64::min),
                )
            }
        };
        let optimal_value = solve_optimal(&mdp).value;
        Ok(SweepContext { env_name: env_spec.name(), env, mdp, behavior, features, optimal_value, kappa })
    }

    pub fn sample(&self, k: usize, seed: u64) -> Result<Dataset> {
        Ok(sample_dataset(&self.mdp, &self.behavior, k, &mut seeded_rng(seed))?)
    }

    /// Runs one learner on `data`.
    pub fn learn(&self, spec: &AlgSpec, budget: Option<f64>, data: &Dataset, seed: u64) -> Result<LearnedPolicy> {
        let dims = self.mdp.dims();
        let budget_or_zero = budget.unwrap_or(0.0);
        let mut rng = seeded_rng(seed);
        let out = match spec.alg {
            AlgKind::DpApvi => dp_apvi(data, dims, self.mdp.rewards(), &spec.apvi_config(budget_or_zero), &mut rng)?,
            AlgKind::Apvi => apvi(data, dims, self.mdp.rewards(), &spec.apvi_config(0.0))?,
            AlgKind::DpVapvi | AlgKind::Vapvi => {
                let cfg = spec.vapvi_config(if spec.alg == AlgKind::Vapvi { 0.0 } else { budget_or_zero }, self.kappa);
                let (d, d_prime) = data_splits(data, &cfg);
                if spec.alg == AlgKind::Vapvi {
                    vapvi(&d, &d_prime, &self.features, &cfg)?
                } else {
                    dp_vapvi(&d, &d_prime, &self.features, &cfg, &mut rng)?
                }
            }
            AlgKind::Pevi => pevi(data, &self.features, &spec.vapvi_config(0.0, self.kappa))?,
        };
        Ok(out)
    }

    pub fn suboptimality(&self, learned: &LearnedPolicy) -> Result<f64> {
        Ok(self.optimal_value - exact_policy_value(&self.mdp, &learned.policy)?.value)
    }
}

/// Rows in output order plus the failures that produced NaN rows.
#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub errors: Vec<String>,
}

fn needs_kappa(cfg: &ExperimentConfig) -> bool {
    cfg.algorithms.iter().any(|a| a.mode == Some(Mode::Theory))
}

/// Runs every (algorithm, budget, size, seed) cell. Each (size, seed) pair
/// samples one dataset shared by all learners. Work runs on a pool of
/// `cfg.jobs` threads (all cores if unset); output order does not depend on
/// scheduling.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let ctx = SweepContext::new(&cfg.env, cfg.behavior_spec(), needs_kappa(cfg))?;
    let variants = cfg.variants();
    let tasks: Vec<(usize, usize)> =
        (0..cfg.sizes.len()).flat_map(|ki| (0..cfg.seeds).map(move |rep| (ki, rep))).collect();
    let horizon = ctx.mdp.horizon();

    let run_task = |&(ki, rep): &(usize, usize)| -> Vec<((usize, usize, usize), ResultRow, Option<String>)> {
        let k = cfg.sizes[ki];
        let dseed = data_seed(cfg.master_seed, k, rep);
        let data = ctx.sample(k, dseed);
        variants
            .iter()
            .enumerate()
            .map(|(vi, &(ai, budget))| {
                let spec = &cfg.algorithms[ai];
                let start = Instant::now();
                let scored = data
                    .as_ref()
                    .map_err(|e| Error::Config(e.to_string()))
                    .and_then(|d| ctx.learn(spec, budget, d, noise_seed(dseed, spec.alg, budget)))
                    .and_then(|l| ctx.suboptimality(&l));
                let elapsed = if cfg.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
                let (subopt, err) = match scored {
                    Ok(v) => (v, None),
                    Err(e) => (f64::NAN, Some(format!("{} rho={budget:?} K={k} seed={rep}: {e}", spec.alg.name()))),
                };
                let row = ResultRow {
                    alg: spec.alg.name().into(),
                    env: ctx.env_name.clone(),
                    horizon,
                    episodes: k,
                    rho: budget,
                    seed: rep as u64,
                    subopt,
                    runtime_ms: elapsed,
                };
                ((vi, ki, rep), row, err)
            })
            .collect()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut results: Vec<_> = pool.install(|| tasks.par_iter().flat_map_iter(run_task).collect());
    results.sort_by_key(|(key, _, _)| *key);

    let mut out = SweepOutput::default();
    for (_, row, err) in results {
        if let Some(e) = err {
            out.errors.push(e);
        }
        out.rows.push(row);
    }
    Ok(out)
}

/// Mean of the finite suboptimality values of rows matching `alg`, `rho`
/// and `k`.
pub fn mean_subopt(rows: &[ResultRow], alg: &str, rho: Option<f64>, k: usize) -> Option<f64> {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.alg == alg && r.rho == rho && r.episodes == k && r.subopt.is_finite())
        .map(|r| r.subopt)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}
