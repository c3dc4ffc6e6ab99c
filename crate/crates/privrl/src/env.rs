//! Environment specifications, construction and the JSON environment file.

use std::fs;
use std::path::{Path, PathBuf};

use privrl_core::envs::{binary_action_behavior, build_binary_action_mdp, epsilon_greedy, random_tabular_mdp, BINARY_ACTIONS, BINARY_STATES};
use privrl_core::mdp::{solve_optimal, tabularize, validate_linear_mdp};
use privrl_core::{seeded_rng, Dims, LinearMdp, Policy, TabularMdp};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvSpec {
    /// Two states, 100 actions, `d = 10` binary-action linear MDP.
    BinaryAction { horizon: usize, seed: u64 },
    RandomTabular { states: usize, actions: usize, horizon: usize, seed: u64 },
    File { path: PathBuf },
}

impl EnvSpec {
    pub fn name(&self) -> String {
        match self {
            EnvSpec::BinaryAction { .. } => "binary-action".into(),
            EnvSpec::RandomTabular { states, actions, .. } => format!("random-tabular-{states}x{actions}"),
            EnvSpec::File { path } => path.file_stem().map_or_else(|| "file".into(), |s| s.to_string_lossy().into_owned()),
        }
    }

    pub fn build(&self) -> Result<Environment> {
        match self {
            EnvSpec::BinaryAction { horizon, seed } => {
                if *horizon == 0 {
                    return Err(Error::Config("horizon must be positive".into()));
                }
                Ok(Environment::Linear(build_binary_action_mdp(*horizon, *seed)?))
            }
            EnvSpec::RandomTabular { states, actions, horizon, seed } => {
                Ok(Environment::Tabular(random_tabular_mdp(*states, *actions, *horizon, &mut seeded_rng(*seed))?))
            }
            EnvSpec::File { path } => read_env(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Environment {
    Tabular(TabularMdp),
    Linear(LinearMdp),
}

impl Environment {
    pub fn dims(&self) -> Dims {
        match self {
            Environment::Tabular(m) => m.dims(),
            Environment::Linear(m) => m.dims(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.dims().horizon
    }

    pub fn linear(&self) -> Option<&LinearMdp> {
        match self {
            Environment::Linear(m) => Some(m),
            Environment::Tabular(_) => None,
        }
    }

    /// The tabular model used for sampling and exact scoring.
    pub fn to_tabular(&self) -> Result<TabularMdp> {
        match self {
            Environment::Tabular(m) => Ok(m.clone()),
            Environment::Linear(m) => {
                let report = validate_linear_mdp(m);
                if let Some(worst) = report.worst() {
                    return Err(Error::Format(format!("linear MDP is not a valid MDP: {worst:?}")));
                }
                Ok(tabularize(m)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BehaviorSpec {
    Uniform,
    /// Action 0 with probability `p`, the rest uniformly.
    BinaryAction { p: f64 },
    /// Mixes the optimal policy with the uniform one.
    EpsilonOptimal { eps: f64 },
}

impl BehaviorSpec {
    pub fn default_for(env: &EnvSpec) -> Self {
        match env {
            EnvSpec::BinaryAction { .. } => BehaviorSpec::BinaryAction { p: 0.6 },
            _ => BehaviorSpec::Uniform,
        }
    }

    pub fn build(&self, mdp: &TabularMdp) -> Result<Policy> {
        let dims = mdp.dims();
        match *self {
            BehaviorSpec::Uniform => Ok(Policy::uniform(dims)),
            BehaviorSpec::BinaryAction { p } => {
                if dims.states != BINARY_STATES || dims.actions != BINARY_ACTIONS {
                    return Err(Error::Config(format!(
                        "binary-action behavior needs {BINARY_STATES} states and {BINARY_ACTIONS} actions"
                    )));
                }
                Ok(binary_action_behavior(dims.horizon, p)?)
            }
            BehaviorSpec::EpsilonOptimal { eps } => Ok(epsilon_greedy(&solve_optimal(mdp).policy, eps)?),
        }
    }
}

/// On-disk environment. All tables are flat row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvFile {
    Tabular {
        states: usize,
        actions: usize,
        horizon: usize,
        /// `[h][s][a][s']`
        transitions: Vec<f64>,
        /// `[h][s][a]`
        rewards: Vec<f64>,
        initial: Vec<f64>,
    },
    Linear {
        states: usize,
        actions: usize,
        horizon: usize,
        dim: usize,
        /// `[s][a][d]`
        features: Vec<f64>,
        /// `[h][s'][d]`
        measures: Vec<f64>,
        /// `[h][d]`
        reward_weights: Vec<f64>,
        initial: Vec<f64>,
    },
}

impl From<&Environment> for EnvFile {
    fn from(env: &Environment) -> Self {
        match env {
            Environment::Tabular(m) => EnvFile::Tabular {
                states: m.states(),
                actions: m.actions(),
                horizon: m.horizon(),
                transitions: m.transitions().to_vec(),
                rewards: m.rewards().to_vec(),
                initial: m.initial().to_vec(),
            },
            Environment::Linear(m) => EnvFile::Linear {
                states: m.states(),
                actions: m.actions(),
                horizon: m.horizon(),
                dim: m.dim(),
                features: m.features().to_vec(),
                measures: m.measures().to_vec(),
                reward_weights: m.reward_weights().to_vec(),
                initial: m.initial().to_vec(),
            },
        }
    }
}

impl TryFrom<EnvFile> for Environment {
    type Error = Error;

    fn try_from(file: EnvFile) -> Result<Self> {
        Ok(match file {
            EnvFile::Tabular { states, actions, horizon, transitions, rewards, initial } => {
                Environment::Tabular(TabularMdp::new(states, actions, horizon, transitions, rewards, initial)?)
            }
            EnvFile::Linear { states, actions, horizon, dim, features, measures, reward_weights, initial } => {
                Environment::Linear(LinearMdp::new(states, actions, horizon, dim, features, measures, reward_weights, initial)?)
            }
        })
    }
}

pub fn env_to_json(env: &Environment) -> Result<String> {
    Ok(serde_json::to_string_pretty(&EnvFile::from(env))?)
}

pub fn env_from_json(text: &str) -> Result<Environment> {
    serde_json::from_str::<EnvFile>(text)?.try_into()
}

pub fn write_env(env: &Environment, path: &Path) -> Result<()> {
    fs::write(path, env_to_json(env)?).map_err(io_err(path))
}

pub fn read_env(path: &Path) -> Result<Environment> {
    env_from_json(&fs::read_to_string(path).map_err(io_err(path))?)
}
