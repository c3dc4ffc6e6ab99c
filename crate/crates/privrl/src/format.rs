//! Text formats for datasets, privacy ledgers and learner diagnostics.

use std::io::{Read, Write};

use privrl_core::privacy::{BudgetKind, Ledger};
use privrl_core::{Dataset, LearnedPolicy, Transition};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct TransitionRecord {
    traj: usize,
    h: usize,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
}

/// One line per transition: `traj,h,s,a,r,s_next`.
pub fn write_dataset<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (traj, steps) in data.trajectories().iter().enumerate() {
        for (h, t) in steps.iter().enumerate() {
            w.serialize(TransitionRecord { traj, h, s: t.state, a: t.action, r: t.reward, s_next: t.next_state })?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset`]. Rows may come in any order
/// but every trajectory must cover steps `0..horizon` exactly once.
pub fn read_dataset<R: Read>(input: R, horizon: usize) -> Result<Dataset> {
    let mut rows: Vec<TransitionRecord> = csv::Reader::from_reader(input).deserialize().collect::<Result<_, _>>()?;
    rows.sort_by_key(|r| (r.traj, r.h));
    let count = rows.last().map_or(0, |r| r.traj + 1);
    if rows.len() != count * horizon {
        return Err(Error::Format(format!("{} rows do not form {count} trajectories of length {horizon}", rows.len())));
    }
    let mut trajectories = Vec::with_capacity(count);
    for (i, chunk) in rows.chunks(horizon.max(1)).enumerate() {
        if chunk.iter().enumerate().any(|(h, r)| r.traj != i || r.h != h) {
            return Err(Error::Format(format!("trajectory {i} is missing steps")));
        }
        trajectories.push(
            chunk.iter().map(|r| Transition { state: r.s, action: r.a, reward: r.r, next_state: r.s_next }).collect(),
        );
    }
    Ok(Dataset::new(horizon, trajectories)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseRecord {
    pub name: String,
    pub sensitivity: f64,
    pub budget: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    /// `"zcdp"` or `"pure"`.
    pub kind: String,
    pub target: f64,
    pub total: f64,
    pub releases: Vec<ReleaseRecord>,
}

impl From<&Ledger> for LedgerRecord {
    fn from(l: &Ledger) -> Self {
        LedgerRecord {
            kind: match l.kind {
                BudgetKind::Zcdp => "zcdp",
                BudgetKind::Pure => "pure",
            }
            .into(),
            target: l.target,
            total: l.total(),
            releases: l
                .releases
                .iter()
                .map(|r| ReleaseRecord { name: r.name.clone(), sensitivity: r.sensitivity, budget: r.budget, sigma: r.noise_scale })
                .collect(),
        }
    }
}

/// Everything a run reports besides its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub alg: String,
    pub env: String,
    #[serde(rename = "H")]
    pub horizon: usize,
    #[serde(rename = "K")]
    pub episodes: usize,
    pub rho: Option<f64>,
    pub seed: u64,
    pub subopt: f64,
    /// Greedy actions `[h][s]`.
    pub policy: Vec<usize>,
    pub scalars: Vec<(String, f64)>,
    pub eigen_clamps: usize,
    pub ledger: LedgerRecord,
}

impl RunReport {
    pub fn policy_actions(learned: &LearnedPolicy) -> Vec<usize> {
        let d = learned.dims();
        (0..d.horizon)
            .flat_map(|h| (0..d.states).map(move |s| (h, s)))
            .map(|(h, s)| learned.policy.action(h, s).expect("learned policies are deterministic"))
            .collect()
    }
}

pub fn ledger_json(ledger: &Ledger) -> Result<String> {
    Ok(serde_json::to_string_pretty(&LedgerRecord::from(ledger))?)
}

/// Debug dump of count tables: `h,s,a,s_next,value`, with an empty `s_next`
/// on the pair-count rows.
pub fn write_counts<W: Write>(counts: &privrl_core::counts::CountTables, out: W) -> Result<()> {
    let d = counts.dims();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "s", "a", "s_next", "value"])?;
    for h in 0..d.horizon {
        for s in 0..d.states {
            for a in 0..d.actions {
                let key = [h.to_string(), s.to_string(), a.to_string()];
                w.write_record(key.iter().cloned().chain([String::new(), counts.n_sa(h, s, a).to_string()]))?;
                for (next, v) in counts.n_sas(h, s, a).iter().enumerate() {
                    w.write_record(key.iter().cloned().chain([next.to_string(), v.to_string()]))?;
                }
            }
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
