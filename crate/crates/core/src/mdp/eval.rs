use alloc::vec;
use alloc::vec::Vec;

use super::{argmax, Dims, Policy, TabularMdp};
use crate::error::Result;
use crate::linalg::dot;

/// Value tables of a fixed policy. `v` has `horizon + 1` rows; the last is the
/// terminal zero row.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValue {
    pub value: f64,
    dims: Dims,
    v: Vec<f64>,
    q: Vec<f64>,
}

impl PolicyValue {
    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.dims.states + s]
    }

    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[self.dims.hsa(h, s, a)]
    }

    /// Row `h` of the state-value table.
    pub fn v_row(&self, h: usize) -> &[f64] {
        &self.v[h * self.dims.states..(h + 1) * self.dims.states]
    }
}

/// Backward induction `Q_h = r_h + P_h V_{h+1}`, `V_h = <Q_h, pi_h>`.
pub fn exact_policy_value(mdp: &TabularMdp, pi: &Policy) -> Result<PolicyValue> {
    let dims = mdp.dims();
    pi.check_dims(dims)?;
    let (ns, na, nh) = (dims.states, dims.actions, dims.horizon);
    let mut v = vec![0.0; (nh + 1) * ns];
    let mut q = vec![0.0; nh * ns * na];
    for h in (0..nh).rev() {
        let (head, tail) = v.split_at_mut((h + 1) * ns);
        let next = &tail[..ns];
        let cur = &mut head[h * ns..];
        for s in 0..ns {
            let mut acc = 0.0;
            for a in 0..na {
                let qa = mdp.reward(h, s, a) + dot(mdp.transition(h, s, a), next);
                q[dims.hsa(h, s, a)] = qa;
                let p = pi.prob(h, s, a);
                if p > 0.0 {
                    acc += p * qa;
                }
            }
            cur[s] = acc;
        }
    }
    let value = dot(mdp.initial(), &v[..ns]);
    Ok(PolicyValue { value, dims, v, q })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    pub policy: Policy,
    pub value: f64,
    pub values: PolicyValue,
}

/// Backward induction with a max over actions; ties go to the lowest action.
pub fn solve_optimal(mdp: &TabularMdp) -> OptimalSolution {
    let dims = mdp.dims();
    let (ns, na, nh) = (dims.states, dims.actions, dims.horizon);
    let mut v = vec![0.0; (nh + 1) * ns];
    let mut q = vec![0.0; nh * ns * na];
    let mut actions = vec![0usize; nh * ns];
    for h in (0..nh).rev() {
        for s in 0..ns {
            for a in 0..na {
                let next = &v[(h + 1) * ns..(h + 2) * ns];
                q[dims.hsa(h, s, a)] = mdp.reward(h, s, a) + dot(mdp.transition(h, s, a), next);
            }
            let start = dims.hsa(h, s, 0);
            let (best, best_val) = argmax(&q[start..start + na]);
            actions[h * ns + s] = best;
            v[h * ns + s] = best_val;
        }
    }
    let value = dot(mdp.initial(), &v[..ns]);
    let policy = Policy::deterministic(dims, actions).expect("greedy actions are in range");
    OptimalSolution { policy, value, values: PolicyValue { value, dims, v, q } }
}

/// Per-step state-action occupancy `d^pi_h(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyTable {
    dims: Dims,
    d: Vec<f64>,
}

impl OccupancyTable {
    pub fn get(&self, h: usize, s: usize, a: usize) -> f64 {
        self.d[self.dims.hsa(h, s, a)]
    }

    /// `[s][a]` slice at step `h`.
    pub fn step(&self, h: usize) -> &[f64] {
        let sa = self.dims.sa();
        &self.d[h * sa..(h + 1) * sa]
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Smallest strictly positive entry over all steps, `None` if every entry
    /// is zero.
    pub fn min_positive(&self) -> Option<f64> {
        self.d.iter().copied().filter(|&x| x > 0.0).min_by(f64::total_cmp)
    }

    /// Pairs reachable at step `h` (positive occupancy).
    pub fn trackable_set(&self, h: usize) -> Vec<(usize, usize)> {
        let na = self.dims.actions;
        self.step(h)
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0.0)
            .map(|(i, _)| (i / na, i % na))
            .collect()
    }

    /// True when every pair `pi` can reach is also reached by `self`, the
    /// single-policy coverage condition on `pi`.
    pub fn covers(&self, other: &OccupancyTable) -> bool {
        self.d.iter().zip(&other.d).all(|(&mu, &pi)| pi == 0.0 || mu > 0.0)
    }
}

/// Forward recursion from the initial distribution.
pub fn occupancy(mdp: &TabularMdp, pi: &Policy) -> Result<OccupancyTable> {
    let dims = mdp.dims();
    pi.check_dims(dims)?;
    let (ns, na, nh) = (dims.states, dims.actions, dims.horizon);
    let mut d = vec![0.0; nh * ns * na];
    let mut state_dist = mdp.initial().to_vec();
    for h in 0..nh {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            if state_dist[s] == 0.0 {
                continue;
            }
            for a in 0..na {
                let mass = state_dist[s] * pi.prob(h, s, a);
                d[dims.hsa(h, s, a)] = mass;
                if mass > 0.0 {
                    for (n, p) in next.iter_mut().zip(mdp.transition(h, s, a)) {
                        *n += mass * p;
                    }
                }
            }
        }
        state_dist = next;
    }
    Ok(OccupancyTable { dims, d })
}
