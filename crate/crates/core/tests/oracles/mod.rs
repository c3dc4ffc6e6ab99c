//! Independent reference implementations used to cross-check the library.
#![allow(dead_code)]

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use privrl_core::TabularMdp;

/// Optimal level of the count projection solved as a generic LP:
/// `min t` s.t. `|x_i - n_i| <= t`, `x >= 0`, `|sum x - total| <= slack`.
pub fn lp_projection_level(n: &[f64], total: f64, slack: f64) -> f64 {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let t = p.add_var(1.0, (0.0, f64::INFINITY));
    let xs: Vec<_> = n.iter().map(|_| p.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for (&x, &ni) in xs.iter().zip(n) {
        p.add_constraint(&[(x, 1.0), (t, -1.0)], ComparisonOp::Le, ni);
        p.add_constraint(&[(x, 1.0), (t, 1.0)], ComparisonOp::Ge, ni);
    }
    let sum: Vec<_> = xs.iter().map(|&x| (x, 1.0)).collect();
    p.add_constraint(&sum, ComparisonOp::Le, total + slack);
    p.add_constraint(&sum, ComparisonOp::Ge, total - slack);
    p.solve().expect("projection LP is always feasible").objective()
}

/// Same level by bisection on the monotone feasibility of `t`.
pub fn bisection_projection_level(n: &[f64], total: f64, slack: f64) -> f64 {
    // x_i >= 0 forces t >= -n_i; an infeasible window collapses to sum = 0
    let t_min = n.iter().fold(0.0f64, |m, &v| m.max(-v));
    let upper = (total + slack).max(0.0);
    let feasible = |t: f64| {
        let lo: f64 = n.iter().map(|v| (v - t).max(0.0)).sum();
        let hi: f64 = n.iter().map(|v| v + t).sum();
        t >= t_min && lo <= upper && hi >= total - slack
    };
    if feasible(0.0) {
        return 0.0;
    }
    let (mut a, mut b) = (0.0, 1.0);
    while !feasible(b) {
        b *= 2.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if feasible(m) {
            b = m;
        } else {
            a = m;
        }
    }
    b
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn gauss_jordan_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        let p = a[col][col];
        assert!(p.abs() > 1e-300, "singular matrix");
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (v, pv) in a[r].iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// Value of the deterministic policy `actions[h][s]` by pushing the state
/// distribution forward.
pub fn forward_value(mdp: &TabularMdp, actions: &[usize]) -> f64 {
    let (ns, nh) = (mdp.states(), mdp.horizon());
    let mut dist = mdp.initial().to_vec();
    let mut total = 0.0;
    for h in 0..nh {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            let a = actions[h * ns + s];
            total += dist[s] * mdp.reward(h, s, a);
            for (n, p) in next.iter_mut().zip(mdp.transition(h, s, a)) {
                *n += dist[s] * p;
            }
        }
        dist = next;
    }
    total
}

/// Best value over every deterministic Markov policy (`A^(S H)` of them).
pub fn brute_force_optimal(mdp: &TabularMdp) -> f64 {
    let (ns, na, nh) = (mdp.states(), mdp.actions(), mdp.horizon());
    let slots = ns * nh;
    let count = na.pow(slots as u32);
    let mut best = f64::NEG_INFINITY;
    let mut actions = vec![0usize; slots];
    for code in 0..count {
        let mut c = code;
        for slot in actions.iter_mut() {
            *slot = c % na;
            c /= na;
        }
        best = best.max(forward_value(mdp, &actions));
    }
    best
}

pub fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}
