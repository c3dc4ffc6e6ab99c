//! Additive-noise mechanisms and zCDP bookkeeping.
//!
//! A budget of exactly zero selects noiseless mode: every mechanism returns its
//! input unchanged. The private learners rely on this to reduce exactly to
//! their non-private counterparts.

use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A privacy budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrivacyBudget {
    /// rho-zero-concentrated DP.
    Zcdp(f64),
    /// epsilon-DP.
    Pure(f64),
    /// (epsilon, delta)-DP.
    Approx { epsilon: f64, delta: f64 },
}

impl PrivacyBudget {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PrivacyBudget::Zcdp(rho) => check_budget("rho", rho),
            PrivacyBudget::Pure(eps) => check_budget("epsilon", eps),
            PrivacyBudget::Approx { epsilon, delta } => {
                check_budget("epsilon", epsilon)?;
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::InvalidBudget(alloc::format!("delta = {delta} must lie in (0, 1)")));
                }
                Ok(())
            }
        }
    }

    pub fn is_noiseless(&self) -> bool {
        match *self {
            PrivacyBudget::Zcdp(v) | PrivacyBudget::Pure(v) => v == 0.0,
            PrivacyBudget::Approx { epsilon, .. } => epsilon == 0.0,
        }
    }
}

fn check_budget(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidBudget(alloc::format!("{name} = {v} must be a finite non-negative number")))
    }
}

fn check_sensitivity(v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!("sensitivity {v} must be positive")))
    }
}

/// Standard deviation that makes a Gaussian release rho-zCDP:
/// `sigma^2 = delta2^2 / (2 rho)`. Zero in noiseless mode.
pub fn gaussian_sigma(l2_sensitivity: f64, rho: f64) -> Result<f64> {
    check_budget("rho", rho)?;
    check_sensitivity(l2_sensitivity)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    Ok(l2_sensitivity / libm::sqrt(2.0 * rho))
}

pub fn gaussian_noise<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sigma * z
}

pub fn laplace_noise<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    // difference of two unit exponentials is standard Laplace
    let a: f64 = rng.sample(Exp1);
    let b: f64 = rng.sample(Exp1);
    scale * (a - b)
}

/// Adds i.i.d. `N(0, sigma^2)` noise calibrated to rho-zCDP. Returns the noised
/// vector and the sigma used.
pub fn gaussian_mechanism<R: Rng + ?Sized>(
    x: &[f64],
    l2_sensitivity: f64,
    rho: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    let sigma = gaussian_sigma(l2_sensitivity, rho)?;
    if sigma == 0.0 {
        return Ok((x.to_vec(), 0.0));
    }
    Ok((x.iter().map(|v| v + gaussian_noise(sigma, rng)).collect(), sigma))
}

/// Laplace scale `delta1 / epsilon` giving epsilon-DP. Zero in noiseless mode.
pub fn laplace_scale(l1_sensitivity: f64, epsilon: f64) -> Result<f64> {
    check_budget("epsilon", epsilon)?;
    check_sensitivity(l1_sensitivity)?;
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    Ok(l1_sensitivity / epsilon)
}

/// Adds i.i.d. Laplace noise of scale `delta1 / epsilon`.
pub fn laplace_mechanism<R: Rng + ?Sized>(
    x: &[f64],
    l1_sensitivity: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let scale = laplace_scale(l1_sensitivity, epsilon)?;
    if scale == 0.0 {
        return Ok(x.to_vec());
    }
    Ok(x.iter().map(|v| v + laplace_noise(scale, rng)).collect())
}

/// zCDP composes additively.
pub fn compose_zcdp(budgets: &[f64]) -> f64 {
    budgets.iter().sum()
}

/// `epsilon = rho + 2 sqrt(rho ln(1/delta))`.
pub fn zcdp_to_approx_dp(rho: f64, delta: f64) -> Result<f64> {
    check_budget("rho", rho)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidBudget(alloc::format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok(rho + 2.0 * libm::sqrt(rho * -libm::log(delta)))
}

/// Parameters of a symmetric Gaussian noise matrix with a diagonal shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMatrixSpec {
    pub dim: usize,
    /// zCDP budget of this release; zero gives a noiseless matrix.
    pub rho0: f64,
    /// The matrix is shifted by `shift / 2` on the diagonal.
    pub shift: f64,
}

impl NoiseMatrixSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("noise matrix dimension must be at least 1".into()));
        }
        check_budget("rho0", self.rho0)?;
        if !(self.shift >= 0.0 && self.shift.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("shift {} must be non-negative", self.shift)));
        }
        Ok(())
    }

    /// Standard deviation of the i.i.d. entries of `Z`.
    pub fn entry_sigma(&self) -> f64 {
        if self.rho0 == 0.0 {
            0.0
        } else {
            libm::sqrt(1.0 / (4.0 * self.rho0))
        }
    }
}

/// `K = (shift/2) I + (Z + Z^T)/sqrt(2)` with `Z_ij ~ N(0, 1/(4 rho0))`.
/// Symmetric by construction.
pub fn symmetric_noise_matrix<R: Rng + ?Sized>(spec: &NoiseMatrixSpec, rng: &mut R) -> Result<Matrix> {
    spec.validate()?;
    let n = spec.dim;
    let mut k = Matrix::scaled_identity(n, spec.shift / 2.0);
    let sigma = spec.entry_sigma();
    if sigma == 0.0 {
        return Ok(k);
    }
    let z: Vec<f64> = (0..n * n).map(|_| gaussian_noise(sigma, rng)).collect();
    let inv_sqrt2 = core::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i..n {
            let sym = (z[i * n + j] + z[j * n + i]) * inv_sqrt2;
            k[(i, j)] += sym;
            if i != j {
                k[(j, i)] += sym;
            }
        }
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    Zcdp,
    Pure,
}

/// One declared private release.
#[derive(Debug, Clone, PartialEq)]
pub struct Release {
    pub name: String,
    pub sensitivity: f64,
    pub budget: f64,
    /// Gaussian sigma or Laplace scale.
    pub noise_scale: f64,
}

/// Per-run list of releases, checked against the configured total at exit.
#[derive(Debug, Clone, PartialEq)]
pub struct Accountant {
    kind: BudgetKind,
    target: f64,
    releases: Vec<Release>,
}

/// Relative tolerance when comparing the ledger sum to the target.
pub const LEDGER_TOL: f64 = 1e-12;

impl Accountant {
    pub fn zcdp(rho: f64) -> Result<Self> {
        check_budget("rho", rho)?;
        Ok(Accountant { kind: BudgetKind::Zcdp, target: rho, releases: Vec::new() })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        check_budget("epsilon", epsilon)?;
        Ok(Accountant { kind: BudgetKind::Pure, target: epsilon, releases: Vec::new() })
    }

    pub fn record(&mut self, name: impl Into<String>, sensitivity: f64, budget: f64, noise_scale: f64) {
        self.releases.push(Release { name: name.into(), sensitivity, budget, noise_scale });
    }

    pub fn spent(&self) -> f64 {
        self.releases.iter().map(|r| r.budget).sum()
    }

    /// Closes the ledger; fails if the declared releases do not add up to the
    /// configured budget.
    pub fn finish(self) -> Result<Ledger> {
        let declared = self.spent();
        if (declared - self.target).abs() > LEDGER_TOL * self.target.max(1.0) {
            return Err(Error::Accounting { declared, target: self.target });
        }
        Ok(Ledger { kind: self.kind, target: self.target, releases: self.releases })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ledger {
    pub kind: BudgetKind,
    pub target: f64,
    pub releases: Vec<Release>,
}

impl Ledger {
    pub fn total(&self) -> f64 {
        self.releases.iter().map(|r| r.budget).sum()
    }

    /// Empty ledger for a run that released nothing.
    pub fn noiseless(kind: BudgetKind) -> Self {
        Ledger { kind, target: 0.0, releases: Vec::new() }
    }
}
