//! (Noised) ridge and variance-weighted ridge regression.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{dot, Matrix, SymmetricEigen};

/// Relative tolerance for the symmetry check in [`spd_solve`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// `M = sum_i phi_i phi_i^T / sigma_i^2 + lambda I (+ noise)` together with
/// `b = sum_i phi_i y_i / sigma_i^2 (+ noise)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramAccumulator {
    matrix: Matrix,
    rhs: Vec<f64>,
    lambda: f64,
    floor: f64,
}

impl GramAccumulator {
    /// Starts from `lambda I`; the eigenvalue floor defaults to `lambda`.
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("ridge parameter {lambda} must be positive")));
        }
        Ok(GramAccumulator { matrix: Matrix::scaled_identity(dim, lambda), rhs: vec![0.0; dim], lambda, floor: lambda })
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Adds one sample with target `y` and variance weight `sigma2`.
    pub fn add_sample(&mut self, phi: &[f64], y: f64, sigma2: f64) {
        let w = 1.0 / sigma2;
        self.matrix.add_outer(phi, w);
        let scale = y * w;
        for (b, p) in self.rhs.iter_mut().zip(phi) {
            *b += p * scale;
        }
    }

    /// Adds only the outer product.
    pub fn add_feature(&mut self, phi: &[f64], sigma2: f64) {
        self.matrix.add_outer(phi, 1.0 / sigma2);
    }

    pub fn add_matrix_noise(&mut self, noise: &Matrix) -> Result<()> {
        if noise.dim() != self.dim() {
            return Err(dim_err!("noise matrix is {}x{}, expected {}", noise.dim(), noise.dim(), self.dim()));
        }
        self.matrix.add_assign(noise);
        Ok(())
    }

    pub fn add_rhs_noise(&mut self, noise: &[f64]) -> Result<()> {
        if noise.len() != self.dim() {
            return Err(dim_err!("noise vector has {} entries, expected {}", noise.len(), self.dim()));
        }
        for (b, n) in self.rhs.iter_mut().zip(noise) {
            *b += n;
        }
        Ok(())
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Eigendecomposes `M` and lifts every eigenvalue below the floor up to it.
    pub fn condition(&self) -> Result<ConditionedGram> {
        let asym = self.matrix.max_asymmetry();
        if asym > SYMMETRY_TOL * self.matrix.max_abs().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let eig = SymmetricEigen::new(&self.matrix);
        let raw_min = eig.min_value();
        let floor = self.floor;
        let scale = self.matrix.max_abs().max(1.0);
        let clamped = raw_min < floor - 1e-9 * scale;
        let inverse = eig.reconstruct_with(|l| 1.0 / l.max(floor));
        let conditioned = if clamped { eig.reconstruct_with(|l| l.max(floor)) } else { self.matrix.clone() };
        Ok(ConditionedGram { matrix: conditioned, inverse, raw_min_eigenvalue: raw_min, floor, clamped })
    }
}

/// A Gram matrix whose spectrum is bounded below by its floor.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedGram {
    matrix: Matrix,
    inverse: Matrix,
    /// Smallest eigenvalue before conditioning.
    pub raw_min_eigenvalue: f64,
    pub floor: f64,
    /// True when the floor had to be enforced.
    pub clamped: bool,
}

impl ConditionedGram {
    /// Smallest eigenvalue after conditioning.
    pub fn min_eigenvalue(&self) -> f64 {
        self.raw_min_eigenvalue.max(self.floor)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.inverse.mul_vec(rhs)
    }

    /// `phi^T M^{-1} phi`
    pub fn inverse_quad(&self, phi: &[f64]) -> f64 {
        self.inverse.quad_form(phi)
    }
}

/// Solves `M x = rhs` after lifting the spectrum of `M` to the accumulator's
/// floor.
pub fn spd_solve(acc: &GramAccumulator, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != acc.dim() {
        return Err(dim_err!("rhs has {} entries, expected {}", rhs.len(), acc.dim()));
    }
    Ok(acc.condition()?.solve(rhs))
}

/// `w = (sum phi phi^T / sigma^2 + lambda I + noise_mat)^{-1} (sum phi y / sigma^2 + noise_vec)`.
pub fn weighted_ridge(
    features: &[&[f64]],
    targets: &[f64],
    weights: &[f64],
    lambda: f64,
    noise_vec: Option<&[f64]>,
    noise_mat: Option<&Matrix>,
) -> Result<(Vec<f64>, GramAccumulator)> {
    if features.len() != targets.len() || features.len() != weights.len() {
        return Err(dim_err!(
            "{} features, {} targets and {} weights",
            features.len(),
            targets.len(),
            weights.len()
        ));
    }
    let dim = match (features.first(), noise_vec, noise_mat) {
        (Some(phi), _, _) => phi.len(),
        (None, Some(v), _) => v.len(),
        (None, None, Some(m)) => m.dim(),
        (None, None, None) => return Err(dim_err!("cannot infer the feature dimension without data or noise")),
    };
    let mut acc = GramAccumulator::new(dim, lambda)?;
    for ((phi, &y), &w) in features.iter().zip(targets).zip(weights) {
        if phi.len() != dim {
            return Err(dim_err!("feature has {} entries, expected {dim}", phi.len()));
        }
        acc.add_sample(phi, y, w);
    }
    if let Some(m) = noise_mat {
        acc.add_matrix_noise(m)?;
    }
    if let Some(v) = noise_vec {
        acc.add_rhs_noise(v)?;
    }
    let w = spd_solve(&acc, acc.rhs())?;
    Ok((w, acc))
}

/// `||M x - b||_2`
pub fn residual_norm(m: &Matrix, x: &[f64], b: &[f64]) -> f64 {
    let mx = m.mul_vec(x);
    libm::sqrt(mx.iter().zip(b).map(|(a, c)| (a - c) * (a - c)).sum())
}

/// Convenience for callers that only need `phi^T w`.
pub fn predict(phi: &[f64], w: &[f64]) -> f64 {
    dot(phi, w)
}
