//! Real orthogonal conjugations and transposition.
//!
//! Conjugating by a real orthogonal matrix keeps the real part real and the
//! imaginary part imaginary, so `S_R` and `S_I` are untouched while weight can
//! move between `S_D` and `S_X`. [`sweep_uniform_diagonal`] uses plane
//! rotations to push all of `S_D` into `S_X`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::DensityMatrix;

pub const DEFAULT_DIAG_TOL: f64 = 1e-8;

/// Target accuracy of the bisection on a single diagonal entry.
const BISECTION_TOL: f64 = 1e-12;
const BISECTION_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("rotation indices ({k}, {l}) invalid for dimension {dim}")]
    IndexOutOfRange { k: usize, l: usize, dim: usize },
    #[error("sweep did not converge after {steps} steps, residual {residual:e}")]
    ConvergenceFailure { steps: usize, residual: f64 },
}

/// `O = cos θ (|k⟩⟨k| + |l⟩⟨l|) + sin θ (|k⟩⟨l| − |l⟩⟨k|)`, identity elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationStep {
    pub k: usize,
    pub l: usize,
    pub theta: f64,
}

impl RotationStep {
    pub fn new(k: usize, l: usize, theta: f64) -> Self {
        Self { k, l, theta }
    }

    fn check(&self, dim: usize) -> Result<(), TransformError> {
        if self.k == self.l || self.k >= dim || self.l >= dim {
            return Err(TransformError::IndexOutOfRange {
                k: self.k,
                l: self.l,
                dim,
            });
        }
        Ok(())
    }
}

/// `ρ' = O ρ Oᵀ`. Only rows and columns `k`, `l` change.
pub fn givens_conjugate(
    rho: &DensityMatrix,
    step: RotationStep,
) -> Result<DensityMatrix, TransformError> {
    step.check(rho.dim())?;
    let mut m = rho.matrix().clone();
    let (k, l) = (step.k, step.l);
    let (s, c) = step.theta.sin_cos();
    let n = m.dim();
    // rows: O ρ
    for j in 0..n {
        let (a, b) = (m[(k, j)], m[(l, j)]);
        m[(k, j)] = a * c + b * s;
        m[(l, j)] = b * c - a * s;
    }
    // columns: (O ρ) Oᵀ
    for i in 0..n {
        let (a, b) = (m[(i, k)], m[(i, l)]);
        m[(i, k)] = a * c + b * s;
        m[(i, l)] = b * c - a * s;
    }
    m[(k, k)].im = 0.0;
    m[(l, l)].im = 0.0;
    Ok(DensityMatrix::trusted(m, rho.tolerances()))
}

/// Applies a step log in order.
pub fn replay(
    rho: &DensityMatrix,
    steps: &[RotationStep],
) -> Result<DensityMatrix, TransformError> {
    steps
        .iter()
        .try_fold(rho.clone(), |acc, &s| givens_conjugate(&acc, s))
}

/// `ρ'_kk(θ)` for the rotation in the `(k, l)` plane.
fn rotated_kk(rho: &DensityMatrix, k: usize, l: usize, theta: f64) -> f64 {
    let m = rho.matrix();
    let (s, c) = theta.sin_cos();
    c * c * m[(k, k)].re + 2.0 * c * s * m[(k, l)].re + s * s * m[(l, l)].re
}

/// Rotates weight off the diagonal until every `ρ_kk` is within `diag_tol` of `1/d`.
///
/// Each step pairs the largest and smallest diagonal entries (lowest index on
/// ties). Since a quarter turn swaps them, `ρ'_kk(θ)` crosses `1/d` somewhere
/// on `[0, π/2]` and bisection finds that angle. Every step parks at least one
/// entry at `1/d`, so `d − 1` steps suffice in exact arithmetic; the loop is
/// capped at `4d²`.
pub fn sweep_uniform_diagonal(
    rho: &DensityMatrix,
    diag_tol: f64,
) -> Result<(DensityMatrix, Vec<RotationStep>), TransformError> {
    let d = rho.dim();
    let target = 1.0 / d as f64;
    let cap = 4 * d * d;
    let mut current = rho.clone();
    let mut steps = Vec::new();
    loop {
        let diag: Vec<f64> = current.matrix().diagonal().iter().map(|z| z.re).collect();
        let residual = diag.iter().map(|x| (x - target).abs()).fold(0.0, f64::max);
        if residual <= diag_tol {
            return Ok((current, steps));
        }
        if steps.len() >= cap {
            return Err(TransformError::ConvergenceFailure {
                steps: steps.len(),
                residual,
            });
        }
        let (mut hi, mut lo) = (0, 0);
        for (i, &x) in diag.iter().enumerate() {
            if x > diag[hi] {
                hi = i;
            }
            if x < diag[lo] {
                lo = i;
            }
        }
        let theta = bisect_angle(&current, hi, lo, target);
        let step = RotationStep::new(hi, lo, theta);
        current = givens_conjugate(&current, step)?;
        steps.push(step);
    }
}

fn bisect_angle(rho: &DensityMatrix, k: usize, l: usize, target: f64) -> f64 {
    // f(0) = ρ_kk − 1/d > 0, f(π/2) = ρ_ll − 1/d < 0
    let f = |t: f64| rotated_kk(rho, k, l, t) - target;
    let (mut a, mut b) = (0.0, FRAC_PI_2);
    let mut mid = 0.5 * (a + b);
    for _ in 0..BISECTION_MAX_ITERS {
        mid = 0.5 * (a + b);
        let v = f(mid);
        if v.abs() <= BISECTION_TOL || b - a <= f64::EPSILON {
            break;
        }
        if v > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    mid
}

/// `ρ → ρᵀ`, which flips the sign of the imaginary part and nothing else.
pub fn transpose_state(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::trusted(rho.matrix().transpose(), rho.tolerances())
}
