//! States on the upper boundary of the `(S_R, S_I)` body.
//!
//! * `EVEN_BLOCK`: `⊕_k [[α_k, −iα_k], [iα_k, α_k]]` in even `d`, on the quadratic bound.
//! * `ODD_BLOCK_ZERO`: the same blocks plus a trailing `0` in odd `d`, on the
//!   quadratic bound; that part of the bound is only the boundary when `S_R ≥ 1/√(d−1)`.
//! * `ODD_LINEAR`: `(d−1)/2` equal blocks of weight `α ∈ [1/d, 1/(d−1)]` plus a
//!   trailing `1 − (d−1)α`, on the linear bound.
//! * `EMBEDDED_IMAG_PURE`: `β|0⟩ + i√(1−β²)|1⟩`, on the purity sphere.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{self, BoundVerdict};
use crate::numerics::ComplexSquareMatrix;
use crate::state::{self, DensityMatrix, StateError, Tolerances};

/// Slack on the normalization and range constraints of the family parameters.
const SPEC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtremalError {
    #[error("SpecViolation: {0}")]
    SpecViolation(String),
    #[error(transparent)]
    State(#[from] StateError),
}

fn violation<T>(msg: impl Into<String>) -> Result<T, ExtremalError> {
    Err(ExtremalError::SpecViolation(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    EvenBlock,
    OddBlockZero,
    OddLinear,
    EmbeddedImagPure,
}

/// A family member, as read from / written to the extremal spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremalSpec {
    pub family: Family,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl ExtremalSpec {
    pub fn build(&self) -> Result<DensityMatrix, ExtremalError> {
        let need = |field: &str| {
            ExtremalError::SpecViolation(format!("{:?} requires field {field:?}", self.family))
        };
        let state = match self.family {
            Family::EvenBlock => even_block(self.alphas.as_deref().ok_or_else(|| need("alphas"))?)?,
            Family::OddBlockZero => {
                odd_block_zero(self.alphas.as_deref().ok_or_else(|| need("alphas"))?)?
            }
            Family::OddLinear => odd_linear(self.dim, self.alpha.ok_or_else(|| need("alpha"))?)?,
            Family::EmbeddedImagPure => {
                embedded_imag_pure(self.dim, self.beta.ok_or_else(|| need("beta"))?)?
            }
        };
        if state.dim() != self.dim {
            return violation(format!(
                "dim = {} but the block weights describe d = {}",
                self.dim,
                state.dim()
            ));
        }
        Ok(state)
    }
}

/// Block-diagonal `[[a, −ia], [ia, a]]` blocks followed by the `tail` diagonal.
fn blocks(alphas: &[f64], tail: Option<f64>) -> ComplexSquareMatrix {
    let dim = 2 * alphas.len() + usize::from(tail.is_some());
    let mut m = ComplexSquareMatrix::zeros(dim);
    for (k, &a) in alphas.iter().enumerate() {
        let (p, q) = (2 * k, 2 * k + 1);
        m[(p, p)] = Complex64::new(a, 0.0);
        m[(q, q)] = Complex64::new(a, 0.0);
        m[(p, q)] = Complex64::new(0.0, -a);
        m[(q, p)] = Complex64::new(0.0, a);
    }
    if let Some(t) = tail {
        m[(dim - 1, dim - 1)] = Complex64::new(t, 0.0);
    }
    m
}

fn check_block_weights(alphas: &[f64]) -> Result<(), ExtremalError> {
    if alphas.is_empty() {
        return violation("at least one block weight is required");
    }
    if let Some(a) = alphas.iter().find(|a| a.is_nan() || **a < 0.0) {
        return violation(format!("block weight {a} is negative"));
    }
    let total: f64 = 2.0 * alphas.iter().sum::<f64>();
    if (total - 1.0).abs() > SPEC_TOL {
        return violation(format!("2·Σα_k = {total} ≠ 1 (trace must be one)"));
    }
    Ok(())
}

/// `d = 2·alphas.len()`, weights summing to one half.
pub fn even_block(alphas: &[f64]) -> Result<DensityMatrix, ExtremalError> {
    check_block_weights(alphas)?;
    Ok(state::validate_density(
        blocks(alphas, None),
        Tolerances::default(),
    )?)
}

/// `d = 2·alphas.len() + 1`, weights summing to one half, trailing zero.
pub fn odd_block_zero(alphas: &[f64]) -> Result<DensityMatrix, ExtremalError> {
    check_block_weights(alphas)?;
    Ok(state::validate_density(
        blocks(alphas, Some(0.0)),
        Tolerances::default(),
    )?)
}

pub fn odd_linear(dim: usize, alpha: f64) -> Result<DensityMatrix, ExtremalError> {
    if dim < 3 || dim.is_multiple_of(2) {
        return violation(format!("ODD_LINEAR needs odd d ≥ 3, got {dim}"));
    }
    let d = dim as f64;
    let (lo, hi) = (1.0 / d, 1.0 / (d - 1.0));
    if !(alpha >= lo - SPEC_TOL && alpha <= hi + SPEC_TOL) {
        return violation(format!("α = {alpha} outside [1/d, 1/(d−1)] = [{lo}, {hi}]"));
    }
    let alphas = vec![alpha; (dim - 1) / 2];
    let tail = (1.0 - (d - 1.0) * alpha).max(0.0);
    Ok(state::validate_density(
        blocks(&alphas, Some(tail)),
        Tolerances::default(),
    )?)
}

/// Projector onto `β|0⟩ + i√(1−β²)|1⟩` inside a `d`-level system.
pub fn embedded_imag_pure(dim: usize, beta: f64) -> Result<DensityMatrix, ExtremalError> {
    if dim < 2 {
        return violation(format!("EMBEDDED_IMAG_PURE needs d ≥ 2, got {dim}"));
    }
    if !(0.0..=1.0).contains(&beta) {
        return violation(format!("β = {beta} outside [0, 1]"));
    }
    let gamma = (1.0 - beta * beta).sqrt();
    let mut m = ComplexSquareMatrix::zeros(dim);
    m[(0, 0)] = Complex64::new(beta * beta, 0.0);
    m[(1, 1)] = Complex64::new(gamma * gamma, 0.0);
    m[(0, 1)] = Complex64::new(0.0, -beta * gamma);
    m[(1, 0)] = Complex64::new(0.0, beta * gamma);
    Ok(state::validate_density(m, Tolerances::default())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkDistance {
    pub name: String,
    pub s_r: f64,
    pub s_i: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub dim: usize,
    pub s_r: f64,
    pub s_i: f64,
    pub verdict: BoundVerdict,
    /// Euclidean distance in the `(S_R, S_I)` plane to every landmark.
    pub landmarks: Vec<LandmarkDistance>,
}

pub fn saturation_report(rho: &DensityMatrix) -> SaturationReport {
    let c = state::state_coordinates(rho);
    let lm = bounds::landmarks(rho.dim()).expect("validated states have d ≥ 2");
    let landmarks = lm
        .points()
        .into_iter()
        .map(|(name, r, i)| LandmarkDistance {
            name: name.to_string(),
            s_r: r,
            s_i: i,
            distance: (c.s_r - r).hypot(c.s_i - i),
        })
        .collect();
    SaturationReport {
        dim: rho.dim(),
        s_r: c.s_r,
        s_i: c.s_i,
        verdict: bounds::evaluate_bounds(&c),
        landmarks,
    }
}
