//! The three constraints on `(S_R, S_I)`:
//!
//! * purity: `S_D² + S_X² + S_I² ≤ d − 1`
//! * quadratic: `S_I² ≤ 1 + S_R²`
//! * linear, odd `d` and `S_R ≤ 1/√(d−1)` only: `√d S_I ≤ √(d−1) + S_R`
//!
//! together with the closed-form upper boundary they carve out and its joints.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::Coordinates;

/// Margins at or above `-BOUND_TOL` count as satisfied.
pub const BOUND_TOL: f64 = 1e-9;

/// Slack on `S_R` when deciding whether the linear bound applies. At the
/// tangency both bounds agree to second order, so rounding on either side of
/// `1/√(d−1)` must not switch the linear check off.
pub const LINEAR_APPLICABILITY_SLACK: f64 = 1e-9;

/// Two joints closer than this are treated as the same point.
const JOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("s_r = {s_r} outside [0, sqrt(d - 1)] for d = {dim}")]
    OutOfRange { s_r: f64, dim: usize },
    #[error("dimension must be at least 2, got {0}")]
    DegenerateDimension(usize),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    /// `d − 1 − S_D² − S_X² − S_I²`
    pub purity_margin: f64,
    /// `1 + S_R² − S_I²`
    pub quadratic_margin: f64,
    pub linear_applicable: bool,
    /// `√(d−1) + S_R − √d S_I`, present only when applicable.
    pub linear_margin: Option<f64>,
    pub all_satisfied: bool,
}

impl BoundVerdict {
    /// The most negative applicable margin.
    pub fn worst_margin(&self) -> f64 {
        let m = self.purity_margin.min(self.quadratic_margin);
        self.linear_margin.map_or(m, |l| m.min(l))
    }
}

pub fn linear_applies(dim: usize, s_r: f64) -> bool {
    dim % 2 == 1 && s_r <= tangent_s_r(dim) + LINEAR_APPLICABILITY_SLACK
}

fn tangent_s_r(dim: usize) -> f64 {
    1.0 / ((dim - 1) as f64).sqrt()
}

pub fn evaluate_bounds(c: &Coordinates) -> BoundVerdict {
    let d = c.dim as f64;
    let purity_margin = d - 1.0 - c.squared_length();
    let quadratic_margin = 1.0 + c.s_r * c.s_r - c.s_i * c.s_i;
    let linear_applicable = linear_applies(c.dim, c.s_r);
    let linear_margin = linear_applicable.then(|| (d - 1.0).sqrt() + c.s_r - d.sqrt() * c.s_i);
    let all_satisfied = purity_margin >= -BOUND_TOL
        && quadratic_margin >= -BOUND_TOL
        && linear_margin.is_none_or(|m| m >= -BOUND_TOL);
    BoundVerdict {
        purity_margin,
        quadratic_margin,
        linear_applicable,
        linear_margin,
        all_satisfied,
    }
}

/// Which constraint is active on the upper boundary at a given `S_R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Region {
    Linear,
    Quadratic,
    Purity,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Linear => "LINEAR",
            Region::Quadratic => "QUADRATIC",
            Region::Purity => "PURITY",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "LINEAR" => Ok(Region::Linear),
            "QUADRATIC" => Ok(Region::Quadratic),
            "PURITY" => Ok(Region::Purity),
            other => Err(format!("unknown region tag {other:?}")),
        }
    }
}

/// Joints of the piecewise boundary in the `(S_R, S_I)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    pub dim: usize,
    /// Smallest `S_R` of any pure state, `√((d−2)/2)`; the quadratic and
    /// purity bounds cross here.
    pub pure_floor: f64,
    /// `(√((d−2)/2), √(d/2))` for even `d`.
    pub even_intersection: Option<(f64, f64)>,
    /// `(1/√(d−1), √(d/(d−1)))` for odd `d`.
    pub odd_tangent: Option<(f64, f64)>,
    /// Largest `S_I` at `S_R = 0`.
    pub si_cap_at_zero: f64,
}

impl Landmarks {
    /// Named `(S_R, S_I)` points, in increasing `S_R`.
    pub fn points(&self) -> Vec<(&'static str, f64, f64)> {
        let mut pts = vec![("imag_cap", 0.0, self.si_cap_at_zero)];
        if let Some((r, i)) = self.odd_tangent {
            pts.push(("odd_tangent", r, i));
        }
        let corner = (self.dim as f64 / 2.0).sqrt();
        pts.push(("pure_floor", self.pure_floor, corner));
        pts
    }
}

pub fn landmarks(dim: usize) -> Result<Landmarks, BoundsError> {
    if dim < 2 {
        return Err(BoundsError::DegenerateDimension(dim));
    }
    let d = dim as f64;
    let pure_floor = ((d - 2.0) / 2.0).sqrt();
    let even = dim.is_multiple_of(2);
    Ok(Landmarks {
        dim,
        pure_floor,
        even_intersection: even.then(|| (pure_floor, (d / 2.0).sqrt())),
        odd_tangent: (!even).then(|| (tangent_s_r(dim), (d / (d - 1.0)).sqrt())),
        si_cap_at_zero: if even { 1.0 } else { ((d - 1.0) / d).sqrt() },
    })
}

/// The region active at `s_r`. At a joint the lower-`S_R` region is reported;
/// zero-width regions (quadratic for `d = 2, 3`) never appear.
pub fn region_at(s_r: f64, dim: usize) -> Region {
    let floor = ((dim as f64 - 2.0) / 2.0).sqrt();
    if dim % 2 == 1 {
        let tangent = tangent_s_r(dim);
        if s_r <= tangent + JOINT_TOL {
            return Region::Linear;
        }
        if floor > tangent + JOINT_TOL && s_r <= floor + JOINT_TOL {
            return Region::Quadratic;
        }
        Region::Purity
    } else if floor > JOINT_TOL && s_r <= floor + JOINT_TOL {
        Region::Quadratic
    } else {
        Region::Purity
    }
}

/// Largest `S_I` compatible with a state of real weight `s_r` in dimension `dim`.
///
/// Inputs up to `BOUND_TOL` beyond `√(d−1)` are accepted and treated as the
/// endpoint, so that rounded coordinates of real pure states can be checked.
pub fn max_imaginary(s_r: f64, dim: usize) -> Result<f64, BoundsError> {
    if dim < 2 {
        return Err(BoundsError::DegenerateDimension(dim));
    }
    let d = dim as f64;
    if s_r.is_nan() || s_r < 0.0 || s_r > (d - 1.0).sqrt() + BOUND_TOL {
        return Err(BoundsError::OutOfRange { s_r, dim });
    }
    let quadratic = (1.0 + s_r * s_r).sqrt();
    let purity = (d - 1.0 - s_r * s_r).max(0.0).sqrt();
    Ok(match region_at(s_r, dim) {
        Region::Linear => ((d - 1.0).sqrt() + s_r) / d.sqrt(),
        _ => quadratic.min(purity),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub s_r: f64,
    pub s_i_max: f64,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub dim: usize,
    pub samples: Vec<BoundarySample>,
}

/// `n` points of the analytic boundary, `S_R` uniformly spaced on `[0, √(d−1)]`.
pub fn boundary_samples(dim: usize, n: usize) -> Result<BoundaryCurve, BoundsError> {
    if dim < 2 {
        return Err(BoundsError::DegenerateDimension(dim));
    }
    if n < 2 {
        return Err(BoundsError::TooFewSamples(n));
    }
    let top = ((dim - 1) as f64).sqrt();
    let samples = (0..n)
        .map(|k| {
            let s_r = if k == n - 1 {
                top
            } else {
                top * k as f64 / (n - 1) as f64
            };
            Ok(BoundarySample {
                s_r,
                s_i_max: max_imaginary(s_r, dim)?,
                region: region_at(s_r, dim),
            })
        })
        .collect::<Result<_, BoundsError>>()?;
    Ok(BoundaryCurve { dim, samples })
}
