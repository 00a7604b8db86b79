//! Batch invariant checks over a set of dimensions, one named pass/fail
//! result per check and dimension.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{self, BOUND_TOL};
use crate::extremal;
use crate::imaginarity;
use crate::sampling::{self, Measure};
use crate::state::{self, DensityMatrix, Tolerances};
use crate::transform::{self, DEFAULT_DIAG_TOL};

pub const IDENTITY_TOL: f64 = 1e-12;
pub const BLOCH_TOL: f64 = 1e-10;
pub const TIGHTNESS_TOL: f64 = 1e-10;
pub const INVARIANCE_TOL: f64 = 1e-10;
pub const REPLAY_TOL: f64 = 1e-12;

/// Sweep and Bloch checks are costlier per state and use at most this many.
const SWEEP_STATES: u64 = 100;
const BLOCH_STATES: u64 = 1_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("no dimensions given")]
    NoDimensions,
    #[error("dimension {0} is below 2")]
    DegenerateDimension(usize),
    #[error("samples per dimension must be at least 1")]
    NoSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub dim: usize,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    pub samples: u64,
    pub seed: u64,
}

fn check(name: &str, dim: usize, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        dim,
        passed,
        detail,
    }
}

fn max_over<F>(n: u64, f: F) -> f64
where
    F: Fn(u64) -> f64 + Sync + Send,
{
    (0..n).into_par_iter().map(f).reduce(|| 0.0, f64::max)
}

fn hs(dim: usize, seed: u64, i: u64) -> DensityMatrix {
    sampling::sample_state(dim, Measure::HsMixed, seed, i)
}

fn haar(dim: usize, seed: u64, i: u64) -> DensityMatrix {
    sampling::sample_state(dim, Measure::HaarPure, seed, i)
}

/// `|Tr ρ² − (1 + S_D² + S_X² + S_I²)/d|`
pub fn purity_identity_error(rho: &DensityMatrix) -> f64 {
    let c = state::state_coordinates(rho);
    let d = rho.dim() as f64;
    (state::purity(rho) - (1.0 + c.squared_length()) / d).abs()
}

/// `|d·Tr(ρρᵀ) − (1 + S_R² − S_I²)|`
pub fn transpose_identity_error(rho: &DensityMatrix) -> f64 {
    let c = state::state_coordinates(rho);
    let m = rho.matrix();
    let d = rho.dim() as f64;
    let lhs = d * m.trace_of_product(&m.transpose()).re;
    (lhs - (1.0 + c.s_r * c.s_r - c.s_i * c.s_i)).abs()
}

/// Worst bound margin over HS and Haar-pure draws; negative beyond `BOUND_TOL` is a violation.
pub fn worst_sampled_margin(dim: usize, n: u64, seed: u64) -> (f64, u64) {
    (0..2 * n)
        .into_par_iter()
        .map(|j| {
            let rho = if j < n {
                hs(dim, seed, j)
            } else {
                haar(dim, seed, j - n)
            };
            let m = bounds::evaluate_bounds(&state::state_coordinates(&rho)).worst_margin();
            (m, u64::from(m < -BOUND_TOL))
        })
        .reduce(|| (f64::INFINITY, 0), |a, b| (a.0.min(b.0), a.1 + b.1))
}

/// Random block weights summing to one half.
pub fn random_block_weights(blocks: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = sampling::record_rng(seed, index);
    let raw: Vec<f64> = (0..blocks).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| 0.5 * x / total).collect()
}

fn sweep_errors(rho: &DensityMatrix) -> Result<(f64, f64, f64), transform::TransformError> {
    let d = rho.dim();
    let before = state::state_coordinates(rho);
    let (out, steps) = transform::sweep_uniform_diagonal(rho, DEFAULT_DIAG_TOL)?;
    let after = state::state_coordinates(&out);
    let flat = out
        .matrix()
        .diagonal()
        .iter()
        .map(|z| (z.re - 1.0 / d as f64).abs())
        .fold(0.0, f64::max);
    let drift = (after.s_r - before.s_r)
        .abs()
        .max((after.s_i - before.s_i).abs());
    let replayed = transform::replay(rho, &steps)?;
    let replay = replayed.matrix().max_abs_diff(out.matrix());
    Ok((flat, drift, replay))
}

fn checks_for_dim(dim: usize, cfg: VerifyConfig) -> Vec<CheckResult> {
    let VerifyConfig { samples: n, seed } = cfg;
    let mut out = Vec::new();

    let err = max_over(n, |i| purity_identity_error(&hs(dim, seed, i)));
    out.push(check(
        "purity_identity",
        dim,
        err <= IDENTITY_TOL,
        format!("max error {err:.3e}"),
    ));

    let err = max_over(n, |i| transpose_identity_error(&hs(dim, seed, i)));
    out.push(check(
        "transpose_identity",
        dim,
        err <= IDENTITY_TOL,
        format!("max error {err:.3e}"),
    ));

    let err = max_over(n, |i| {
        let rho = hs(dim, seed, i);
        state::decompose(&rho)
            .recompose_matrix()
            .max_abs_diff(rho.matrix())
    });
    out.push(check(
        "recompose",
        dim,
        err <= IDENTITY_TOL,
        format!("max error {err:.3e}"),
    ));

    let basis = state::gellmann_basis(dim).expect("dim ≥ 2");
    let err = max_over(n.min(BLOCH_STATES), |i| {
        let rho = hs(dim, seed, i);
        let c = state::state_coordinates(&rho);
        let v = state::bloch_vector(&rho, &basis).expect("matching dims");
        let (nd, nx, ni) = v.squared_norms();
        let back = state::state_from_bloch(&v, &basis, Tolerances::default()).expect("valid");
        (nd - c.s_d * c.s_d)
            .abs()
            .max((nx - c.s_x * c.s_x).abs())
            .max((ni - c.s_i * c.s_i).abs())
            .max(back.matrix().max_abs_diff(rho.matrix()))
    });
    out.push(check(
        "bloch_expansion",
        dim,
        err <= BLOCH_TOL,
        format!("max error {err:.3e}"),
    ));

    let (worst, violations) = worst_sampled_margin(dim, n, seed);
    out.push(check(
        "bounds_soundness",
        dim,
        violations == 0,
        format!(
            "{violations} violations in {} states, worst margin {worst:.3e}",
            2 * n
        ),
    ));

    let floor = ((dim as f64 - 2.0) / 2.0).sqrt();
    let min_sr = (0..n)
        .into_par_iter()
        .map(|i| state::state_coordinates(&haar(dim, seed, i)).s_r)
        .reduce(|| f64::INFINITY, f64::min);
    let attained = extremal::embedded_imag_pure(dim, 0.5f64.sqrt())
        .map(|rho| (state::state_coordinates(&rho).s_r - floor).abs())
        .unwrap_or(f64::INFINITY);
    out.push(check(
        "pure_state_floor",
        dim,
        min_sr >= floor - BOUND_TOL && attained <= TIGHTNESS_TOL,
        format!("min S_R {min_sr:.9} vs floor {floor:.9}, family gap {attained:.3e}"),
    ));

    out.push(tightness_check(dim, seed));
    out.push(continuity_check(dim));

    let sweep = (0..n.min(SWEEP_STATES))
        .into_par_iter()
        .map(|i| sweep_errors(&hs(dim, seed, i)))
        .collect::<Result<Vec<_>, _>>();
    out.push(match sweep {
        Ok(errs) => {
            let (flat, drift, replay) = errs.iter().fold((0.0f64, 0.0f64, 0.0f64), |a, e| {
                (a.0.max(e.0), a.1.max(e.1), a.2.max(e.2))
            });
            check(
                "sweep_contract",
                dim,
                flat <= DEFAULT_DIAG_TOL && drift <= INVARIANCE_TOL && replay <= REPLAY_TOL,
                format!("diagonal {flat:.3e}, coordinate drift {drift:.3e}, replay {replay:.3e}"),
            )
        }
        Err(e) => check("sweep_contract", dim, false, e.to_string()),
    });

    let failures = (0..n)
        .into_par_iter()
        .filter(|&i| !sampling::proof_step_check(&hs(dim, seed, i)).all_ok())
        .count();
    out.push(check(
        "proof_chain",
        dim,
        failures == 0,
        format!("{failures} of {n} states fail a step"),
    ));

    let bad = (0..n)
        .into_par_iter()
        .map(|i| imaginarity::robustness(&hs(dim, seed, i)).robustness)
        .filter(|r| !(-IDENTITY_TOL..=1.0 + BOUND_TOL).contains(r))
        .count();
    out.push(check(
        "robustness_range",
        dim,
        bad == 0,
        format!("{bad} of {n} out of [0, 1]"),
    ));

    let serial = sampling::coordinate_cloud(dim, n.min(BLOCH_STATES), Measure::HsMixed, seed);
    let parallel =
        sampling::coordinate_cloud_parallel(dim, n.min(BLOCH_STATES), Measure::HsMixed, seed, 3);
    let same = matches!((serial, parallel), (Ok(a), Ok(b)) if a == b);
    out.push(check(
        "cloud_partition",
        dim,
        same,
        "serial vs 3 workers".to_string(),
    ));

    out
}

fn tightness_check(dim: usize, seed: u64) -> CheckResult {
    let worst = if dim.is_multiple_of(2) {
        (0..100u64)
            .map(|j| {
                let rho =
                    extremal::even_block(&random_block_weights(dim / 2, seed, j)).expect("valid");
                bounds::evaluate_bounds(&state::state_coordinates(&rho))
                    .quadratic_margin
                    .abs()
            })
            .fold(0.0, f64::max)
    } else {
        let d = dim as f64;
        let (lo, hi) = (1.0 / d, 1.0 / (d - 1.0));
        (0..100)
            .map(|j| {
                let alpha = lo + (hi - lo) * j as f64 / 99.0;
                let rho = extremal::odd_linear(dim, alpha).expect("in range");
                bounds::evaluate_bounds(&state::state_coordinates(&rho))
                    .linear_margin
                    .map_or(f64::INFINITY, f64::abs)
            })
            .fold(0.0, f64::max)
    };
    let which = if dim.is_multiple_of(2) {
        "quadratic"
    } else {
        "linear"
    };
    check(
        "tightness",
        dim,
        worst <= TIGHTNESS_TOL,
        format!("max |{which} margin| {worst:.3e} on the family"),
    )
}

fn continuity_check(dim: usize) -> CheckResult {
    let eps = 1e-11;
    let lm = bounds::landmarks(dim).expect("dim ≥ 2");
    let top = ((dim - 1) as f64).sqrt();
    let jumps = lm
        .points()
        .into_iter()
        .map(|(_, r, _)| r)
        .filter(|r| *r > eps && *r < top - eps)
        .map(|r| {
            let a = bounds::max_imaginary(r - eps, dim).expect("in range");
            let b = bounds::max_imaginary(r + eps, dim).expect("in range");
            (a - b).abs()
        })
        .fold(0.0, f64::max);
    let caps = bounds::max_imaginary(0.0, dim)
        .map(|v| (v - lm.si_cap_at_zero).abs())
        .unwrap_or(f64::INFINITY);
    check(
        "boundary_continuity",
        dim,
        jumps < 1e-8 && caps <= IDENTITY_TOL,
        format!("max jump at joints {jumps:.3e}"),
    )
}

/// All checks for every dimension, in dimension order.
pub fn run_checks(dims: &[usize], cfg: VerifyConfig) -> Result<Vec<CheckResult>, VerifyError> {
    if dims.is_empty() {
        return Err(VerifyError::NoDimensions);
    }
    if let Some(&d) = dims.iter().find(|&&d| d < 2) {
        return Err(VerifyError::DegenerateDimension(d));
    }
    if cfg.samples == 0 {
        return Err(VerifyError::NoSamples);
    }
    Ok(dims.iter().flat_map(|&d| checks_for_dim(d, cfg)).collect())
}
