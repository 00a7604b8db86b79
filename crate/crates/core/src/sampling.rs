//! Random states, coordinate clouds, an empirical estimate of the upper
//! boundary, and a numerical replay of the eigenvalue argument behind the
//! linear bound.
//!
//! Every record draws from its own ChaCha stream keyed by `(seed, index)`, so a
//! cloud is the same multiset of records however the index range is split
//! across workers.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds;
use crate::extremal;
use crate::numerics::{self, ComplexSquareMatrix};
use crate::state::{self, DensityMatrix, Tolerances};

/// Slack used by the proof-chain checks.
pub const PROOF_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("dimension must be at least 2, got {0}")]
    DegenerateDimension(usize),
    #[error("need at least one record")]
    EmptyCloud,
    #[error("need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Measure {
    HaarPure,
    HsMixed,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::HaarPure => "HAAR_PURE",
            Measure::HsMixed => "HS_MIXED",
        })
    }
}

impl FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "HAAR_PURE" | "HAAR" | "PURE" => Ok(Measure::HaarPure),
            "HS_MIXED" | "HS" | "MIXED" => Ok(Measure::HsMixed),
            _ => Err(format!(
                "unknown measure {s:?} (expected HAAR_PURE or HS_MIXED)"
            )),
        }
    }
}

/// The random stream owned by record `index` of a run seeded with `seed`.
pub fn record_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform in `(0, 1]`, 53 random bits.
fn uniform_open0(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Two independent standard normals by Box–Muller.
pub fn normal_pair(rng: &mut impl RngCore) -> (f64, f64) {
    let u1 = uniform_open0(rng);
    let u2 = uniform_open0(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (r * c, r * s)
}

fn complex_gaussian(rng: &mut impl RngCore) -> Complex64 {
    let (re, im) = normal_pair(rng);
    Complex64::new(re, im)
}

/// `|ψ⟩⟨ψ|` for a normalized complex Gaussian vector `ψ`.
pub fn haar_pure(dim: usize, rng: &mut impl RngCore) -> DensityMatrix {
    let psi: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let psi: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
    let mut m = ComplexSquareMatrix::zeros(dim);
    for r in 0..dim {
        m[(r, r)] = Complex64::new(psi[r].norm_sqr(), 0.0);
        for c in (r + 1)..dim {
            let z = psi[r] * psi[c].conj();
            m[(r, c)] = z;
            m[(c, r)] = z.conj();
        }
    }
    DensityMatrix::trusted(m, Tolerances::default())
}

/// `GG†/Tr(GG†)` for a square complex Gaussian `G` (Hilbert–Schmidt measure).
pub fn hs_mixed(dim: usize, rng: &mut impl RngCore) -> DensityMatrix {
    let g: Vec<Complex64> = (0..dim * dim).map(|_| complex_gaussian(rng)).collect();
    let row = |r: usize| &g[r * dim..(r + 1) * dim];
    let mut m = ComplexSquareMatrix::zeros(dim);
    let mut trace = 0.0;
    for r in 0..dim {
        let diag: f64 = row(r).iter().map(|z| z.norm_sqr()).sum();
        m[(r, r)] = Complex64::new(diag, 0.0);
        trace += diag;
        for c in (r + 1)..dim {
            let z: Complex64 = row(r).iter().zip(row(c)).map(|(a, b)| a * b.conj()).sum();
            m[(r, c)] = z;
            m[(c, r)] = z.conj();
        }
    }
    DensityMatrix::trusted(m.scale(1.0 / trace), Tolerances::default())
}

pub fn sample_state(dim: usize, measure: Measure, seed: u64, index: u64) -> DensityMatrix {
    let mut rng = record_rng(seed, index);
    match measure {
        Measure::HaarPure => haar_pure(dim, &mut rng),
        Measure::HsMixed => hs_mixed(dim, &mut rng),
    }
}

/// One row of a coordinate cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateRecord {
    pub idx: u64,
    pub dim: usize,
    pub s_d: f64,
    pub s_x: f64,
    pub s_i: f64,
    pub s_r: f64,
    pub purity: f64,
}

impl CoordinateRecord {
    pub fn coordinates(&self) -> state::Coordinates {
        state::Coordinates {
            dim: self.dim,
            s_d: self.s_d,
            s_x: self.s_x,
            s_i: self.s_i,
            s_r: self.s_r,
        }
    }
}

pub fn record_of(rho: &DensityMatrix, idx: u64) -> CoordinateRecord {
    let c = state::state_coordinates(rho);
    CoordinateRecord {
        idx,
        dim: rho.dim(),
        s_d: c.s_d,
        s_x: c.s_x,
        s_i: c.s_i,
        s_r: c.s_r,
        purity: state::purity(rho),
    }
}

fn check_cloud_args(dim: usize, n: u64) -> Result<(), SamplingError> {
    if dim < 2 {
        return Err(SamplingError::DegenerateDimension(dim));
    }
    if n == 0 {
        return Err(SamplingError::EmptyCloud);
    }
    Ok(())
}

/// Lazily generated records `0..n`.
pub fn cloud_iter(
    dim: usize,
    n: u64,
    measure: Measure,
    seed: u64,
) -> Result<impl Iterator<Item = CoordinateRecord>, SamplingError> {
    check_cloud_args(dim, n)?;
    Ok((0..n).map(move |i| record_of(&sample_state(dim, measure, seed, i), i)))
}

pub fn coordinate_cloud(
    dim: usize,
    n: u64,
    measure: Measure,
    seed: u64,
) -> Result<Vec<CoordinateRecord>, SamplingError> {
    Ok(cloud_iter(dim, n, measure, seed)?.collect())
}

/// Same records as [`coordinate_cloud`], computed on `workers` threads
/// (`0` = rayon default) and returned in index order.
pub fn coordinate_cloud_parallel(
    dim: usize,
    n: u64,
    measure: Measure,
    seed: u64,
    workers: usize,
) -> Result<Vec<CoordinateRecord>, SamplingError> {
    check_cloud_args(dim, n)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SamplingError::Pool(e.to_string()))?;
    Ok(pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| record_of(&sample_state(dim, measure, seed, i), i))
            .collect()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalBin {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    /// Largest sampled `S_I` in the bin and the `S_R` where it was seen.
    pub best: Option<(f64, f64)>,
}

impl EmpiricalBin {
    pub fn s_i_max(&self) -> Option<f64> {
        self.best.map(|(_, i)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCurve {
    pub dim: usize,
    pub bins: Vec<EmpiricalBin>,
    /// `(S_R, S_I)` of the extremal seeds used during refinement.
    pub anchors: Vec<(f64, f64)>,
}

impl EmpiricalCurve {
    fn new(dim: usize, bins: usize) -> Self {
        let width = ((dim - 1) as f64).sqrt() / bins as f64;
        let bins = (0..bins)
            .map(|b| {
                let lo = width * b as f64;
                EmpiricalBin {
                    lo,
                    hi: lo + width,
                    center: lo + 0.5 * width,
                    best: None,
                }
            })
            .collect();
        Self {
            dim,
            bins,
            anchors: Vec::new(),
        }
    }

    pub fn bin_index(&self, s_r: f64) -> usize {
        let width = self.bins[0].hi - self.bins[0].lo;
        ((s_r / width).floor().max(0.0) as usize).min(self.bins.len() - 1)
    }

    fn record(&mut self, s_r: f64, s_i: f64) {
        let b = self.bin_index(s_r);
        let bin = &mut self.bins[b];
        if bin.best.is_none_or(|(_, best)| s_i > best) {
            bin.best = Some((s_r, s_i));
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (mine, theirs) in self.bins.iter_mut().zip(other.bins) {
            if let Some((r, i)) = theirs.best {
                if mine.best.is_none_or(|(_, best)| i > best) {
                    mine.best = Some((r, i));
                }
            }
        }
        self
    }
}

/// Per-bin maximum of `S_I` over `n` sampled states (even indices HS mixed,
/// odd indices Haar pure). With `refine`, extremal-family states are added as
/// anchors and each seeds a short random walk of small unitary plane
/// rotations that stays near the boundary.
pub fn empirical_boundary(
    dim: usize,
    bins: usize,
    n: u64,
    seed: u64,
    refine: bool,
) -> Result<EmpiricalCurve, SamplingError> {
    if dim < 2 {
        return Err(SamplingError::DegenerateDimension(dim));
    }
    if bins < 2 {
        return Err(SamplingError::TooFewBins(bins));
    }
    let empty = EmpiricalCurve::new(dim, bins);
    let mut curve = (0..n)
        .into_par_iter()
        .fold(
            || empty.clone(),
            |mut acc, i| {
                let measure = if i % 2 == 0 {
                    Measure::HsMixed
                } else {
                    Measure::HaarPure
                };
                let c = state::state_coordinates(&sample_state(dim, measure, seed, i));
                acc.record(c.s_r, c.s_i);
                acc
            },
        )
        .reduce(|| empty.clone(), EmpiricalCurve::merge);

    if refine {
        let anchors = extremal_anchors(dim);
        let walks: Vec<Vec<(f64, f64)>> = anchors
            .par_iter()
            .enumerate()
            .map(|(a, rho)| boundary_walk(rho, seed, a as u64))
            .collect();
        for (rho, walk) in anchors.iter().zip(walks) {
            let c = state::state_coordinates(rho);
            curve.anchors.push((c.s_r, c.s_i));
            curve.record(c.s_r, c.s_i);
            for (r, i) in walk {
                curve.record(r, i);
            }
        }
    }
    Ok(curve)
}

const ANCHOR_GRID: usize = 16;
const WALK_ACCEPTED: usize = 200;
const WALK_MAX_PROPOSALS: usize = 2000;

/// Members of every family that saturates a bound in this dimension.
pub fn extremal_anchors(dim: usize) -> Vec<DensityMatrix> {
    let d = dim as f64;
    let grid = |lo: f64, hi: f64| {
        (0..=ANCHOR_GRID).map(move |k| lo + (hi - lo) * k as f64 / ANCHOR_GRID as f64)
    };
    let mut out = Vec::new();
    let half = 0.5f64.sqrt();
    for beta in grid(0.0, half) {
        out.extend(extremal::embedded_imag_pure(dim, beta));
    }
    let blocks = dim / 2;
    // one heavy block, the rest sharing what is left
    let skewed = |t: f64| -> Vec<f64> {
        let mut v = vec![(0.5 - t) / (blocks - 1) as f64; blocks];
        v[0] = t;
        v
    };
    if dim.is_multiple_of(2) {
        if blocks == 1 {
            out.extend(extremal::even_block(&[0.5]));
        } else {
            for t in grid(1.0 / d, 0.5) {
                out.extend(extremal::even_block(&skewed(t)));
            }
        }
    } else {
        for alpha in grid(1.0 / d, 1.0 / (d - 1.0)) {
            out.extend(extremal::odd_linear(dim, alpha));
        }
        if blocks == 1 {
            out.extend(extremal::odd_block_zero(&[0.5]));
        } else {
            for t in grid(1.0 / (d - 1.0), 0.5) {
                out.extend(extremal::odd_block_zero(&skewed(t)));
            }
        }
    }
    out
}

/// `U ρ U†` with `U = [[c, −e^{iφ}s], [e^{−iφ}s, c]]` on the `(k, l)` plane.
fn unitary_plane_rotation(
    rho: &ComplexSquareMatrix,
    k: usize,
    l: usize,
    theta: f64,
    phi: f64,
) -> ComplexSquareMatrix {
    let (s, c) = theta.sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    let (u_kk, u_kl, u_lk, u_ll) = (
        Complex64::new(c, 0.0),
        -e * s,
        e.conj() * s,
        Complex64::new(c, 0.0),
    );
    let mut m = rho.clone();
    let n = m.dim();
    for j in 0..n {
        let (a, b) = (m[(k, j)], m[(l, j)]);
        m[(k, j)] = u_kk * a + u_kl * b;
        m[(l, j)] = u_lk * a + u_ll * b;
    }
    for i in 0..n {
        let (a, b) = (m[(i, k)], m[(i, l)]);
        m[(i, k)] = a * u_kk.conj() + b * u_kl.conj();
        m[(i, l)] = a * u_lk.conj() + b * u_ll.conj();
    }
    m
}

fn boundary_gap(dim: usize, s_r: f64, s_i: f64) -> f64 {
    bounds::max_imaginary(s_r, dim).map_or(f64::INFINITY, |cap| cap - s_i)
}

/// Random walk from an anchor: angles `±10^{-j}`, `j ∈ 1..=6`, random phase;
/// a move is taken when the result is a valid state whose distance below the
/// analytic curve has not grown by more than `1e-6`.
fn boundary_walk(anchor: &DensityMatrix, seed: u64, anchor_index: u64) -> Vec<(f64, f64)> {
    let dim = anchor.dim();
    let mut rng = record_rng(seed ^ 0x005e_ed0f_a11c_0de5, anchor_index);
    let mut current = anchor.clone();
    let c0 = state::state_coordinates(anchor);
    let mut gap = boundary_gap(dim, c0.s_r, c0.s_i);
    let mut visited = Vec::new();
    let mut accepted = 0;
    for _ in 0..WALK_MAX_PROPOSALS {
        if accepted >= WALK_ACCEPTED {
            break;
        }
        let k = rng.gen_range(0..dim);
        let mut l = rng.gen_range(0..dim - 1);
        if l >= k {
            l += 1;
        }
        let exponent = rng.gen_range(1..=6);
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let theta = sign * 10f64.powi(-exponent);
        let phi = TAU * rng.gen::<f64>();
        let proposal = unitary_plane_rotation(current.matrix(), k, l, theta, phi);
        let Ok(next) = state::validate_density(proposal, Tolerances::default()) else {
            continue;
        };
        let c = state::state_coordinates(&next);
        visited.push((c.s_r, c.s_i));
        let next_gap = boundary_gap(dim, c.s_r, c.s_i);
        if next_gap <= gap + 1e-6 {
            gap = next_gap;
            current = next;
            accepted += 1;
        }
    }
    visited
}

/// Intermediate quantities of the eigenvalue argument for the linear bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofStepReport {
    /// Eigenvalues of the imaginary part `I`, descending.
    pub lambda_i: Vec<f64>,
    /// Eigenvalues of `R = 𝟙 + D + X`, descending.
    pub lambda_r: Vec<f64>,
    /// Diagonal of `U†RU` with `U` diagonalizing `I`, aligned with `lambda_i`.
    pub r_tilde_diag: Vec<f64>,
    /// Smallest eigenvalue of `R`.
    pub t: f64,
    pub s_r: f64,
    pub pairing_ok: bool,
    pub domination_ok: bool,
    pub majorization_ok: bool,
    pub t_bound_ok: bool,
}

impl ProofStepReport {
    pub fn all_ok(&self) -> bool {
        self.pairing_ok && self.domination_ok && self.majorization_ok && self.t_bound_ok
    }
}

/// Checks, for one state:
///
/// * the spectrum of `I` is symmetric about zero (with a zero for odd `d`),
/// * `R̃_kk ≥ |λ_k(I)|`, which follows from `R ± I ≥ 0`,
/// * the spectrum of `R` majorizes the diagonal of `R̃`,
/// * `t = λ_min(R) ≥ 1 − √(d−1) S_R`.
pub fn proof_step_check(rho: &DensityMatrix) -> ProofStepReport {
    let d = rho.dim();
    let parts = state::decompose(rho);
    let s_r = state::coordinates(&parts).s_r;
    let i_part = parts.i_matrix();
    let r_part = ComplexSquareMatrix::identity(d)
        .add(&parts.d_matrix())
        .add(&parts.x_matrix());
    let r_part = ComplexSquareMatrix::from_fn(d, |a, b| {
        // symmetrize away input-level rounding
        Complex64::new(0.5 * (r_part[(a, b)].re + r_part[(b, a)].re), 0.0)
    });

    let eig_i =
        numerics::hermitian_eigen(&i_part, f64::INFINITY).expect("Hermitian by construction");
    let lambda_r = numerics::hermitian_eigenvalues(&r_part, f64::INFINITY).expect("symmetric");
    let r_tilde = eig_i
        .vectors
        .adjoint()
        .matmul(&r_part)
        .matmul(&eig_i.vectors);
    let r_tilde_diag: Vec<f64> = r_tilde.diagonal().iter().map(|z| z.re).collect();
    let lambda_i = eig_i.values;
    let t = *lambda_r.last().expect("d ≥ 2");

    let pairing_ok = (0..d).all(|k| (lambda_i[k] + lambda_i[d - 1 - k]).abs() <= PROOF_TOL)
        && (d.is_multiple_of(2) || lambda_i[d / 2].abs() <= PROOF_TOL);
    let domination_ok = r_tilde_diag
        .iter()
        .zip(&lambda_i)
        .all(|(r, l)| *r >= l.abs() - PROOF_TOL);
    let mut sorted_diag = r_tilde_diag.clone();
    sorted_diag.sort_by(|a, b| b.total_cmp(a));
    let majorization_ok =
        numerics::majorizes(&lambda_r, &sorted_diag, PROOF_TOL).expect("equal lengths");
    let t_bound_ok = t >= 1.0 - ((d - 1) as f64).sqrt() * s_r - PROOF_TOL;

    ProofStepReport {
        lambda_i,
        lambda_r,
        r_tilde_diag,
        t,
        s_r,
        pairing_ok,
        domination_ok,
        majorization_ok,
        t_bound_ok,
    }
}
