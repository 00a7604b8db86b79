//! Density matrices, the split `ρ = (𝟙 + D + X + I)/d` into diagonal, real
//! off-diagonal and imaginary parts, the weights `S_D`, `S_X`, `S_I`, and the
//! Bloch expansion in a Gell-Mann type basis normalized to `Tr(μ_k μ_l†) = d δ_kl`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, ComplexSquareMatrix, NumericsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("dimension must be at least 2, got {0}")]
    DegenerateDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("NotHermitian: max |ρ - ρ†| = {deviation:e} exceeds {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error("TraceNotOne: trace = {re}{im:+}i, tolerance {tol:e}")]
    TraceNotOne { re: f64, im: f64, tol: f64 },
    #[error("NotPositive: smallest eigenvalue {min_eigenvalue:e} is below -{tol:e}")]
    NotPositive { min_eigenvalue: f64, tol: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Acceptance thresholds for [`validate_density`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm_tol: f64,
    pub trace_tol: f64,
    pub psd_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm_tol: numerics::DEFAULT_HERM_TOL,
            trace_tol: 1e-10,
            psd_tol: 1e-9,
        }
    }
}

/// A validated quantum state: Hermitian, unit trace, positive semidefinite,
/// each within the recorded tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexSquareMatrix,
    tolerances: Tolerances,
}

impl DensityMatrix {
    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexSquareMatrix {
        &self.matrix
    }

    #[inline]
    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    pub fn into_matrix(self) -> ComplexSquareMatrix {
        self.matrix
    }

    /// `(1/d) 𝟙`.
    pub fn maximally_mixed(dim: usize) -> Result<Self, StateError> {
        if dim < 2 {
            return Err(StateError::DegenerateDimension(dim));
        }
        Ok(Self {
            matrix: ComplexSquareMatrix::identity(dim).scale(1.0 / dim as f64),
            tolerances: Tolerances::default(),
        })
    }

    /// Wraps a matrix that is a state by construction (unitary conjugation of a
    /// state, transposition, ...). Only for use inside the crate.
    pub(crate) fn trusted(matrix: ComplexSquareMatrix, tolerances: Tolerances) -> Self {
        Self { matrix, tolerances }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        // Hermiticity was checked at construction.
        numerics::hermitian_eigenvalues(&self.matrix, f64::INFINITY)
            .expect("validated state is Hermitian")
    }
}

/// Checks Hermiticity, unit trace and positivity, in that order.
pub fn validate_density(
    raw: ComplexSquareMatrix,
    tolerances: Tolerances,
) -> Result<DensityMatrix, StateError> {
    let d = raw.dim();
    if d < 2 {
        return Err(StateError::DegenerateDimension(d));
    }
    let deviation = raw.hermiticity_deviation();
    if deviation > tolerances.herm_tol || deviation.is_nan() {
        return Err(StateError::NotHermitian {
            deviation,
            tol: tolerances.herm_tol,
        });
    }
    let tr = raw.trace();
    if (tr - 1.0).norm() > tolerances.trace_tol || tr.re.is_nan() {
        return Err(StateError::TraceNotOne {
            re: tr.re,
            im: tr.im,
            tol: tolerances.trace_tol,
        });
    }
    let eigenvalues = numerics::hermitian_eigenvalues(&raw, tolerances.herm_tol)?;
    let min_eigenvalue = *eigenvalues.last().expect("d >= 2");
    if min_eigenvalue < -tolerances.psd_tol {
        return Err(StateError::NotPositive {
            min_eigenvalue,
            tol: tolerances.psd_tol,
        });
    }
    Ok(DensityMatrix {
        matrix: raw,
        tolerances,
    })
}

/// The traceless parts `D`, `X`, `I` of `d·ρ − 𝟙`.
///
/// `D` is stored as its diagonal, `X` as a real symmetric matrix with zero
/// diagonal, and `I = i·A` through the real antisymmetric `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct DxiParts {
    dim: usize,
    diag: Vec<f64>,
    real_off: Vec<f64>,
    imag_off: Vec<f64>,
}

impl DxiParts {
    /// Assembles parts from raw arrays, checking shapes and structure
    /// (zero diagonals of `X` and `A`, symmetry of `X`, antisymmetry of `A`)
    /// within `tol`.
    pub fn new(
        dim: usize,
        diag: Vec<f64>,
        real_off: Vec<f64>,
        imag_off: Vec<f64>,
        tol: f64,
    ) -> Result<Self, StateError> {
        if dim < 2 {
            return Err(StateError::DegenerateDimension(dim));
        }
        for len in [real_off.len(), imag_off.len()] {
            if len != dim * dim {
                return Err(StateError::DimensionMismatch {
                    expected: dim * dim,
                    got: len,
                });
            }
        }
        if diag.len() != dim {
            return Err(StateError::DimensionMismatch {
                expected: dim,
                got: diag.len(),
            });
        }
        let mut asym = 0.0_f64;
        for r in 0..dim {
            asym = asym
                .max(real_off[r * dim + r].abs())
                .max(imag_off[r * dim + r].abs());
            for c in (r + 1)..dim {
                asym = asym
                    .max((real_off[r * dim + c] - real_off[c * dim + r]).abs())
                    .max((imag_off[r * dim + c] + imag_off[c * dim + r]).abs());
            }
        }
        if asym > tol {
            return Err(StateError::NotHermitian {
                deviation: asym,
                tol,
            });
        }
        Ok(Self {
            dim,
            diag,
            real_off,
            imag_off,
        })
    }

    pub fn zeros(dim: usize) -> Result<Self, StateError> {
        Self::new(
            dim,
            vec![0.0; dim],
            vec![0.0; dim * dim],
            vec![0.0; dim * dim],
            0.0,
        )
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Diagonal entries of `D`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Row-major entries of `X`.
    pub fn real_off(&self) -> &[f64] {
        &self.real_off
    }

    /// Row-major entries of `A`, where `I = i·A`.
    pub fn imag_off(&self) -> &[f64] {
        &self.imag_off
    }

    pub fn d_matrix(&self) -> ComplexSquareMatrix {
        ComplexSquareMatrix::from_real_diagonal(&self.diag)
    }

    pub fn x_matrix(&self) -> ComplexSquareMatrix {
        ComplexSquareMatrix::from_fn(self.dim, |r, c| {
            Complex64::new(self.real_off[r * self.dim + c], 0.0)
        })
    }

    pub fn i_matrix(&self) -> ComplexSquareMatrix {
        ComplexSquareMatrix::from_fn(self.dim, |r, c| {
            Complex64::new(0.0, self.imag_off[r * self.dim + c])
        })
    }

    /// `(1/d)(𝟙 + D + X + I)` without any validation.
    pub fn recompose_matrix(&self) -> ComplexSquareMatrix {
        let d = self.dim;
        let inv = 1.0 / d as f64;
        ComplexSquareMatrix::from_fn(d, |r, c| {
            let re = if r == c {
                1.0 + self.diag[r]
            } else {
                self.real_off[r * d + c]
            };
            Complex64::new(re * inv, self.imag_off[r * d + c] * inv)
        })
    }
}

/// `D_kk = d ρ_kk − 1`, `X_kl = d Re ρ_kl`, `I_kl = i d Im ρ_kl` (k ≠ l).
pub fn decompose(rho: &DensityMatrix) -> DxiParts {
    let d = rho.dim();
    let scale = d as f64;
    let m = rho.matrix();
    let mut diag = Vec::with_capacity(d);
    let mut real_off = vec![0.0; d * d];
    let mut imag_off = vec![0.0; d * d];
    for r in 0..d {
        diag.push(scale * m[(r, r)].re - 1.0);
        for c in 0..d {
            if r != c {
                real_off[r * d + c] = scale * m[(r, c)].re;
                imag_off[r * d + c] = scale * m[(r, c)].im;
            }
        }
    }
    DxiParts {
        dim: d,
        diag,
        real_off,
        imag_off,
    }
}

/// Inverse of [`decompose`]. Arbitrary triples need not describe a state, so
/// positivity is checked and reported.
pub fn recompose(parts: &DxiParts, tolerances: Tolerances) -> Result<DensityMatrix, StateError> {
    validate_density(parts.recompose_matrix(), tolerances)
}

/// The weights of the three parts; `s_r` bundles the two real ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinates {
    pub dim: usize,
    pub s_d: f64,
    pub s_x: f64,
    pub s_i: f64,
    pub s_r: f64,
}

impl Coordinates {
    pub fn new(dim: usize, s_d: f64, s_x: f64, s_i: f64) -> Self {
        Self {
            dim,
            s_d,
            s_x,
            s_i,
            s_r: s_d.hypot(s_x),
        }
    }

    /// A point given only by its real radius; `S_X` is set to zero.
    pub fn from_real_imag(dim: usize, s_r: f64, s_i: f64) -> Self {
        Self {
            dim,
            s_d: s_r,
            s_x: 0.0,
            s_i,
            s_r,
        }
    }

    /// `S_D² + S_X² + S_I²`, bounded by `d − 1` for states.
    pub fn squared_length(&self) -> f64 {
        self.s_d * self.s_d + self.s_x * self.s_x + self.s_i * self.s_i
    }
}

/// `S_P = sqrt(Tr P² / d)` for each part.
pub fn coordinates(parts: &DxiParts) -> Coordinates {
    let d = parts.dim as f64;
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    Coordinates::new(
        parts.dim,
        (sq(&parts.diag) / d).sqrt(),
        (sq(&parts.real_off) / d).sqrt(),
        (sq(&parts.imag_off) / d).sqrt(),
    )
}

/// Shorthand for `coordinates(&decompose(rho))`.
pub fn state_coordinates(rho: &DensityMatrix) -> Coordinates {
    coordinates(&decompose(rho))
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().entries().iter().map(|z| z.norm_sqr()).sum()
}

/// Traceless Hermitian basis split into diagonal, real symmetric and
/// imaginary antisymmetric elements, each with `Tr μ² = d`.
///
/// Layout: diagonal elements by increasing ladder rank `l = 1..d−1`, then
/// symmetric pairs `(k, l)` with `k < l` in lexicographic order, then the
/// antisymmetric pairs in the same order.
#[derive(Debug, Clone)]
pub struct BlochBasis {
    dim: usize,
    diagonal: Vec<ComplexSquareMatrix>,
    real_off: Vec<ComplexSquareMatrix>,
    imag_off: Vec<ComplexSquareMatrix>,
}

impl BlochBasis {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diagonal(&self) -> &[ComplexSquareMatrix] {
        &self.diagonal
    }

    pub fn real_off(&self) -> &[ComplexSquareMatrix] {
        &self.real_off
    }

    pub fn imag_off(&self) -> &[ComplexSquareMatrix] {
        &self.imag_off
    }

    pub fn len(&self) -> usize {
        self.diagonal.len() + self.real_off.len() + self.imag_off.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All elements in layout order.
    pub fn iter(&self) -> impl Iterator<Item = &ComplexSquareMatrix> {
        self.diagonal
            .iter()
            .chain(&self.real_off)
            .chain(&self.imag_off)
    }
}

/// Index pairs `(k, l)`, `k < l`, in lexicographic order.
pub fn off_diagonal_pairs(dim: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..dim).flat_map(move |k| ((k + 1)..dim).map(move |l| (k, l)))
}

/// Generalized Gell-Mann matrices rescaled by `sqrt(d/2)`.
pub fn gellmann_basis(dim: usize) -> Result<BlochBasis, StateError> {
    if dim < 2 {
        return Err(StateError::DegenerateDimension(dim));
    }
    let norm = (dim as f64 / 2.0).sqrt();
    let diagonal = (1..dim)
        .map(|l| {
            let lf = l as f64;
            let s = norm * (2.0 / (lf * (lf + 1.0))).sqrt();
            let mut diag = vec![0.0; dim];
            diag[..l].iter_mut().for_each(|x| *x = s);
            diag[l] = -lf * s;
            ComplexSquareMatrix::from_real_diagonal(&diag)
        })
        .collect();
    let real_off = off_diagonal_pairs(dim)
        .map(|(k, l)| {
            let mut m = ComplexSquareMatrix::zeros(dim);
            m[(k, l)] = Complex64::new(norm, 0.0);
            m[(l, k)] = Complex64::new(norm, 0.0);
            m
        })
        .collect();
    let imag_off = off_diagonal_pairs(dim)
        .map(|(k, l)| {
            let mut m = ComplexSquareMatrix::zeros(dim);
            m[(k, l)] = Complex64::new(0.0, -norm);
            m[(l, k)] = Complex64::new(0.0, norm);
            m
        })
        .collect();
    Ok(BlochBasis {
        dim,
        diagonal,
        real_off,
        imag_off,
    })
}

/// Expectation values `v_k = Tr(ρ μ_k)` grouped like the basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub dim: usize,
    pub v_d: Vec<f64>,
    pub v_x: Vec<f64>,
    pub v_i: Vec<f64>,
}

impl BlochVector {
    pub fn zeros(dim: usize) -> Self {
        let pairs = dim * (dim - 1) / 2;
        Self {
            dim,
            v_d: vec![0.0; dim - 1],
            v_x: vec![0.0; pairs],
            v_i: vec![0.0; pairs],
        }
    }

    pub fn squared_norms(&self) -> (f64, f64, f64) {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        (sq(&self.v_d), sq(&self.v_x), sq(&self.v_i))
    }
}

pub fn bloch_vector(rho: &DensityMatrix, basis: &BlochBasis) -> Result<BlochVector, StateError> {
    if rho.dim() != basis.dim {
        return Err(StateError::DimensionMismatch {
            expected: basis.dim,
            got: rho.dim(),
        });
    }
    let m = rho.matrix();
    let expect = |mus: &[ComplexSquareMatrix]| -> Vec<f64> {
        mus.iter().map(|mu| m.trace_of_product(mu).re).collect()
    };
    Ok(BlochVector {
        dim: rho.dim(),
        v_d: expect(&basis.diagonal),
        v_x: expect(&basis.real_off),
        v_i: expect(&basis.imag_off),
    })
}

/// `ρ = (1/d)(𝟙 + Σ v_k μ_k)`, validated; vectors outside the state body
/// come back as [`StateError::NotPositive`].
pub fn state_from_bloch(
    v: &BlochVector,
    basis: &BlochBasis,
    tolerances: Tolerances,
) -> Result<DensityMatrix, StateError> {
    if v.dim != basis.dim {
        return Err(StateError::DimensionMismatch {
            expected: basis.dim,
            got: v.dim,
        });
    }
    for (got, expected) in [
        (v.v_d.len(), basis.diagonal.len()),
        (v.v_x.len(), basis.real_off.len()),
        (v.v_i.len(), basis.imag_off.len()),
    ] {
        if got != expected {
            return Err(StateError::DimensionMismatch { expected, got });
        }
    }
    let d = basis.dim;
    let mut acc = ComplexSquareMatrix::identity(d);
    let coeffs = v.v_d.iter().chain(&v.v_x).chain(&v.v_i);
    for (&coef, mu) in coeffs.zip(basis.iter()) {
        if coef != 0.0 {
            acc = acc.add(&mu.scale(coef));
        }
    }
    validate_density(acc.scale(1.0 / d as f64), tolerances)
}
