//! Dense complex matrices at qudit scale and the spectral primitives the rest
//! of the crate is built on.
//!
//! Everything here is `O(d³)` at worst and written for `d` up to a few hundred.
//! The Hermitian eigensolver is a cyclic complex Jacobi iteration: slow for
//! large matrices, but accurate to a few ulps on the small ones we care about.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use thiserror::Error;

/// Default absolute, entrywise tolerance on `|m - m†|`.
pub const DEFAULT_HERM_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("matrix is not Hermitian: max |m - m†| = {deviation:e} exceeds tolerance {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("expected {expected} entries for a square matrix, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Row-major `dim × dim` complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexSquareMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexSquareMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self, NumericsError> {
        if entries.len() != dim * dim {
            return Err(NumericsError::ShapeMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m[(k, k)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                entries.push(f(r, c));
            }
        }
        Self { dim, entries }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (k, &v) in diag.iter().enumerate() {
            m[(k, k)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Builds a matrix from separate real and imaginary row-major parts.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let dim = re.len();
        if im.len() != dim {
            return Err(NumericsError::LengthMismatch {
                left: dim,
                right: im.len(),
            });
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for (re_row, im_row) in re.iter().zip(im) {
            if re_row.len() != dim || im_row.len() != dim {
                return Err(NumericsError::ShapeMismatch {
                    expected: dim,
                    got: re_row.len().max(im_row.len()),
                });
            }
            entries.extend(
                re_row
                    .iter()
                    .zip(im_row)
                    .map(|(&a, &b)| Complex64::new(a, b)),
            );
        }
        Ok(Self { dim, entries })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn real_rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.dim)
            .map(|row| row.iter().map(|z| z.re).collect())
            .collect()
    }

    pub fn imag_rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.dim)
            .map(|row| row.iter().map(|z| z.im).collect())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|k| self[(k, k)]).collect()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|k| self[(k, k)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in sub");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in matmul");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out.entries[r * n + c] += a * other.entries[k * n + c];
                }
            }
        }
        out
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> Complex64 {
        assert_eq!(
            self.dim, other.dim,
            "dimension mismatch in trace_of_product"
        );
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..n {
            for k in 0..n {
                acc += self.entries[r * n + k] * other.entries[k * n + r];
            }
        }
        acc
    }

    /// Largest entrywise `|m_rc - conj(m_cr)|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in max_abs_diff");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl Index<(usize, usize)> for ComplexSquareMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.entries[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexSquareMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[r * self.dim + c]
    }
}

impl fmt::Debug for ComplexSquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexSquareMatrix({}x{}) [", self.dim, self.dim)?;
        for row in self.entries.chunks(self.dim) {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
///
/// `vectors` holds the eigenvectors as columns: column `k` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexSquareMatrix,
}

fn check_hermitian(m: &ComplexSquareMatrix, herm_tol: f64) -> Result<(), NumericsError> {
    let deviation = m.hermiticity_deviation();
    if deviation > herm_tol || deviation.is_nan() {
        return Err(NumericsError::NotHermitian {
            deviation,
            tol: herm_tol,
        });
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn hermitian_eigenvalues(
    m: &ComplexSquareMatrix,
    herm_tol: f64,
) -> Result<Vec<f64>, NumericsError> {
    check_hermitian(m, herm_tol)?;
    Ok(jacobi(m, false).values)
}

/// Eigenvalues and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(
    m: &ComplexSquareMatrix,
    herm_tol: f64,
) -> Result<HermitianEigen, NumericsError> {
    check_hermitian(m, herm_tol)?;
    Ok(jacobi(m, true))
}

/// Cyclic Jacobi on the Hermitian part `(m + m†)/2`.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary, then applies the classical real symmetric rotation.
fn jacobi(m: &ComplexSquareMatrix, want_vectors: bool) -> HermitianEigen {
    let n = m.dim();
    let mut a = m.add(&m.adjoint()).scale(0.5);
    for k in 0..n {
        a[(k, k)].im = 0.0;
    }
    let mut v = ComplexSquareMatrix::identity(n);

    let total = a.frobenius_norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off == 0.0 || off.sqrt() <= 1e-17 * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[(p, q)];
                let mag = b.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // J = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) plane.
                let phase = b.conj() / mag;
                let j_pp = Complex64::new(cs, 0.0);
                let j_pq = Complex64::new(sn, 0.0);
                let j_qp = phase * (-sn);
                let j_qq = phase * cs;

                // a <- a J
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = arp * j_pp + arq * j_qp;
                    a[(r, q)] = arp * j_pq + arq * j_qq;
                }
                // a <- J† a
                for c in 0..n {
                    let apc = a[(p, c)];
                    let aqc = a[(q, c)];
                    a[(p, c)] = j_pp.conj() * apc + j_qp.conj() * aqc;
                    a[(q, c)] = j_pq.conj() * apc + j_qq.conj() * aqc;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;

                if want_vectors {
                    for r in 0..n {
                        let vrp = v[(r, p)];
                        let vrq = v[(r, q)];
                        v[(r, p)] = vrp * j_pp + vrq * j_qp;
                        v[(r, q)] = vrp * j_pq + vrq * j_qq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.total_cmp(&a[(x, x)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = if want_vectors {
        ComplexSquareMatrix::from_fn(n, |r, c| v[(r, order[c])])
    } else {
        ComplexSquareMatrix::zeros(0)
    };
    HermitianEigen { values, vectors }
}

/// Sum of singular values.
///
/// Hermitian input goes through the eigensolver directly (`Σ|λ|`); anything
/// else through the spectrum of `m†m`.
pub fn trace_norm(m: &ComplexSquareMatrix) -> f64 {
    if m.dim() == 0 {
        return 0.0;
    }
    let scale = m.frobenius_norm().max(1.0);
    if m.hermiticity_deviation() <= 1e-14 * scale {
        jacobi(m, false).values.iter().map(|x| x.abs()).sum()
    } else {
        let gram = m.adjoint().matmul(m);
        jacobi(&gram, false)
            .values
            .iter()
            .map(|x| x.max(0.0).sqrt())
            .sum()
    }
}

/// Does `a` majorize `b`? Both inputs must already be sorted descending.
///
/// Every prefix sum of `a` must reach the matching prefix sum of `b` up to
/// `tol`, and the totals must agree within `tol`.
pub fn majorizes(a: &[f64], b: &[f64], tol: f64) -> Result<bool, NumericsError> {
    if a.len() != b.len() {
        return Err(NumericsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        sum_a += x;
        sum_b += y;
        if sum_a < sum_b - tol {
            return Ok(false);
        }
    }
    Ok((sum_a - sum_b).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sigma_y() -> ComplexSquareMatrix {
        ComplexSquareMatrix::new(2, vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap()
    }

    fn random_hermitian(dim: usize, raw: &[f64]) -> ComplexSquareMatrix {
        let mut m = ComplexSquareMatrix::zeros(dim);
        let mut it = raw.iter().cycle();
        for r in 0..dim {
            m[(r, r)] = c(*it.next().unwrap(), 0.0);
            for col in (r + 1)..dim {
                let z = c(*it.next().unwrap(), *it.next().unwrap());
                m[(r, col)] = z;
                m[(col, r)] = z.conj();
            }
        }
        m
    }

    /// Unitary from Gram-Schmidt on a pseudo-random complex matrix.
    fn random_unitary(dim: usize, raw: &[f64]) -> ComplexSquareMatrix {
        let mut it = raw.iter().cycle();
        let mut cols: Vec<Vec<Complex64>> = Vec::new();
        for _ in 0..dim {
            let mut v: Vec<Complex64> = (0..dim)
                .map(|_| c(*it.next().unwrap(), *it.next().unwrap()))
                .collect();
            for u in &cols {
                let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|z| *z /= norm);
            cols.push(v);
        }
        ComplexSquareMatrix::from_fn(dim, |r, col| cols[col][r])
    }

    #[test]
    fn identity_spectrum() {
        let ev =
            hermitian_eigenvalues(&ComplexSquareMatrix::identity(3), DEFAULT_HERM_TOL).unwrap();
        assert_eq!(ev, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn pauli_y_spectrum() {
        let ev = hermitian_eigenvalues(&sigma_y(), DEFAULT_HERM_TOL).unwrap();
        assert_abs_diff_eq!(ev[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ev[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn even_block_imaginary_part_spectrum() {
        // two [[0, -i], [i, 0]] blocks
        let mut m = ComplexSquareMatrix::zeros(4);
        for b in 0..2 {
            m[(2 * b, 2 * b + 1)] = c(0., -1.);
            m[(2 * b + 1, 2 * b)] = c(0., 1.);
        }
        let ev = hermitian_eigenvalues(&m, DEFAULT_HERM_TOL).unwrap();
        for (got, want) in ev.iter().zip([1.0, 1.0, -1.0, -1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn non_hermitian_is_rejected_with_deviation() {
        let mut m = ComplexSquareMatrix::identity(2);
        m[(0, 1)] = c(0.5, 0.0);
        match hermitian_eigenvalues(&m, DEFAULT_HERM_TOL) {
            Err(NumericsError::NotHermitian { deviation, .. }) => {
                assert_abs_diff_eq!(deviation, 0.5, epsilon = 1e-15)
            }
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn eigenvectors_diagonalize() {
        let raw: Vec<f64> = (0..64)
            .map(|k| ((k * 37 % 17) as f64 - 8.0) / 5.0)
            .collect();
        let m = random_hermitian(5, &raw);
        let eig = hermitian_eigen(&m, DEFAULT_HERM_TOL).unwrap();
        let lhs = m.matmul(&eig.vectors);
        let rhs = eig
            .vectors
            .matmul(&ComplexSquareMatrix::from_real_diagonal(&eig.values));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        let gram = eig.vectors.adjoint().matmul(&eig.vectors);
        assert!(gram.max_abs_diff(&ComplexSquareMatrix::identity(5)) < 1e-13);
    }

    #[test]
    fn trace_norm_examples() {
        assert_eq!(trace_norm(&ComplexSquareMatrix::zeros(3)), 0.0);
        assert_abs_diff_eq!(trace_norm(&sigma_y()), 2.0, epsilon = 1e-14);
        let m = ComplexSquareMatrix::from_real_diagonal(&[3.0, -4.0]);
        assert_abs_diff_eq!(trace_norm(&m), 7.0, epsilon = 1e-14);
    }

    #[test]
    fn trace_norm_of_non_hermitian() {
        // [[0, 2], [0, 0]] has singular values 2 and 0.
        let mut m = ComplexSquareMatrix::zeros(2);
        m[(0, 1)] = c(2.0, 0.0);
        assert_abs_diff_eq!(trace_norm(&m), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn majorization_examples() {
        let third = 1.0 / 3.0;
        assert!(majorizes(&[1., 0., 0.], &[third, third, third], 1e-12).unwrap());
        assert!(!majorizes(&[third, third, third], &[1., 0., 0.], 1e-12).unwrap());
        assert!(!majorizes(&[0.6, 0.4], &[0.7, 0.3], 1e-12).unwrap());
        assert_eq!(
            majorizes(&[1.0], &[0.5, 0.5], 0.0),
            Err(NumericsError::LengthMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn shape_is_checked() {
        assert!(matches!(
            ComplexSquareMatrix::new(2, vec![c(0., 0.); 3]),
            Err(NumericsError::ShapeMismatch {
                expected: 4,
                got: 3
            })
        ));
    }

    proptest! {
        #[test]
        fn eigenvalue_sum_matches_trace(dim in 1usize..9, raw in prop::collection::vec(-3.0f64..3.0, 81)) {
            let m = random_hermitian(dim, &raw);
            let ev = hermitian_eigenvalues(&m, DEFAULT_HERM_TOL).unwrap();
            prop_assert_eq!(ev.len(), dim);
            prop_assert!(ev.windows(2).all(|w| w[0] >= w[1]));
            let sum: f64 = ev.iter().sum();
            prop_assert!((sum - m.trace().re).abs() <= 1e-10 * dim as f64);
        }

        #[test]
        fn trace_norm_unitarily_invariant(
            dim in 2usize..7,
            raw in prop::collection::vec(-2.0f64..2.0, 64),
            uraw in prop::collection::vec(-1.0f64..1.0, 98),
        ) {
            let m = random_hermitian(dim, &raw);
            let u = random_unitary(dim, &uraw);
            let conj = u.matmul(&m).matmul(&u.adjoint());
            prop_assert!((trace_norm(&m) - trace_norm(&conj)).abs() <= 1e-10);
        }

        #[test]
        fn majorization_is_reflexive(mut x in prop::collection::vec(-5.0f64..5.0, 1..12), tol in 0.0f64..1e-3) {
            x.sort_by(|a, b| b.total_cmp(a));
            prop_assert!(majorizes(&x, &x, tol).unwrap());
        }
    }
}
