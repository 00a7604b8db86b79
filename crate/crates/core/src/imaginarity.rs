//! Robustness of imaginarity, `‖I/d‖₁`, i.e. the trace norm of the
//! antisymmetric part `(ρ − ρᵀ)/2`.
//!
//! `S_I` itself is a Hilbert–Schmidt quantity and is not monotone under real
//! channels; only the trace-norm measure is.

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::numerics;
use crate::sampling::{self, Measure};
use crate::state::{self, DensityMatrix};

/// Robustness at or above `1 − FULL_TOL` counts as full imaginarity.
pub const FULL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImaginarityReport {
    pub robustness: f64,
    pub s_r: f64,
    pub full_imaginarity: bool,
}

pub fn robustness(rho: &DensityMatrix) -> ImaginarityReport {
    let parts = state::decompose(rho);
    let d = rho.dim() as f64;
    let value = numerics::trace_norm(&parts.i_matrix()) / d;
    ImaginarityReport {
        robustness: value,
        s_r: state::coordinates(&parts).s_r,
        full_imaginarity: value >= 1.0 - FULL_TOL,
    }
}

/// Largest robustness seen in the strip `0 < S_R < 1/√(d−1)` of an odd
/// dimension, over `n` sampled states (alternating HS mixed / Haar pure) and
/// the linear-family anchors. Returns `(S_R, robustness)` of the best point,
/// or `None` for even `d` or when nothing landed in the strip.
pub fn strip_maximum(dim: usize, n: u64, seed: u64) -> Option<(f64, f64)> {
    if dim < 3 || dim.is_multiple_of(2) {
        return None;
    }
    let width = 1.0 / ((dim - 1) as f64).sqrt();
    let in_strip = |r: &ImaginarityReport| r.s_r > 0.0 && r.s_r < width;
    let sampled = (0..n).map(|i| {
        let measure = if i % 2 == 0 {
            Measure::HsMixed
        } else {
            Measure::HaarPure
        };
        sampling::sample_state(dim, measure, seed, i)
    });
    sampling::extremal_anchors(dim)
        .into_iter()
        .chain(sampled)
        .map(|rho| robustness(&rho))
        .filter(in_strip)
        .map(|r| (r.s_r, r.robustness))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Whether the linear bound, rather than the quadratic one, caps `S_I` at this `S_R`.
pub fn in_linear_strip(dim: usize, s_r: f64) -> bool {
    bounds::region_at(s_r, dim) == bounds::Region::Linear
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal;
    use crate::sampling::sample_state;
    use crate::transform::{givens_conjugate, RotationStep};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn real_states_have_none() {
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        assert_eq!(robustness(&rho).robustness, 0.0);
        let rho = extremal::embedded_imag_pure(3, 1.0).unwrap();
        assert_eq!(robustness(&rho).robustness, 0.0);
    }

    #[test]
    fn even_blocks_are_fully_imaginary() {
        let rep = robustness(&extremal::even_block(&[0.25, 0.25]).unwrap());
        assert_abs_diff_eq!(rep.robustness, 1.0, epsilon = 1e-12);
        assert!(rep.full_imaginarity);
        let rep = robustness(&extremal::even_block(&[0.5]).unwrap());
        assert_abs_diff_eq!(rep.robustness, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn odd_family_bottom_robustness() {
        // trace norm of I/d is 2·((d−1)/2)·α = (d−1)α
        for d in [3usize, 5, 7, 9] {
            let df = d as f64;
            let rep = robustness(&extremal::odd_linear(d, 1.0 / df).unwrap());
            assert_abs_diff_eq!(rep.robustness, (df - 1.0) / df, epsilon = 1e-10);
            assert!(!rep.full_imaginarity);
        }
    }

    #[test]
    fn strip_maximum_reports_a_point() {
        assert_eq!(strip_maximum(4, 100, 1), None);
        let (r, rob) = strip_maximum(5, 2_000, 3).unwrap();
        assert!(r > 0.0 && r < 0.5);
        assert!(rob > 0.0 && rob <= 1.0 + 1e-9);
        assert!(in_linear_strip(5, r));
    }

    proptest! {
        #[test]
        fn bounded_and_orthogonally_invariant(
            dim in 2usize..7,
            idx in 0u64..10_000,
            rots in prop::collection::vec((0usize..50, 0usize..50, -3.2f64..3.2), 1..30),
        ) {
            let rho = sample_state(dim, Measure::HsMixed, 12, idx);
            let base = robustness(&rho).robustness;
            prop_assert!((-1e-12..=1.0 + 1e-9).contains(&base));
            let mut cur = rho;
            for (a, b, theta) in rots {
                let (k, l) = (a % dim, b % dim);
                if k != l {
                    cur = givens_conjugate(&cur, RotationStep::new(k, l, theta)).unwrap();
                }
            }
            prop_assert!((robustness(&cur).robustness - base).abs() <= 1e-10);
        }
    }
}
