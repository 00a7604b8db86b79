//! Splitting qudit density matrices into diagonal, real off-diagonal and
//! imaginary parts, `ρ = (𝟙 + D + X + I)/d`, and checking the tight bounds on
//! the weights `S_D`, `S_X`, `S_I` of those parts.
//!
//! * [`state`]: validation, the `D/X/I` split, weights, Gell-Mann expansion
//! * [`bounds`]: purity, quadratic and linear bounds; the analytic boundary
//! * [`extremal`]: state families that sit on the boundary
//! * [`transform`]: real orthogonal rotations, diagonal flattening, transposition
//! * [`sampling`]: random states, coordinate clouds, proof-chain checks
//! * [`imaginarity`]: robustness of imaginarity
//! * [`io`]: JSON and CSV formats
//! * [`verify`]: the batch of invariant checks behind `qbg verify`

#![forbid(unsafe_code)]

pub mod bounds;
pub mod extremal;
pub mod imaginarity;
pub mod io;
pub mod numerics;
pub mod sampling;
pub mod state;
pub mod transform;
pub mod verify;

pub use bounds::{evaluate_bounds, max_imaginary, BoundVerdict, Region};
pub use numerics::ComplexSquareMatrix;
pub use state::{Coordinates, DensityMatrix, DxiParts, Tolerances};
