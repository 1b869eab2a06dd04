//! Frequency-space toolkit for Kirchhoff-type nonlocal wave equations.
//!
//! The equation `u_tt - phi(∫|∇u|²) Δu = 0` couples every Fourier mode
//! through a single scalar coefficient. For radial data this reduces the
//! whole problem to a finite set of frequency shells, which makes every
//! energy, norm and life-span bound an exact finite sum. This crate builds
//! on that reduction:
//!
//! - [`spectral`]: shell profiles and the exponentially weighted norms.
//! - [`nonlinearity`]: the propagation-speed function `phi` and its
//!   data-dependent constants (domain bound, supremum, Lipschitz constant).
//! - [`bounds`]: the two life-span lower bounds (classical and
//!   Gevrey-weighted) and their comparison.
//! - [`linear`]: per-mode solves with a time-dependent coefficient, the
//!   admissible coefficient class, and the weighted-energy decay
//!   certificate.
//! - [`kirchhoff`]: the self-consistent nonlinear solver, the
//!   coefficient fixed-point iteration, and life-span probing.
//!
//! All operations are pure functions on immutable values and are safe to
//! call concurrently. Summations follow a canonical shell order so results
//! are bit-for-bit reproducible.

// Negated comparisons like `!(x > 0.0)` are deliberate throughout: they
// reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod kirchhoff;
pub mod linear;
pub mod nonlinearity;
pub mod spectral;

pub use error::{Error, Result};
