//! # `dirac1d`: characteristic-grid solver for 1D nonlinear massless Dirac systems
//!
//! The crate evolves the pair of complex fields `(u, v)` under
//!
//! ```text
//! i (u_t + u_x) = G1(u, v)
//! i (v_t - v_x) = G2(u, v)
//! ```
//!
//! where `G1 = dW/d(conj u) + F1`, `G2 = dW/d(conj v) + F2`, with `W` a real
//! polynomial in `|u|^2, |v|^2` and `F` drawn from the Gross-Neveu cubic family.
//! Built-in models are massless Thirring, Federbusch and Gross-Neveu.
//!
//! The time step is locked to the cell width (`dt = dx`), so transport is an
//! exact index shift and all discretization error lives in the pointwise
//! source substeps.
//!
//! Modules:
//! - [`models`]: nonlinearities and the constants `c`, `delta`, `K`
//! - [`field`]: grid, initial profiles, snapshot CSV
//! - [`solver`]: split-step integrator and trajectories
//! - [`functionals`]: charge, Bony functional, Glimm functional, bound checks
//! - [`harness`]: independent oracles and refinement / decay / stability studies
//! - [`verify`]: the acceptance checks shared by the CLI and the test suite

// `!(a < b)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod functionals;
pub mod harness;
pub mod models;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Boundary, GridSpec, Profile, SpinorField};
pub use functionals::DiagnosticsRecord;
pub use models::{GlimmConstants, Model};
pub use solver::{evolve, step, EvolveOptions, SolverConfig, Trajectory};

/// Complex scalar used for both spinor components.
pub type C64 = num_complex::Complex64;
