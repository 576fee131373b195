//! Conservative solutions of the generalized Camassa-Holm / hyperelastic rod
//! equation
//!
//! ```text
//! u_t - u_txx + f(u)_x - f(u)_xxx + (g(u) + f''(u) u_x^2 / 2)_x = 0
//! ```
//!
//! computed through wave breaking by integrating a semi-linear system in
//! energy-weighted characteristic coordinates, then mapped back to physical
//! space. A classical method-of-lines solver serves as a pre-breaking oracle.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod flux;
pub mod integrator;
pub mod io;
pub mod kernel;
pub mod pipeline;
pub mod plot;
pub mod quadrature;
pub mod reconstruct;
pub mod reference;
pub mod scenarios;
pub mod stepper;
pub mod system;
pub mod transform;

pub use error::{Error, Result};
pub use flux::{FluxModel, ModelSpec, Polynomial};
pub use integrator::{run_from, step_rk4, RunOptions, RunTrace, TimeStep, Tolerances};
pub use kernel::{source_terms, source_terms_physical, KernelResult};
pub use reconstruct::{energy_char, energy_physical, holder_check, to_physical, PhysicalField};
pub use transform::{to_characteristic, CharState, InitialDatum, Profile};
