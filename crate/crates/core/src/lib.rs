//! Adaptive zoning for 1D compressible flow.
//!
//! The crate bundles the pieces needed to compare standard moving-mesh
//! zoning with a learned surrogate:
//!
//! - [`mesh`]: grids, spacings and monotone Hermite transfer between grids.
//! - [`euler`]: ideal-gas state handling.
//! - [`schemes`]: Lax–Wendroff and non-uniform WENO5 with SSP-RK3.
//! - [`monitor`] and [`mmpde`]: the monitor function and the elliptic and
//!   parabolic moving-mesh solvers.
//! - [`surrogate`] and [`datagen`]: the residual MLP and its training data.
//! - [`reference`]: exact Sod solution, fine-mesh references and norms.
//! - [`experiment`]: configured runs of the benchmark cases.
//! - [`config`]: TOML/JSON loading with field-path errors.

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod datagen;
pub mod error;
pub mod euler;
pub mod experiment;
pub mod mesh;
pub mod mmpde;
pub mod monitor;
pub mod reference;
pub mod schemes;
pub mod surrogate;

pub use error::{Error, Result};
pub use euler::{ConservedField, GasModel, PrimitiveField};
pub use mesh::{Grid1D, SpacingVector};
