//! Traveling waves for viscous (possibly degenerate) scalar conservation laws
//! on a star-shaped network of roads.
//!
//! Each road carries `rho_t + f(rho)_x = (D(rho) rho_x)_x`, incoming roads on
//! `x <= 0` and outgoing roads on `x >= 0`. At the junction the parabolic flux
//! `F = f - D rho_x` of every outgoing road equals a fixed convex combination
//! of the incoming ones.
//!
//! Modules, bottom-up:
//! - [`graph_model`]: flux and diffusivity laws, roads, the distribution matrix.
//! - [`scalar_wave`]: single-road traveling waves and their profiles.
//! - [`coupling`]: matching end states across the junction and assembling
//!   network waves.
//! - [`special_cases`]: closed-form criteria for proportional quadratic and
//!   logarithmic families.
//! - [`pde_verify`]: explicit finite-volume check that an assembled wave
//!   travels undistorted.
//! - [`sweep`]: randomized agreement between the generic check and the
//!   closed-form criteria.

pub mod coupling;
pub mod error;
pub mod graph_model;
pub mod numerics;
pub mod pde_verify;
pub mod scalar_wave;
pub mod special_cases;
pub mod sweep;

pub use error::{Error, Result};
