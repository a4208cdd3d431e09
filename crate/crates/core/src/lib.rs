//! Numerical laboratory for the two-dimensional environmental OLG map with
//! Veblen effects and asynchronously updated green preferences.
//!
//! The map is
//!
//! ```text
//! e'  = pi/(1+pi) * (e + K),          K = sigma*w - (sigma+gamma)*v*c_ref
//! pi' = alpha*pi + (1-alpha) / (1 + exp(-beta*e + rho))
//! ```
//!
//! [`model`] holds the household problem and the map, [`equilibria`] the
//! steady states, [`stability`] the local analysis and bifurcation scans,
//! [`dynamics`] orbits and orbit diagrams, and [`basins`] the basin rasters.

pub mod basins;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod model;
pub mod presets;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{HouseholdChoice, ModelParams, State};
