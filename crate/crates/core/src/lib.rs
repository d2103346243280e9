//! Equilibrium engine for hedonic-linear demand with endogenous product
//! characteristics.
//!
//! Firms choose a unit direction in a shared characteristics space and an
//! output level. The crate computes the planner and monopoly benchmarks, every
//! Cournot-Nash equilibrium, the welfare rankings between them, and the
//! network-effects, common-ownership, and spectral extensions.

pub mod benchmark;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod extensions;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod welfare;

pub use error::{Error, Result};
pub use model::{Allocation, CharProfile, MarketInstance};
