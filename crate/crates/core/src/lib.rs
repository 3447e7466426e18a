//! Stochastic duality for finite-state Markov generators.
//!
//! Two generators `L̂` (on `Ω̂`) and `L` (on `Ω`) are dual with duality
//! function `D: Ω̂ × Ω → ℝ` when `L̂ D = D Lᵀ` as matrices. This crate checks
//! and solves that relation, builds duality functions out of (generalized)
//! eigenfunctions, constructs Siegmund duals on ordered spaces, pushes
//! dualities through intertwining operators, and ships the concrete random
//! walk and exclusion-process models used to exercise all of it.

pub mod duality;
pub mod error;
pub mod intertwining;
pub mod io;
pub mod linalg;
pub mod markov;
pub mod models;
pub mod scenario;
pub mod siegmund;
pub mod spectral;

pub use error::{Error, Result};

/// Row-sum / sign tolerance used when classifying generators.
pub const DEFAULT_ROW_TOL: f64 = 1e-10;
/// Residual tolerance for spectral and duality identities.
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-9;
/// Eigenvalues closer than this are treated as one cluster.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;

/// Tolerances threaded through the CLI and scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub row: f64,
    pub residual: f64,
    pub cluster: f64,
    /// `None` selects max-dimension × ε × σ_max.
    pub rank: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { row: DEFAULT_ROW_TOL, residual: DEFAULT_SPECTRAL_TOL, cluster: DEFAULT_CLUSTER_TOL, rank: None }
    }
}
