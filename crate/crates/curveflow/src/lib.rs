//! Parametric finite element evolution of closed planar curves.
//!
//! The engine evolves one or more closed curves ("vesicles") by a constrained
//! gradient flow of the Willmore (bending) energy `W = ½∫ h² ds`:
//!
//! * total arclength is conserved exactly each step via a Lagrange multiplier
//!   found by Newton's method,
//! * optional obstacle regions contribute a smoothed-indicator penalty
//!   `α·∫ 1_B ds`,
//! * optional inter-vesicle repulsion contributes `β·∫ 1/dist² ds`.
//!
//! Curves are discretized with closed loops of quadratic isoparametric
//! Lagrange elements. Each time step solves a split two-field system for the
//! velocity `V` and the curvature field `H`, superposes a length-correcting
//! velocity scaled by the multiplier, updates node positions, and re-projects
//! element midpoints.
//!
//! Entry points: [`config::ScenarioConfig`] + [`orchestrator::run_scenario`]
//! for whole scenarios, or the per-module operations for custom drivers.

pub mod assembly;
pub mod barrier;
pub mod config;
pub mod distance;
pub mod element;
pub mod error;
pub mod fdcheck;
pub mod functionals;
pub mod mesh;
pub mod metrics;
pub mod orchestrator;
pub mod shapes;
pub mod stepper;
pub mod svg;

pub use error::CurveflowError;
pub type Result<T> = std::result::Result<T, CurveflowError>;
