//! Bipartite Configuration Model.
//!
//! Maximizing the ensemble entropy under both degree-sequence constraints
//! gives independent link probabilities
//!
//! ```text
//! p_iα = x_i y_α / (1 + x_i y_α),   x_i = e^{-θ_i},  y_α = e^{-η_α}
//! ```
//!
//! and maximizing the likelihood of the observed graph fixes the
//! multipliers through `⟨k_i⟩ = k_i*` and `⟨h_α⟩ = h_α*`. Nodes with equal
//! degree share a multiplier, so the solver works on one unknown per
//! distinct degree per layer.

mod likelihood;
mod model;
mod solver;

pub use likelihood::{log_likelihood, log_likelihood_gradient};
pub use model::{BicmModel, ClassState, DegreeClass};
pub use solver::{fit, fit_traced, FitOptions, SolverPhase};
