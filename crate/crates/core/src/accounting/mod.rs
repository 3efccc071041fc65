//! Sensitivity, Renyi budgets, tree composition and convergence bounds.

mod bounds;
mod composition;
mod probe;
mod rdp;
mod sensitivity;

pub use bounds::{theoretical_gap_bound, BoundInputs};
pub use composition::{in_sets, max_in_set, tree_composition_budget};
pub use probe::{sensitivity_probe, ProbeReport};
pub use rdp::{
    budget_over_grid, budget_over_grid_with_alpha, budget_report, closed_form_epsilon, default_alpha_grid,
    optimal_alpha, optimal_epsilon, rdp_to_dp, BudgetReport, PrivacyBudget,
};
pub use sensitivity::{delta_sensitivity, SensitivityEntry, SensitivityLedger};
