//! Output-token allocation under joint latency and cost budgets.
//!
//! Maximizing workflow reliability over the response lengths of a sequential
//! pipeline reduces, after taking logs and dropping the terms fixed by the
//! reasoning budget, to a separable concave program over one token budget
//! `B = min(rate_gen * (T - T_fixed), C / c_tok)`. Its solution is the
//! water-filling rule in [`water_filling`].

pub mod baselines;
pub mod budget;
pub mod optimize;
pub mod water_filling;

pub use baselines::{
    baseline_inverse_proportional, baseline_proportional, baseline_uniform, Strategy,
};
pub use budget::{effective_budget, effective_budget_with_held, Binding, BudgetSpec, EffectiveBudget};
pub use optimize::{
    evaluate_strategy, optimize, optimize_with_held, sweep, AllocationResult, StrategyPoint,
};
pub use water_filling::{
    marginal_log_reliability, optimal_reliability_closed_form, response_length, solve_log_theta,
    solve_theta, total_length, water_filling, WaterLevel,
};
