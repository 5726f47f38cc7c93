use rayon::prelude::*;
use serde::Serialize;

use crate::allocation::baselines::Strategy;
use crate::allocation::budget::{
    baseline_allocation, effective_budget_with_held, BudgetSpec, EffectiveBudget,
};
use crate::error::{domain, Error, Result};
use crate::model::{Allocation, LlmAgentSpec, PricingModel, Workflow, WorkflowMetrics};

/// Outcome of the latency- and cost-constrained reliability maximization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationResult {
    /// Optimal lengths of the top-level LLM agents.
    pub allocation: Allocation,
    /// Lengths of nested LLM agents, held fixed during the optimization.
    pub held: Allocation,
    /// Shadow price of one budget token in log-reliability; `+inf` for `B = 0`.
    pub theta: f64,
    pub effective_budget: EffectiveBudget,
    pub predicted: WorkflowMetrics,
}

impl AllocationResult {
    /// Optimized and held lengths together, ready for evaluation or simulation.
    pub fn full_allocation(&self) -> Allocation {
        self.held.merged(&self.allocation)
    }
}

/// Chooses response lengths for the top-level LLM agents of a sequential
/// workflow to maximize reliability under `budgets`.
///
/// Errors when the fixed latency already exceeds the latency budget, when the
/// optimized agents generate at different rates, or when there is nothing to
/// optimize.
pub fn optimize(
    workflow: &Workflow,
    budgets: &BudgetSpec,
    pricing: &PricingModel,
) -> Result<AllocationResult> {
    optimize_with_held(workflow, budgets, pricing, &Allocation::new())
}

/// [`optimize`] with LLM agents inside composite stages held at the lengths
/// in `held` (zero when absent).
pub fn optimize_with_held(
    workflow: &Workflow,
    budgets: &BudgetSpec,
    pricing: &PricingModel,
    held: &Allocation,
) -> Result<AllocationResult> {
    let eff = effective_budget_with_held(workflow, budgets, pricing, held)?;
    let point = evaluate_strategy(workflow, pricing, held, Strategy::WaterFilling, eff.tokens)?;
    let theta = point.theta.unwrap_or(f64::INFINITY);
    let nested = workflow.nested_llm_agents()?;
    let held = point.allocation.restricted(nested.iter().map(|a| a.id.as_str()));
    let stage = workflow.stage_llm_agents()?;
    let allocation = point.allocation.restricted(stage.iter().map(|a| a.id.as_str()));
    Ok(AllocationResult {
        allocation,
        held,
        theta,
        effective_budget: eff,
        predicted: point.metrics,
    })
}

/// One strategy evaluated at one effective token budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyPoint {
    pub budget: f64,
    pub strategy: Strategy,
    /// Only for water-filling.
    pub theta: Option<f64>,
    /// Every LLM agent's length, held ones included.
    pub allocation: Allocation,
    pub metrics: WorkflowMetrics,
}

fn betas(agents: &[&LlmAgentSpec]) -> Vec<f64> {
    agents.iter().map(|a| a.beta).collect()
}

/// Splits `budget` tokens over the top-level LLM agents with `strategy`,
/// holds nested agents at `held`, and evaluates the whole workflow.
pub fn evaluate_strategy(
    workflow: &Workflow,
    pricing: &PricingModel,
    held: &Allocation,
    strategy: Strategy,
    budget: f64,
) -> Result<StrategyPoint> {
    let stage = workflow.stage_llm_agents()?;
    if stage.is_empty() {
        return Err(Error::NothingToOptimize);
    }
    let (lengths, theta) = strategy.split(&betas(&stage), budget)?;
    let mut allocation = baseline_allocation(workflow, held)?;
    for (a, l) in stage.iter().zip(lengths) {
        allocation.set(a.id.clone(), l)?;
    }
    let metrics = workflow.evaluate(&allocation, pricing)?;
    Ok(StrategyPoint {
        budget,
        strategy,
        theta,
        allocation,
        metrics,
    })
}

/// Evaluates every strategy at every budget. Rows come out budget-major in
/// the order given, whatever the thread count.
pub fn sweep(
    workflow: &Workflow,
    pricing: &PricingModel,
    held: &Allocation,
    budgets: &[f64],
    strategies: &[Strategy],
) -> Result<Vec<StrategyPoint>> {
    if budgets.is_empty() {
        return Err(domain("sweep needs at least one budget"));
    }
    let grid: Vec<(f64, Strategy)> = budgets
        .iter()
        .flat_map(|&b| strategies.iter().map(move |&s| (b, s)))
        .collect();
    grid.par_iter()
        .map(|&(b, s)| evaluate_strategy(workflow, pricing, held, s, b))
        .collect()
}
