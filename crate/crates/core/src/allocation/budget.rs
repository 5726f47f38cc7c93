use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{Allocation, LlmAgentSpec, PricingModel, Workflow};

/// Two sides of `min` are reported as a tie when this close, relatively.
pub const TIE_RTOL: f64 = 1e-12;

/// End-to-end latency limit `T` (seconds) and user cost limit `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub latency_budget: f64,
    pub cost_budget: f64,
}

impl BudgetSpec {
    pub fn new(latency_budget: f64, cost_budget: f64) -> Result<Self> {
        for (name, v) in [("latency_budget", latency_budget), ("cost_budget", cost_budget)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(BudgetSpec {
            latency_budget,
            cost_budget,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Latency,
    Cost,
    Tie,
}

impl std::fmt::Display for Binding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Binding::Latency => "latency",
            Binding::Cost => "cost",
            Binding::Tie => "tie",
        })
    }
}

/// The single token budget both constraints collapse to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveBudget {
    /// `B = min(latency_tokens, cost_tokens)`.
    pub tokens: f64,
    pub binding: Binding,
    /// Seconds left for output generation, `T - T_fixed`.
    pub generation_time: f64,
    pub fixed_latency: f64,
    /// `rate_gen * (T - T_fixed)`.
    pub latency_tokens: f64,
    /// Remaining cost budget over `c_tok`.
    pub cost_tokens: f64,
    /// User cost of agents whose lengths are held fixed.
    pub held_user_cost: f64,
}

pub(crate) fn common_rate_gen(agents: &[&LlmAgentSpec]) -> Result<f64> {
    let (first, rest) = agents.split_first().ok_or(Error::NothingToOptimize)?;
    if let Some(other) = rest.iter().find(|a| a.rate_gen != first.rate_gen) {
        return Err(Error::HeterogeneousRates {
            first: first.id.clone(),
            first_rate: first.rate_gen,
            other: other.id.clone(),
            other_rate: other.rate_gen,
        });
    }
    Ok(first.rate_gen)
}

pub(crate) fn binding_of(latency_tokens: f64, cost_tokens: f64) -> (f64, Binding) {
    let scale = latency_tokens.abs().max(cost_tokens.abs());
    if (latency_tokens - cost_tokens).abs() <= TIE_RTOL * scale {
        (latency_tokens.min(cost_tokens), Binding::Tie)
    } else if latency_tokens < cost_tokens {
        (latency_tokens, Binding::Latency)
    } else {
        (cost_tokens, Binding::Cost)
    }
}

/// Collapses the latency and cost limits into one token budget for the
/// top-level LLM agents.
pub fn effective_budget(
    workflow: &Workflow,
    budgets: &BudgetSpec,
    pricing: &PricingModel,
) -> Result<EffectiveBudget> {
    effective_budget_with_held(workflow, budgets, pricing, &Allocation::new())
}

/// Like [`effective_budget`], with LLM agents nested in composite stages held
/// at the lengths in `held` (zero when absent). Their latency joins the fixed
/// latency and their user cost comes off the cost budget.
pub fn effective_budget_with_held(
    workflow: &Workflow,
    budgets: &BudgetSpec,
    pricing: &PricingModel,
    held: &Allocation,
) -> Result<EffectiveBudget> {
    let stage_agents = workflow.stage_llm_agents()?;
    let rate_gen = common_rate_gen(&stage_agents)?;

    let baseline = baseline_allocation(workflow, held)?;
    let at_zero = workflow.evaluate(&baseline, pricing)?;
    let fixed_latency = at_zero.expected_latency;
    let generation_time = budgets.latency_budget - fixed_latency;
    if generation_time <= 0.0 {
        return Err(Error::InfeasibleLatency {
            fixed: fixed_latency,
            limit: budgets.latency_budget,
        });
    }
    let remaining_cost = budgets.cost_budget - at_zero.user_cost;
    if remaining_cost < 0.0 {
        return Err(Error::InfeasibleCost {
            fixed: at_zero.user_cost,
            limit: budgets.cost_budget,
        });
    }
    let latency_tokens = rate_gen * generation_time;
    let cost_tokens = remaining_cost / pricing.c_tok();
    let (tokens, binding) = binding_of(latency_tokens, cost_tokens);
    Ok(EffectiveBudget {
        tokens,
        binding,
        generation_time,
        fixed_latency,
        latency_tokens,
        cost_tokens,
        held_user_cost: at_zero.user_cost,
    })
}

/// Top-level agents at zero, nested agents at their held lengths.
pub(crate) fn baseline_allocation(workflow: &Workflow, held: &Allocation) -> Result<Allocation> {
    let nested = workflow.nested_llm_agents()?;
    let mut alloc = Allocation::zeros(workflow.llm_agents().iter().map(|a| a.id.as_str()));
    for a in nested {
        if let Some(l) = held.get(&a.id) {
            alloc.set(a.id.clone(), l)?;
        }
    }
    Ok(alloc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NonLlmAgentSpec, WorkflowNode};

    fn pipeline(rates: &[f64], fixed: f64) -> Workflow {
        let mut nodes = vec![WorkflowNode::non_llm(NonLlmAgentSpec::with_mean_latency(
            "tool", fixed, 1.0,
        ))];
        for (i, &r) in rates.iter().enumerate() {
            nodes.push(WorkflowNode::llm(
                LlmAgentSpec::new(format!("a{i}"), 0.1, 0.001).rates(100.0, r),
            ));
        }
        Workflow::sequential(nodes).unwrap()
    }

    #[test]
    fn latency_side_binds() {
        let w = pipeline(&[50.0], 10.0);
        let b = BudgetSpec::new(110.0, 1.0).unwrap();
        let e = effective_budget(&w, &b, &PricingModel::new(1e-4, 1e-6).unwrap()).unwrap();
        assert_eq!(e.generation_time, 100.0);
        assert_eq!(e.tokens, 5000.0);
        assert_eq!(e.binding, Binding::Latency);
    }

    #[test]
    fn cost_side_binds() {
        let w = pipeline(&[50.0], 10.0);
        let b = BudgetSpec::new(110.0, 0.4).unwrap();
        let e = effective_budget(&w, &b, &PricingModel::new(1e-4, 1e-6).unwrap()).unwrap();
        assert!((e.tokens - 4000.0).abs() < 1e-9);
        assert_eq!(e.binding, Binding::Cost);
    }

    #[test]
    fn tie_and_infeasible() {
        let w = pipeline(&[50.0], 10.0);
        let pricing = PricingModel::new(0.25, 1e-6).unwrap();
        // 50 * 100 = 5000 = 1250 / 0.25
        let tie = effective_budget(&w, &BudgetSpec::new(110.0, 1250.0).unwrap(), &pricing).unwrap();
        assert_eq!(tie.binding, Binding::Tie);
        assert_eq!(tie.tokens, 5000.0);

        let at_limit = effective_budget(&w, &BudgetSpec::new(10.0, 1.0).unwrap(), &pricing);
        assert!(matches!(at_limit, Err(Error::InfeasibleLatency { .. })));
    }

    #[test]
    fn rates_must_agree() {
        let w = pipeline(&[50.0, 40.0], 1.0);
        let b = BudgetSpec::new(100.0, 1.0).unwrap();
        let e = effective_budget(&w, &b, &PricingModel::new(1e-4, 1e-6).unwrap());
        assert!(matches!(e, Err(Error::HeterogeneousRates { .. })));

        let none = pipeline(&[], 1.0);
        let e = effective_budget(&none, &b, &PricingModel::new(1e-4, 1e-6).unwrap());
        assert_eq!(e, Err(Error::NothingToOptimize));
    }

    #[test]
    fn held_agents_consume_time_and_money() {
        let nested = LlmAgentSpec::new("inner", 0.1, 0.01).rates(100.0, 10.0);
        let w = Workflow::sequential([
            WorkflowNode::llm(LlmAgentSpec::new("outer", 0.1, 0.01).rates(100.0, 50.0)),
            WorkflowNode::feedback(WorkflowNode::llm(nested), 2),
        ])
        .unwrap();
        let held = Allocation::from_pairs([("inner", 100.0)]).unwrap();
        let pricing = PricingModel::new(1e-3, 1e-6).unwrap();
        let b = BudgetSpec::new(100.0, 1.0).unwrap();
        let e = effective_budget_with_held(&w, &b, &pricing, &held).unwrap();
        // two loop passes of 100 tokens at 10 tok/s
        assert_eq!(e.fixed_latency, 20.0);
        assert!((e.held_user_cost - 0.2).abs() < 1e-15);
        assert!((e.cost_tokens - 800.0).abs() < 1e-9);
        assert_eq!(e.binding, Binding::Cost);

        let broke = BudgetSpec::new(100.0, 0.1).unwrap();
        assert!(matches!(
            effective_budget_with_held(&w, &broke, &pricing, &held),
            Err(Error::InfeasibleCost { .. })
        ));
    }
}
