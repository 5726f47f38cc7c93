use agentflow::allocation::{optimize_with_held, Binding};
use agentflow::config::WorkflowConfig;

fn bundled(name: &str) -> WorkflowConfig {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/");
    WorkflowConfig::from_path(format!("{path}{name}")).unwrap()
}

#[test]
fn five_agent_instance_binds_on_latency_at_12000_tokens() {
    let cfg = bundled("five_agents.toml");
    assert!(cfg.warnings.is_empty());
    let held = cfg.allocation.clone().unwrap_or_default();
    let r = optimize_with_held(&cfg.workflow, &cfg.budgets.unwrap(), &cfg.pricing, &held).unwrap();
    assert_eq!(r.effective_budget.fixed_latency, 27.5);
    assert_eq!(r.effective_budget.tokens, 12_000.0);
    assert_eq!(r.effective_budget.binding, Binding::Latency);
    assert!((r.effective_budget.cost_tokens - 20_000.0).abs() < 1e-9);
}

#[test]
fn mixed_workflow_holds_nested_agents() {
    let cfg = bundled("mixed_workflow.toml");
    assert!(cfg.warnings.is_empty(), "{:?}", cfg.warnings);
    let held = cfg.allocation.clone().unwrap();
    let r = optimize_with_held(&cfg.workflow, &cfg.budgets.unwrap(), &cfg.pricing, &held).unwrap();
    let ids: Vec<&str> = r.allocation.ids().collect();
    assert_eq!(ids, ["planner", "writer"]);
    assert_eq!(r.held.get("solver_a"), Some(1500.0));
    assert_eq!(r.held.get("critic"), Some(400.0));
    assert!(r.predicted.expected_latency <= 150.0 * (1.0 + 1e-12));
    assert!(r.predicted.user_cost <= 0.2 * (1.0 + 1e-12));
}
