use agentflow::model::{
    Allocation, DelayDistribution, LlmAgentSpec, NonLlmAgentSpec, ParallelMode, PricingModel, Workflow,
    WorkflowNode,
};
use agentflow::simulation::{simulate, SimConfig};

const SAMPLES: usize = 100_000;

fn pricing() -> PricingModel {
    PricingModel::new(1e-5, 1e-6).unwrap()
}

fn llm(id: &str, beta: f64, tau: f64) -> LlmAgentSpec {
    LlmAgentSpec::new(id, 0.01, beta)
        .reasoning_tokens(150.0)
        .infra_delay(tau)
        .delay_distribution(DelayDistribution::Exponential { mean: tau })
        .rates(300.0, 40.0)
}

fn within_3se(sim: f64, se: f64, analytic: f64) -> bool {
    (sim - analytic).abs() <= 3.0 * se
}

#[test]
fn latency_matches_the_expected_value() {
    let w = Workflow::sequential([
        WorkflowNode::llm(llm("plan", 0.004, 0.8)),
        WorkflowNode::non_llm(NonLlmAgentSpec::with_service_rate("search", 0.5, 0.97)),
        WorkflowNode::llm(llm("answer", 0.002, 1.5)),
    ])
    .unwrap();
    let alloc = Allocation::from_pairs([("plan", 300.0), ("answer", 700.0)]).unwrap();
    let analytic = w.evaluate(&alloc, &pricing()).unwrap();
    let r = simulate(&w, &alloc, &SimConfig::new(SAMPLES, 11)).unwrap();
    assert!(
        within_3se(r.latency.mean, r.latency.std_error, analytic.expected_latency),
        "{:?} vs {}",
        r.latency,
        analytic.expected_latency
    );
    assert!(within_3se(r.success_rate.mean, r.success_rate.std_error, analytic.reliability));
}

fn composition_fixtures() -> Vec<(&'static str, WorkflowNode, Allocation)> {
    let a = || llm("a", 0.003, 0.5);
    let b = || llm("b", 0.001, 0.5);
    let t = || NonLlmAgentSpec::with_mean_latency("t", 1.0, 0.8);
    let alloc = Allocation::from_pairs([("a", 250.0), ("b", 600.0)]).unwrap();
    let three = || [WorkflowNode::llm(a()), WorkflowNode::llm(b()), WorkflowNode::non_llm(t())];
    vec![
        ("sequential", WorkflowNode::sequential(three()), alloc.clone()),
        ("conjunctive", WorkflowNode::parallel(ParallelMode::Conjunctive, three()), alloc.clone()),
        ("redundant", WorkflowNode::parallel(ParallelMode::Redundant, three()), alloc.clone()),
        ("feedback", WorkflowNode::feedback(WorkflowNode::sequential(three()), 3), alloc),
    ]
}

#[test]
fn success_rates_match_every_composition_rule() {
    for (name, root, alloc) in composition_fixtures() {
        let w = Workflow::new(root).unwrap();
        let analytic = w.evaluate(&alloc, &pricing()).unwrap().reliability;
        let r = simulate(&w, &alloc, &SimConfig::new(SAMPLES, 5)).unwrap();
        assert!(
            within_3se(r.success_rate.mean, r.success_rate.std_error, analytic),
            "{name}: {:?} vs {analytic}",
            r.success_rate
        );
    }
}

#[test]
fn parallel_latency_sits_above_the_max_of_means() {
    let branch = |id: &str| {
        WorkflowNode::non_llm(NonLlmAgentSpec::with_service_rate(id, 1.0, 1.0))
    };
    let w = Workflow::new(WorkflowNode::parallel(ParallelMode::Conjunctive, [branch("x"), branch("y")])).unwrap();
    let empty = Allocation::new();
    let analytic = w.evaluate(&empty, &pricing()).unwrap().expected_latency;
    let r = simulate(&w, &empty, &SimConfig::new(SAMPLES, 3)).unwrap();
    // E[max] of two unit exponentials is 1.5
    assert_eq!(analytic, 1.0);
    assert!(r.latency.mean > analytic + 10.0 * r.latency.std_error);
    assert!(within_3se(r.latency.mean, r.latency.std_error, 1.5));
}

#[test]
fn worker_count_and_reruns_do_not_change_reports() {
    let (_, root, alloc) = composition_fixtures().pop().unwrap();
    let w = Workflow::new(root).unwrap();
    let base = SimConfig::new(20_000, 99);
    let first = simulate(&w, &alloc, &base).unwrap();
    for workers in [Some(1), Some(3), None] {
        let again = simulate(&w, &alloc, &SimConfig { workers, ..base }).unwrap();
        assert_eq!(
            serde_json::to_string(&again).unwrap(),
            serde_json::to_string(&first).unwrap()
        );
    }
    let other = simulate(&w, &alloc, &SimConfig::new(20_000, 100)).unwrap();
    assert_ne!(other.latency.mean, first.latency.mean);
}
