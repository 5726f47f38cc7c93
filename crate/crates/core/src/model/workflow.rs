//! Workflow composition and analytic evaluation.
//!
//! A workflow is a tree. Leaves are agents; inner nodes run their children
//! one after another ([`WorkflowNode::Sequential`]), side by side
//! ([`WorkflowNode::Parallel`]), or loop a body a fixed number of times
//! ([`WorkflowNode::Feedback`]). Failures are independent across agents.
//!
//! | node        | expected latency        | reliability                          |
//! |-------------|-------------------------|--------------------------------------|
//! | sequential  | sum                     | product                              |
//! | parallel    | max of child means      | product, or `1 - prod(1 - rho)`      |
//! | feedback K  | `K * body`              | `body^K`                             |
//!
//! The parallel latency is the max of the children's *expected* latencies,
//! a lower bound on the expected max. The simulator estimates the latter.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{check_tokens, Error, Result};
use crate::model::agent::{Agent, LlmAgentSpec, NonLlmAgentSpec};
use crate::model::pricing::PricingModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParallelMode {
    /// Every branch must succeed.
    Conjunctive,
    /// At least one branch must succeed.
    Redundant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WorkflowNode {
    Leaf(Agent),
    Sequential(Vec<WorkflowNode>),
    Parallel {
        mode: ParallelMode,
        children: Vec<WorkflowNode>,
    },
    Feedback {
        body: Box<WorkflowNode>,
        iterations: u32,
    },
}

impl WorkflowNode {
    pub fn llm(agent: LlmAgentSpec) -> Self {
        WorkflowNode::Leaf(Agent::Llm(agent))
    }

    pub fn non_llm(agent: NonLlmAgentSpec) -> Self {
        WorkflowNode::Leaf(Agent::NonLlm(agent))
    }

    pub fn sequential(children: impl IntoIterator<Item = WorkflowNode>) -> Self {
        WorkflowNode::Sequential(children.into_iter().collect())
    }

    pub fn parallel(mode: ParallelMode, children: impl IntoIterator<Item = WorkflowNode>) -> Self {
        WorkflowNode::Parallel {
            mode,
            children: children.into_iter().collect(),
        }
    }

    pub fn feedback(body: WorkflowNode, iterations: u32) -> Self {
        WorkflowNode::Feedback {
            body: Box::new(body),
            iterations,
        }
    }

    /// Agents in depth-first, left-to-right order.
    pub fn agents(&self) -> Vec<&Agent> {
        let mut out = Vec::new();
        self.collect_agents(&mut out);
        out
    }

    fn collect_agents<'a>(&'a self, out: &mut Vec<&'a Agent>) {
        match self {
            WorkflowNode::Leaf(a) => out.push(a),
            WorkflowNode::Sequential(children) | WorkflowNode::Parallel { children, .. } => {
                children.iter().for_each(|c| c.collect_agents(out))
            }
            WorkflowNode::Feedback { body, .. } => body.collect_agents(out),
        }
    }

    /// Short description used in reports.
    pub fn label(&self) -> String {
        match self {
            WorkflowNode::Leaf(a) => a.id().to_string(),
            WorkflowNode::Sequential(_) => "sequential".into(),
            WorkflowNode::Parallel { mode, .. } => match mode {
                ParallelMode::Conjunctive => "parallel(conjunctive)".into(),
                ParallelMode::Redundant => "parallel(redundant)".into(),
            },
            WorkflowNode::Feedback { iterations, .. } => format!("feedback(K={iterations})"),
        }
    }

    fn structural_violations(&self, path: &str, out: &mut Vec<String>) {
        match self {
            WorkflowNode::Leaf(a) => {
                for v in a.violations() {
                    out.push(format!("agent `{}`: {v}", a.id()));
                }
            }
            WorkflowNode::Sequential(children) | WorkflowNode::Parallel { children, .. } => {
                if children.is_empty() {
                    out.push(format!("{path}: {} node has no children", self.label()));
                }
                for (i, c) in children.iter().enumerate() {
                    c.structural_violations(&format!("{path}.{i}"), out);
                }
            }
            WorkflowNode::Feedback { body, iterations } => {
                if *iterations == 0 {
                    out.push(format!("{path}: feedback iterations must be >= 1"));
                }
                body.structural_violations(&format!("{path}.body"), out);
            }
        }
    }

    fn metrics(&self, alloc: &Allocation, pricing: &PricingModel) -> Result<WorkflowMetrics> {
        match self {
            WorkflowNode::Leaf(Agent::Llm(a)) => {
                let length = alloc
                    .get(&a.id)
                    .ok_or_else(|| Error::MissingAllocation(a.id.clone()))?;
                let (user_cost, compute_cost) = a.costs(length, pricing)?;
                Ok(WorkflowMetrics {
                    expected_latency: a.mean_latency(length)?,
                    reliability: a.reliability(length)?,
                    user_cost,
                    compute_cost,
                })
            }
            WorkflowNode::Leaf(Agent::NonLlm(a)) => Ok(WorkflowMetrics {
                expected_latency: a.mean_latency(),
                reliability: a.reliability,
                user_cost: 0.0,
                compute_cost: 0.0,
            }),
            WorkflowNode::Sequential(children) => {
                let mut acc = WorkflowMetrics::identity();
                for c in children {
                    acc.then(&c.metrics(alloc, pricing)?);
                }
                Ok(acc)
            }
            WorkflowNode::Parallel { mode, children } => {
                if let [only] = children.as_slice() {
                    return only.metrics(alloc, pricing);
                }
                let mut acc = WorkflowMetrics::identity();
                // product of successes (conjunctive) or of failures (redundant)
                let mut product = 1.0;
                for c in children {
                    let m = c.metrics(alloc, pricing)?;
                    acc.expected_latency = acc.expected_latency.max(m.expected_latency);
                    product *= match mode {
                        ParallelMode::Conjunctive => m.reliability,
                        ParallelMode::Redundant => 1.0 - m.reliability,
                    };
                    acc.user_cost += m.user_cost;
                    acc.compute_cost += m.compute_cost;
                }
                acc.reliability = match mode {
                    ParallelMode::Conjunctive => product,
                    ParallelMode::Redundant => 1.0 - product,
                };
                Ok(acc)
            }
            WorkflowNode::Feedback { body, iterations } => {
                let m = body.metrics(alloc, pricing)?;
                // accumulated like K copies in sequence, so the two agree bit for bit
                let mut acc = WorkflowMetrics::identity();
                for _ in 0..*iterations {
                    acc.then(&m);
                }
                Ok(acc)
            }
        }
    }
}

/// A validated workflow tree: parameters in range, agent ids distinct,
/// composite nodes nonempty and feedback loops run at least once.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Workflow {
    root: WorkflowNode,
}

impl Workflow {
    pub fn new(root: WorkflowNode) -> Result<Self> {
        let mut problems = Vec::new();
        root.structural_violations("workflow", &mut problems);
        let mut seen = HashSet::new();
        for a in root.agents() {
            if !seen.insert(a.id()) {
                problems.push(format!("agent id `{}` appears more than once", a.id()));
            }
        }
        if problems.is_empty() {
            Ok(Workflow { root })
        } else {
            Err(Error::InvalidWorkflow(problems))
        }
    }

    /// Shorthand for a top-level sequential pipeline.
    pub fn sequential(children: impl IntoIterator<Item = WorkflowNode>) -> Result<Self> {
        Workflow::new(WorkflowNode::sequential(children))
    }

    pub fn root(&self) -> &WorkflowNode {
        &self.root
    }

    pub fn llm_agents(&self) -> Vec<&LlmAgentSpec> {
        self.root
            .agents()
            .into_iter()
            .filter_map(|a| match a {
                Agent::Llm(l) => Some(l),
                Agent::NonLlm(_) => None,
            })
            .collect()
    }

    /// Children of the top-level pipeline. A lone leaf counts as a
    /// one-stage pipeline; parallel or feedback roots are rejected.
    pub fn stages(&self) -> Result<&[WorkflowNode]> {
        match &self.root {
            WorkflowNode::Sequential(children) => Ok(children),
            WorkflowNode::Leaf(_) => Ok(std::slice::from_ref(&self.root)),
            _ => Err(Error::NotSequential),
        }
    }

    /// LLM agents that are direct stages of the top-level pipeline; these are
    /// the ones whose response lengths the optimizer chooses.
    pub fn stage_llm_agents(&self) -> Result<Vec<&LlmAgentSpec>> {
        Ok(self
            .stages()?
            .iter()
            .filter_map(|n| match n {
                WorkflowNode::Leaf(Agent::Llm(a)) => Some(a),
                _ => None,
            })
            .collect())
    }

    /// LLM agents nested inside composite stages; the optimizer holds their
    /// lengths fixed.
    pub fn nested_llm_agents(&self) -> Result<Vec<&LlmAgentSpec>> {
        let top: HashSet<&str> = self
            .stage_llm_agents()?
            .into_iter()
            .map(|a| a.id.as_str())
            .collect();
        Ok(self
            .llm_agents()
            .into_iter()
            .filter(|a| !top.contains(a.id.as_str()))
            .collect())
    }

    /// Expected latency, reliability and both costs under `alloc`.
    pub fn evaluate(&self, alloc: &Allocation, pricing: &PricingModel) -> Result<WorkflowMetrics> {
        let llm: HashSet<&str> = self.llm_agents().iter().map(|a| a.id.as_str()).collect();
        if let Some(extra) = alloc.ids().find(|id| !llm.contains(id)) {
            return Err(Error::UnknownAllocation(extra.to_string()));
        }
        self.root.metrics(alloc, pricing)
    }

    /// Latency that does not depend on any response length: the expected
    /// latency with every LLM agent writing zero tokens.
    pub fn fixed_latency(&self) -> Result<f64> {
        let stages = self.stages()?;
        let zero = Allocation::zeros(self.llm_agents().iter().map(|a| a.id.as_str()));
        // Any pricing works; costs are discarded.
        let pricing = PricingModel::new(1.0, 1.0)?;
        let mut total = 0.0;
        for s in stages {
            total += s.metrics(&zero, &pricing)?.expected_latency;
        }
        Ok(total)
    }
}

/// Evaluates `workflow` under `alloc`; see [`Workflow::evaluate`].
pub fn evaluate(
    workflow: &Workflow,
    alloc: &Allocation,
    pricing: &PricingModel,
) -> Result<WorkflowMetrics> {
    workflow.evaluate(alloc, pricing)
}

/// Response lengths in tokens, keyed by LLM agent id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(BTreeMap<String, f64>);

impl Allocation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros<'a>(ids: impl IntoIterator<Item = &'a str>) -> Self {
        Allocation(ids.into_iter().map(|id| (id.to_string(), 0.0)).collect())
    }

    /// Builds an allocation from `(id, length)` pairs; lengths must be
    /// finite and nonnegative.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut out = Allocation::new();
        for (id, length) in pairs {
            out.set(id, length)?;
        }
        Ok(out)
    }

    pub fn set(&mut self, id: impl Into<String>, length: f64) -> Result<()> {
        let id = id.into();
        check_tokens(&format!("length for `{id}`"), length)?;
        self.0.insert(id, length);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.0.get(id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    /// Entries of `other` override entries of `self`.
    pub fn merged(&self, other: &Allocation) -> Allocation {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(k, v)| (k.clone(), *v)));
        out
    }

    /// Keeps only the given ids.
    pub fn restricted<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Allocation {
        let keep: HashSet<&str> = ids.into_iter().collect();
        Allocation(
            self.0
                .iter()
                .filter(|(k, _)| keep.contains(k.as_str()))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        )
    }

    /// Floors every length to whole tokens; the remainder stays unassigned.
    pub fn floored(&self) -> Allocation {
        Allocation(self.0.iter().map(|(k, v)| (k.clone(), v.floor())).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkflowMetrics {
    /// Seconds.
    pub expected_latency: f64,
    pub reliability: f64,
    pub user_cost: f64,
    pub compute_cost: f64,
}

impl WorkflowMetrics {
    fn identity() -> Self {
        WorkflowMetrics {
            expected_latency: 0.0,
            reliability: 1.0,
            user_cost: 0.0,
            compute_cost: 0.0,
        }
    }

    /// Sequential composition with `next`.
    fn then(&mut self, next: &WorkflowMetrics) {
        self.expected_latency += next.expected_latency;
        self.reliability *= next.reliability;
        self.user_cost += next.user_cost;
        self.compute_cost += next.compute_cost;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tool(id: &str, latency: f64, rho: f64) -> WorkflowNode {
        WorkflowNode::non_llm(NonLlmAgentSpec::with_mean_latency(id, latency, rho))
    }

    fn pricing() -> PricingModel {
        PricingModel::new(1e-4, 2e-6).unwrap()
    }

    #[test]
    fn sequential_sums_and_multiplies() {
        let w = Workflow::sequential([tool("a", 1.0, 0.9), tool("b", 1.0, 0.9)]).unwrap();
        let m = w.evaluate(&Allocation::new(), &pricing()).unwrap();
        assert_eq!(m.expected_latency, 2.0);
        assert_relative_eq!(m.reliability, 0.81, max_relative = 1e-15);
        assert_eq!((m.user_cost, m.compute_cost), (0.0, 0.0));
    }

    #[test]
    fn redundant_parallel() {
        let w = Workflow::new(WorkflowNode::parallel(
            ParallelMode::Redundant,
            [tool("a", 1.0, 0.5), tool("b", 3.0, 0.5)],
        ))
        .unwrap();
        let m = w.evaluate(&Allocation::new(), &pricing()).unwrap();
        assert_eq!(m.reliability, 0.75);
        assert_eq!(m.expected_latency, 3.0);
    }

    #[test]
    fn feedback_repeats_body() {
        // rho_i * rho_j = 0.9, body latency 2 s
        let body = WorkflowNode::sequential([tool("i", 0.5, 0.9), tool("j", 1.5, 1.0)]);
        let w = Workflow::new(WorkflowNode::feedback(body, 3)).unwrap();
        let m = w.evaluate(&Allocation::new(), &pricing()).unwrap();
        assert_eq!(m.expected_latency, 6.0);
        assert_relative_eq!(m.reliability, 0.729, max_relative = 1e-14);
    }

    #[test]
    fn single_child_parallel_is_the_child() {
        for mode in [ParallelMode::Conjunctive, ParallelMode::Redundant] {
            let w = Workflow::new(WorkflowNode::parallel(mode, [tool("a", 1.25, 0.3)])).unwrap();
            let m = w.evaluate(&Allocation::new(), &pricing()).unwrap();
            assert_eq!((m.expected_latency, m.reliability), (1.25, 0.3));
        }
    }

    #[test]
    fn llm_leaves_need_allocations() {
        let a = LlmAgentSpec::new("writer", 0.01, 0.001).reasoning_tokens(100.0);
        let w = Workflow::sequential([WorkflowNode::llm(a)]).unwrap();
        assert_eq!(
            w.evaluate(&Allocation::new(), &pricing()),
            Err(Error::MissingAllocation("writer".into()))
        );
        let stray = Allocation::from_pairs([("writer", 1.0), ("ghost", 2.0)]).unwrap();
        assert_eq!(
            w.evaluate(&stray, &pricing()),
            Err(Error::UnknownAllocation("ghost".into()))
        );
        let ok = Allocation::from_pairs([("writer", 1000.0)]).unwrap();
        let m = w.evaluate(&ok, &pricing()).unwrap();
        assert_relative_eq!(m.user_cost, 0.1, max_relative = 1e-15);
        assert!(Allocation::from_pairs([("writer", -1.0)]).is_err());
    }

    #[test]
    fn validation_collects_every_problem() {
        let dup = Workflow::sequential([tool("a", 1.0, 0.5), tool("a", 1.0, 0.5)]);
        assert!(matches!(dup, Err(Error::InvalidWorkflow(v)) if v.len() == 1));

        let bad = Workflow::new(WorkflowNode::sequential([
            WorkflowNode::feedback(tool("x", 1.0, 2.0), 0),
            WorkflowNode::parallel(ParallelMode::Redundant, []),
        ]));
        match bad {
            Err(Error::InvalidWorkflow(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fixed_latency_examples() {
        let llm = LlmAgentSpec::new("l", 1.0, 1.0)
            .infra_delay(1.0)
            .reasoning_tokens(100.0)
            .rates(100.0, 10.0);
        let w = Workflow::sequential([tool("t", 2.0, 1.0), WorkflowNode::llm(llm)]).unwrap();
        assert_eq!(w.fixed_latency().unwrap(), 4.0);

        let tools = Workflow::sequential([tool("a", 2.0, 1.0), tool("b", 0.5, 1.0)]).unwrap();
        assert_eq!(tools.fixed_latency().unwrap(), 2.5);

        let zero = Workflow::sequential([WorkflowNode::llm(LlmAgentSpec::new("z", 1.0, 1.0))]).unwrap();
        assert_eq!(zero.fixed_latency().unwrap(), 0.0);

        let par = Workflow::new(WorkflowNode::parallel(ParallelMode::Redundant, [tool("a", 1.0, 1.0)]))
            .unwrap();
        assert_eq!(par.fixed_latency(), Err(Error::NotSequential));
    }

    #[test]
    fn stage_and_nested_agents() {
        let l = |id: &str| WorkflowNode::llm(LlmAgentSpec::new(id, 1.0, 1.0));
        let w = Workflow::sequential([
            l("a"),
            WorkflowNode::feedback(WorkflowNode::sequential([l("b"), tool("t", 1.0, 1.0)]), 2),
            l("c"),
        ])
        .unwrap();
        let ids = |v: Vec<&LlmAgentSpec>| v.iter().map(|a| a.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(w.stage_llm_agents().unwrap()), ["a", "c"]);
        assert_eq!(ids(w.nested_llm_agents().unwrap()), ["b"]);
    }
}
