//! Workflow definition files.
//!
//! A TOML document with these top-level keys:
//!
//! * `agents`: array of tables, each with `kind = "llm"` or `kind = "non_llm"`;
//! * `workflow`: the node tree, each node a table with a `type` of `agent`,
//!   `sequential`, `parallel` or `feedback`;
//! * `pricing`: `c_tok` plus either `c_comp` or a `flops` table;
//! * `budgets` (optional): `latency_budget`, `cost_budget`;
//! * `defaults` (optional): shared `rate_think` / `rate_gen`;
//! * `allocation` (optional): response lengths by LLM agent id.
//!
//! ```toml
//! [defaults]
//! rate_think = 200.0
//! rate_gen = 50.0
//!
//! [[agents]]
//! kind = "llm"
//! id = "planner"
//! alpha = 0.05
//! beta = 0.001
//! reasoning_tokens = 1000
//! mean_infra_delay = 0.5
//! infra_delay_dist = { family = "exponential", mean = 0.5 }
//!
//! [[agents]]
//! kind = "non_llm"
//! id = "search"
//! service_rate = 2.0
//! reliability = 0.99
//!
//! [workflow]
//! type = "sequential"
//! children = [{ type = "agent", id = "planner" }, { type = "agent", id = "search" }]
//!
//! [pricing]
//! c_tok = 1e-5
//! c_comp = 2e-6
//!
//! [budgets]
//! latency_budget = 60.0
//! cost_budget = 0.1
//! ```
//!
//! Unknown keys are rejected. Parsing reports every problem it finds, each
//! with the line of the offending agent or table where known.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use crate::allocation::BudgetSpec;
use crate::model::{
    Agent, Allocation, DelayDistribution, LlmAgentSpec, ModelDimensions, NonLlmAgentSpec,
    NonLlmLatency, ParallelMode, PricingModel, Workflow, WorkflowNode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// 1-based line number.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.line {
            Some(l) => write!(f, "{sev}: line {l}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

/// Every diagnostic from a failed parse; at least one is an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<Diagnostic>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// A parsed and validated workflow definition.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkflowConfig {
    pub workflow: Workflow,
    pub pricing: PricingModel,
    pub budgets: Option<BudgetSpec>,
    pub allocation: Option<Allocation>,
    /// Non-fatal findings, such as agents the workflow never uses.
    pub warnings: Vec<Diagnostic>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    defaults: RawDefaults,
    agents: Vec<Spanned<RawAgent>>,
    workflow: Spanned<RawNode>,
    pricing: Spanned<RawPricing>,
    budgets: Option<Spanned<RawBudgets>>,
    allocation: Option<Spanned<BTreeMap<String, f64>>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDefaults {
    rate_think: Option<f64>,
    rate_gen: Option<f64>,
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum AgentKind {
    Llm,
    NonLlm,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    kind: AgentKind,
    id: String,
    alpha: Option<f64>,
    beta: Option<f64>,
    reasoning_tokens: Option<f64>,
    mean_infra_delay: Option<f64>,
    infra_delay_dist: Option<DelayDistribution>,
    rate_think: Option<f64>,
    rate_gen: Option<f64>,
    mean_latency: Option<f64>,
    service_rate: Option<f64>,
    reliability: Option<f64>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawNode {
    Agent {
        id: String,
    },
    Sequential {
        children: Vec<RawNode>,
    },
    Parallel {
        mode: ParallelMode,
        children: Vec<RawNode>,
    },
    Feedback {
        iterations: i64,
        body: Box<RawNode>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPricing {
    c_tok: f64,
    c_comp: Option<f64>,
    flops: Option<RawFlops>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlops {
    c_e: f64,
    n_params: u64,
    n_layer: u64,
    n_ctx: u64,
    n_attn: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudgets {
    latency_budget: f64,
    cost_budget: f64,
}

struct Collector<'a> {
    text: &'a str,
    out: Vec<Diagnostic>,
}

impl Collector<'_> {
    fn line_of(&self, span: &Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].matches('\n').count() + 1
    }

    fn error(&mut self, span: Option<&Range<usize>>, message: impl Into<String>) {
        let line = span.map(|s| self.line_of(s));
        self.out.push(Diagnostic {
            severity: Severity::Error,
            line,
            message: message.into(),
        });
    }

    fn warning(&mut self, span: Option<&Range<usize>>, message: impl Into<String>) {
        let line = span.map(|s| self.line_of(s));
        self.out.push(Diagnostic {
            severity: Severity::Warning,
            line,
            message: message.into(),
        });
    }
}

impl WorkflowConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigErrors> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigErrors(vec![Diagnostic {
                severity: Severity::Error,
                line: None,
                message: format!("cannot read {}: {e}", path.display()),
            }])
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigErrors> {
        let mut c = Collector {
            text,
            out: Vec::new(),
        };
        let raw: RawConfig = match toml::from_str(text) {
            Ok(r) => r,
            Err(e) => {
                let span = e.span();
                c.error(span.as_ref(), e.message().trim_end().to_string());
                return Err(ConfigErrors(c.out));
            }
        };

        let agents = build_agents(&raw, &mut c);
        let root = build_node(raw.workflow.get_ref(), "workflow", &agents, raw.workflow.span(), &mut c);
        let used: Vec<&str> = root.as_ref().map(|r| r.agents().iter().map(|a| a.id()).collect()).unwrap_or_default();
        for (id, (_, span)) in &agents {
            if root.is_some() && !used.contains(&id.as_str()) {
                c.warning(Some(span), format!("agent `{id}` is not used by the workflow"));
            }
        }

        let pricing = build_pricing(&raw.pricing, &mut c);
        let budgets = raw.budgets.as_ref().and_then(|b| {
            let r = b.get_ref();
            BudgetSpec::new(r.latency_budget, r.cost_budget)
                .map_err(|e| c.error(Some(&b.span()), format!("budgets: {e}")))
                .ok()
        });
        let allocation = raw.allocation.as_ref().and_then(|a| {
            let span = a.span();
            let mut out = Allocation::new();
            let mut ok = true;
            for (id, &length) in a.get_ref() {
                match agents.get(id) {
                    Some((Some(Agent::Llm(_)), _)) => {}
                    Some((None, _)) => {
                        ok = false;
                        continue;
                    }
                    Some(_) => {
                        c.error(Some(&span), format!("allocation: `{id}` is not an LLM agent"));
                        ok = false;
                        continue;
                    }
                    None => {
                        c.error(Some(&span), format!("allocation: unknown agent `{id}`"));
                        ok = false;
                        continue;
                    }
                }
                if let Err(e) = out.set(id.clone(), length) {
                    c.error(Some(&span), format!("allocation: {e}"));
                    ok = false;
                }
            }
            ok.then_some(out)
        });

        let workflow = root.and_then(|r| match Workflow::new(r) {
            Ok(w) => Some(w),
            Err(e) => {
                c.error(Some(&raw.workflow.span()), e.to_string());
                None
            }
        });

        let has_errors = c.out.iter().any(|d| d.severity == Severity::Error);
        match (workflow, pricing, has_errors) {
            (Some(workflow), Some(pricing), false) => Ok(WorkflowConfig {
                workflow,
                pricing,
                budgets,
                allocation,
                warnings: c.out,
            }),
            _ => Err(ConfigErrors(c.out)),
        }
    }
}

fn build_agents(raw: &RawConfig, c: &mut Collector<'_>) -> BTreeMap<String, (Option<Agent>, Range<usize>)> {
    let mut agents: BTreeMap<String, (Option<Agent>, Range<usize>)> = BTreeMap::new();
    for spanned in &raw.agents {
        let span = spanned.span();
        let a = spanned.get_ref();
        let line = c.line_of(&span);
        if let Some((_, first)) = agents.get(&a.id) {
            let first_line = c.line_of(first);
            c.error(
                Some(&span),
                format!("duplicate agent id `{}` (first defined at line {first_line}, again at line {line})", a.id),
            );
            continue;
        }
        let mut problems = Vec::new();
        let agent = match a.kind {
            AgentKind::Llm => llm_agent(a, &raw.defaults, &mut problems),
            AgentKind::NonLlm => non_llm_agent(a, &mut problems),
        };
        if let Some(agent) = &agent {
            problems.extend(agent.violations());
        }
        let valid = problems.is_empty();
        for p in problems {
            c.error(Some(&span), format!("agent `{}`: {p}", a.id));
        }
        // invalid agents stay known so references to them are not reported twice
        agents.insert(a.id.clone(), (agent.filter(|_| valid), span));
    }
    agents
}

fn foreign(fields: &[(&str, bool)], kind: &str, problems: &mut Vec<String>) {
    for (name, present) in fields {
        if *present {
            problems.push(format!("field `{name}` does not apply to {kind} agents"));
        }
    }
}

fn llm_agent(a: &RawAgent, defaults: &RawDefaults, problems: &mut Vec<String>) -> Option<Agent> {
    foreign(
        &[
            ("mean_latency", a.mean_latency.is_some()),
            ("service_rate", a.service_rate.is_some()),
            ("reliability", a.reliability.is_some()),
        ],
        "llm",
        problems,
    );
    let mut require = |name: &str, v: Option<f64>| {
        if v.is_none() {
            problems.push(format!("missing required field `{name}`"));
        }
        v
    };
    let alpha = require("alpha", a.alpha);
    let beta = require("beta", a.beta);
    let rate_think = a.rate_think.or(defaults.rate_think);
    let rate_gen = a.rate_gen.or(defaults.rate_gen);
    if rate_think.is_none() {
        problems.push("missing `rate_think` and no `defaults.rate_think`".into());
    }
    if rate_gen.is_none() {
        problems.push("missing `rate_gen` and no `defaults.rate_gen`".into());
    }
    let mean_infra_delay = a
        .mean_infra_delay
        .or(a.infra_delay_dist.map(|d| d.mean()))
        .unwrap_or(0.0);
    Some(Agent::Llm(LlmAgentSpec {
        id: a.id.clone(),
        alpha: alpha?,
        beta: beta?,
        reasoning_tokens: a.reasoning_tokens.unwrap_or(0.0),
        mean_infra_delay,
        infra_delay_dist: a.infra_delay_dist,
        rate_think: rate_think?,
        rate_gen: rate_gen?,
    }))
}

fn non_llm_agent(a: &RawAgent, problems: &mut Vec<String>) -> Option<Agent> {
    foreign(
        &[
            ("alpha", a.alpha.is_some()),
            ("beta", a.beta.is_some()),
            ("reasoning_tokens", a.reasoning_tokens.is_some()),
            ("mean_infra_delay", a.mean_infra_delay.is_some()),
            ("infra_delay_dist", a.infra_delay_dist.is_some()),
            ("rate_think", a.rate_think.is_some()),
            ("rate_gen", a.rate_gen.is_some()),
        ],
        "non_llm",
        problems,
    );
    let latency = match (a.mean_latency, a.service_rate) {
        (Some(m), None) => Some(NonLlmLatency::Mean(m)),
        (None, Some(r)) => Some(NonLlmLatency::ServiceRate(r)),
        (Some(_), Some(_)) => {
            problems.push("give either `mean_latency` or `service_rate`, not both".into());
            None
        }
        (None, None) => {
            problems.push("missing `mean_latency` or `service_rate`".into());
            None
        }
    };
    if a.reliability.is_none() {
        problems.push("missing required field `reliability`".into());
    }
    Some(Agent::NonLlm(NonLlmAgentSpec {
        id: a.id.clone(),
        latency: latency?,
        reliability: a.reliability?,
    }))
}

fn build_node(
    node: &RawNode,
    path: &str,
    agents: &BTreeMap<String, (Option<Agent>, Range<usize>)>,
    span: Range<usize>,
    c: &mut Collector<'_>,
) -> Option<WorkflowNode> {
    let children = |list: &[RawNode], c: &mut Collector<'_>| -> Option<Vec<WorkflowNode>> {
        if list.is_empty() {
            c.error(Some(&span), format!("{path}: `children` must not be empty"));
        }
        let built: Vec<Option<WorkflowNode>> = list
            .iter()
            .enumerate()
            .map(|(i, n)| build_node(n, &format!("{path}.children[{i}]"), agents, span.clone(), c))
            .collect();
        built.into_iter().collect()
    };
    match node {
        RawNode::Agent { id } => match agents.get(id) {
            Some((Some(agent), _)) => Some(WorkflowNode::Leaf(agent.clone())),
            Some((None, _)) => None,
            None => {
                c.error(Some(&span), format!("{path}: unknown agent `{id}`"));
                None
            }
        },
        RawNode::Sequential { children: list } => children(list, c).map(WorkflowNode::Sequential),
        RawNode::Parallel { mode, children: list } => {
            children(list, c).map(|ch| WorkflowNode::parallel(*mode, ch))
        }
        RawNode::Feedback { iterations, body } => {
            let body = build_node(body, &format!("{path}.body"), agents, span.clone(), c);
            let k = match u32::try_from(*iterations) {
                Ok(k) if k >= 1 => Some(k),
                _ => {
                    c.error(Some(&span), format!("{path}: feedback iterations must be >= 1, got {iterations}"));
                    None
                }
            };
            Some(WorkflowNode::feedback(body?, k?))
        }
    }
}

fn build_pricing(raw: &Spanned<RawPricing>, c: &mut Collector<'_>) -> Option<PricingModel> {
    let span = raw.span();
    let p = raw.get_ref();
    let result = match (&p.c_comp, &p.flops) {
        (Some(c_comp), None) => PricingModel::new(p.c_tok, *c_comp),
        (None, Some(f)) => PricingModel::from_flops(
            p.c_tok,
            f.c_e,
            ModelDimensions {
                n_params: f.n_params,
                n_layer: f.n_layer,
                n_ctx: f.n_ctx,
                n_attn: f.n_attn,
            },
        ),
        (Some(_), Some(_)) => {
            c.error(Some(&span), "pricing: give either `c_comp` or `flops`, not both");
            return None;
        }
        (None, None) => {
            c.error(Some(&span), "pricing: missing `c_comp` or `flops`");
            return None;
        }
    };
    result.map_err(|e| c.error(Some(&span), format!("pricing: {e}"))).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[defaults]
rate_think = 200.0
rate_gen = 50.0

[[agents]]
kind = "llm"
id = "planner"
alpha = 0.05
beta = 0.001
reasoning_tokens = 1000
infra_delay_dist = { family = "exponential", mean = 0.5 }

[[agents]]
kind = "non_llm"
id = "search"
service_rate = 2.0
reliability = 0.99

[workflow]
type = "sequential"
children = [
  { type = "agent", id = "planner" },
  { type = "feedback", iterations = 2, body = { type = "agent", id = "search" } },
]

[pricing]
c_tok = 1e-5
flops = { c_e = 1.0, n_params = 10, n_layer = 1, n_ctx = 1, n_attn = 1 }

[budgets]
latency_budget = 60.0
cost_budget = 0.1

[allocation]
planner = 500
"#;

    #[test]
    fn parses_a_complete_file() {
        let cfg = WorkflowConfig::parse(GOOD).unwrap();
        assert_eq!(cfg.pricing.c_comp(), 22.0);
        assert_eq!(cfg.budgets.unwrap().cost_budget, 0.1);
        assert_eq!(cfg.allocation.unwrap().get("planner"), Some(500.0));
        let planner = cfg.workflow.llm_agents()[0].clone();
        assert_eq!(planner.mean_infra_delay, 0.5);
        assert_eq!(planner.rate_gen, 50.0);
        assert!(cfg.warnings.is_empty());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = GOOD.replace("beta = 0.001", "beta = 0.001\ngamma = 2");
        let err = WorkflowConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("gamma"), "{err}");
        assert!(err.0[0].line.is_some());
    }

    #[test]
    fn zero_beta_names_agent_and_line() {
        let text = GOOD.replace("beta = 0.001", "beta = 0.0");
        let err = WorkflowConfig::parse(&text).unwrap_err();
        assert_eq!(err.0.len(), 1, "{err}");
        let d = &err.0[0];
        assert!(d.message.contains("planner") && d.message.contains("beta must be > 0"), "{d}");
        assert_eq!(d.line, Some(6));
    }

    #[test]
    fn duplicates_cite_both_lines() {
        let text = GOOD.replace("id = \"search\"", "id = \"planner\"");
        let err = WorkflowConfig::parse(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("first defined at line 6, again at line 14"), "{msg}");
    }

    #[test]
    fn reports_every_problem() {
        let text = GOOD
            .replace("beta = 0.001", "beta = -1.0")
            .replace("reliability = 0.99", "reliability = 1.5")
            .replace("iterations = 2", "iterations = 0")
            .replace("c_tok = 1e-5", "c_tok = 0.0");
        let err = WorkflowConfig::parse(&text).unwrap_err();
        assert_eq!(err.0.len(), 4, "{err}");
    }

    #[test]
    fn unused_agents_warn() {
        let text = GOOD.replace(
            "{ type = \"feedback\", iterations = 2, body = { type = \"agent\", id = \"search\" } },",
            "",
        );
        let cfg = WorkflowConfig::parse(&text).unwrap();
        assert_eq!(cfg.warnings.len(), 1);
        assert_eq!(cfg.warnings[0].severity, Severity::Warning);
    }

    #[test]
    fn kind_specific_fields() {
        let text = GOOD.replace("service_rate = 2.0", "service_rate = 2.0\nbeta = 0.1");
        let err = WorkflowConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("does not apply"), "{err}");
    }
}
