//! Latency, reliability and cost models for workflows of LLM and conventional
//! agents, and the reliability-maximizing split of output tokens under
//! latency and cost budgets.
//!
//! ```
//! use agentflow::allocation::{optimize, BudgetSpec};
//! use agentflow::model::{LlmAgentSpec, PricingModel, Workflow, WorkflowNode};
//!
//! let agent = |id: &str, beta: f64| {
//!     WorkflowNode::llm(
//!         LlmAgentSpec::new(id, 0.05, beta)
//!             .reasoning_tokens(1000.0)
//!             .rates(200.0, 50.0),
//!     )
//! };
//! let workflow = Workflow::sequential([agent("draft", 0.001), agent("review", 0.003)])?;
//! let pricing = PricingModel::new(1e-5, 2e-6)?;
//!
//! // 10 s of reasoning, 80 s left for 4000 output tokens at 50 tok/s
//! let result = optimize(&workflow, &BudgetSpec::new(90.0, 1.0)?, &pricing)?;
//! assert!((result.allocation.total() - 4000.0).abs() < 1e-6);
//! // the slower-saturating agent gets more tokens
//! assert!(result.allocation.get("draft") > result.allocation.get("review"));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! The guide in `book/` walks through the model chapter by chapter; its code
//! listings are compiled and run as doctests of this crate.

pub mod allocation;
pub mod config;
mod error;
pub mod model;
pub mod oracle;
pub mod simulation;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/agents.md")]
    mod agents {}
    #[doc = include_str!("../../../book/src/composition.md")]
    mod composition {}
    #[doc = include_str!("../../../book/src/water_filling.md")]
    mod water_filling {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
