//! Agents, prices and workflow composition.

pub mod agent;
pub mod pricing;
pub mod workflow;

pub use agent::{Agent, DelayDistribution, LlmAgentSpec, NonLlmAgentSpec, NonLlmLatency};
pub use pricing::{derive_c_comp, ModelDimensions, PricingModel};
pub use workflow::{evaluate, Allocation, ParallelMode, Workflow, WorkflowMetrics, WorkflowNode};
