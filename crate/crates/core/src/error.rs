use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid workflow: {}", .0.join("; "))]
    InvalidWorkflow(Vec<String>),

    #[error("allocation has no entry for LLM agent `{0}`")]
    MissingAllocation(String),

    #[error("allocation names `{0}`, which is not an LLM agent of the workflow")]
    UnknownAllocation(String),

    #[error("the optimizer needs a sequential workflow at the top level")]
    NotSequential,

    /// The response-independent latency already uses up the latency budget.
    #[error("fixed latency {fixed} s leaves no generation time under the latency budget {limit} s")]
    InfeasibleLatency { fixed: f64, limit: f64 },

    /// User cost of agents held at fixed lengths already exceeds the cost budget.
    #[error("held user cost {fixed} exceeds the cost budget {limit}")]
    InfeasibleCost { fixed: f64, limit: f64 },

    #[error(
        "optimized agents must share one generation rate: `{first}` has {first_rate} tok/s, `{other}` has {other_rate} tok/s"
    )]
    HeterogeneousRates {
        first: String,
        first_rate: f64,
        other: String,
        other_rate: f64,
    },

    #[error("the workflow has no top-level LLM agent to optimize")]
    NothingToOptimize,

    #[error("shadow-price bisection did not converge after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("oracle instance too large: {agents} agents (max {max_agents}), {points} grid points")]
    OracleTooLarge {
        agents: usize,
        max_agents: usize,
        points: f64,
    },
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_tokens(what: &str, tokens: f64) -> Result<()> {
    if tokens.is_finite() && tokens >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{what} must be a finite nonnegative token count, got {tokens}")))
    }
}
