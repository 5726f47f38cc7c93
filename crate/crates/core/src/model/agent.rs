//! Per-agent performance models.
//!
//! An LLM agent spends `reasoning_tokens` thinking at `rate_think` tokens per
//! second, then writes an `L`-token response at `rate_gen` tokens per second,
//! on top of a random infrastructure delay. Its output is acceptable with
//! probability
//!
//! ```text
//! rho(X, L) = (1 - exp(-alpha X)) (1 - exp(-beta L))
//! ```
//!
//! A non-LLM agent is a fixed `(latency, reliability)` pair.

use serde::{Deserialize, Serialize};

use crate::error::{check_tokens, Result};
use crate::model::pricing::PricingModel;

const MEAN_MATCH_RTOL: f64 = 1e-9;

/// Sampling law of an LLM agent's infrastructure delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayDistribution {
    Constant { value: f64 },
    Exponential { mean: f64 },
    /// Log-normal parameterized by its mean and the log-scale `sigma`.
    LogNormal { mean: f64, sigma: f64 },
}

impl DelayDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            DelayDistribution::Constant { value } => value,
            DelayDistribution::Exponential { mean } | DelayDistribution::LogNormal { mean, .. } => mean,
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match *self {
            DelayDistribution::Constant { value } => {
                if !(value.is_finite() && value >= 0.0) {
                    out.push(format!("constant delay must be >= 0, got {value}"));
                }
            }
            DelayDistribution::Exponential { mean } => {
                if !(mean.is_finite() && mean > 0.0) {
                    out.push(format!("exponential delay mean must be > 0, got {mean}"));
                }
            }
            DelayDistribution::LogNormal { mean, sigma } => {
                if !(mean.is_finite() && mean > 0.0) {
                    out.push(format!("lognormal delay mean must be > 0, got {mean}"));
                }
                if !(sigma.is_finite() && sigma >= 0.0) {
                    out.push(format!("lognormal sigma must be >= 0, got {sigma}"));
                }
            }
        }
        out
    }
}

/// An LLM agent whose response length is a design variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmAgentSpec {
    pub id: String,
    /// Reasoning-reliability rate, per token.
    pub alpha: f64,
    /// Output-reliability rate, per token.
    pub beta: f64,
    pub reasoning_tokens: f64,
    /// Mean infrastructure delay in seconds.
    pub mean_infra_delay: f64,
    pub infra_delay_dist: Option<DelayDistribution>,
    /// Reasoning throughput, tokens per second.
    pub rate_think: f64,
    /// Output generation throughput, tokens per second.
    pub rate_gen: f64,
}

impl LlmAgentSpec {
    /// A new agent with no reasoning tokens, no infrastructure delay and unit
    /// token rates. Adjust with the builder methods.
    pub fn new(id: impl Into<String>, alpha: f64, beta: f64) -> Self {
        LlmAgentSpec {
            id: id.into(),
            alpha,
            beta,
            reasoning_tokens: 0.0,
            mean_infra_delay: 0.0,
            infra_delay_dist: None,
            rate_think: 1.0,
            rate_gen: 1.0,
        }
    }

    pub fn reasoning_tokens(mut self, tokens: f64) -> Self {
        self.reasoning_tokens = tokens;
        self
    }

    pub fn infra_delay(mut self, mean: f64) -> Self {
        self.mean_infra_delay = mean;
        self
    }

    /// Sets the delay law and its mean together.
    pub fn delay_distribution(mut self, dist: DelayDistribution) -> Self {
        self.mean_infra_delay = dist.mean();
        self.infra_delay_dist = Some(dist);
        self
    }

    pub fn rates(mut self, rate_think: f64, rate_gen: f64) -> Self {
        self.rate_think = rate_think;
        self.rate_gen = rate_gen;
        self
    }

    /// Every violated parameter invariant, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = |name: &str, v: f64, out: &mut Vec<String>| {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("{name} must be > 0, got {v}"));
            }
        };
        positive("alpha", self.alpha, &mut out);
        positive("beta", self.beta, &mut out);
        positive("rate_think", self.rate_think, &mut out);
        positive("rate_gen", self.rate_gen, &mut out);
        if !(self.reasoning_tokens.is_finite() && self.reasoning_tokens >= 0.0) {
            out.push(format!("reasoning_tokens must be >= 0, got {}", self.reasoning_tokens));
        }
        if !(self.mean_infra_delay.is_finite() && self.mean_infra_delay >= 0.0) {
            out.push(format!("mean_infra_delay must be >= 0, got {}", self.mean_infra_delay));
        }
        if let Some(dist) = &self.infra_delay_dist {
            out.extend(dist.violations());
            let (a, b) = (dist.mean(), self.mean_infra_delay);
            if (a - b).abs() > MEAN_MATCH_RTOL * a.abs().max(b.abs()) {
                out.push(format!(
                    "infra_delay_dist mean {a} differs from mean_infra_delay {b}"
                ));
            }
        }
        out
    }

    /// Expected latency `tau + X / rate_think + L / rate_gen` in seconds.
    pub fn mean_latency(&self, length: f64) -> Result<f64> {
        check_tokens("response length", length)?;
        Ok(self.fixed_latency() + length / self.rate_gen)
    }

    /// The part of the mean latency that does not depend on the response length.
    pub fn fixed_latency(&self) -> f64 {
        self.mean_infra_delay + self.reasoning_tokens / self.rate_think
    }

    /// `1 - exp(-alpha X)`: the reliability ceiling set by reasoning effort.
    pub fn reasoning_factor(&self) -> f64 {
        -(-self.alpha * self.reasoning_tokens).exp_m1()
    }

    pub fn reliability(&self, length: f64) -> Result<f64> {
        check_tokens("response length", length)?;
        Ok(self.reasoning_factor() * -(-self.beta * length).exp_m1())
    }

    /// `(user_cost, compute_cost)` of one execution with an `L`-token response.
    pub fn costs(&self, length: f64, pricing: &PricingModel) -> Result<(f64, f64)> {
        check_tokens("response length", length)?;
        Ok((
            pricing.c_tok() * length,
            pricing.c_comp() * (self.reasoning_tokens + length),
        ))
    }
}

/// How a non-LLM agent's latency is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonLlmLatency {
    /// Fixed expected latency in seconds.
    Mean(f64),
    /// Exponential service time with this rate per second (mean `1 / rate`).
    ServiceRate(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonLlmAgentSpec {
    pub id: String,
    pub latency: NonLlmLatency,
    pub reliability: f64,
}

impl NonLlmAgentSpec {
    pub fn with_mean_latency(id: impl Into<String>, mean: f64, reliability: f64) -> Self {
        NonLlmAgentSpec {
            id: id.into(),
            latency: NonLlmLatency::Mean(mean),
            reliability,
        }
    }

    pub fn with_service_rate(id: impl Into<String>, rate: f64, reliability: f64) -> Self {
        NonLlmAgentSpec {
            id: id.into(),
            latency: NonLlmLatency::ServiceRate(rate),
            reliability,
        }
    }

    pub fn mean_latency(&self) -> f64 {
        match self.latency {
            NonLlmLatency::Mean(m) => m,
            NonLlmLatency::ServiceRate(rate) => 1.0 / rate,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.latency {
            NonLlmLatency::Mean(m) if !(m.is_finite() && m >= 0.0) => {
                out.push(format!("mean_latency must be >= 0, got {m}"))
            }
            NonLlmLatency::ServiceRate(r) if !(r.is_finite() && r > 0.0) => {
                out.push(format!("service_rate must be > 0, got {r}"))
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.reliability) {
            out.push(format!("reliability must lie in [0, 1], got {}", self.reliability));
        }
        out
    }
}

/// Either kind of agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Agent {
    Llm(LlmAgentSpec),
    NonLlm(NonLlmAgentSpec),
}

impl Agent {
    pub fn id(&self) -> &str {
        match self {
            Agent::Llm(a) => &a.id,
            Agent::NonLlm(a) => &a.id,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        match self {
            Agent::Llm(a) => a.violations(),
            Agent::NonLlm(a) => a.violations(),
        }
    }
}

impl From<LlmAgentSpec> for Agent {
    fn from(a: LlmAgentSpec) -> Self {
        Agent::Llm(a)
    }
}

impl From<NonLlmAgentSpec> for Agent {
    fn from(a: NonLlmAgentSpec) -> Self {
        Agent::NonLlm(a)
    }
}
