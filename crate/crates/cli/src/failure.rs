use std::fmt;

use agentflow::config::ConfigErrors;
use agentflow::Error;

pub const EXIT_CODES: &str = "\
Exit codes:
  0   success
  1   I/O error or unexpected failure
  2   usage error
  3   invalid configuration
  4   infeasible latency budget (fixed latency >= latency budget)
  5   infeasible cost budget (held agents already exceed it)
  6   optimized agents have different generation rates
  7   nothing to optimize (no top-level LLM agent, or the root is not sequential)
  8   oracle instance too large
  9   verify: analytic and oracle objectives disagree
  10  shadow-price solver did not converge
  11  missing allocation";

#[derive(Debug)]
pub enum Failure {
    Io(String),
    Usage(String),
    Config(ConfigErrors),
    ConfigMessage(String),
    Model(Error),
    VerifyFailed,
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Config(_) | Failure::ConfigMessage(_) => 3,
            Failure::Model(e) => match e {
                Error::InfeasibleLatency { .. } => 4,
                Error::InfeasibleCost { .. } => 5,
                Error::HeterogeneousRates { .. } => 6,
                Error::NothingToOptimize | Error::NotSequential => 7,
                Error::OracleTooLarge { .. } => 8,
                Error::NoConvergence { .. } => 10,
                Error::MissingAllocation(_) => 11,
                Error::InvalidWorkflow(_) | Error::UnknownAllocation(_) => 3,
                Error::Domain(_) => 1,
            },
            Failure::VerifyFailed => 9,
        }
    }

    pub fn hint(&self) -> Option<String> {
        let Failure::Model(e) = self else { return None };
        Some(match e {
            Error::InfeasibleLatency { fixed, .. } => format!(
                "raise latency_budget above the fixed latency of {fixed} s, or cut reasoning tokens and infrastructure delays"
            ),
            Error::InfeasibleCost { .. } => {
                "raise cost_budget or lower the [allocation] lengths of nested LLM agents".into()
            }
            Error::HeterogeneousRates { .. } => {
                "give every top-level LLM agent the same rate_gen, e.g. through [defaults]".into()
            }
            Error::NothingToOptimize => {
                "add an LLM agent as a direct child of the top-level sequential workflow".into()
            }
            Error::NotSequential => "wrap the root node in a sequential node".into(),
            Error::OracleTooLarge { .. } => {
                "use a coarser --grid-step, pass --allow-large, or use --refine <rounds>".into()
            }
            Error::NoConvergence { .. } => "the rates or budget are likely extreme; check beta and the budgets".into(),
            Error::MissingAllocation(_) => {
                "list every LLM agent under [allocation], or pass --use-optimal".into()
            }
            _ => return None,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(m) | Failure::Usage(m) | Failure::ConfigMessage(m) => f.write_str(m),
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Model(e) => write!(f, "{e}"),
            Failure::VerifyFailed => f.write_str("verification failed"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

impl From<ConfigErrors> for Failure {
    fn from(e: ConfigErrors) -> Self {
        Failure::Config(e)
    }
}
