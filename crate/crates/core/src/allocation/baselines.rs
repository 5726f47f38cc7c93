//! Heuristic splits of a token budget, for comparison with water-filling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::allocation::water_filling::water_filling;
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    WaterFilling,
    /// Equal tokens for every agent.
    Uniform,
    /// Tokens proportional to `beta_j`.
    Proportional,
    /// Tokens proportional to `1 / beta_j`.
    InverseProportional,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::WaterFilling,
        Strategy::Uniform,
        Strategy::Proportional,
        Strategy::InverseProportional,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::WaterFilling => "water_filling",
            Strategy::Uniform => "uniform",
            Strategy::Proportional => "proportional",
            Strategy::InverseProportional => "inverse_proportional",
        }
    }

    /// Splits `budget` across agents with rates `betas`. Returns the lengths
    /// and, for water-filling, the shadow price.
    pub fn split(&self, betas: &[f64], budget: f64) -> Result<(Vec<f64>, Option<f64>)> {
        match self {
            Strategy::WaterFilling => {
                let w = water_filling(betas, budget)?;
                Ok((w.lengths, Some(w.theta)))
            }
            Strategy::Uniform => Ok((baseline_uniform(betas, budget)?, None)),
            Strategy::Proportional => Ok((baseline_proportional(betas, budget)?, None)),
            Strategy::InverseProportional => {
                Ok((baseline_inverse_proportional(betas, budget)?, None))
            }
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

/// Splits `budget` in proportion to `weights`. The last share absorbs the
/// rounding so the parts add back to `budget`.
fn split_by_weight(weights: &[f64], budget: f64) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut out: Vec<f64> = weights.iter().map(|w| budget * w / total).collect();
    if let Some((last, rest)) = out.split_last_mut() {
        let assigned: f64 = rest.iter().sum();
        *last = (budget - assigned).max(0.0);
    }
    out
}

fn check(betas: &[f64], budget: f64) -> Result<()> {
    if betas.is_empty() {
        return Err(domain("no agents to allocate to"));
    }
    if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        return Err(domain(format!("beta must be > 0, got {b}")));
    }
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(domain(format!("token budget must be finite and >= 0, got {budget}")));
    }
    Ok(())
}

pub fn baseline_uniform(betas: &[f64], budget: f64) -> Result<Vec<f64>> {
    check(betas, budget)?;
    Ok(split_by_weight(&vec![1.0; betas.len()], budget))
}

pub fn baseline_proportional(betas: &[f64], budget: f64) -> Result<Vec<f64>> {
    check(betas, budget)?;
    Ok(split_by_weight(betas, budget))
}

pub fn baseline_inverse_proportional(betas: &[f64], budget: f64) -> Result<Vec<f64>> {
    check(betas, budget)?;
    let inverse: Vec<f64> = betas.iter().map(|b| 1.0 / b).collect();
    Ok(split_by_weight(&inverse, budget))
}
