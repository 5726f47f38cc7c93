//! Brute-force check of the water-filling rule.
//!
//! Maximizes `sum_j ln(1 - exp(-beta_j L_j))` over grid allocations
//! `L_j = k_j * grid_step` with `sum_j L_j <= B`, without using the shadow
//! price at all. Two modes:
//!
//! * exhaustive: every composition of `floor(B / grid_step)` grid units into
//!   `n` parts (the objective is increasing, so the budget is always spent);
//! * refinement: from an even split, move single grid units between pairs of
//!   agents while that strictly helps. For a separable concave objective on
//!   the grid simplex a point no single move improves is a grid optimum.
//!
//! Ties go to the lexicographically smallest allocation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Most grid points exhaustive mode will visit.
pub const MAX_GRID_POINTS: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Tokens per grid unit.
    pub grid_step: f64,
    /// Largest instance solved exhaustively.
    pub max_agents: usize,
    /// Exchange sweeps for larger instances; 0 disables refinement mode.
    pub refinement_rounds: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            grid_step: 1.0,
            max_agents: 3,
            refinement_rounds: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    Exhaustive,
    Refinement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSolution {
    pub lengths: Vec<f64>,
    pub objective: f64,
    pub mode: OracleMode,
}

/// `sum_j ln(1 - exp(-beta_j L_j))`; `-inf` as soon as one length is zero.
pub fn oracle_objective(betas: &[f64], lengths: &[f64]) -> Result<f64> {
    if betas.len() != lengths.len() {
        return Err(domain(format!(
            "{} rates but {} lengths",
            betas.len(),
            lengths.len()
        )));
    }
    let mut sum = 0.0;
    for (&b, &l) in betas.iter().zip(lengths) {
        if l.is_nan() || l < 0.0 {
            return Err(domain(format!("lengths must be >= 0, got {l}")));
        }
        sum += term(b, l);
    }
    Ok(sum)
}

/// `ln(1 - exp(-x))` for `x = beta * length`, accurate at both ends.
fn term(beta: f64, length: f64) -> f64 {
    let x = beta * length;
    if x > std::f64::consts::LN_2 {
        (-(-x).exp()).ln_1p()
    } else {
        (-(-x).exp_m1()).ln()
    }
}

/// Number of ways to write `units` as an ordered sum of `parts` nonnegative
/// integers, as a float.
fn compositions(units: usize, parts: usize) -> f64 {
    // C(units + parts - 1, parts - 1)
    let k = parts.saturating_sub(1);
    (1..=k).fold(1.0, |acc, i| acc * (units + i) as f64 / i as f64)
}

fn better(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

pub fn oracle_allocate(betas: &[f64], budget: f64, config: &OracleConfig) -> Result<OracleSolution> {
    if betas.is_empty() {
        return Err(domain("no agents to allocate to"));
    }
    if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        return Err(domain(format!("beta must be > 0, got {b}")));
    }
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(domain(format!("token budget must be finite and >= 0, got {budget}")));
    }
    if !(config.grid_step.is_finite() && config.grid_step > 0.0) {
        return Err(domain(format!("grid_step must be > 0, got {}", config.grid_step)));
    }
    if config.max_agents == 0 {
        return Err(domain("max_agents must be >= 1"));
    }

    let n = betas.len();
    // small slack so that e.g. B = 3000, step = 10 gives 300 units
    let units = (budget / config.grid_step + 1e-9).floor() as usize;
    let points = compositions(units, n);
    let too_large = || Error::OracleTooLarge {
        agents: n,
        max_agents: config.max_agents,
        points,
    };

    let table: Vec<Vec<f64>> = betas
        .iter()
        .map(|&b| (0..=units).map(|k| term(b, k as f64 * config.grid_step)).collect())
        .collect();

    let (units_per_agent, mode) = if n <= config.max_agents {
        if points > MAX_GRID_POINTS {
            return Err(too_large());
        }
        (exhaustive(&table, units), OracleMode::Exhaustive)
    } else if config.refinement_rounds > 0 {
        (refine(&table, units, config.refinement_rounds), OracleMode::Refinement)
    } else {
        return Err(too_large());
    };

    let lengths: Vec<f64> = units_per_agent
        .iter()
        .map(|&k| k as f64 * config.grid_step)
        .collect();
    let objective = oracle_objective(betas, &lengths)?;
    Ok(OracleSolution {
        lengths,
        objective,
        mode,
    })
}

fn exhaustive(table: &[Vec<f64>], units: usize) -> Vec<usize> {
    let n = table.len();
    if n == 1 {
        return vec![units];
    }
    // Split the search by the first agent's share.
    (0..=units)
        .into_par_iter()
        .map(|first| {
            let mut current = vec![0; n];
            current[0] = first;
            let mut best: Option<(f64, Vec<usize>)> = None;
            search(table, 1, units - first, table[0][first], &mut current, &mut best);
            best.expect("at least one completion")
        })
        .reduce_with(|a, b| if better(&b, &a) { b } else { a })
        .expect("nonempty range")
        .1
}

fn search(
    table: &[Vec<f64>],
    agent: usize,
    remaining: usize,
    partial: f64,
    current: &mut Vec<usize>,
    best: &mut Option<(f64, Vec<usize>)>,
) {
    if agent + 1 == table.len() {
        current[agent] = remaining;
        let value = partial + table[agent][remaining];
        if best.as_ref().is_none_or(|b| value > b.0) {
            *best = Some((value, current.clone()));
        }
        return;
    }
    for k in 0..=remaining {
        current[agent] = k;
        search(table, agent + 1, remaining - k, partial + table[agent][k], current, best);
    }
}

fn refine(table: &[Vec<f64>], units: usize, rounds: u32) -> Vec<usize> {
    let n = table.len();
    let mut alloc: Vec<usize> = (0..n)
        .map(|i| units / n + usize::from(i < units % n))
        .collect();
    for _ in 0..rounds {
        let mut moved = false;
        for from in 0..n {
            for to in 0..n {
                if from == to {
                    continue;
                }
                while alloc[from] > 0 {
                    let (f, t) = (alloc[from], alloc[to]);
                    let gain = (table[to][t + 1] - table[to][t]) + (table[from][f - 1] - table[from][f]);
                    if gain > 0.0 {
                        alloc[from] -= 1;
                        alloc[to] += 1;
                        moved = true;
                    } else {
                        break;
                    }
                }
            }
        }
        if !moved {
            break;
        }
    }
    alloc
}
