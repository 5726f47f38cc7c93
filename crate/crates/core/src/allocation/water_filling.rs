//! The water-filling rule for output tokens.
//!
//! Maximizing `sum_j log(1 - exp(-beta_j L_j))` subject to `sum_j L_j <= B`
//! and `L_j >= 0` has the unique solution
//!
//! ```text
//! L_j = (1 / beta_j) * ln(1 + beta_j / theta)
//! ```
//!
//! where the shadow price `theta > 0` is fixed by `sum_j L_j = B`. The
//! positive-part clamp never activates: every term is strictly positive for
//! `theta, beta_j > 0`. At the optimum each agent's marginal log-reliability
//! `beta_j / (exp(beta_j L_j) - 1)` equals `theta`, and
//! `exp(-beta_j L_j) = theta / (beta_j + theta)`.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::LlmAgentSpec;

/// Relative budget residual the bisection aims for.
pub const SOLVER_RTOL: f64 = 1e-12;
/// Largest relative residual ever accepted.
pub const ACCEPT_RTOL: f64 = 1e-9;
pub const MAX_BISECTION_STEPS: usize = 200;

/// Shadow price and response lengths of a water-filling solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterLevel {
    /// `+inf` when the budget is zero. Underflows to zero once
    /// `beta_j * L_j` reaches several hundred; `log_theta` stays exact.
    pub theta: f64,
    pub log_theta: f64,
    pub lengths: Vec<f64>,
}

/// `(1 / beta) ln(1 + beta / theta)` with `theta = exp(log_theta)`, stable
/// when `beta / theta` overflows.
fn length_at(beta: f64, log_theta: f64) -> f64 {
    let u = beta.ln() - log_theta;
    let log1p_ratio = if u > 30.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    };
    log1p_ratio / beta
}

fn total_at(betas: &[f64], log_theta: f64) -> f64 {
    betas.iter().map(|&b| length_at(b, log_theta)).sum()
}

/// Response length chosen by an agent with rate `beta` at shadow price `theta`.
pub fn response_length(beta: f64, theta: f64) -> f64 {
    if theta.is_infinite() {
        0.0
    } else {
        length_at(beta, theta.ln())
    }
}

/// Tokens spent in total at shadow price `exp(log_theta)`.
pub fn total_length(betas: &[f64], log_theta: f64) -> f64 {
    total_at(betas, log_theta)
}

/// Derivative of `ln(1 - exp(-beta L))` in `L`.
pub fn marginal_log_reliability(beta: f64, length: f64) -> f64 {
    beta / (beta * length).exp_m1()
}

fn check_betas(betas: &[f64]) -> Result<()> {
    if betas.is_empty() {
        return Err(domain("no agents to allocate to"));
    }
    if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        return Err(domain(format!("beta must be > 0, got {b}")));
    }
    Ok(())
}

fn check_budget(budget: f64) -> Result<()> {
    if budget.is_finite() && budget >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!("token budget must be finite and >= 0, got {budget}")))
    }
}

/// The shadow price `theta > 0` at which the water-filling lengths spend
/// exactly `budget` tokens. See [`solve_log_theta`] for prices too small
/// for an `f64`.
pub fn solve_theta(betas: &[f64], budget: f64) -> Result<f64> {
    solve_log_theta(betas, budget).map(f64::exp)
}

/// `ln theta` for [`solve_theta`].
///
/// Bisects on `ln theta`. The lower end `beta_min * exp(-beta_max B)` makes
/// every agent ask for at least `B` tokens; the upper end
/// `beta_max n / (beta_min B)` makes the total fall short of `B`.
pub fn solve_log_theta(betas: &[f64], budget: f64) -> Result<f64> {
    check_betas(betas)?;
    check_budget(budget)?;
    if budget == 0.0 {
        return Err(domain("token budget must be > 0 to have a finite shadow price"));
    }
    let n = betas.len() as f64;
    let beta_min = betas.iter().copied().fold(f64::INFINITY, f64::min);
    let beta_max = betas.iter().copied().fold(0.0, f64::max);

    let mut lo = beta_min.ln() - beta_max * budget;
    let mut hi = (beta_max * n / (beta_min * budget)).ln();
    while total_at(betas, lo) < budget {
        lo -= std::f64::consts::LN_2;
    }
    while total_at(betas, hi) > budget {
        hi += std::f64::consts::LN_2;
    }

    let mut best = (f64::INFINITY, lo);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let residual = total_at(betas, mid) - budget;
        if residual.abs() < best.0 {
            best = (residual.abs(), mid);
        }
        if residual.abs() <= SOLVER_RTOL * budget {
            return Ok(mid);
        }
        if mid <= lo || mid >= hi {
            // bracket exhausted at floating resolution
            break;
        }
        if residual > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 <= ACCEPT_RTOL * budget {
        Ok(best.1)
    } else {
        Err(Error::NoConvergence {
            iterations: MAX_BISECTION_STEPS,
            residual: best.0,
        })
    }
}

/// Optimal response lengths for agents with rates `betas` sharing `budget`
/// tokens. A zero budget yields all-zero lengths and `theta = +inf`.
pub fn water_filling(betas: &[f64], budget: f64) -> Result<WaterLevel> {
    check_betas(betas)?;
    check_budget(budget)?;
    if budget == 0.0 {
        return Ok(WaterLevel {
            theta: f64::INFINITY,
            log_theta: f64::INFINITY,
            lengths: vec![0.0; betas.len()],
        });
    }
    if let [beta] = *betas {
        // theta = beta / (e^{beta B} - 1) exactly
        let x = beta * budget;
        let log_expm1 = if x > 30.0 { x + (-(-x).exp()).ln_1p() } else { x.exp_m1().ln() };
        let log_theta = beta.ln() - log_expm1;
        return Ok(WaterLevel {
            theta: log_theta.exp(),
            log_theta,
            lengths: vec![budget],
        });
    }
    let log_theta = solve_log_theta(betas, budget)?;
    let lengths: Vec<f64> = betas.iter().map(|&b| length_at(b, log_theta)).collect();
    debug_assert!(lengths.iter().all(|&l| l > 0.0));
    Ok(WaterLevel {
        theta: log_theta.exp(),
        log_theta,
        lengths,
    })
}

/// Workflow reliability over `agents` at shadow price `theta`, in closed
/// form: `prod_j (1 - exp(-alpha_j X_j)) * beta_j / (beta_j + theta)`.
///
/// A `theta` that underflowed to zero is accepted and gives the saturation
/// limit `prod_j (1 - exp(-alpha_j X_j))`.
pub fn optimal_reliability_closed_form(agents: &[&LlmAgentSpec], theta: f64) -> Result<f64> {
    if theta.is_nan() || theta < 0.0 {
        return Err(domain(format!("shadow price must be > 0, got {theta}")));
    }
    Ok(agents
        .iter()
        .map(|a| a.reasoning_factor() * a.beta / (a.beta + theta))
        .product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const FIVE_AGENT_BETAS: [f64; 5] = [0.001, 0.002, 0.0005, 0.003, 0.0015];

    #[test]
    fn single_agent_theta_matches_inversion() {
        // theta = beta / (e^{beta B} - 1)
        let theta = solve_theta(&[0.001], 1000.0).unwrap();
        assert_relative_eq!(theta, 5.819_767_068_693_264e-4, max_relative = 1e-10);
    }

    #[test]
    fn identical_agents_reduce_to_one() {
        for (beta, budget, n) in [(0.004, 900.0, 3), (1e-4, 5e4, 7), (0.01, 10.0, 2)] {
            let theta = solve_theta(&vec![beta; n], budget).unwrap();
            let expected = beta / (beta * budget / n as f64).exp_m1();
            assert_relative_eq!(theta, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn five_agent_theta() {
        // high-precision root of sum_j ln(1 + beta_j/theta)/beta_j = 12000
        let theta = solve_theta(&FIVE_AGENT_BETAS, 12_000.0).unwrap();
        assert_relative_eq!(theta, 6.913_353_013_513_177e-5, max_relative = 1e-10);
    }

    #[test]
    fn symmetric_and_single_allocations() {
        let w = water_filling(&[0.002, 0.002], 2000.0).unwrap();
        assert_relative_eq!(w.lengths[0], 1000.0, max_relative = 1e-12);
        assert_relative_eq!(w.lengths[1], 1000.0, max_relative = 1e-12);

        let one = water_filling(&[0.0042], 777.0).unwrap();
        assert_eq!(one.lengths[0], 777.0);
        let theta = solve_theta(&[0.0042], 777.0).unwrap();
        assert_relative_eq!(one.theta, theta, max_relative = 1e-10);
    }

    #[test]
    fn zero_budget_is_degenerate_not_an_error() {
        let w = water_filling(&FIVE_AGENT_BETAS, 0.0).unwrap();
        assert!(w.theta.is_infinite());
        assert!(w.lengths.iter().all(|&l| l == 0.0));
        assert!(solve_theta(&FIVE_AGENT_BETAS, 0.0).is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(solve_theta(&[], 10.0).is_err());
        assert!(solve_theta(&[0.0], 10.0).is_err());
        assert!(solve_theta(&[0.1], -1.0).is_err());
        assert!(water_filling(&[0.1], f64::NAN).is_err());
        assert!(optimal_reliability_closed_form(&[], -1.0).is_err());
        assert!(optimal_reliability_closed_form(&[], f64::NAN).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let a = LlmAgentSpec::new("a", 1.0, 0.003).reasoning_tokens(1e3);
        assert_eq!(optimal_reliability_closed_form(&[&a], 0.003).unwrap(), 0.5);

        let b = LlmAgentSpec::new("b", 0.001, 0.002).reasoning_tokens(700.0);
        let limit = a.reasoning_factor() * b.reasoning_factor();
        let r = optimal_reliability_closed_form(&[&a, &b], 1e-15).unwrap();
        assert_relative_eq!(r, limit, max_relative = 1e-11);
    }

    #[test]
    fn underflowing_theta_keeps_lengths() {
        // beta B = 1000: theta ~ 0.01 e^-1000 is below the smallest f64
        let w = water_filling(&[0.01], 1e5).unwrap();
        assert_eq!(w.theta, 0.0);
        assert_relative_eq!(w.log_theta, 0.01f64.ln() - 1000.0, max_relative = 1e-12);
        assert_eq!(w.lengths[0], 1e5);
        let two = water_filling(&[0.01, 0.01], 2e5).unwrap();
        assert_relative_eq!(two.log_theta, w.log_theta, max_relative = 1e-12);
        assert_relative_eq!(two.lengths[0], 1e5, max_relative = 1e-12);
    }

    #[test]
    fn extreme_budgets_stay_finite() {
        let w = water_filling(&[1e-2, 1e-4], 1e5).unwrap();
        assert!(w.theta > 0.0 && w.theta.is_finite());
        assert_relative_eq!(w.lengths.iter().sum::<f64>(), 1e5, max_relative = 1e-9);
        let tiny = water_filling(&[1e-2, 1e-4], 1e-3).unwrap();
        assert_relative_eq!(tiny.lengths.iter().sum::<f64>(), 1e-3, max_relative = 1e-9);
    }
}
