//! Prosumer expected costs and the closed-form Nash equilibrium of the
//! quantity-bidding game, with a dense linear-solve cross-check.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HourData;
use crate::selection::Scenario;

/// Unit balancing prices for the wholesale (`r_wp`) and lump-sum (`r_ls`)
/// packages, €/MWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncentivePair {
    pub r_wp: f64,
    pub r_ls: f64,
}

impl IncentivePair {
    pub fn new(r_wp: f64, r_ls: f64) -> Self {
        Self { r_wp, r_ls }
    }

    pub fn uniform(r: f64) -> Self {
        Self { r_wp: r, r_ls: r }
    }

    /// Price faced by a prosumer on the given package.
    pub fn for_package(&self, wp: bool) -> f64 {
        if wp {
            self.r_wp
        } else {
            self.r_ls
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeOutcome {
    /// Per-prosumer balancing purchase, MWh (negative = injection).
    pub x: Vec<f64>,
    pub x_tot: f64,
    /// Multiplier of the shared non-negative day-ahead demand constraint.
    pub multiplier: f64,
}

/// Left-hand side `n R_WP + (N−n) R_LS` of the sign-flip lines, evaluated
/// as `N R_LS + n (R_WP − R_LS)` so the sequence over `n` is exactly
/// monotone in floating point.
pub fn boundary_lhs(n_prosumers: usize, n: usize, prices: IncentivePair) -> f64 {
    n_prosumers as f64 * prices.r_ls + n as f64 * (prices.r_wp - prices.r_ls)
}

/// Total balancing energy of an `n`-WP community at equilibrium:
/// `(N b − (n R_WP + (N−n) R_LS)) / (a(N+1)) + Σ(u − μ)`.
pub fn total_balancing(hour: &HourData, n: usize, prices: IncentivePair) -> f64 {
    let lhs = boundary_lhs(hour.n_prosumers(), n, prices);
    (hour.boundary_rhs() - lhs) / hour.scale()
}

/// Slack of the shared constraint `Σ(u − μ) − Σ x ≥ 0` at equilibrium.
pub fn constraint_slack(hour: &HourData, n: usize, prices: IncentivePair) -> f64 {
    let n_all = hour.n_prosumers() as f64;
    (boundary_lhs(hour.n_prosumers(), n, prices) - n_all * hour.b) / hour.scale()
}

/// Expected day-ahead payment `E[P d_i]` of prosumer `i` given everyone's
/// balancing purchases `x`.
pub fn expected_da_cost(hour: &HourData, i: usize, x: &[f64]) -> f64 {
    let a = hour.a;
    let own = hour.demand[i] - x[i];
    let others: f64 = (0..hour.n_prosumers())
        .filter(|&z| z != i)
        .map(|z| hour.demand[z] - x[z] - hour.wind_mean[z])
        .sum();
    let mu = hour.wind_mean[i];
    (own - mu) * (a * others + hour.b) + a * own * own + a * hour.wind_second_moment[i]
        - 2.0 * a * mu * own
}

/// Expected total cost `R_i x_i + E[P d_i]` of prosumer `i`.
pub fn prosumer_cost(hour: &HourData, i: usize, x: &[f64], r_i: f64) -> f64 {
    r_i * x[i] + expected_da_cost(hour, i, x)
}

/// `∂ prosumer_cost / ∂ x_i`.
pub fn prosumer_cost_gradient(hour: &HourData, i: usize, x: &[f64], r_i: f64) -> f64 {
    let a = hour.a;
    let others: f64 = (0..hour.n_prosumers())
        .filter(|&z| z != i)
        .map(|z| hour.demand[z] - x[z] - hour.wind_mean[z])
        .sum();
    r_i - (a * others + hour.b) - 2.0 * a * (hour.demand[i] - x[i]) + 2.0 * a * hour.wind_mean[i]
}

fn check_scenario(hour: &HourData, scenario: &Scenario) -> Result<()> {
    if scenario.len() != hour.n_prosumers() {
        return Err(Error::Input(format!(
            "scenario covers {} prosumers, hour has {}",
            scenario.len(),
            hour.n_prosumers()
        )));
    }
    Ok(())
}

/// Closed-form equilibrium
/// `x_i = u_i − μ_i + (b + Σ_{z≠i} R_z − N R_i) / (a(N+1))`.
///
/// The shared constraint is slack whenever prices are at least `b`, so the
/// multiplier is zero.
pub fn nash_equilibrium(
    hour: &HourData,
    scenario: &Scenario,
    prices: IncentivePair,
) -> Result<NeOutcome> {
    check_scenario(hour, scenario)?;
    let n_all = hour.n_prosumers();
    let r: Vec<f64> = (0..n_all)
        .map(|i| prices.for_package(scenario.is_wp(i)))
        .collect();
    let r_sum: f64 = r.iter().sum();
    let scale = hour.scale();
    let x: Vec<f64> = (0..n_all)
        .map(|i| hour.net_demand(i) + (hour.b + r_sum - (n_all as f64 + 1.0) * r[i]) / scale)
        .collect();
    let x_tot = x.iter().sum();
    Ok(NeOutcome {
        x,
        x_tot,
        multiplier: 0.0,
    })
}

/// Solves the stacked first-order conditions `A x = B` (`A = I + 1 1ᵀ`)
/// by dense LU.
pub fn best_response_oracle(
    hour: &HourData,
    scenario: &Scenario,
    prices: IncentivePair,
) -> Result<NeOutcome> {
    check_scenario(hour, scenario)?;
    let n_all = hour.n_prosumers();
    let a_mat = DMatrix::from_fn(n_all, n_all, |i, j| if i == j { 2.0 } else { 1.0 });
    let net_sum = hour.sum_net_demand();
    let rhs = DVector::from_fn(n_all, |i, _| {
        let net = hour.net_demand(i);
        let r_i = prices.for_package(scenario.is_wp(i));
        2.0 * net + (net_sum - net) + (hour.b - r_i) / hour.a
    });
    let x = a_mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular(format!("best-response system of size {n_all}")))?;
    let x: Vec<f64> = x.iter().copied().collect();
    let x_tot = x.iter().sum();
    Ok(NeOutcome {
        x,
        x_tot,
        multiplier: 0.0,
    })
}
