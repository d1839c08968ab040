//! Community social cost `W_n = a x_n² + Φ x_n + Ψ` and its expectation
//! over the number of WP prosumers.

use crate::equilibrium::{total_balancing, IncentivePair};
use crate::forms::{Affine2, Quadratic2};
use crate::model::HourData;
use crate::partition::{BalancingSide, SubSpace};

/// Price-independent pieces of the social cost for one hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourCoefficients {
    /// `Φ` with the up-regulation price.
    pub phi_up: f64,
    /// `Φ` with the down-regulation price.
    pub phi_down: f64,
    pub psi: f64,
    pub rhs: f64,
    pub sum_net_demand: f64,
}

impl HourCoefficients {
    pub fn new(hour: &HourData) -> Self {
        let (a, b) = (hour.a, hour.b);
        let sum_u: f64 = hour.demand.iter().sum();
        let sum_mu: f64 = hour.wind_mean.iter().sum();
        let sum_mu_sq: f64 = hour.wind_mean.iter().map(|m| m * m).sum();
        let sum_second: f64 = hour.wind_second_moment.iter().sum();
        let net = sum_u - sum_mu;
        let base = -2.0 * a * net - b;
        // Σ_i Σ_{z≠i} μ_i μ_z = (Σμ)² − Σμ²
        let cross = sum_mu * sum_mu - sum_mu_sq;
        Self {
            phi_up: hour.c_up + base,
            phi_down: hour.c_down + base,
            psi: a * sum_u * sum_u - 2.0 * a * sum_u * sum_mu
                + a * sum_second
                + a * cross
                + b * net,
            rhs: hour.boundary_rhs(),
            sum_net_demand: net,
        }
    }

    pub fn phi(&self, side: BalancingSide) -> f64 {
        match side {
            BalancingSide::Up => self.phi_up,
            BalancingSide::Down => self.phi_down,
        }
    }
}

/// `x_n` as an affine function of the price pair.
pub fn total_balancing_form(hour: &HourData, n: usize) -> Affine2 {
    let n_all = hour.n_prosumers();
    let scale = hour.scale();
    Affine2::new(
        [-(n as f64) / scale, -((n_all - n) as f64) / scale],
        hour.boundary_rhs() / scale,
    )
}

/// Social cost for a known community balancing total.
pub fn social_cost_at_total(
    hour: &HourData,
    coeffs: &HourCoefficients,
    x_tot: f64,
    side: BalancingSide,
) -> f64 {
    hour.a * x_tot * x_tot + coeffs.phi(side) * x_tot + coeffs.psi
}

pub fn social_cost(
    hour: &HourData,
    coeffs: &HourCoefficients,
    n: usize,
    prices: IncentivePair,
    side: BalancingSide,
) -> f64 {
    social_cost_at_total(hour, coeffs, total_balancing(hour, n, prices), side)
}

/// `Σ_n Q(n) W_n` with each balancing side taken from `cell`.
pub fn expected_social_cost(
    hour: &HourData,
    coeffs: &HourCoefficients,
    prices: IncentivePair,
    cell: &SubSpace,
    weights: &[f64],
) -> f64 {
    debug_assert!(
        cell.contains(prices),
        "prices {prices:?} outside cell {}",
        cell.label()
    );
    weights
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > 0.0)
        .map(|(n, &q)| q * social_cost(hour, coeffs, n, prices, cell.side(n)))
        .sum()
}

/// The expected social cost of `cell` as an explicit quadratic in prices.
pub fn expected_cost_form(
    hour: &HourData,
    coeffs: &HourCoefficients,
    cell: &SubSpace,
    weights: &[f64],
) -> Quadratic2 {
    let mut total = Quadratic2::default();
    for (n, &q) in weights.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        let x = total_balancing_form(hour, n);
        let mut w = Quadratic2::product(x, x).scaled(hour.a);
        w.add_scaled(&Quadratic2::linear(x), coeffs.phi(cell.side(n)));
        w.constant += coeffs.psi;
        total.add_scaled(&w, q);
    }
    total
}

/// `(x_0, x_N)`: the balancing totals of the all-LS and all-WP communities,
/// which bracket `x_n` for every `n`.
pub fn extreme_totals(hour: &HourData, prices: IncentivePair) -> (f64, f64) {
    (
        total_balancing(hour, 0, prices),
        total_balancing(hour, hour.n_prosumers(), prices),
    )
}

/// `Σ_n Q(n) x_n`.
pub fn expected_total(hour: &HourData, prices: IncentivePair, weights: &[f64]) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(n, &q)| q * total_balancing(hour, n, prices))
        .sum()
}
