//! Conservative budget-recovery bound for the aggregator.
//!
//! For an `n`-WP scenario the aggregator's net profit is
//! `R_WP Σ_WP x_h + R_LS Σ_LS x_j − C_B x_tot`. The package sums depend on
//! who picked which package; replacing every `u_i − μ_i` with the smallest
//! one gives a bound `Ẑ_n` that holds for every membership with that `n`.

use crate::equilibrium::{total_balancing, IncentivePair};
use crate::forms::{Affine2, Quadratic2};
use crate::model::HourData;
use crate::objective::total_balancing_form;
use crate::partition::{BalancingSide, SubSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct ProfitBound {
    /// `Ẑ_n` for `n = 0..=N`.
    pub z_hat: Vec<f64>,
    /// `Σ_n Q(n) Ẑ_n`.
    pub i_t: f64,
    pub min_net_demand: f64,
}

impl ProfitBound {
    pub fn recovers_budget(&self, tol: f64) -> bool {
        self.i_t >= -tol
    }
}

fn lower_bound_forms(hour: &HourData, n: usize) -> (Affine2, Affine2) {
    let n_all = hour.n_prosumers();
    let (nf, lf) = (n as f64, (n_all - n) as f64);
    let cross = nf * lf;
    let scale = hour.scale();
    let m = hour.min_net_demand();
    let wp = Affine2::new(
        [-(cross + nf) / scale, cross / scale],
        nf * hour.b / scale + nf * m,
    );
    let ls = Affine2::new(
        [cross / scale, -(cross + lf) / scale],
        lf * hour.b / scale + lf * m,
    );
    (wp, ls)
}

/// Lower bounds on the WP and LS package balancing totals of any `n`-WP
/// scenario.
pub fn wp_ls_totals_lb(hour: &HourData, n: usize, prices: IncentivePair) -> (f64, f64) {
    let (wp, ls) = lower_bound_forms(hour, n);
    let r = [prices.r_wp, prices.r_ls];
    (wp.eval(r), ls.eval(r))
}

/// `Ẑ_n = R_WP x̂_WP + R_LS x̂_LS − C_B x_n`.
pub fn profit_lower_bound(
    hour: &HourData,
    n: usize,
    prices: IncentivePair,
    side: BalancingSide,
) -> f64 {
    let (wp, ls) = wp_ls_totals_lb(hour, n, prices);
    prices.r_wp * wp + prices.r_ls * ls - side.price(hour) * total_balancing(hour, n, prices)
}

pub fn profit_floor(
    hour: &HourData,
    prices: IncentivePair,
    cell: &SubSpace,
    weights: &[f64],
) -> ProfitBound {
    let z_hat: Vec<f64> = (0..weights.len())
        .map(|n| profit_lower_bound(hour, n, prices, cell.side(n)))
        .collect();
    let i_t = weights.iter().zip(&z_hat).map(|(q, z)| q * z).sum();
    ProfitBound {
        z_hat,
        i_t,
        min_net_demand: hour.min_net_demand(),
    }
}

/// `I_t` of `cell` as an explicit quadratic in prices. Its Hessian is
/// negative semidefinite, so `{I_t ≥ 0}` is convex.
pub fn budget_form(hour: &HourData, cell: &SubSpace, weights: &[f64]) -> Quadratic2 {
    let mut total = Quadratic2::default();
    for (n, &q) in weights.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        let (wp, ls) = lower_bound_forms(hour, n);
        let mut z = Quadratic2::product(Affine2::coordinate(0), wp);
        z.add_scaled(&Quadratic2::product(Affine2::coordinate(1), ls), 1.0);
        z.add_scaled(
            &Quadratic2::linear(total_balancing_form(hour, n)),
            -cell.side(n).price(hour),
        );
        total.add_scaled(&z, q);
    }
    total
}
