//! Settlement once package selections are known: equilibrium purchases,
//! lump-sum bills from the expense elaboration equation, and the
//! aggregator's realized profit. Also the uncoordinated single-package
//! baseline in which every prosumer buys at the up-regulation price.

use serde::{Deserialize, Serialize};

use crate::budget::profit_lower_bound;
use crate::equilibrium::{expected_da_cost, nash_equilibrium, total_balancing, IncentivePair};
use crate::error::{Error, Result};
use crate::model::{HourData, MarketInstance};
use crate::objective::{social_cost_at_total, HourCoefficients};
use crate::partition::BalancingSide;
use crate::selection::Scenario;
use crate::solver::HourSolution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProsumerSettlement {
    /// 1-based.
    pub id: usize,
    pub wholesale: bool,
    pub x: f64,
    /// Balancing-service component `R x`.
    pub service_cost: f64,
    pub expected_da_cost: f64,
    /// `R x + E[DA cost]`; for a lump-sum prosumer this is the bill `B*`.
    pub total_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementRecord {
    pub hour: usize,
    pub scenario: Scenario,
    pub prices: IncentivePair,
    pub prosumers: Vec<ProsumerSettlement>,
    /// `(id, B*)` for each lump-sum prosumer.
    pub ls_prices: Vec<(usize, f64)>,
    pub x_tot: f64,
    /// `Σ (u − μ − x)`.
    pub da_demand: f64,
    pub cb_used: BalancingSide,
    /// Income from prosumers, including the day-ahead costs passed through.
    pub ea_income: f64,
    /// Day-ahead and balancing-market payments.
    pub ea_payment: f64,
    pub ea_profit: f64,
    /// The conservative bound `Ẑ_n` for this scenario's `n`.
    pub z_hat: f64,
}

/// Settles `scenario` at `prices` for one hour.
pub fn settle_at(
    hour: &HourData,
    prices: IncentivePair,
    scenario: &Scenario,
) -> Result<SettlementRecord> {
    let ne = nash_equilibrium(hour, scenario, prices)?;
    let prosumers: Vec<ProsumerSettlement> = (0..hour.n_prosumers())
        .map(|i| {
            let wholesale = scenario.is_wp(i);
            let service_cost = prices.for_package(wholesale) * ne.x[i];
            let da = expected_da_cost(hour, i, &ne.x);
            ProsumerSettlement {
                id: i + 1,
                wholesale,
                x: ne.x[i],
                service_cost,
                expected_da_cost: da,
                total_cost: service_cost + da,
            }
        })
        .collect();
    let ls_prices = prosumers
        .iter()
        .filter(|p| !p.wholesale)
        .map(|p| (p.id, p.total_cost))
        .collect();
    let cb_used = BalancingSide::of_total(ne.x_tot);
    let cb = cb_used.price(hour);
    let da_total: f64 = prosumers.iter().map(|p| p.expected_da_cost).sum();
    let ea_income: f64 = prosumers
        .iter()
        .map(|p| {
            if p.wholesale {
                p.service_cost + p.expected_da_cost
            } else {
                p.total_cost
            }
        })
        .sum();
    let ea_payment = da_total + cb * ne.x_tot;
    // Income minus payment with the pass-through terms cancelled exactly.
    let ea_profit = prosumers.iter().map(|p| p.service_cost).sum::<f64>() - cb * ne.x_tot;
    let da_demand = hour.sum_net_demand() - ne.x_tot;
    Ok(SettlementRecord {
        hour: hour.hour,
        scenario: scenario.clone(),
        prices,
        prosumers,
        ls_prices,
        x_tot: ne.x_tot,
        da_demand,
        cb_used,
        ea_income,
        ea_payment,
        ea_profit,
        z_hat: profit_lower_bound(hour, scenario.n_wp(), prices, cb_used),
    })
}

pub fn settle(
    instance: &MarketInstance,
    t: usize,
    solution: &HourSolution,
    scenario: &Scenario,
) -> Result<SettlementRecord> {
    if solution.hour != t {
        return Err(Error::Precondition(format!(
            "solution is for hour {}, not hour {t}",
            solution.hour
        )));
    }
    settle_at(&instance.hour_data(t)?, solution.prices, scenario)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsmOutcome {
    pub x_hat_tot: f64,
    pub social_cost: f64,
    pub side: BalancingSide,
}

/// Everyone on the wholesale package at `R_WP = C_UR`.
pub fn usm_at(hour: &HourData) -> Result<UsmOutcome> {
    if hour.b > hour.c_up {
        return Err(Error::Precondition(format!(
            "hour {}: b = {} exceeds the up-regulation price {}",
            hour.hour, hour.b, hour.c_up
        )));
    }
    let x_hat_tot = total_balancing(hour, hour.n_prosumers(), IncentivePair::uniform(hour.c_up));
    let side = BalancingSide::of_total(x_hat_tot);
    let social_cost = social_cost_at_total(hour, &HourCoefficients::new(hour), x_hat_tot, side);
    Ok(UsmOutcome {
        x_hat_tot,
        social_cost,
        side,
    })
}

pub fn usm_baseline(instance: &MarketInstance, t: usize) -> Result<UsmOutcome> {
    usm_at(&instance.hour_data(t)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hour() -> HourData {
        HourData {
            hour: 3,
            a: 0.2,
            b: 0.5,
            demand: vec![20.0, 21.0, 19.5],
            wind_mean: vec![5.0, 4.0, 6.0],
            wind_second_moment: vec![27.0, 18.0, 38.0],
            c_up: 30.0,
            c_down: 20.0,
            r_wp_floor: 10.0,
            r_ls_floor: 10.0,
            ramp_up: 10.0,
            ramp_down: -10.0,
        }
    }

    #[test]
    fn all_wp_has_no_lump_sum_bills() {
        let h = hour();
        let rec = settle_at(&h, IncentivePair::new(18.0, 16.0), &Scenario::all_wp(3)).unwrap();
        assert!(rec.ls_prices.is_empty());
        let margin: f64 = rec.prosumers.iter().map(|p| 18.0 * p.x).sum();
        assert!((rec.ea_profit - (margin - rec.cb_used.price(&h) * rec.x_tot)).abs() < 1e-9);
    }

    #[test]
    fn eee_identity() {
        let h = hour();
        let p = IncentivePair::new(18.0, 16.0);
        let s = Scenario::from_mask(0b010, 3).unwrap();
        let rec = settle_at(&h, p, &s).unwrap();
        for (id, bill) in &rec.ls_prices {
            let pr = &rec.prosumers[id - 1];
            assert!((bill - pr.expected_da_cost - p.r_ls * pr.x).abs() < 1e-9);
        }
        assert_eq!(rec.ls_prices.len(), 2);
    }

    #[test]
    fn income_minus_payment_is_profit() {
        let h = hour();
        let rec = settle_at(
            &h,
            IncentivePair::new(17.0, 19.0),
            &Scenario::from_mask(0b101, 3).unwrap(),
        )
        .unwrap();
        assert!((rec.ea_income - rec.ea_payment - rec.ea_profit).abs() < 1e-9);
    }

    #[test]
    fn usm_at_b_leaves_net_demand() {
        let mut h = hour();
        h.c_up = h.b;
        let u = usm_at(&h).unwrap();
        assert!((u.x_hat_tot - h.sum_net_demand()).abs() < 1e-12);
        h.c_up = 0.1;
        assert!(matches!(usm_at(&h), Err(Error::Precondition(_))));
    }
}
