//! Static market description and validated construction.
//!
//! Hours are addressed 1-based (`t = 1..=horizon`) everywhere in the public
//! API; per-hour vectors are stored 0-based, so hour `t` lives at index
//! `t - 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wind::BetaWind;

/// Quadratic generation cost `G(d) = a/2 d² + b d + c` of the day-ahead
/// supplier. The day-ahead price is its marginal cost `a d + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorCost {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl GeneratorCost {
    pub fn price(&self, demand: f64) -> f64 {
        self.a * demand + self.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindModelParams {
    /// Plant capacity in MW.
    pub capacity: f64,
    /// Expected output per hour, MWh.
    pub mean_profile: Vec<f64>,
    /// Spread parameter, read as a percentage of the largest admissible
    /// beta variance (see [`crate::wind::variance_from_spread`]).
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProsumerProfile {
    pub id: usize,
    /// Planned consumption per hour, MWh.
    pub demand: Vec<f64>,
    pub wind: WindModelParams,
    /// Probability of choosing the wholesale-price package.
    pub q: f64,
}

/// Balancing-market regulation prices. Down-regulation prices may be
/// negative, in which case injecting surplus energy is charged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbmPrices {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EaConstraints {
    pub r_wp_floor: Vec<f64>,
    pub r_ls_floor: Vec<f64>,
    pub ramp_up: Vec<f64>,
    pub ramp_down: Vec<f64>,
    /// Settled total balancing energy before hour 1.
    pub x_prev_init: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketInstance {
    pub gen: GeneratorCost,
    pub prosumers: Vec<ProsumerProfile>,
    pub ebm: EbmPrices,
    pub ea: EaConstraints,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub bound: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.bound)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: impl Into<String>, bound: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            bound: bound.into(),
        });
    }

    fn check_profile(&mut self, field: &str, values: &[f64], horizon: usize) -> bool {
        if values.len() != horizon {
            self.push(
                field,
                format!("length {} does not match horizon {horizon}", values.len()),
            );
            return false;
        }
        if let Some(t) = values.iter().position(|v| !v.is_finite()) {
            self.push(format!("{field}[{}]", t + 1), "must be finite");
            return false;
        }
        true
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "pass");
        }
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks every type invariant plus the price-floor assumption
/// `0 <= b <= min_t min(floor_wp, floor_ls)` that keeps the prosumer
/// equilibrium interior. Never fails; all problems are collected.
pub fn validate(instance: &MarketInstance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let horizon = instance.horizon;
    let gen = &instance.gen;

    if !(gen.a > 0.0 && gen.a.is_finite()) {
        report.push("gen.a", "must be > 0");
    }
    if !(gen.b >= 0.0 && gen.b.is_finite()) {
        report.push("gen.b", "must be >= 0");
    }
    if !(gen.c >= 0.0 && gen.c.is_finite()) {
        report.push("gen.c", "must be >= 0");
    }
    if horizon == 0 {
        report.push("horizon", "must be >= 1");
    }
    if instance.prosumers.is_empty() {
        report.push("prosumers", "community needs N >= 1");
    }

    for (k, p) in instance.prosumers.iter().enumerate() {
        let name = format!("prosumers[{}]", k + 1);
        if !(0.0..=1.0).contains(&p.q) {
            report.push(format!("{name}.q"), "must lie in [0, 1]");
        }
        if report.check_profile(&format!("{name}.demand"), &p.demand, horizon) {
            if let Some(t) = p.demand.iter().position(|&u| u < 0.0) {
                report.push(format!("{name}.demand[{}]", t + 1), "must be >= 0");
            }
        }
        let cap = p.wind.capacity;
        if !(cap > 0.0 && cap.is_finite()) {
            report.push(format!("{name}.wind.capacity"), "must be > 0");
            continue;
        }
        if !(p.wind.spread > 0.0 && p.wind.spread.is_finite()) {
            report.push(format!("{name}.wind.spread"), "must be > 0");
            continue;
        }
        if !report.check_profile(
            &format!("{name}.wind.mean_profile"),
            &p.wind.mean_profile,
            horizon,
        ) {
            continue;
        }
        for (t, &mu) in p.wind.mean_profile.iter().enumerate() {
            let field = format!("{name}.wind.mean_profile[{}]", t + 1);
            if !(mu > 0.0 && mu < cap) {
                report.push(field, format!("must lie in (0, {cap})"));
            } else if let Err(e) = BetaWind::from_spread(mu, p.wind.spread, cap) {
                report.push(field, e.to_string());
            }
        }
    }

    report.check_profile("ebm.up", &instance.ebm.up, horizon);
    report.check_profile("ebm.down", &instance.ebm.down, horizon);

    let ea = &instance.ea;
    let floors_ok = report.check_profile("ea.r_wp_floor", &ea.r_wp_floor, horizon)
        & report.check_profile("ea.r_ls_floor", &ea.r_ls_floor, horizon);
    if report.check_profile("ea.ramp_up", &ea.ramp_up, horizon) {
        if let Some(t) = ea.ramp_up.iter().position(|&r| r <= 0.0) {
            report.push(
                format!("ea.ramp_up[{}]", t + 1),
                "ramp ordering requires ramp_up > 0",
            );
        }
    }
    if report.check_profile("ea.ramp_down", &ea.ramp_down, horizon) {
        if let Some(t) = ea.ramp_down.iter().position(|&r| r >= 0.0) {
            report.push(
                format!("ea.ramp_down[{}]", t + 1),
                "ramp ordering requires ramp_down < 0",
            );
        }
    }
    if !ea.x_prev_init.is_finite() {
        report.push("ea.x_prev_init", "must be finite");
    }
    if floors_ok {
        for (name, floors) in [
            ("ea.r_wp_floor", &ea.r_wp_floor),
            ("ea.r_ls_floor", &ea.r_ls_floor),
        ] {
            if let Some(t) = floors.iter().position(|&r| r <= 0.0) {
                report.push(format!("{name}[{}]", t + 1), "must be > 0");
            }
        }
        let min_floor = ea
            .r_wp_floor
            .iter()
            .chain(&ea.r_ls_floor)
            .fold(f64::INFINITY, |m, &r| m.min(r));
        if gen.b > min_floor {
            report.push(
                "gen.b",
                format!(
                    "b = {} exceeds the smallest price floor {min_floor}; equilibria below b are not interior",
                    gen.b
                ),
            );
        }
    }
    report
}

/// Everything the per-hour computations need, with wind second moments
/// already integrated.
#[derive(Debug, Clone, PartialEq)]
pub struct HourData {
    /// 1-based hour index.
    pub hour: usize,
    pub a: f64,
    pub b: f64,
    pub demand: Vec<f64>,
    pub wind_mean: Vec<f64>,
    /// `E[w_i²]` per prosumer.
    pub wind_second_moment: Vec<f64>,
    pub c_up: f64,
    pub c_down: f64,
    pub r_wp_floor: f64,
    pub r_ls_floor: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
}

impl HourData {
    pub fn n_prosumers(&self) -> usize {
        self.demand.len()
    }

    /// Expected net demand `u_i - μ_i`.
    pub fn net_demand(&self, i: usize) -> f64 {
        self.demand[i] - self.wind_mean[i]
    }

    pub fn sum_net_demand(&self) -> f64 {
        (0..self.n_prosumers()).map(|i| self.net_demand(i)).sum()
    }

    pub fn min_net_demand(&self) -> f64 {
        (0..self.n_prosumers())
            .map(|i| self.net_demand(i))
            .fold(f64::INFINITY, f64::min)
    }

    /// `a (N + 1)`, the denominator shared by every equilibrium quantity.
    pub fn scale(&self) -> f64 {
        self.a * (self.n_prosumers() as f64 + 1.0)
    }

    /// Right-hand side `N b + a (N+1) Σ(u - μ)` of the sign-flip lines.
    pub fn boundary_rhs(&self) -> f64 {
        self.n_prosumers() as f64 * self.b + self.scale() * self.sum_net_demand()
    }
}

impl MarketInstance {
    pub fn n_prosumers(&self) -> usize {
        self.prosumers.len()
    }

    pub fn q_vector(&self) -> Vec<f64> {
        self.prosumers.iter().map(|p| p.q).collect()
    }

    /// Fails with [`Error::InvalidInstance`] unless [`validate`] passes.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate(self);
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(report))
        }
    }

    pub fn beta_model(&self, t: usize, i: usize) -> Result<BetaWind> {
        let idx = self.hour_index(t)?;
        let p = &self.prosumers[i];
        BetaWind::from_spread(p.wind.mean_profile[idx], p.wind.spread, p.wind.capacity)
    }

    fn hour_index(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.horizon {
            return Err(Error::Input(format!(
                "hour {t} outside 1..={}",
                self.horizon
            )));
        }
        Ok(t - 1)
    }

    /// Per-hour view, integrating each plant's second moment.
    pub fn hour_data(&self, t: usize) -> Result<HourData> {
        let idx = self.hour_index(t)?;
        let mut second = Vec::with_capacity(self.n_prosumers());
        for i in 0..self.n_prosumers() {
            second.push(self.beta_model(t, i)?.second_moment()?);
        }
        Ok(HourData {
            hour: t,
            a: self.gen.a,
            b: self.gen.b,
            demand: self.prosumers.iter().map(|p| p.demand[idx]).collect(),
            wind_mean: self
                .prosumers
                .iter()
                .map(|p| p.wind.mean_profile[idx])
                .collect(),
            wind_second_moment: second,
            c_up: self.ebm.up[idx],
            c_down: self.ebm.down[idx],
            r_wp_floor: self.ea.r_wp_floor[idx],
            r_ls_floor: self.ea.r_ls_floor[idx],
            ramp_up: self.ea.ramp_up[idx],
            ramp_down: self.ea.ramp_down[idx],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(b: f64, floor: f64, ramp_up: f64) -> MarketInstance {
        let horizon = 2;
        MarketInstance {
            gen: GeneratorCost { a: 0.2, b, c: 1.0 },
            prosumers: (0..2)
                .map(|id| ProsumerProfile {
                    id: id + 1,
                    demand: vec![20.0; horizon],
                    wind: WindModelParams {
                        capacity: 10.0,
                        mean_profile: vec![5.0; horizon],
                        spread: 20.0,
                    },
                    q: 0.5,
                })
                .collect(),
            ebm: EbmPrices {
                up: vec![40.0; horizon],
                down: vec![-5.0; horizon],
            },
            ea: EaConstraints {
                r_wp_floor: vec![floor; horizon],
                r_ls_floor: vec![floor; horizon],
                ramp_up: vec![ramp_up; horizon],
                ramp_down: vec![-10.0; horizon],
                x_prev_init: 0.0,
            },
            horizon,
        }
    }

    #[test]
    fn reference_parameters_pass() {
        let report = validate(&instance(0.5, 10.0, 10.0));
        assert!(report.is_ok(), "{report}");
    }

    #[test]
    fn price_floor_below_b_fails() {
        let report = validate(&instance(12.0, 10.0, 10.0));
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].field, "gen.b");
        assert!(report.violations[0].bound.contains("smallest price floor"));
    }

    #[test]
    fn negative_ramp_up_fails() {
        let report = validate(&instance(0.5, 10.0, -1.0));
        assert!(report
            .violations
            .iter()
            .any(|v| v.field.starts_with("ea.ramp_up") && v.bound.contains("ramp ordering")));
    }

    #[test]
    fn mismatched_profile_length_is_reported() {
        let mut inst = instance(0.5, 10.0, 10.0);
        inst.prosumers[1].demand.pop();
        let report = validate(&inst);
        assert!(report
            .violations
            .iter()
            .any(|v| v.field == "prosumers[2].demand"));
    }

    #[test]
    fn wind_mean_outside_capacity_fails() {
        let mut inst = instance(0.5, 10.0, 10.0);
        inst.prosumers[0].wind.mean_profile[1] = 10.0;
        let report = validate(&inst);
        assert!(report
            .violations
            .iter()
            .any(|v| v.field == "prosumers[1].wind.mean_profile[2]"));
    }

    #[test]
    fn validation_is_deterministic() {
        let inst = instance(12.0, 10.0, -3.0);
        assert_eq!(validate(&inst), validate(&inst));
    }

    #[test]
    fn hour_data_is_one_based() {
        let inst = instance(0.5, 10.0, 10.0);
        assert!(inst.hour_data(0).is_err());
        assert!(inst.hour_data(3).is_err());
        let h = inst.hour_data(2).unwrap();
        assert_eq!(h.hour, 2);
        assert_eq!(h.n_prosumers(), 2);
        assert!((h.sum_net_demand() - 30.0).abs() < 1e-12);
    }
}
