//! Seeded synthetic data: regulation-price days and a four-prosumer
//! community for end-to-end runs.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    EaConstraints, EbmPrices, GeneratorCost, MarketInstance, ProsumerProfile, WindModelParams,
};

/// Regulation-price generator: a daily shape around two levels plus
/// Gaussian noise. Down prices are capped at the up price of the same hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriceGenerator {
    pub horizon: usize,
    pub up_level: f64,
    pub down_level: f64,
    /// Half peak-to-trough swing of the daily shape, €/MWh.
    pub amplitude: f64,
    /// Standard deviation of the hourly noise, €/MWh.
    pub volatility: f64,
    pub seed: u64,
}

impl Default for PriceGenerator {
    fn default() -> Self {
        Self {
            horizon: 24,
            up_level: 46.0,
            down_level: 33.0,
            amplitude: 3.0,
            volatility: 1.0,
            seed: 2018,
        }
    }
}

/// Daily load-like shape in `[-1, 1]`: trough before dawn, peak in the
/// late afternoon.
pub fn daily_shape(t: usize) -> f64 {
    -(2.0 * PI * (t as f64 - 4.0) / 24.0).cos()
}

impl PriceGenerator {
    pub fn generate(&self) -> Result<EbmPrices> {
        if self.horizon == 0 {
            return Err(Error::Parameter("price horizon must be at least 1".into()));
        }
        let noise = Normal::new(0.0, self.volatility)
            .map_err(|e| Error::Parameter(format!("volatility {}: {e}", self.volatility)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut up = Vec::with_capacity(self.horizon);
        let mut down = Vec::with_capacity(self.horizon);
        for t in 1..=self.horizon {
            let s = self.amplitude * daily_shape(t);
            let u = self.up_level + s + noise.sample(&mut rng);
            let d = self.down_level + s + noise.sample(&mut rng);
            up.push(round_cents(u));
            down.push(round_cents(d.min(u)));
        }
        Ok(EbmPrices { up, down })
    }
}

/// Prices are quoted to the cent, which also keeps CSV output short.
fn round_cents(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Profiles of a four-prosumer community: 10 MW plants with spread 20
/// and selection probabilities `(0.35, 0.5, 0.65, 0.7)`. Demand follows
/// the same daily shape as [`PriceGenerator`] so that, at its default
/// levels, the community is a small net seller near the down-regulation
/// price in every hour.
pub fn four_prosumer_profiles(horizon: usize) -> Vec<ProsumerProfile> {
    let q = [0.35, 0.5, 0.65, 0.7];
    let demand_offset = [0.0, 0.05, 0.1, 0.05];
    let wind_offset = [0.2, -0.1, 0.0, 0.3];
    (0..4)
        .map(|i| {
            let wind: Vec<f64> = (1..=horizon)
                .map(|t| {
                    5.0 + 1.5 * (2.0 * PI * (t as f64 + 3.0 * i as f64) / 24.0).sin()
                        + wind_offset[i]
                })
                .collect();
            let demand = (1..=horizon)
                .map(|t| 26.5 + 3.0 * daily_shape(t) + demand_offset[i] + wind[t - 1])
                .collect();
            ProsumerProfile {
                id: i + 1,
                demand,
                wind: WindModelParams {
                    capacity: 10.0,
                    mean_profile: wind,
                    spread: 20.0,
                },
                q: q[i],
            }
        })
        .collect()
}

/// [`four_prosumer_profiles`] with generator `(0.2, 0.5, 1)`, ramp limits
/// ±10 and price floors of 10, over the horizon of `ebm`.
pub fn four_prosumer_day(ebm: EbmPrices) -> Result<MarketInstance> {
    let horizon = ebm.up.len();
    if ebm.down.len() != horizon {
        return Err(Error::Input(format!(
            "{} up prices but {} down prices",
            horizon,
            ebm.down.len()
        )));
    }
    let instance = MarketInstance {
        gen: GeneratorCost {
            a: 0.2,
            b: 0.5,
            c: 1.0,
        },
        prosumers: four_prosumer_profiles(horizon),
        ebm,
        ea: EaConstraints {
            r_wp_floor: vec![10.0; horizon],
            r_ls_floor: vec![10.0; horizon],
            ramp_up: vec![10.0; horizon],
            ramp_down: vec![-10.0; horizon],
            x_prev_init: 0.0,
        },
        horizon,
    };
    instance.ensure_valid()?;
    Ok(instance)
}
