#![allow(dead_code)]

use ea_pricing::model::HourData;
use ea_pricing::solver::{solve_hour_data, HourSolution, SolveOptions};
use ea_pricing::{Error, SelectionModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_q(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..=1.0)).collect()
}

/// Valid hour with prosumer count `n`, loose prices and floors at `b`.
pub fn random_hour(rng: &mut ChaCha8Rng, n: usize) -> HourData {
    let a = rng.random_range(0.05..1.0);
    let b = rng.random_range(0.0..2.0);
    let wind_mean: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..9.5)).collect();
    let wind_second_moment = wind_mean
        .iter()
        .map(|m| m * m + rng.random_range(0.1..4.0))
        .collect();
    let demand = wind_mean
        .iter()
        .map(|m| m + rng.random_range(-4.0..10.0))
        .map(|d: f64| d.max(0.0))
        .collect();
    let c_down = rng.random_range(b..60.0);
    HourData {
        hour: 1,
        a,
        b,
        demand,
        wind_mean,
        wind_second_moment,
        c_up: c_down + rng.random_range(0.0..20.0),
        c_down,
        r_wp_floor: b + rng.random_range(0.0..5.0),
        r_ls_floor: b + rng.random_range(0.0..5.0),
        ramp_up: rng.random_range(1.0..40.0),
        ramp_down: -rng.random_range(1.0..40.0),
    }
}

/// Price at which the all-WP community balances to zero with uniform
/// prices.
pub fn pivot(hour: &HourData) -> f64 {
    hour.boundary_rhs() / hour.n_prosumers() as f64
}

/// Hour whose regulation prices sit on one side of the pivot, the regime
/// in which budget recovery is attainable.
pub fn random_market_hour(rng: &mut ChaCha8Rng, n: usize) -> HourData {
    let mut h = random_hour(rng, n);
    let p = pivot(&h);
    if rng.random_bool(0.5) {
        h.c_down = p + rng.random_range(1.0..15.0);
        h.c_up = h.c_down + rng.random_range(0.0..15.0);
    } else {
        h.c_up = p - rng.random_range(1.0..15.0);
        h.c_down = h.c_up - rng.random_range(0.0..15.0);
    }
    let room = (p - h.b - 0.5).max(0.0);
    h.r_wp_floor = h.b + rng.random_range(0.0..=room);
    h.r_ls_floor = h.b + rng.random_range(0.0..=room);
    h
}

pub struct FeasibleCase {
    pub hour: HourData,
    pub weights: Vec<f64>,
    pub x_prev: f64,
    pub solution: HourSolution,
}

/// Draws market hours until `count` of them solve.
pub fn feasible_cases(seed: u64, count: usize, opts: &SolveOptions) -> Vec<FeasibleCase> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        assert!(
            tries < 200 * count,
            "too few feasible draws: {} of {tries}",
            out.len()
        );
        let n = rng.random_range(1..=5);
        let hour = random_market_hour(&mut rng, n);
        let weights = SelectionModel::new(random_q(&mut rng, n))
            .unwrap()
            .weights();
        let x_prev = rng.random_range(-5.0..5.0);
        match solve_hour_data(&hour, &weights, x_prev, opts) {
            Ok(solution) => out.push(FeasibleCase {
                hour,
                weights,
                x_prev,
                solution,
            }),
            Err(Error::HourInfeasible { .. }) => continue,
            Err(e) => panic!("unexpected solver error: {e}"),
        }
    }
    out
}
