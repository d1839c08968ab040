//! Brute-force grid cross-check of a cell's optimum.

use super::{CellResult, SubProblem};
use crate::equilibrium::IncentivePair;
use crate::model::HourData;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBest {
    pub prices: IncentivePair,
    pub value: f64,
    pub feasible_points: usize,
}

/// Evaluates `sub` on a `resolution × resolution` grid spanning `bounds`
/// (`[[wp_lo, wp_hi], [ls_lo, ls_hi]]`) and returns the best feasible
/// point.
pub fn grid_search(sub: &SubProblem, bounds: [[f64; 2]; 2], resolution: usize) -> Option<GridBest> {
    let steps = resolution.max(2) - 1;
    let at = |axis: usize, k: usize| {
        let [lo, hi] = bounds[axis];
        lo + (hi - lo) * k as f64 / steps as f64
    };
    let mut best: Option<GridBest> = None;
    let mut count = 0;
    for i in 0..=steps {
        for j in 0..=steps {
            let p = IncentivePair::new(at(0, i), at(1, j));
            if !sub.is_feasible(p, 0.0) {
                continue;
            }
            count += 1;
            let value = sub.objective.eval_at(p);
            if best.as_ref().is_none_or(|b| value < b.value) {
                best = Some(GridBest {
                    prices: p,
                    value,
                    feasible_points: 0,
                });
            }
        }
    }
    best.map(|b| GridBest {
        feasible_points: count,
        ..b
    })
}

pub(super) fn check_cell(
    hour: &HourData,
    sub: &SubProblem,
    res: &CellResult,
    resolution: usize,
) -> Option<String> {
    let apex = hour.boundary_rhs() / hour.n_prosumers() as f64;
    let fallback = 4.0
        * [
            apex.abs(),
            hour.c_up.abs(),
            hour.c_down.abs(),
            hour.r_wp_floor,
            hour.r_ls_floor,
            1.0,
        ]
        .into_iter()
        .fold(0.0, f64::max);
    let bounds = sub.bounding_box(fallback).unwrap_or([
        [hour.r_wp_floor, hour.r_wp_floor + fallback],
        [hour.r_ls_floor, hour.r_ls_floor + fallback],
    ]);
    let grid = grid_search(sub, bounds, resolution)?;
    match res.optimum {
        None => Some(format!(
            "cell {}: reported infeasible but grid point ({}, {}) is feasible",
            sub.cell.label(),
            grid.prices.r_wp,
            grid.prices.r_ls
        )),
        Some(opt) if grid.value < opt.expected_cost - 1e-6 * opt.expected_cost.abs().max(1.0) => {
            Some(format!(
                "cell {}: grid point ({}, {}) costs {} < optimum {}",
                sub.cell.label(),
                grid.prices.r_wp,
                grid.prices.r_ls,
                grid.value,
                opt.expected_cost
            ))
        }
        Some(_) => None,
    }
}
