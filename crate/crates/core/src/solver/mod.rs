//! Per-hour pricing: one convex sub-problem per partition cell, solved
//! exactly, and the cheapest feasible cell wins.

mod qp;
mod single;
mod verify;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::{budget_form, profit_floor};
use crate::equilibrium::{total_balancing, IncentivePair};
use crate::error::{Error, Result};
use crate::forms::{Affine2, Quadratic2};
use crate::model::{HourData, MarketInstance};
use crate::objective::{
    expected_cost_form, expected_social_cost, expected_total, total_balancing_form,
    HourCoefficients,
};
use crate::partition::{build_partition, PriceCase, SubSpace};
use crate::selection::{Scenario, SelectionModel};

use qp::{minimize, Lin, QpOutcome};

pub use single::{SinglePackageProblem, SinglePackageSolution};
pub use verify::{grid_search, GridBest};

/// Iterations of the budget-restoring bisection.
const BISECTION_STEPS: usize = 100;
/// Relative tightening applied to strict inequalities.
const STRICT_MARGIN: f64 = 1e-9;
/// Relative tightening applied to the non-strict cell edges so that
/// rounded vertices stay inside the cell.
const EDGE_MARGIN: f64 = 1e-11;
pub const DEFAULT_GRID: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintFamily {
    Cell,
    Floor,
    Ramp,
    Budget,
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintFamily::Cell => "sub-space",
            ConstraintFamily::Floor => "price floors",
            ConstraintFamily::Ramp => "ramp limits",
            ConstraintFamily::Budget => "budget recovery",
        })
    }
}

/// `coef · (R_WP, R_LS) ≤ rhs` (or `<` when strict).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConstraint {
    pub coef: [f64; 2],
    pub rhs: f64,
    pub strict: bool,
    pub family: ConstraintFamily,
}

impl LinearConstraint {
    /// The constraint pulled inwards by a margin relative to its size at
    /// prices of magnitude `price_scale`.
    fn tightened(&self, price_scale: f64) -> Lin {
        let margin = match (self.family, self.strict) {
            (_, true) => STRICT_MARGIN,
            (ConstraintFamily::Cell, false) => EDGE_MARGIN,
            _ => 0.0,
        };
        let size = self
            .rhs
            .abs()
            .max((self.coef[0].abs() + self.coef[1].abs()) * price_scale)
            .max(1.0);
        Lin {
            coef: self.coef,
            rhs: self.rhs - margin * size,
        }
    }

    fn slack(&self, r: [f64; 2]) -> f64 {
        self.rhs - self.coef[0] * r[0] - self.coef[1] * r[1]
    }
}

/// How the hour's balancing total is carried into the next hour's ramp
/// constraints.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum CarryMode {
    /// `Σ_n Q(n) x_n`.
    #[default]
    Planning,
    /// The balancing total of one fixed package assignment.
    Realized(Scenario),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Cross-check every feasible cell against a brute-force grid.
    pub verify: bool,
    pub grid_resolution: usize,
    pub carry: CarryMode,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            verify: false,
            grid_resolution: DEFAULT_GRID,
            carry: CarryMode::Planning,
        }
    }
}

/// The optimization restricted to one partition cell.
#[derive(Debug, Clone)]
pub struct SubProblem {
    pub cell: SubSpace,
    pub weights: Vec<f64>,
    pub objective: Quadratic2,
    /// `I_t` over the cell; required to be non-negative.
    pub budget: Quadratic2,
    pub constraints: Vec<LinearConstraint>,
    pub enforce_budget: bool,
    /// Typical price magnitude, used to size the strictness margins.
    pub price_scale: f64,
}

fn affine_le(f: Affine2, bound: f64, family: ConstraintFamily) -> LinearConstraint {
    LinearConstraint {
        coef: f.lin,
        rhs: bound - f.constant,
        strict: false,
        family,
    }
}

/// Builds the sub-problem of `cell`. Ramp limits bind the largest and
/// smallest possible balancing totals, which are `x_N` and `x_0` in some
/// order depending on the case.
pub fn assemble(
    hour: &HourData,
    coeffs: &HourCoefficients,
    cell: &SubSpace,
    weights: &[f64],
    x_prev: f64,
) -> SubProblem {
    let mut constraints: Vec<LinearConstraint> = cell
        .half_planes
        .iter()
        .map(|h| LinearConstraint {
            coef: h.coef,
            rhs: h.rhs,
            strict: h.strict,
            family: ConstraintFamily::Cell,
        })
        .collect();
    constraints.push(affine_le(
        Affine2::coordinate(0).scaled(-1.0),
        -hour.r_wp_floor,
        ConstraintFamily::Floor,
    ));
    constraints.push(affine_le(
        Affine2::coordinate(1).scaled(-1.0),
        -hour.r_ls_floor,
        ConstraintFamily::Floor,
    ));
    let x0 = total_balancing_form(hour, 0);
    let xn = total_balancing_form(hour, hour.n_prosumers());
    let (hi, lo) = match cell.case {
        PriceCase::Ge => (xn, x0),
        PriceCase::Lt => (x0, xn),
    };
    constraints.push(affine_le(hi, hour.ramp_up + x_prev, ConstraintFamily::Ramp));
    constraints.push(affine_le(
        lo.scaled(-1.0),
        -(hour.ramp_down + x_prev),
        ConstraintFamily::Ramp,
    ));
    SubProblem {
        cell: cell.clone(),
        weights: weights.to_vec(),
        objective: expected_cost_form(hour, coeffs, cell, weights),
        budget: budget_form(hour, cell, weights),
        constraints,
        enforce_budget: true,
        price_scale: [
            hour.boundary_rhs() / hour.n_prosumers() as f64,
            hour.r_wp_floor,
            hour.r_ls_floor,
        ]
        .into_iter()
        .fold(1.0, |m, v| m.max(v.abs())),
    }
}

impl SubProblem {
    /// Copy with one constraint family removed.
    pub fn without(&self, family: ConstraintFamily) -> SubProblem {
        let mut out = self.clone();
        out.constraints.retain(|c| c.family != family);
        if family == ConstraintFamily::Budget {
            out.enforce_budget = false;
        }
        out
    }

    fn lins(&self) -> Vec<Lin> {
        self.constraints
            .iter()
            .map(|c| c.tightened(self.price_scale))
            .collect()
    }

    /// Pointwise feasibility, with the cell tested exactly and the other
    /// constraints to `tol`.
    pub fn is_feasible(&self, p: IncentivePair, tol: f64) -> bool {
        let r = [p.r_wp, p.r_ls];
        if self
            .constraints
            .iter()
            .any(|c| c.family == ConstraintFamily::Cell)
            && !self.cell.contains(p)
        {
            return false;
        }
        self.constraints
            .iter()
            .filter(|c| c.family != ConstraintFamily::Cell)
            .all(|c| c.slack(r) >= -tol * c.rhs.abs().max(1.0))
            && (!self.enforce_budget || self.budget.eval(r) >= -tol)
    }

    /// Minimizes a convex `f` over this sub-problem's feasible set.
    fn minimize_convex(&self, f: &Quadratic2) -> QpOutcome {
        let lins = self.lins();
        let first = minimize(f, &lins);
        let QpOutcome::Optimal { point, .. } = first else {
            return first;
        };
        if !self.enforce_budget || self.budget.eval(point) >= 0.0 {
            return first;
        }
        // The budget binds. It is concave, so the feasible set stays convex
        // and the optimum minimizes (1−θ) f − θ I for the smallest θ whose
        // minimizer recovers the budget.
        let neg = self.budget.scaled(-1.0);
        let mix = |theta: f64| {
            let mut g = f.scaled(1.0 - theta);
            g.add_scaled(&neg, theta);
            g
        };
        let recovered = |theta: f64| match minimize(&mix(theta), &lins) {
            QpOutcome::Optimal { point, .. } if self.budget.eval(point) >= 0.0 => Some(point),
            _ => None,
        };
        // θ = 1 maximizes I. If that is unbounded, back off towards the
        // cost until a bounded minimizer recovers the budget.
        let hi = match minimize(&neg, &lins) {
            QpOutcome::Optimal { point, .. } if self.budget.eval(point) >= 0.0 => {
                Some((1.0, point))
            }
            QpOutcome::Unbounded => (1..=60).find_map(|k| {
                let theta = 1.0 - 0.5f64.powi(k);
                recovered(theta).map(|p| (theta, p))
            }),
            _ => None,
        };
        let Some((mut theta_hi, mut best)) = hi else {
            return QpOutcome::Infeasible;
        };
        let mut theta_lo = 0.0;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (theta_lo + theta_hi);
            if mid <= theta_lo || mid >= theta_hi {
                break;
            }
            match recovered(mid) {
                Some(p) => {
                    theta_hi = mid;
                    best = p;
                }
                None => theta_lo = mid,
            }
        }
        QpOutcome::Optimal {
            point: best,
            value: f.eval(best),
        }
    }

    /// Axis-aligned box containing the feasible set, or `None` when the
    /// set is empty. Unbounded directions are capped at `fallback` beyond
    /// the lower corner.
    pub fn bounding_box(&self, fallback: f64) -> Option<[[f64; 2]; 2]> {
        let mut bounds = [[0.0; 2]; 2];
        for axis in 0..2 {
            for (slot, sign) in [(0, 1.0), (1, -1.0)] {
                let f = Quadratic2::linear(Affine2::coordinate(axis).scaled(sign));
                bounds[axis][slot] = match self.minimize_convex(&f) {
                    QpOutcome::Optimal { point, .. } => point[axis],
                    QpOutcome::Infeasible => return None,
                    QpOutcome::Unbounded => f64::NAN,
                };
            }
        }
        for b in &mut bounds {
            if b[0].is_nan() {
                b[0] = if b[1].is_nan() {
                    -fallback
                } else {
                    b[1] - fallback
                };
            }
            if b[1].is_nan() {
                b[1] = b[0] + fallback;
            }
        }
        Some(bounds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellOptimum {
    pub prices: IncentivePair,
    pub expected_cost: f64,
    /// `I_t` at the optimum.
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell_id: usize,
    pub case: PriceCase,
    pub n_sigma: i32,
    pub optimum: Option<CellOptimum>,
    pub warnings: Vec<String>,
}

impl CellResult {
    pub fn is_feasible(&self) -> bool {
        self.optimum.is_some()
    }
}

/// Solves one cell. The sub-problem already carries the cell's weights.
pub fn solve_cell(hour: &HourData, coeffs: &HourCoefficients, sub: &SubProblem) -> CellResult {
    let mut warnings = Vec::new();
    let optimum = match sub.minimize_convex(&sub.objective) {
        QpOutcome::Optimal { point, .. } => {
            let mut prices = IncentivePair::new(
                snap_to_floor(point[0], hour.r_wp_floor),
                snap_to_floor(point[1], hour.r_ls_floor),
            );
            if !sub.cell.contains(prices) {
                warnings.push(format!(
                    "cell {}: optimum ({}, {}) rounds outside the cell",
                    sub.cell.label(),
                    prices.r_wp,
                    prices.r_ls
                ));
                prices = IncentivePair::new(point[0], point[1]);
            }
            Some(CellOptimum {
                prices,
                expected_cost: expected_social_cost_unchecked(
                    hour,
                    coeffs,
                    prices,
                    &sub.cell,
                    &sub.weights,
                ),
                budget: profit_floor(hour, prices, &sub.cell, &sub.weights).i_t,
            })
        }
        QpOutcome::Infeasible => None,
        QpOutcome::Unbounded => {
            warnings.push(format!(
                "cell {}: objective unbounded below",
                sub.cell.label()
            ));
            None
        }
    };
    CellResult {
        cell_id: sub.cell.id,
        case: sub.cell.case,
        n_sigma: sub.cell.n_sigma,
        optimum,
        warnings,
    }
}

/// Undo rounding that left a floor-bound coordinate just below its floor.
fn snap_to_floor(v: f64, floor: f64) -> f64 {
    if v < floor && floor - v <= 1e-9 * floor.abs().max(1.0) {
        floor
    } else {
        v
    }
}

/// The cell's cost formula, even when rounding put `prices` a hair
/// outside it.
fn expected_social_cost_unchecked(
    hour: &HourData,
    coeffs: &HourCoefficients,
    prices: IncentivePair,
    cell: &SubSpace,
    weights: &[f64],
) -> f64 {
    if cell.contains(prices) {
        expected_social_cost(hour, coeffs, prices, cell, weights)
    } else {
        expected_cost_form(hour, coeffs, cell, weights).eval_at(prices)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourSolution {
    pub hour: usize,
    pub prices: IncentivePair,
    pub case: PriceCase,
    pub n_sigma: i32,
    pub cell_id: usize,
    pub expected_cost: f64,
    pub budget: f64,
    pub expected_total: f64,
    pub per_cell: Vec<CellResult>,
    pub x_prev_in: f64,
    pub x_prev_out: f64,
    pub warnings: Vec<String>,
}

/// Relative gap below which two cell optima count as tied; ties go to
/// the earlier cell (GE before LT, then lower inversion index).
const TIE_TOL: f64 = 1e-12;

/// Optimal prices for one hour given the previous hour's balancing total.
pub fn solve_hour_data(
    hour: &HourData,
    weights: &[f64],
    x_prev: f64,
    opts: &SolveOptions,
) -> Result<HourSolution> {
    if weights.len() != hour.n_prosumers() + 1 {
        return Err(Error::Input(format!(
            "{} scenario weights for {} prosumers",
            weights.len(),
            hour.n_prosumers()
        )));
    }
    let partition = build_partition(hour);
    let coeffs = HourCoefficients::new(hour);
    let subs: Vec<SubProblem> = partition
        .cells
        .iter()
        .map(|cell| assemble(hour, &coeffs, cell, weights, x_prev))
        .collect();
    let mut per_cell: Vec<CellResult> = subs
        .par_iter()
        .map(|sub| solve_cell(hour, &coeffs, sub))
        .collect();

    if opts.verify {
        let checks: Vec<Option<String>> = subs
            .par_iter()
            .zip(per_cell.par_iter())
            .map(|(sub, res)| verify::check_cell(hour, sub, res, opts.grid_resolution))
            .collect();
        for (res, warning) in per_cell.iter_mut().zip(checks) {
            res.warnings.extend(warning);
        }
    }

    let mut best: Option<(usize, CellOptimum)> = None;
    for (i, res) in per_cell.iter().enumerate() {
        let Some(opt) = res.optimum else { continue };
        let better = match best {
            None => true,
            Some((_, b)) => {
                opt.expected_cost < b.expected_cost - TIE_TOL * b.expected_cost.abs().max(1.0)
            }
        };
        if better {
            best = Some((i, opt));
        }
    }
    let Some((idx, opt)) = best else {
        return Err(Error::HourInfeasible {
            hour: hour.hour,
            families: diagnose(hour, &coeffs, &subs),
        });
    };
    let cell = &partition.cells[idx];
    let expected = expected_total(hour, opt.prices, weights);
    let x_prev_out = match &opts.carry {
        CarryMode::Planning => expected,
        CarryMode::Realized(s) => {
            if s.len() != hour.n_prosumers() {
                return Err(Error::Input(format!(
                    "carry scenario has {} prosumers, hour has {}",
                    s.len(),
                    hour.n_prosumers()
                )));
            }
            total_balancing(hour, s.n_wp(), opt.prices)
        }
    };
    let warnings = per_cell
        .iter()
        .flat_map(|c| c.warnings.iter().cloned())
        .collect();
    Ok(HourSolution {
        hour: hour.hour,
        prices: opt.prices,
        case: cell.case,
        n_sigma: cell.n_sigma,
        cell_id: cell.id,
        expected_cost: opt.expected_cost,
        budget: opt.budget,
        expected_total: expected,
        per_cell,
        x_prev_in: x_prev,
        x_prev_out,
        warnings,
    })
}

/// Constraint families whose removal makes some cell feasible.
fn diagnose(hour: &HourData, coeffs: &HourCoefficients, subs: &[SubProblem]) -> Vec<String> {
    let families = [
        ConstraintFamily::Ramp,
        ConstraintFamily::Budget,
        ConstraintFamily::Floor,
    ];
    let mut found: Vec<String> = families
        .iter()
        .filter(|&&fam| {
            subs.iter()
                .any(|s| solve_cell(hour, coeffs, &s.without(fam)).is_feasible())
        })
        .map(ToString::to_string)
        .collect();
    if found.is_empty() {
        found.push(
            families
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" + "),
        );
    }
    found
}

pub fn solve_hour(
    instance: &MarketInstance,
    t: usize,
    weights: &[f64],
    x_prev: f64,
    opts: &SolveOptions,
) -> Result<HourSolution> {
    solve_hour_data(&instance.hour_data(t)?, weights, x_prev, opts)
}

/// Solves every hour in order, chaining the ramp reference.
pub fn solve_day(instance: &MarketInstance, opts: &SolveOptions) -> Result<Vec<HourSolution>> {
    instance.ensure_valid()?;
    let weights = SelectionModel::new(instance.q_vector())?.weights();
    let mut x_prev = instance.ea.x_prev_init;
    let mut out = Vec::with_capacity(instance.horizon);
    for t in 1..=instance.horizon {
        let sol = solve_hour(instance, t, &weights, x_prev, opts)?;
        x_prev = sol.x_prev_out;
        out.push(sol);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    pub(crate) fn hour() -> HourData {
        HourData {
            hour: 1,
            a: 0.2,
            b: 0.5,
            demand: vec![20.0, 20.2, 19.9, 20.1],
            wind_mean: vec![5.0; 4],
            wind_second_moment: vec![27.0; 4],
            c_up: 30.0,
            c_down: 20.0,
            r_wp_floor: 10.0,
            r_ls_floor: 10.0,
            ramp_up: 10.0,
            ramp_down: -10.0,
        }
    }

    fn weights() -> Vec<f64> {
        SelectionModel::new(vec![0.35, 0.5, 0.65, 0.7])
            .unwrap()
            .weights()
    }

    #[test]
    fn solution_respects_every_constraint() {
        let h = hour();
        let w = weights();
        let sol = solve_hour_data(&h, &w, 0.0, &SolveOptions::default()).unwrap();
        let p = sol.prices;
        assert!(p.r_wp >= h.r_wp_floor - 1e-9 && p.r_ls >= h.r_ls_floor - 1e-9);
        let part = build_partition(&h);
        assert_eq!(part.classify(p).id, sol.cell_id);
        assert!(sol.budget >= -1e-9);
        for n in [0, 4] {
            let x = total_balancing(&h, n, p);
            assert!(x <= h.ramp_up + 1e-9 && x >= h.ramp_down - 1e-9);
        }
    }

    #[test]
    fn verify_mode_finds_no_better_grid_point() {
        let h = hour();
        let opts = SolveOptions {
            verify: true,
            grid_resolution: 120,
            ..Default::default()
        };
        let sol = solve_hour_data(&h, &weights(), 0.0, &opts).unwrap();
        assert!(sol.warnings.is_empty(), "{:?}", sol.warnings);
    }

    #[test]
    fn impossible_floors_are_reported() {
        let mut h = hour();
        // Prices this high force a large injection, beyond the ramp limit.
        h.r_wp_floor = 500.0;
        h.r_ls_floor = 500.0;
        match solve_hour_data(&h, &weights(), 0.0, &SolveOptions::default()) {
            Err(Error::HourInfeasible { hour, families }) => {
                assert_eq!(hour, 1);
                assert_eq!(families, vec!["price floors".to_string()]);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn relaxing_budget_never_costs_more() {
        let h = hour();
        let w = weights();
        let part = build_partition(&h);
        let coeffs = HourCoefficients::new(&h);
        for cell in &part.cells {
            let sub = assemble(&h, &coeffs, cell, &w, 0.0);
            let full = solve_cell(&h, &coeffs, &sub);
            let relaxed = solve_cell(&h, &coeffs, &sub.without(ConstraintFamily::Budget));
            if let (Some(f), Some(r)) = (full.optimum, relaxed.optimum) {
                assert!(r.expected_cost <= f.expected_cost + 1e-9 * f.expected_cost.abs().max(1.0));
            }
            if full.is_feasible() {
                assert!(relaxed.is_feasible());
            }
        }
    }

    #[test]
    fn realized_carry_uses_scenario_total() {
        let h = hour();
        let s = Scenario::all_wp(4);
        let opts = SolveOptions {
            carry: CarryMode::Realized(s),
            ..Default::default()
        };
        let sol = solve_hour_data(&h, &weights(), 0.0, &opts).unwrap();
        assert_eq!(sol.x_prev_out, total_balancing(&h, 4, sol.prices));
    }
}
