//! Pricing with the lump-sum package withdrawn: every prosumer is on the
//! wholesale package, so the problem is one-dimensional in `R_WP`.

use serde::{Deserialize, Serialize};

use crate::budget::profit_lower_bound;
use crate::equilibrium::{total_balancing, IncentivePair};
use crate::model::HourData;
use crate::objective::{social_cost_at_total, HourCoefficients};
use crate::partition::BalancingSide;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinglePackageSolution {
    pub r_wp: f64,
    pub side: BalancingSide,
    pub x_tot: f64,
    pub cost: f64,
    /// `Ẑ_N` at the optimum.
    pub budget: f64,
}

#[derive(Debug, Clone)]
pub struct SinglePackageProblem {
    hour: HourData,
    coeffs: HourCoefficients,
    x_prev: f64,
}

impl SinglePackageProblem {
    pub fn new(hour: &HourData, x_prev: f64) -> Self {
        Self {
            hour: hour.clone(),
            coeffs: HourCoefficients::new(hour),
            x_prev,
        }
    }

    fn n(&self) -> f64 {
        self.hour.n_prosumers() as f64
    }

    /// Price at which the community's balancing total is zero.
    pub fn pivot(&self) -> f64 {
        self.hour.boundary_rhs() / self.n()
    }

    pub fn total(&self, r_wp: f64) -> f64 {
        total_balancing(
            &self.hour,
            self.hour.n_prosumers(),
            IncentivePair::uniform(r_wp),
        )
    }

    pub fn side_of(&self, r_wp: f64) -> BalancingSide {
        BalancingSide::of_total(self.total(r_wp))
    }

    pub fn cost(&self, r_wp: f64) -> f64 {
        social_cost_at_total(
            &self.hour,
            &self.coeffs,
            self.total(r_wp),
            self.side_of(r_wp),
        )
    }

    pub fn budget(&self, r_wp: f64) -> f64 {
        profit_lower_bound(
            &self.hour,
            self.hour.n_prosumers(),
            IncentivePair::uniform(r_wp),
            self.side_of(r_wp),
        )
    }

    /// Floor, ramp and budget checked pointwise, budget to `tol`.
    pub fn is_feasible(&self, r_wp: f64, tol: f64) -> bool {
        let h = &self.hour;
        let dx = self.total(r_wp) - self.x_prev;
        r_wp >= h.r_wp_floor
            && dx <= h.ramp_up + tol
            && dx >= h.ramp_down - tol
            && self.budget(r_wp) >= -tol
    }

    /// Feasible `R_WP` interval on which the community balances on `side`.
    pub fn interval(&self, side: BalancingSide) -> Option<(f64, f64)> {
        let h = &self.hour;
        let (n, d, rhs) = (self.n(), h.scale(), h.boundary_rhs());
        let pivot = self.pivot();
        let (mut lo, mut hi) = match side {
            BalancingSide::Up => (f64::NEG_INFINITY, pivot),
            BalancingSide::Down => (pivot + 1e-9 * pivot.abs().max(1.0), f64::INFINITY),
        };
        lo = lo.max(h.r_wp_floor);
        lo = lo.max((rhs - d * (h.ramp_up + self.x_prev)) / n);
        hi = hi.min((rhs - d * (h.ramp_down + self.x_prev)) / n);
        // Ẑ_N(R) = −(N/D) R² + (N b/D + N m + C N/D) R − C rhs/D ≥ 0
        let c = side.price(h);
        let qa = -n / d;
        let qb = n * h.b / d + n * h.min_net_demand() + c * n / d;
        let qc = -c * rhs / d;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        // Cancellation-free roots of a quadratic.
        let t = -0.5 * (qb + qb.signum() * root);
        let (r1, r2) = if t == 0.0 {
            (0.0, 0.0)
        } else {
            (t / qa, qc / t)
        };
        lo = lo.max(r1.min(r2));
        hi = hi.min(r1.max(r2));
        (lo <= hi).then_some((lo, hi))
    }

    pub fn solve(&self) -> Option<SinglePackageSolution> {
        let h = &self.hour;
        let mut best: Option<SinglePackageSolution> = None;
        for side in [BalancingSide::Up, BalancingSide::Down] {
            let Some((lo, hi)) = self.interval(side) else {
                continue;
            };
            // a x² + Φ x is minimized at x = −Φ / 2a.
            let x_star = -self.coeffs.phi(side) / (2.0 * h.a);
            let r_star = (h.boundary_rhs() - h.scale() * x_star) / self.n();
            let r_wp = r_star.clamp(lo, hi);
            let x_tot = self.total(r_wp);
            let cost = social_cost_at_total(h, &self.coeffs, x_tot, side);
            if best.is_none_or(|b| cost < b.cost) {
                best = Some(SinglePackageSolution {
                    r_wp,
                    side,
                    x_tot,
                    cost,
                    budget: self.budget(r_wp),
                });
            }
        }
        best
    }
}
