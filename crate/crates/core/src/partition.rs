//! Partition of the `(R_WP, R_LS)` plane into the `2N + 4` cells on which
//! the balancing price of every `n`-WP scenario is fixed.
//!
//! All sign-flip lines `n R_WP + (N−n) R_LS = rhs` pass through the apex
//! `(rhs/N, rhs/N)` on the diagonal, so each cell is a wedge around it.
//! Cells with `R_LS ≥ R_WP` (case [`PriceCase::Ge`]) see the community
//! balance grow with `n`; cells with `R_LS < R_WP` see it shrink.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::equilibrium::{boundary_lhs, IncentivePair};
use crate::model::HourData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PriceCase {
    /// `R_LS ≥ R_WP` (diagonal included).
    Ge,
    /// `R_LS < R_WP`.
    Lt,
}

impl fmt::Display for PriceCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriceCase::Ge => "GE",
            PriceCase::Lt => "LT",
        })
    }
}

/// Which regulation price clears the community imbalance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BalancingSide {
    /// Community short (`x_tot ≥ 0`), settled at the up-regulation price.
    Up,
    /// Community long (`x_tot < 0`), settled at the down-regulation price.
    Down,
}

impl BalancingSide {
    pub fn of_total(x_tot: f64) -> Self {
        if x_tot >= 0.0 {
            BalancingSide::Up
        } else {
            BalancingSide::Down
        }
    }

    pub fn price(self, hour: &HourData) -> f64 {
        match self {
            BalancingSide::Up => hour.c_up,
            BalancingSide::Down => hour.c_down,
        }
    }
}

impl fmt::Display for BalancingSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BalancingSide::Up => "UP",
            BalancingSide::Down => "DOWN",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bound {
    /// `n R_WP + (N−n) R_LS ≤ rhs` when `below`, `> rhs` otherwise.
    Line {
        n: usize,
        below: bool,
    },
    Diagonal(PriceCase),
}

/// Linear inequality `coef · (R_WP, R_LS) ≤ rhs`, or `< rhs` when strict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub coef: [f64; 2],
    pub rhs: f64,
    pub strict: bool,
    bound: Bound,
}

impl HalfPlane {
    fn line(n_prosumers: usize, n: usize, rhs: f64, below: bool) -> Self {
        let coef = [n as f64, (n_prosumers - n) as f64];
        let (coef, rhs) = if below {
            (coef, rhs)
        } else {
            ([-coef[0], -coef[1]], -rhs)
        };
        Self {
            coef,
            rhs,
            strict: !below,
            bound: Bound::Line { n, below },
        }
    }

    fn diagonal(case: PriceCase) -> Self {
        match case {
            PriceCase::Ge => Self {
                coef: [1.0, -1.0],
                rhs: 0.0,
                strict: false,
                bound: Bound::Diagonal(case),
            },
            PriceCase::Lt => Self {
                coef: [-1.0, 1.0],
                rhs: 0.0,
                strict: true,
                bound: Bound::Diagonal(case),
            },
        }
    }

    /// Exact membership, evaluated the same way [`Partition::classify`]
    /// does so that neighbouring cells never overlap.
    pub fn contains(&self, n_prosumers: usize, p: IncentivePair) -> bool {
        match self.bound {
            Bound::Line { n, below } => {
                let lhs = boundary_lhs(n_prosumers, n, p);
                let rhs = if below { self.rhs } else { -self.rhs };
                if below {
                    lhs <= rhs
                } else {
                    lhs > rhs
                }
            }
            Bound::Diagonal(PriceCase::Ge) => p.r_ls >= p.r_wp,
            Bound::Diagonal(PriceCase::Lt) => p.r_ls < p.r_wp,
        }
    }

    /// Which sign-flip line this half-plane comes from, if any.
    pub fn boundary_index(&self) -> Option<usize> {
        match self.bound {
            Bound::Line { n, .. } => Some(n),
            Bound::Diagonal(_) => None,
        }
    }
}

impl fmt::Display for HalfPlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.strict { "<" } else { "<=" };
        write!(
            f,
            "{:+} R_WP {:+} R_LS {op} {}",
            self.coef[0], self.coef[1], self.rhs
        )
    }
}

/// Line `n R_WP + (N−n) R_LS = rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryLine {
    pub n: usize,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubSpace {
    /// Position in [`Partition::cells`].
    pub id: usize,
    pub case: PriceCase,
    /// Inversion point in `-1..=N`.
    pub n_sigma: i32,
    pub half_planes: Vec<HalfPlane>,
    /// Balancing side for each `n = 0..=N`.
    pub cb_table: Vec<BalancingSide>,
    n_prosumers: usize,
}

impl SubSpace {
    pub fn contains(&self, p: IncentivePair) -> bool {
        self.half_planes
            .iter()
            .all(|h| h.contains(self.n_prosumers, p))
    }

    pub fn side(&self, n: usize) -> BalancingSide {
        self.cb_table[n]
    }

    pub fn label(&self) -> String {
        format!("{}[{}]", self.case, self.n_sigma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub n_prosumers: usize,
    pub rhs: f64,
    pub cells: Vec<SubSpace>,
}

fn cb_table(case: PriceCase, n_prosumers: usize, n_sigma: i32) -> Vec<BalancingSide> {
    use BalancingSide::{Down, Up};
    (0..=n_prosumers as i32)
        .map(|n| match (case, n <= n_sigma) {
            (PriceCase::Ge, true) => Down,
            (PriceCase::Ge, false) => Up,
            (PriceCase::Lt, true) => Up,
            (PriceCase::Lt, false) => Down,
        })
        .collect()
}

pub fn build_partition(hour: &HourData) -> Partition {
    let n_all = hour.n_prosumers();
    let rhs = hour.boundary_rhs();
    let mut cells = Vec::with_capacity(2 * n_all + 4);
    for case in [PriceCase::Ge, PriceCase::Lt] {
        // In GE cells the first line is crossed upwards (x_n < 0 before the
        // inversion point); in LT cells it is the reverse.
        let first_below = case == PriceCase::Lt;
        for n_sigma in -1..=n_all as i32 {
            let mut half_planes = Vec::with_capacity(3);
            if n_sigma >= 0 {
                half_planes.push(HalfPlane::line(n_all, n_sigma as usize, rhs, first_below));
            }
            if n_sigma < n_all as i32 {
                half_planes.push(HalfPlane::line(
                    n_all,
                    (n_sigma + 1) as usize,
                    rhs,
                    !first_below,
                ));
            }
            half_planes.push(HalfPlane::diagonal(case));
            cells.push(SubSpace {
                id: cells.len(),
                case,
                n_sigma,
                half_planes,
                cb_table: cb_table(case, n_all, n_sigma),
                n_prosumers: n_all,
            });
        }
    }
    Partition {
        n_prosumers: n_all,
        rhs,
        cells,
    }
}

impl Partition {
    pub fn lines(&self) -> Vec<BoundaryLine> {
        (0..=self.n_prosumers)
            .map(|n| BoundaryLine { n, rhs: self.rhs })
            .collect()
    }

    /// Common intersection point of every boundary line.
    pub fn apex(&self) -> IncentivePair {
        IncentivePair::uniform(self.rhs / self.n_prosumers as f64)
    }

    pub fn cell(&self, case: PriceCase, n_sigma: i32) -> &SubSpace {
        let offset = match case {
            PriceCase::Ge => 0,
            PriceCase::Lt => self.n_prosumers + 2,
        };
        &self.cells[offset + (n_sigma + 1) as usize]
    }

    /// The unique cell containing `p`.
    pub fn classify(&self, p: IncentivePair) -> &SubSpace {
        let n_all = self.n_prosumers;
        let case = if p.r_ls >= p.r_wp {
            PriceCase::Ge
        } else {
            PriceCase::Lt
        };
        // Along n the left-hand sides are monotone, so the qualifying n form
        // a prefix and the inversion point is its last element.
        let qualifies = |n: usize| {
            let lhs = boundary_lhs(n_all, n, p);
            match case {
                PriceCase::Ge => lhs > self.rhs,
                PriceCase::Lt => lhs <= self.rhs,
            }
        };
        let n_sigma = (0..=n_all).take_while(|&n| qualifies(n)).count() as i32 - 1;
        let cell = self.cell(case, n_sigma);
        debug_assert!(cell.contains(p), "classify/contains disagree at {p:?}");
        cell
    }

    /// Plain-text dump of the lines and each cell's price table.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "N = {}, rhs = {}", self.n_prosumers, self.rhs);
        for line in self.lines() {
            let _ = writeln!(
                out,
                "line n={}: {} R_WP + {} R_LS = {}",
                line.n,
                line.n,
                self.n_prosumers - line.n,
                line.rhs
            );
        }
        for cell in &self.cells {
            let _ = writeln!(out, "cell {} {}:", cell.id, cell.label());
            for h in &cell.half_planes {
                let _ = writeln!(out, "  {h}");
            }
            let table: Vec<String> = cell.cb_table.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "  C_B by n: {}", table.join(" "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::total_balancing;
    use BalancingSide::{Down, Up};

    /// N = 2, a = 1, b = 0, Σ(u − μ) = 3.
    fn small_hour() -> HourData {
        HourData {
            hour: 1,
            a: 1.0,
            b: 0.0,
            demand: vec![6.5, 6.5],
            wind_mean: vec![5.0, 5.0],
            wind_second_moment: vec![26.0, 26.0],
            c_up: 40.0,
            c_down: 20.0,
            r_wp_floor: 1.0,
            r_ls_floor: 1.0,
            ramp_up: 10.0,
            ramp_down: -10.0,
        }
    }

    #[test]
    fn cell_count_and_rhs() {
        let p = build_partition(&small_hour());
        assert_eq!(p.cells.len(), 8);
        assert!((p.rhs - 9.0).abs() < 1e-12);
        let lines = p.lines();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| (l.rhs - 9.0).abs() < 1e-12));
    }

    #[test]
    fn example_point_classification() {
        let h = small_hour();
        let part = build_partition(&h);
        let p = IncentivePair::new(3.0, 5.0);
        let cell = part.classify(p);
        assert_eq!(cell.case, PriceCase::Ge);
        assert_eq!(cell.n_sigma, 0);
        assert_eq!(cell.cb_table, vec![Down, Up, Up]);
        let totals: Vec<f64> = (0..=2).map(|n| total_balancing(&h, n, p)).collect();
        for (got, want) in totals.iter().zip([-1.0 / 3.0, 1.0 / 3.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_prices() {
        let part = build_partition(&small_hour());
        let low = part.classify(IncentivePair::new(0.5, 0.3));
        assert!(low.cb_table.iter().all(|&s| s == Up));
        let high = part.classify(IncentivePair::new(400.0, 500.0));
        assert!(high.cb_table.iter().all(|&s| s == Down));
        let high_lt = part.classify(IncentivePair::new(500.0, 400.0));
        assert!(high_lt.cb_table.iter().all(|&s| s == Down));
    }

    #[test]
    fn diagonal_belongs_to_ge() {
        let part = build_partition(&small_hour());
        let cell = part.classify(IncentivePair::uniform(4.5));
        assert_eq!(cell.case, PriceCase::Ge);
        // x_n = 0 exactly on the apex: every n is short-or-balanced.
        assert!(cell.cb_table.iter().all(|&s| s == Up));
    }

    #[test]
    fn apex_lies_on_every_line() {
        let part = build_partition(&small_hour());
        let apex = part.apex();
        for line in part.lines() {
            let lhs = boundary_lhs(2, line.n, apex);
            assert!((lhs - line.rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn report_mentions_every_cell() {
        let part = build_partition(&small_hour());
        let text = part.report();
        assert_eq!(text.matches("cell ").count(), 8);
        assert!(text.contains("GE[-1]") && text.contains("LT[2]"));
    }
}
