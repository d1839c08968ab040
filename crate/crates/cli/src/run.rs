//! Mode orchestration and report emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ea_pricing::equilibrium::best_response_oracle;
use ea_pricing::model::MarketInstance;
use ea_pricing::objective::{social_cost, HourCoefficients};
use ea_pricing::selection::{enumerate_scenarios, DEFAULT_SCENARIO_CAP};
use ea_pricing::settlement::{settle, usm_baseline};
use ea_pricing::solver::{solve_day, CarryMode, HourSolution, SinglePackageProblem, SolveOptions};
use ea_pricing::{BalancingSide, Scenario, SelectionModel};
use serde::{Deserialize, Serialize};

use crate::csvio::{write_prices, write_records};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Optimize,
    Settle,
    Scenarios,
    UsmCompare,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: Mode,
    pub hour: Option<usize>,
    pub scenario: Option<u64>,
    pub out: PathBuf,
    pub verify: bool,
    pub grid_resolution: usize,
    /// Carry the balancing total of this scenario instead of the expectation.
    pub carry_scenario: Option<u64>,
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub summary: String,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTableRow {
    pub hour: usize,
    pub r_wp: f64,
    pub r_ls: f64,
    pub case: String,
    pub n_sigma: i32,
    pub expected_cost: f64,
    pub budget_floor: f64,
    pub expected_total: f64,
    pub x_prev_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub hour: usize,
    pub cell_id: usize,
    pub case: String,
    pub n_sigma: i32,
    pub feasible: bool,
    pub r_wp: Option<f64>,
    pub r_ls: Option<f64>,
    pub expected_cost: Option<f64>,
    pub budget_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub hour: usize,
    pub mask: u64,
    pub scenario: String,
    pub n_wp: usize,
    pub probability: f64,
    pub x_tot: f64,
    pub cb_used: String,
    pub social_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub index: usize,
    pub mask: u64,
    pub scenario: String,
    pub n_wp: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementRow {
    pub hour: usize,
    pub mask: u64,
    pub prosumer: usize,
    pub package: String,
    pub x: f64,
    pub service_cost: f64,
    pub expected_da_cost: f64,
    pub total_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementSummaryRow {
    pub hour: usize,
    pub mask: u64,
    pub scenario: String,
    pub n_wp: usize,
    pub probability: f64,
    pub x_tot: f64,
    pub da_demand: f64,
    pub cb_used: String,
    pub ea_profit: f64,
    pub z_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsmRow {
    pub hour: usize,
    pub optimized_cost: f64,
    pub usm_cost: f64,
    pub usm_x_tot: f64,
    pub usm_cb_used: String,
    pub single_package_r_wp: Option<f64>,
    pub single_package_cost: Option<f64>,
}

fn check_hour(instance: &MarketInstance, hour: usize) -> Result<usize> {
    if hour == 0 || hour > instance.horizon {
        return Err(CliError::Input(format!(
            "--hour {hour} outside 1..={}",
            instance.horizon
        )));
    }
    Ok(hour)
}

fn check_mask(instance: &MarketInstance, mask: u64) -> Result<Scenario> {
    Ok(Scenario::from_mask(mask, instance.n_prosumers())?)
}

fn emit<T: Serialize>(report: &mut RunReport, dir: &Path, name: &str, rows: &[T]) -> Result<()> {
    let path = dir.join(name);
    write_records(&path, rows)?;
    report.files.push(path);
    Ok(())
}

pub fn run(instance: &MarketInstance, opts: &RunOptions) -> Result<RunReport> {
    fs::create_dir_all(&opts.out).map_err(|e| CliError::io(&opts.out, e))?;
    let mut report = RunReport::default();
    match opts.mode {
        Mode::Scenarios => scenarios(instance, opts, &mut report)?,
        Mode::Optimize => optimize(instance, opts, &mut report)?,
        Mode::Settle => settlement(instance, opts, &mut report)?,
        Mode::UsmCompare => usm_compare(instance, opts, &mut report)?,
    }
    if !report.warnings.is_empty() {
        let _ = writeln!(report.summary, "\nwarnings:");
        for w in &report.warnings {
            let _ = writeln!(report.summary, "  {w}");
        }
    }
    let path = opts.out.join("summary.txt");
    fs::write(&path, &report.summary).map_err(|e| CliError::io(&path, e))?;
    report.files.push(path);
    Ok(report)
}

fn plan(
    instance: &MarketInstance,
    opts: &RunOptions,
    report: &mut RunReport,
) -> Result<Vec<HourSolution>> {
    let carry = match opts.carry_scenario {
        Some(mask) => CarryMode::Realized(check_mask(instance, mask)?),
        None => CarryMode::Planning,
    };
    let solve_opts = SolveOptions {
        verify: opts.verify,
        grid_resolution: opts.grid_resolution,
        carry,
    };
    let day = solve_day(instance, &solve_opts)?;
    report.warnings.extend(
        day.iter()
            .flat_map(|h| h.warnings.iter().map(|w| format!("hour {}: {w}", h.hour))),
    );
    Ok(day)
}

fn scenarios(instance: &MarketInstance, opts: &RunOptions, report: &mut RunReport) -> Result<()> {
    let model = SelectionModel::new(instance.q_vector())?;
    let all = enumerate_scenarios(instance.n_prosumers(), DEFAULT_SCENARIO_CAP)?;
    let mut rows = Vec::with_capacity(all.len());
    for (k, s) in all.iter().enumerate() {
        rows.push(ScenarioRow {
            index: k + 1,
            mask: s.mask(),
            scenario: s.to_string(),
            n_wp: s.n_wp(),
            probability: model.scenario_prob(s)?,
        });
    }
    emit(report, &opts.out, "scenarios.csv", &rows)?;
    let weights = model.weights();
    let _ = writeln!(
        report.summary,
        "{} selection scenarios for {} prosumers",
        rows.len(),
        instance.n_prosumers()
    );
    let _ = writeln!(
        report.summary,
        "Q(n) for n = 0..={}:",
        instance.n_prosumers()
    );
    for (n, q) in weights.iter().enumerate() {
        let _ = writeln!(report.summary, "  n={n}: {q}");
    }
    Ok(())
}

fn optimize(instance: &MarketInstance, opts: &RunOptions, report: &mut RunReport) -> Result<()> {
    let day = plan(instance, opts, report)?;
    let rows: Vec<PriceTableRow> = day
        .iter()
        .map(|h| PriceTableRow {
            hour: h.hour,
            r_wp: h.prices.r_wp,
            r_ls: h.prices.r_ls,
            case: h.case.to_string(),
            n_sigma: h.n_sigma,
            expected_cost: h.expected_cost,
            budget_floor: h.budget,
            expected_total: h.expected_total,
            x_prev_out: h.x_prev_out,
        })
        .collect();
    emit(report, &opts.out, "price_table.csv", &rows)?;
    let path = opts.out.join("regulation_prices.csv");
    write_prices(&path, &instance.ebm)?;
    report.files.push(path);

    let hour = check_hour(instance, opts.hour.unwrap_or(1))?;
    let sol = &day[hour - 1];
    let cells: Vec<CellRow> = sol
        .per_cell
        .iter()
        .map(|c| CellRow {
            hour,
            cell_id: c.cell_id,
            case: c.case.to_string(),
            n_sigma: c.n_sigma,
            feasible: c.is_feasible(),
            r_wp: c.optimum.map(|o| o.prices.r_wp),
            r_ls: c.optimum.map(|o| o.prices.r_ls),
            expected_cost: c.optimum.map(|o| o.expected_cost),
            budget_floor: c.optimum.map(|o| o.budget),
        })
        .collect();
    emit(report, &opts.out, "cells.csv", &cells)?;
    let dist = distribution(instance, sol)?;
    emit(report, &opts.out, "scenario_distribution.csv", &dist)?;

    let s = &mut report.summary;
    let _ = writeln!(
        s,
        "optimized {} hours for {} prosumers",
        day.len(),
        instance.n_prosumers()
    );
    let _ = writeln!(
        s,
        "{:>4} {:>10} {:>10} {:>4} {:>8} {:>12}",
        "hour", "R_WP", "R_LS", "case", "n_sigma", "E[cost]"
    );
    for r in &rows {
        let _ = writeln!(
            s,
            "{:>4} {:>10.4} {:>10.4} {:>4} {:>8} {:>12.4}",
            r.hour, r.r_wp, r.r_ls, r.case, r.n_sigma, r.expected_cost
        );
    }
    let total: f64 = rows.iter().map(|r| r.expected_cost).sum();
    let ls_below = rows.iter().filter(|r| r.r_ls < r.r_wp).count();
    let _ = writeln!(s, "day total expected cost: {total:.4}");
    let _ = writeln!(s, "hours with R_LS < R_WP: {ls_below} of {}", rows.len());
    let _ = writeln!(s, "scenario distribution reported for hour {hour}");
    Ok(())
}

/// Probability, balancing total and social cost of every scenario at the
/// hour's optimal prices.
fn distribution(instance: &MarketInstance, sol: &HourSolution) -> Result<Vec<DistributionRow>> {
    let hour = instance.hour_data(sol.hour)?;
    let coeffs = HourCoefficients::new(&hour);
    let model = SelectionModel::new(instance.q_vector())?;
    enumerate_scenarios(instance.n_prosumers(), DEFAULT_SCENARIO_CAP)?
        .into_iter()
        .map(|s| {
            let n = s.n_wp();
            let x_tot = ea_pricing::equilibrium::total_balancing(&hour, n, sol.prices);
            let side = BalancingSide::of_total(x_tot);
            Ok(DistributionRow {
                hour: sol.hour,
                mask: s.mask(),
                scenario: s.to_string(),
                n_wp: n,
                probability: model.scenario_prob(&s)?,
                x_tot,
                cb_used: side.to_string(),
                social_cost: social_cost(&hour, &coeffs, n, sol.prices, side),
            })
        })
        .collect()
}

fn settlement(instance: &MarketInstance, opts: &RunOptions, report: &mut RunReport) -> Result<()> {
    let day = plan(instance, opts, report)?;
    let hours: Vec<usize> = match opts.hour {
        Some(h) => vec![check_hour(instance, h)?],
        None => (1..=instance.horizon).collect(),
    };
    let scenarios = match opts.scenario {
        Some(mask) => vec![check_mask(instance, mask)?],
        None => enumerate_scenarios(instance.n_prosumers(), DEFAULT_SCENARIO_CAP)?,
    };
    let model = SelectionModel::new(instance.q_vector())?;
    let mut rows = Vec::new();
    let mut summary_rows = Vec::new();
    let mut min_margin = f64::INFINITY;
    for &t in &hours {
        let sol = &day[t - 1];
        let hour = instance.hour_data(t)?;
        for s in &scenarios {
            let rec = settle(instance, t, sol, s)?;
            if opts.verify {
                let oracle = best_response_oracle(&hour, s, sol.prices)?;
                let gap = rec
                    .prosumers
                    .iter()
                    .zip(&oracle.x)
                    .map(|(p, x)| (p.x - x).abs())
                    .fold(0.0, f64::max);
                if gap > 1e-9 {
                    report.warnings.push(format!(
                        "hour {t} scenario {s}: closed form differs from linear solve by {gap:e}"
                    ));
                }
            }
            min_margin = min_margin.min(rec.ea_profit - rec.z_hat);
            for p in &rec.prosumers {
                rows.push(SettlementRow {
                    hour: t,
                    mask: s.mask(),
                    prosumer: p.id,
                    package: if p.wholesale { "WP" } else { "LS" }.to_string(),
                    x: p.x,
                    service_cost: p.service_cost,
                    expected_da_cost: p.expected_da_cost,
                    total_cost: p.total_cost,
                });
            }
            summary_rows.push(SettlementSummaryRow {
                hour: t,
                mask: s.mask(),
                scenario: s.to_string(),
                n_wp: s.n_wp(),
                probability: model.scenario_prob(s)?,
                x_tot: rec.x_tot,
                da_demand: rec.da_demand,
                cb_used: rec.cb_used.to_string(),
                ea_profit: rec.ea_profit,
                z_hat: rec.z_hat,
            });
        }
    }
    emit(report, &opts.out, "settlement.csv", &rows)?;
    emit(report, &opts.out, "settlement_summary.csv", &summary_rows)?;
    let s = &mut report.summary;
    let _ = writeln!(
        s,
        "settled {} scenario(s) over {} hour(s)",
        scenarios.len(),
        hours.len()
    );
    let _ = writeln!(
        s,
        "smallest realized profit above its bound: {min_margin:.6}"
    );
    let expected: f64 = summary_rows
        .iter()
        .map(|r| r.probability * r.ea_profit)
        .sum();
    if opts.scenario.is_none() {
        let _ = writeln!(
            s,
            "expected aggregator profit over the settled hours: {expected:.4}"
        );
    }
    Ok(())
}

fn usm_compare(instance: &MarketInstance, opts: &RunOptions, report: &mut RunReport) -> Result<()> {
    let day = plan(instance, opts, report)?;
    let mut rows = Vec::with_capacity(day.len());
    for sol in &day {
        let usm = usm_baseline(instance, sol.hour)?;
        let single =
            SinglePackageProblem::new(&instance.hour_data(sol.hour)?, sol.x_prev_in).solve();
        rows.push(UsmRow {
            hour: sol.hour,
            optimized_cost: sol.expected_cost,
            usm_cost: usm.social_cost,
            usm_x_tot: usm.x_hat_tot,
            usm_cb_used: usm.side.to_string(),
            single_package_r_wp: single.map(|s| s.r_wp),
            single_package_cost: single.map(|s| s.cost),
        });
    }
    emit(report, &opts.out, "usm_compare.csv", &rows)?;
    let opt_total: f64 = rows.iter().map(|r| r.optimized_cost).sum();
    let usm_total: f64 = rows.iter().map(|r| r.usm_cost).sum();
    let s = &mut report.summary;
    let _ = writeln!(
        s,
        "{:>4} {:>14} {:>14} {:>14}",
        "hour", "optimized", "USM", "single-WP"
    );
    for r in &rows {
        let single = r
            .single_package_cost
            .map_or("infeasible".to_string(), |c| format!("{c:.4}"));
        let _ = writeln!(
            s,
            "{:>4} {:>14.4} {:>14.4} {:>14}",
            r.hour, r.optimized_cost, r.usm_cost, single
        );
    }
    let _ = writeln!(
        s,
        "day total: optimized {opt_total:.4}, USM {usm_total:.4}, difference {:.4}",
        usm_total - opt_total
    );
    Ok(())
}
