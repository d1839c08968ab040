//! TOML run configuration.
//!
//! ```toml
//! horizon = 24
//!
//! [generator]
//! a = 0.2
//! b = 0.5
//! c = 1.0
//!
//! [constraints]            # each value: a scalar or one entry per hour
//! r_wp_floor = 10.0
//! r_ls_floor = 10.0
//! ramp_up = 10.0
//! ramp_down = -10.0
//! x_prev_init = 0.0
//!
//! [prices]                 # exactly one of `csv` / `synthetic`
//! synthetic = { up_level = 46.0, down_level = 33.0, seed = 2018 }
//!
//! [community]              # `builtin`, or CSV profiles plus q
//! demand_csv = "demand.csv"
//! wind_mean_csv = "wind_mean.csv"
//! q = [0.35, 0.5, 0.65, 0.7]
//! capacity = 10.0
//! spread = 20.0
//! ```
//!
//! Relative paths resolve against the configuration file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use ea_pricing::model::{
    EaConstraints, EbmPrices, GeneratorCost, MarketInstance, ProsumerProfile, WindModelParams,
};
use ea_pricing::synthetic::{four_prosumer_profiles, PriceGenerator};
use serde::Deserialize;

use crate::csvio::{read_prices, read_profiles};
use crate::error::{CliError, Result};

pub const BUILTIN_COMMUNITY: &str = "four-prosumer-day";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Series {
    Scalar(f64),
    Values(Vec<f64>),
}

impl Series {
    fn expand(&self, len: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            Series::Scalar(v) => Ok(vec![*v; len]),
            Series::Values(v) if v.len() == len => Ok(v.clone()),
            Series::Values(v) => Err(CliError::Input(format!(
                "{field}: {} values, expected {len}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    pub r_wp_floor: Series,
    pub r_ls_floor: Series,
    pub ramp_up: Series,
    pub ramp_down: Series,
    #[serde(default)]
    pub x_prev_init: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceSection {
    pub csv: Option<PathBuf>,
    pub synthetic: Option<PriceGenerator>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunitySection {
    pub builtin: Option<String>,
    pub demand_csv: Option<PathBuf>,
    pub wind_mean_csv: Option<PathBuf>,
    pub q: Option<Vec<f64>>,
    pub capacity: Option<Series>,
    pub spread: Option<Series>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub horizon: Option<usize>,
    pub generator: GeneratorCost,
    pub constraints: ConstraintSection,
    #[serde(default)]
    pub prices: PriceSection,
    #[serde(default)]
    pub community: CommunitySection,
}

/// Command-line replacements for the configured data sources.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub prices: Option<PathBuf>,
    pub demand: Option<PathBuf>,
    pub wind_mean: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn parse_config(text: &str, origin: &Path) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| CliError::Input(format!("{}: {e}", origin.display())))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn check_len(what: &str, got: usize, horizon: usize) -> Result<()> {
    if got != horizon {
        return Err(CliError::Input(format!(
            "{what} covers {got} hours, horizon is {horizon}"
        )));
    }
    Ok(())
}

/// Reads the configuration at `path`, applies `overrides` and validates
/// the resulting instance.
pub fn load_instance(path: &Path, overrides: &Overrides) -> Result<MarketInstance> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg = parse_config(&text, path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    build_instance(&cfg, base, overrides)
}

pub fn build_instance(
    cfg: &ConfigFile,
    base: &Path,
    overrides: &Overrides,
) -> Result<MarketInstance> {
    let ebm = load_prices(cfg, base, overrides)?;
    let horizon = cfg.horizon.unwrap_or(ebm.up.len());
    if horizon == 0 {
        return Err(CliError::Input("horizon must be at least 1".into()));
    }
    check_len("regulation prices", ebm.up.len(), horizon)?;
    let prosumers = load_community(&cfg.community, base, overrides, horizon)?;
    let c = &cfg.constraints;
    let instance = MarketInstance {
        gen: cfg.generator,
        prosumers,
        ebm,
        ea: EaConstraints {
            r_wp_floor: c.r_wp_floor.expand(horizon, "r_wp_floor")?,
            r_ls_floor: c.r_ls_floor.expand(horizon, "r_ls_floor")?,
            ramp_up: c.ramp_up.expand(horizon, "ramp_up")?,
            ramp_down: c.ramp_down.expand(horizon, "ramp_down")?,
            x_prev_init: c.x_prev_init,
        },
        horizon,
    };
    instance.ensure_valid()?;
    Ok(instance)
}

fn load_prices(cfg: &ConfigFile, base: &Path, overrides: &Overrides) -> Result<EbmPrices> {
    if let Some(p) = &overrides.prices {
        return read_prices(p);
    }
    match (&cfg.prices.csv, &cfg.prices.synthetic) {
        (Some(p), None) => read_prices(&resolve(base, p)),
        (None, Some(gen)) => {
            let mut gen = *gen;
            if let Some(h) = cfg.horizon {
                gen.horizon = h;
            }
            if let Some(seed) = overrides.seed {
                gen.seed = seed;
            }
            Ok(gen.generate()?)
        }
        (None, None) => Err(CliError::Input(
            "[prices] needs `csv` or `synthetic`".into(),
        )),
        (Some(_), Some(_)) => Err(CliError::Input(
            "[prices] takes only one of `csv` and `synthetic`".into(),
        )),
    }
}

fn load_community(
    sec: &CommunitySection,
    base: &Path,
    overrides: &Overrides,
    horizon: usize,
) -> Result<Vec<ProsumerProfile>> {
    let mut profiles = match &sec.builtin {
        Some(name) if name == BUILTIN_COMMUNITY => four_prosumer_profiles(horizon),
        Some(name) => {
            return Err(CliError::Input(format!(
                "unknown builtin community {name:?} (available: {BUILTIN_COMMUNITY})"
            )))
        }
        None => Vec::new(),
    };
    let demand_path = overrides
        .demand
        .clone()
        .or_else(|| sec.demand_csv.as_ref().map(|p| resolve(base, p)));
    let wind_path = overrides
        .wind_mean
        .clone()
        .or_else(|| sec.wind_mean_csv.as_ref().map(|p| resolve(base, p)));
    let demand = demand_path.as_deref().map(read_profiles).transpose()?;
    let wind = wind_path.as_deref().map(read_profiles).transpose()?;

    if profiles.is_empty() {
        let (Some(demand), Some(wind)) = (demand, wind) else {
            return Err(CliError::Input(
                "[community] needs `builtin` or both `demand_csv` and `wind_mean_csv`".into(),
            ));
        };
        let n = demand.len();
        if wind.len() != n {
            return Err(CliError::Input(format!(
                "{n} demand columns but {} wind columns",
                wind.len()
            )));
        }
        let q = sec
            .q
            .clone()
            .ok_or_else(|| CliError::Input("[community] q is required with CSV profiles".into()))?;
        if q.len() != n {
            return Err(CliError::Input(format!(
                "{} q values for {n} prosumers",
                q.len()
            )));
        }
        let capacity = sec
            .capacity
            .clone()
            .unwrap_or(Series::Scalar(10.0))
            .expand(n, "capacity")?;
        let spread = sec
            .spread
            .clone()
            .unwrap_or(Series::Scalar(20.0))
            .expand(n, "spread")?;
        for i in 0..n {
            profiles.push(ProsumerProfile {
                id: i + 1,
                demand: demand[i].clone(),
                wind: WindModelParams {
                    capacity: capacity[i],
                    mean_profile: wind[i].clone(),
                    spread: spread[i],
                },
                q: q[i],
            });
        }
    } else {
        let n = profiles.len();
        for (what, series) in [("demand", &demand), ("wind mean", &wind)] {
            if let Some(s) = series {
                if s.len() != n {
                    return Err(CliError::Input(format!(
                        "{what} CSV has {} columns for {n} prosumers",
                        s.len()
                    )));
                }
            }
        }
        for (i, p) in profiles.iter_mut().enumerate() {
            if let Some(d) = &demand {
                p.demand = d[i].clone();
            }
            if let Some(w) = &wind {
                p.wind.mean_profile = w[i].clone();
            }
            if let Some(q) = &sec.q {
                p.q = *q.get(i).ok_or_else(|| {
                    CliError::Input(format!("{} q values for {n} prosumers", q.len()))
                })?;
            }
        }
    }
    for p in &profiles {
        check_len(
            &format!("demand of prosumer {}", p.id),
            p.demand.len(),
            horizon,
        )?;
        check_len(
            &format!("wind mean of prosumer {}", p.id),
            p.wind.mean_profile.len(),
            horizon,
        )?;
    }
    Ok(profiles)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [generator]
        a = 0.2
        b = 0.5
        c = 1.0
        [constraints]
        r_wp_floor = 10.0
        r_ls_floor = [10.0, 11.0]
        ramp_up = 10.0
        ramp_down = -10.0
        [prices]
        synthetic = { horizon = 2, seed = 3 }
        [community]
        builtin = "four-prosumer-day"
    "#;

    #[test]
    fn scalar_and_series_fields() {
        let cfg = parse_config(MINIMAL, Path::new("inline")).unwrap();
        let inst = build_instance(&cfg, Path::new("."), &Overrides::default()).unwrap();
        assert_eq!(inst.horizon, 2);
        assert_eq!(inst.ea.r_wp_floor, vec![10.0, 10.0]);
        assert_eq!(inst.ea.r_ls_floor, vec![10.0, 11.0]);
    }

    #[test]
    fn series_length_mismatch() {
        let text = MINIMAL.replace("[10.0, 11.0]", "[10.0, 11.0, 12.0]");
        let cfg = parse_config(&text, Path::new("inline")).unwrap();
        let err = build_instance(&cfg, Path::new("."), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("r_ls_floor"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("[generator]", "hours = 3\n[generator]");
        assert!(parse_config(&text, Path::new("inline")).is_err());
    }
}
