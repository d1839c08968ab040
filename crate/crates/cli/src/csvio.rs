//! CSV ingestion and emission.
//!
//! Inputs are hour-indexed: the first column is `hour`, running
//! `1..=horizon` without gaps. Regulation prices use
//! `hour,up_price,down_price`; per-prosumer profiles use `hour` followed by
//! one column per prosumer.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use ea_pricing::model::EbmPrices;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const PRICE_HEADER: [&str; 3] = ["hour", "up_price", "down_price"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRow {
    pub hour: usize,
    pub up_price: f64,
    pub down_price: f64,
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn located(path: &Path, e: csv::Error) -> CliError {
    match e.position() {
        Some(pos) => CliError::Input(format!("{}:{}: {e}", path.display(), pos.line())),
        None => CliError::Input(format!("{}: {e}", path.display())),
    }
}

fn check_hour(path: &Path, line: u64, hour: usize, expected: usize) -> Result<()> {
    if hour != expected {
        return Err(CliError::Input(format!(
            "{}:{line}: expected hour {expected}, found {hour}",
            path.display()
        )));
    }
    Ok(())
}

fn check_finite(path: &Path, line: u64, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(CliError::Input(format!(
            "{}:{line}: non-finite value {v}",
            path.display()
        )));
    }
    Ok(v)
}

pub fn read_prices(path: &Path) -> Result<EbmPrices> {
    let mut rdr = open(path)?;
    let header = rdr.headers().map_err(|e| located(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != PRICE_HEADER {
        return Err(CliError::Input(format!(
            "{}:1: expected header {}, found {}",
            path.display(),
            PRICE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut prices = EbmPrices {
        up: Vec::new(),
        down: Vec::new(),
    };
    for (k, row) in rdr.deserialize::<PriceRow>().enumerate() {
        let row = row.map_err(|e| located(path, e))?;
        let line = k as u64 + 2;
        check_hour(path, line, row.hour, k + 1)?;
        prices.up.push(check_finite(path, line, row.up_price)?);
        prices.down.push(check_finite(path, line, row.down_price)?);
    }
    if prices.up.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no price rows",
            path.display()
        )));
    }
    Ok(prices)
}

pub fn write_prices(path: &Path, prices: &EbmPrices) -> Result<()> {
    let rows: Vec<PriceRow> = prices
        .up
        .iter()
        .zip(&prices.down)
        .enumerate()
        .map(|(k, (&up_price, &down_price))| PriceRow {
            hour: k + 1,
            up_price,
            down_price,
        })
        .collect();
    write_records(path, &rows)
}

/// Reads an `hour,<prosumer columns…>` file into one series per column.
pub fn read_profiles(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = open(path)?;
    let header = rdr.headers().map_err(|e| located(path, e))?.clone();
    if header.get(0) != Some("hour") || header.len() < 2 {
        return Err(CliError::Input(format!(
            "{}:1: expected header hour,<one column per prosumer>",
            path.display()
        )));
    }
    let mut series = vec![Vec::new(); header.len() - 1];
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| located(path, e))?;
        let line = record.position().map_or(k as u64 + 2, |p| p.line());
        let parse = |field: &str| {
            field
                .parse::<f64>()
                .map_err(|e| CliError::Input(format!("{}:{line}: {field:?}: {e}", path.display())))
        };
        let hour = record[0].parse::<usize>().map_err(|e| {
            CliError::Input(format!(
                "{}:{line}: hour {:?}: {e}",
                path.display(),
                &record[0]
            ))
        })?;
        check_hour(path, line, hour, k + 1)?;
        for (col, s) in series.iter_mut().enumerate() {
            s.push(check_finite(path, line, parse(&record[col + 1])?)?);
        }
    }
    if series[0].is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(series)
}

pub fn write_profiles(path: &Path, series: &[Vec<f64>]) -> Result<()> {
    let mut wtr = writer(path)?;
    let mut header = vec!["hour".to_string()];
    header.extend((1..=series.len()).map(|i| format!("prosumer_{i}")));
    wtr.write_record(&header).map_err(|e| located(path, e))?;
    let horizon = series.first().map_or(0, Vec::len);
    for t in 0..horizon {
        let mut row = vec![(t + 1).to_string()];
        row.extend(series.iter().map(|s| s[t].to_string()));
        wtr.write_record(&row).map_err(|e| located(path, e))?;
    }
    flush(path, wtr)
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn flush(path: &Path, wtr: csv::Writer<File>) -> Result<()> {
    let mut file = wtr
        .into_inner()
        .map_err(|e| CliError::io(path, e.into_error()))?;
    file.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_records<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut wtr = writer(path)?;
    for row in rows {
        wtr.serialize(row).map_err(|e| located(path, e))?;
    }
    flush(path, wtr)
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = open(path)?;
    rdr.deserialize()
        .map(|r| r.map_err(|e| located(path, e)))
        .collect()
}
