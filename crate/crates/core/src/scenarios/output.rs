//! File formats: time-series, cross-section and growth-rate CSVs plus the
//! summary JSON. Floats are written with 17 significant digits so files are
//! byte-stable and round-trip to the exact same `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::stats::{CrossSectionRow, FirmCrossSection, TimeSeriesRow};

use super::{GrowthRecord, ScenarioError};

/// 17 significant digits: enough to reproduce any `f64` bit-for-bit.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(source),
    }
}

pub const TIMESERIES_HEADER: [&str; 12] = [
    "t",
    "unemployment_rate",
    "n_active_firms",
    "n_bankruptcies",
    "job_losses_bankruptcy",
    "aggregate_debt",
    "mu_eff",
    "total_output",
    "total_demand",
    "total_sold",
    "bank_equity",
    "conservation_residual",
];

pub fn write_timeseries_csv(path: &Path, rows: &[TimeSeriesRow]) -> Result<(), ScenarioError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(TIMESERIES_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            fmt_float(r.unemployment_rate),
            r.n_active_firms.to_string(),
            r.n_bankruptcies.to_string(),
            r.job_losses_bankruptcy.to_string(),
            fmt_float(r.aggregate_debt),
            fmt_float(r.mu_eff),
            r.total_output.to_string(),
            r.total_demand.to_string(),
            r.total_sold.to_string(),
            fmt_float(r.bank_equity),
            fmt_float(r.conservation_residual),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_timeseries_csv(path: &Path) -> Result<Vec<TimeSeriesRow>, ScenarioError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for record in r.records() {
        let rec = record.map_err(csv_err(path))?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        rows.push(TimeSeriesRow {
            t: parse(path, field(0))?,
            unemployment_rate: parse(path, field(1))?,
            n_active_firms: parse(path, field(2))?,
            n_bankruptcies: parse(path, field(3))?,
            job_losses_bankruptcy: parse(path, field(4))?,
            aggregate_debt: parse(path, field(5))?,
            mu_eff: parse(path, field(6))?,
            total_output: parse(path, field(7))?,
            total_demand: parse(path, field(8))?,
            total_sold: parse(path, field(9))?,
            bank_equity: parse(path, field(10))?,
            conservation_residual: parse(path, field(11))?,
        });
    }
    Ok(rows)
}

pub const CROSS_SECTION_HEADER: [&str; 11] = [
    "id",
    "age",
    "mu",
    "mu_gross_realized",
    "mu_net_realized",
    "size",
    "q_produced",
    "q_sold",
    "cash",
    "debt",
    "equity",
];

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt_float(v),
        None => "NaN".to_string(),
    }
}

pub fn write_cross_section_csv(
    path: &Path,
    cross: &FirmCrossSection,
) -> Result<(), ScenarioError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(CROSS_SECTION_HEADER).map_err(csv_err(path))?;
    for r in &cross.rows {
        w.write_record([
            r.id.to_string(),
            r.age.to_string(),
            fmt_float(r.mu),
            fmt_opt(r.mu_gross_realized),
            fmt_opt(r.mu_net_realized),
            r.size.to_string(),
            r.q_produced.to_string(),
            r.q_sold.to_string(),
            fmt_float(r.cash),
            fmt_float(r.debt),
            fmt_float(r.equity),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a cross-section CSV. The snapshot time is not stored in the file;
/// it is taken from the caller (file names carry it).
pub fn read_cross_section_csv(path: &Path, t: u64) -> Result<FirmCrossSection, ScenarioError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let mut rows: Vec<CrossSectionRow> = Vec::new();
    for record in r.records() {
        let rec = record.map_err(csv_err(path))?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let opt = |i: usize| -> Result<Option<f64>, ScenarioError> {
            let v: f64 = parse(path, field(i))?;
            Ok(if v.is_nan() { None } else { Some(v) })
        };
        rows.push(CrossSectionRow {
            id: parse(path, field(0))?,
            age: parse(path, field(1))?,
            mu: parse(path, field(2))?,
            mu_gross_realized: opt(3)?,
            mu_net_realized: opt(4)?,
            size: parse(path, field(5))?,
            q_produced: parse(path, field(6))?,
            q_sold: parse(path, field(7))?,
            cash: parse(path, field(8))?,
            debt: parse(path, field(9))?,
            equity: parse(path, field(10))?,
        });
    }
    Ok(FirmCrossSection { t, rows })
}

pub const GROWTH_HEADER: [&str; 5] = ["t_from", "firm_id", "size_from", "size_to", "growth"];

pub fn write_growth_csv(path: &Path, records: &[GrowthRecord]) -> Result<(), ScenarioError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(GROWTH_HEADER).map_err(csv_err(path))?;
    for r in records {
        w.write_record([
            r.t_from.to_string(),
            r.firm_id.to_string(),
            r.size_from.to_string(),
            r.size_to.to_string(),
            fmt_float(r.growth),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_growth_csv(path: &Path) -> Result<Vec<GrowthRecord>, ScenarioError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for record in r.records() {
        let rec = record.map_err(csv_err(path))?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        rows.push(GrowthRecord {
            t_from: parse(path, field(0))?,
            firm_id: parse(path, field(1))?,
            size_from: parse(path, field(2))?,
            size_to: parse(path, field(3))?,
            growth: parse(path, field(4))?,
        });
    }
    Ok(rows)
}

fn parse<T: std::str::FromStr>(path: &Path, s: &str) -> Result<T, ScenarioError>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| ScenarioError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("bad field `{s}`: {e}"),
        ),
    })
}

/// Serializes a value as pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), ScenarioError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| ScenarioError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}
