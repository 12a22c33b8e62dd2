//! Reading `t,F` sample files.

use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use schauder_core::{DyadicIndex, SampleVector};

use crate::Failure;

const GRID_TOLERANCE: f64 = 1e-12;

enum TimePoint {
    Exact(DyadicIndex),
    Decimal(f64),
}

fn parse_time(field: &str) -> Option<TimePoint> {
    if field.contains('/') {
        field.parse().ok().map(TimePoint::Exact)
    } else {
        field
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite())
            .map(TimePoint::Decimal)
    }
}

fn open(path: &Path) -> Result<Box<dyn Read>, Failure> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdin()));
    }
    File::open(path)
        .map(|f| Box::new(f) as Box<dyn Read>)
        .map_err(|e| Failure::input(format!("cannot open {}: {e}", path.display())))
}

/// Reads samples of `F` on a dyadic grid. Rows may come in any order and the
/// grid level is inferred from the row count; `expected_level` pins it.
pub fn read_samples(path: &Path, expected_level: Option<u32>) -> Result<SampleVector, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(open(path)?);

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if rows.is_empty() && i == 0 && record.get(0).is_some_and(|f| f.eq_ignore_ascii_case("t")) {
            continue;
        }
        if record.len() != 2 {
            return Err(Failure::input(format!(
                "row {line}: expected 2 fields `t,F`, found {}",
                record.len()
            )));
        }
        let t = parse_time(&record[0]).ok_or_else(|| {
            Failure::input(format!("row {line}: cannot parse t = `{}`", &record[0]))
        })?;
        let value: f64 = record[1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| {
                Failure::input(format!("row {line}: cannot parse F = `{}`", &record[1]))
            })?;
        rows.push((line, t, value));
    }

    let count = rows.len();
    let level = match expected_level {
        Some(level) => {
            let expected = (1usize << level) + 1;
            if count != expected {
                return Err(Failure::input(format!(
                    "expected {expected} rows (grid level {level}), got {count}"
                )));
            }
            level
        }
        None => {
            let cells = count.saturating_sub(1);
            if cells < 2 || !cells.is_power_of_two() {
                return Err(Failure::input(format!(
                    "row count {count} is not 2^L + 1 for any grid level L >= 1"
                )));
            }
            cells.trailing_zeros()
        }
    };
    if level > 30 {
        return Err(Failure::input(format!("grid level {level} is too fine")));
    }

    let scale = (1u64 << level) as f64;
    let mut values: Vec<Option<f64>> = vec![None; count];
    for (line, t, value) in rows {
        let k = match t {
            TimePoint::Exact(d) => d
                .at_level(level)
                .map_err(|_| {
                    Failure::input(format!("row {line}: t = {d} is not on the grid 2^-{level}"))
                })?
                .numerator(),
            TimePoint::Decimal(t) => {
                let k = (t * scale).round();
                if !(0.0..=scale).contains(&k) || (t - k / scale).abs() > GRID_TOLERANCE {
                    return Err(Failure::input(format!(
                        "row {line}: t = {t} is not on the grid 2^-{level}"
                    )));
                }
                k as u64
            }
        };
        let slot = &mut values[k as usize];
        if slot.is_some() {
            return Err(Failure::input(format!(
                "row {line}: duplicate grid point {k}/2^{level}"
            )));
        }
        *slot = Some(value);
    }
    let values: Vec<f64> = values
        .into_iter()
        .map(|v| v.expect("every grid point filled"))
        .collect();
    SampleVector::new(level, values).map_err(|e| Failure::input(e.to_string()))
}
