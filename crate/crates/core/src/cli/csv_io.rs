//! Epoch records as CSV. Floats use the shortest exponent form that parses
//! back to the same bits.

use super::CliError;
use crate::harness::EpochRecord;
use std::io::{Read, Write};

pub const HEADER: [&str; 8] = [
    "epoch",
    "grad_evals",
    "effective_passes",
    "suboptimality",
    "dist_sq",
    "grad_norm_sq",
    "estimator_err_sq",
    "anchor_norm_sq",
];

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// Writes `records`; `effective_passes` is `grad_evals / n`.
pub fn write_records<W: Write>(writer: W, records: &[EpochRecord], n: usize) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            r.epoch.to_string(),
            r.grad_evals.to_string(),
            fmt(r.grad_evals as f64 / n as f64),
            fmt(r.suboptimality),
            fmt(r.dist_sq),
            fmt(r.grad_norm_sq),
            fmt(r.estimator_err_sq),
            fmt(r.anchor_norm_sq),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_to_string(records: &[EpochRecord], n: usize) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records, n).expect("writing to memory");
    String::from_utf8(buf).expect("ASCII output")
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<EpochRecord>, CliError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(CliError::Data(format!("unexpected CSV header: {header:?}")));
    }
    let mut out = Vec::new();
    for (k, row) in r.records().enumerate() {
        let row = row?;
        let bad = |col: &str| CliError::Data(format!("row {}: invalid `{col}`", k + 1));
        let f = |i: usize| row[i].parse::<f64>().map_err(|_| bad(HEADER[i]));
        out.push(EpochRecord {
            epoch: row[0].parse().map_err(|_| bad(HEADER[0]))?,
            grad_evals: row[1].parse().map_err(|_| bad(HEADER[1]))?,
            suboptimality: f(3)?,
            dist_sq: f(4)?,
            grad_norm_sq: f(5)?,
            estimator_err_sq: f(6)?,
            anchor_norm_sq: f(7)?,
        });
    }
    Ok(out)
}

/// Numeric columns of any CSV, by header name.
pub fn read_columns<R: Read>(reader: R) -> Result<Vec<(String, Vec<f64>)>, CliError> {
    let mut r = csv::Reader::from_reader(reader);
    let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (k, row) in r.records().enumerate() {
        let row = row?;
        for (j, cell) in row.iter().enumerate() {
            let v = cell.parse::<f64>().map_err(|_| {
                CliError::Data(format!(
                    "row {}: `{cell}` in column `{}` is not a number",
                    k + 1,
                    names[j]
                ))
            })?;
            cols[j].push(v);
        }
    }
    Ok(names.into_iter().zip(cols).collect())
}
