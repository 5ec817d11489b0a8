//! Delimited-text input and output for [`DataMatrix`].
//!
//! Row and column indices in errors are 0-based and count data rows only
//! (the header is not row 0).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, Trim, WriterBuilder};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::sim::GroundTruth;

pub const DEFAULT_NA_TOKENS: [&str; 3] = ["", "NA", "NaN"];

/// Token written for missing cells.
pub const NA_OUT: &str = "NA";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_csv(path: impl AsRef<Path>, na_tokens: &[&str]) -> Result<DataMatrix> {
    read_csv_from(File::open(path)?, na_tokens)
}

pub fn read_csv_from<R: Read>(reader: R, na_tokens: &[&str]) -> Result<DataMatrix> {
    let mut rdr = ReaderBuilder::new().has_headers(true).flexible(true).trim(Trim::All).from_reader(reader);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let p = names.len();
    if p == 0 || (p == 1 && names[0].is_empty()) {
        return Err(Error::Csv("missing header row".into()));
    }
    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut n = 0;
    for record in rdr.records() {
        let record = record?;
        if record.len() != p {
            return Err(Error::Csv(format!("row {n} has {} fields, header has {p}", record.len())));
        }
        let mut any = false;
        for (j, cell) in record.iter().enumerate() {
            if na_tokens.contains(&cell) {
                values.push(f64::NAN);
                mask.push(false);
                continue;
            }
            let x: f64 = cell.parse().map_err(|_| Error::Parse { row: n, col: j, msg: format!("cannot parse {cell:?}") })?;
            if !x.is_finite() {
                return Err(Error::Parse { row: n, col: j, msg: format!("non-finite value {cell:?}") });
            }
            values.push(x);
            mask.push(true);
            any = true;
        }
        if !any {
            return Err(Error::FullyMissingRow { row: n });
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::Csv("no data rows".into()));
    }
    DataMatrix::new(n, p, values, mask)?.with_column_names(names)
}

fn header(data: &DataMatrix) -> Vec<String> {
    match data.column_names() {
        Some(names) => names.to_vec(),
        None => (1..=data.p()).map(|j| format!("x{j}")).collect(),
    }
}

pub fn write_csv(path: impl AsRef<Path>, data: &DataMatrix) -> Result<()> {
    write_csv_to(File::create(path)?, data)
}

/// Writes a header (the column names, or `x1..xp`) and one line per row;
/// missing cells become [`NA_OUT`].
pub fn write_csv_to<W: Write>(writer: W, data: &DataMatrix) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    w.write_record(header(data))?;
    for i in 0..data.n() {
        w.write_record((0..data.p()).map(|j| data.get(i, j).map_or_else(|| NA_OUT.to_string(), format_f64)))?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar with columns `label, good, noise, obs_1..obs_p`; flags are 0/1.
pub fn write_truth_to<W: Write>(writer: W, truth: &GroundTruth, p: usize) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    let mut head = vec!["label".to_string(), "good".into(), "noise".into()];
    head.extend((1..=p).map(|j| format!("obs_{j}")));
    w.write_record(&head)?;
    let bit = |b: bool| if b { "1" } else { "0" }.to_string();
    for i in 0..truth.labels.len() {
        let mut rec = vec![truth.labels[i].to_string(), bit(truth.good_flags[i]), bit(truth.noise_rows[i])];
        rec.extend((0..p).map(|j| bit(truth.mask[i * p + j])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_truth(path: impl AsRef<Path>, truth: &GroundTruth, p: usize) -> Result<()> {
    write_truth_to(File::create(path)?, truth, p)
}

/// Integer and 0/1 columns of a label table, looked up by name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelTable {
    pub labels: Vec<usize>,
    /// `true` = bad point, from an `outlier` column or the negation of a
    /// `good` column.
    pub bad: Option<Vec<bool>>,
}

/// Reads a table with a `label` column and optionally an `outlier` or
/// `good` column. Extra columns are ignored.
pub fn read_labels_from<R: Read>(reader: R) -> Result<LabelTable> {
    let mut rdr = ReaderBuilder::new().trim(Trim::All).from_reader(reader);
    let head = rdr.headers()?.clone();
    let col = |name: &str| head.iter().position(|h| h == name);
    let label_col = col("label").ok_or_else(|| Error::Csv("no `label` column".into()))?;
    let (flag_col, invert) = match (col("outlier"), col("good")) {
        (Some(c), _) => (Some(c), false),
        (None, Some(c)) => (Some(c), true),
        (None, None) => (None, false),
    };
    let mut out = LabelTable { labels: Vec::new(), bad: flag_col.map(|_| Vec::new()) };
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = |c: usize| record.get(c).ok_or_else(|| Error::Csv(format!("row {row} is short")));
        let label = cell(label_col)?;
        out.labels.push(label.parse().map_err(|_| Error::Parse { row, col: label_col, msg: format!("bad label {label:?}") })?);
        if let (Some(c), Some(bad)) = (flag_col, out.bad.as_mut()) {
            let flag = match cell(c)? {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(Error::Parse { row, col: c, msg: format!("bad flag {other:?}") }),
            };
            bad.push(flag != invert);
        }
    }
    Ok(out)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelTable> {
    read_labels_from(File::open(path)?)
}
