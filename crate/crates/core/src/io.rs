//! CSV ingestion and matrix output.
//!
//! Readers report unparsable cells with their 1-based line and column in
//! the file. Matrix cells may hold the placeholder `rho` (or `-rho`) when a
//! value for it is supplied, so a parametrized covariance can be stored
//! once and evaluated at several correlations.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Which column of a data file holds the response.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ResponseColumn {
    #[default]
    Last,
    /// 0-based column index.
    Index(usize),
    /// Header name; needs a header row.
    Name(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Option<Vec<String>>,
    pub values: DMatrix<f64>,
}

fn input_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Input {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_cell(cell: &str, rho: Option<f64>) -> Option<f64> {
    let cell = cell.trim();
    match (cell, rho) {
        ("rho", Some(r)) => Some(r),
        ("-rho", Some(r)) => Some(-r),
        _ => cell.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

/// Read a rectangular numeric CSV file.
pub fn read_csv_table(path: &Path, has_header: bool, rho: Option<f64>) -> Result<CsvTable> {
    let file = File::open(path).map_err(|e| input_error(path, e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = if has_header {
        Some(
            rdr.headers()?
                .iter()
                .map(str::to_string)
                .collect::<Vec<_>>(),
        )
    } else {
        None
    };
    let mut data: Vec<f64> = Vec::new();
    let mut ncols = header.as_ref().map(Vec::len);
    let mut nrows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| input_error(path, e.to_string()))?;
        let line = rec.position().map_or(nrows + 1, |p| p.line() as usize);
        let width = *ncols.get_or_insert(rec.len());
        if rec.len() != width {
            return Err(input_error(
                path,
                format!("line {line} has {} fields, expected {width}", rec.len()),
            ));
        }
        for (col, cell) in rec.iter().enumerate() {
            let v = parse_cell(cell, rho).ok_or_else(|| Error::NonNumeric {
                path: path.to_path_buf(),
                row: line,
                col: col + 1,
                value: cell.to_string(),
            })?;
            data.push(v);
        }
        nrows += 1;
    }
    if nrows == 0 {
        return Err(input_error(path, "no data rows"));
    }
    let ncols = ncols.unwrap_or(0);
    Ok(CsvTable {
        header,
        values: DMatrix::from_row_slice(nrows, ncols, &data),
    })
}

/// Design matrix, response and predictor names from a data file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawData {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Header names of the predictors, or `x1, x2, ...` without a header.
    pub names: Vec<String>,
}

pub fn read_data_csv(path: &Path, has_header: bool, response: &ResponseColumn) -> Result<RawData> {
    let table = read_csv_table(path, has_header, None)?;
    let ncols = table.values.ncols();
    if ncols < 2 {
        return Err(input_error(
            path,
            "need a response column and at least one predictor",
        ));
    }
    let yc = match response {
        ResponseColumn::Last => ncols - 1,
        ResponseColumn::Index(i) if *i < ncols => *i,
        ResponseColumn::Index(i) => {
            return Err(input_error(
                path,
                format!("response column {i} out of range ({ncols} columns)"),
            ))
        }
        ResponseColumn::Name(name) => table
            .header
            .as_ref()
            .ok_or_else(|| input_error(path, "response given by name but file has no header"))?
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| input_error(path, format!("no column named {name:?}")))?,
    };
    let keep: Vec<usize> = (0..ncols).filter(|&j| j != yc).collect();
    let names = match &table.header {
        Some(h) => keep.iter().map(|&j| h[j].clone()).collect(),
        None => (1..=keep.len()).map(|k| format!("x{k}")).collect(),
    };
    Ok(RawData {
        x: table.values.select_columns(&keep),
        y: table.values.column(yc).into_owned(),
        names,
    })
}

/// Square matrix from a CSV file, with `rho` placeholders substituted.
pub fn read_matrix_csv(path: &Path, has_header: bool, rho: Option<f64>) -> Result<DMatrix<f64>> {
    let m = read_csv_table(path, has_header, rho)?.values;
    if m.nrows() != m.ncols() {
        return Err(input_error(
            path,
            format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(m)
}

/// Write a matrix as CSV using the shortest representation that parses
/// back to the same `f64`.
pub fn write_matrix_csv<W: Write>(
    out: W,
    header: Option<&[String]>,
    m: &DMatrix<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(h) = header {
        if h.len() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} header names for {} columns",
                h.len(),
                m.ncols()
            )));
        }
        w.write_record(h)?;
    }
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
