//! Row-major prediction matrices with image identifiers and named columns.
//!
//! Both score and binary matrices share one layout: a header row
//! `id,<col1>,...,<colK>` followed by one line per image. Scores must be
//! finite; binary entries must be exactly `0` or `1`.

use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    row_ids: Vec<String>,
    columns: Vec<String>,
    values: Vec<T>,
}

/// Real-valued scores (raw confidences, probabilities, or features).
pub type ScoreMatrix = Matrix<f64>;
/// Thresholded predictions or ground-truth labels, entries in {0, 1}.
pub type BinaryMatrix = Matrix<u8>;

impl<T: Copy> Matrix<T> {
    pub fn new(row_ids: Vec<String>, columns: Vec<String>, values: Vec<T>) -> Result<Self> {
        if values.len() != row_ids.len() * columns.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} rows x {} columns",
                values.len(),
                row_ids.len(),
                columns.len()
            )));
        }
        Ok(Matrix { row_ids, columns, values })
    }

    /// Builds a matrix from rows, naming rows `r0, r1, ...`.
    pub fn from_rows(columns: Vec<String>, rows: &[Vec<T>]) -> Result<Self> {
        let width = columns.len();
        let mut values = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {width}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        let row_ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        Matrix::new(row_ids, columns, values)
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> &[T] {
        let k = self.n_cols();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let k = self.n_cols();
        &mut self.values[i * k..(i + 1) * k]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        // chunks_exact panics on a zero chunk size
        let k = self.n_cols().max(1);
        let n = self.n_rows();
        self.values.chunks_exact(k).take(n)
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.n_cols() + col]
    }

    /// Selects a subset of rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols());
        let mut row_ids = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            row_ids.push(self.row_ids[i].clone());
        }
        Matrix { row_ids, columns: self.columns.clone(), values }
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            row_ids: self.row_ids.clone(),
            columns: self.columns.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Errors unless the header equals `expected` exactly.
    pub fn ensure_columns(&self, expected: &[String]) -> Result<()> {
        if self.columns.len() != expected.len() {
            return Err(Error::Dimension(format!(
                "matrix has {} columns, schema has {} attributes",
                self.columns.len(),
                expected.len()
            )));
        }
        if let Some((i, (got, want))) =
            self.columns.iter().zip(expected).enumerate().find(|(_, (g, w))| g != w)
        {
            return Err(Error::Input(format!(
                "column {} is `{got}`, schema expects `{want}`",
                i + 1
            )));
        }
        Ok(())
    }
}

impl ScoreMatrix {
    /// Errors on the first NaN or infinite entry.
    pub fn check_finite(&self) -> Result<()> {
        let k = self.n_cols().max(1);
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(Error::NonFinite { row: pos / k, column: pos % k }),
            None => Ok(()),
        }
    }
}

trait CsvCell: Sized {
    fn parse_cell(s: &str) -> Option<Self>;
    fn write_cell(&self) -> String;
}

impl CsvCell for f64 {
    fn parse_cell(s: &str) -> Option<Self> {
        f64::from_str(s.trim()).ok()
    }
    fn write_cell(&self) -> String {
        self.to_string()
    }
}

impl CsvCell for u8 {
    fn parse_cell(s: &str) -> Option<Self> {
        match s.trim() {
            "0" => Some(0),
            "1" => Some(1),
            _ => None,
        }
    }
    fn write_cell(&self) -> String {
        self.to_string()
    }
}

fn read_csv<T: CsvCell + Copy>(reader: impl Read) -> Result<Matrix<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let mut fields = header.iter();
    match fields.next() {
        Some(first) if first.trim() == "id" => {}
        _ => return Err(Error::Format("header must start with `id`".into())),
    }
    let columns: Vec<String> = fields.map(|s| s.trim().to_string()).collect();
    let mut row_ids = Vec::new();
    let mut values = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != columns.len() + 1 {
            return Err(Error::Dimension(format!(
                "row {r} has {} fields, expected {}",
                record.len(),
                columns.len() + 1
            )));
        }
        row_ids.push(record[0].trim().to_string());
        for (c, cell) in record.iter().skip(1).enumerate() {
            let v = T::parse_cell(cell).ok_or_else(|| {
                Error::Input(format!("row {r}, column `{}`: cannot parse `{cell}`", columns[c]))
            })?;
            values.push(v);
        }
    }
    Matrix::new(row_ids, columns, values)
}

fn write_csv<T: CsvCell + Copy>(m: &Matrix<T>, writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend(m.columns.iter().cloned());
    wtr.write_record(&header)?;
    for (id, row) in m.row_ids.iter().zip(m.rows()) {
        let mut record = Vec::with_capacity(row.len() + 1);
        record.push(id.clone());
        record.extend(row.iter().map(CsvCell::write_cell));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

impl ScoreMatrix {
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let m: ScoreMatrix = read_csv(reader)?;
        m.check_finite()?;
        Ok(m)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        write_csv(self, writer)
    }
}

impl BinaryMatrix {
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        read_csv(reader)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        write_csv(self, writer)
    }
}
