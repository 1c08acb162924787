//! Competing-risks dataset representation and CSV interchange.
//!
//! Records keep the row order of their source. A stable descending-time
//! index and the tie groups along it are built once at construction; every
//! downstream scan walks that index.

use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed outcome of a subject: censored, failure from the cause of
/// interest, or failure from the competing cause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Cause {
    Censored = 0,
    Cause1 = 1,
    Cause2 = 2,
}

impl Cause {
    pub fn code(self) -> u8 {
        self as u8
    }

    /// Maps an integer code to a cause. With `collapse`, every code >= 2 is
    /// folded into [`Cause::Cause2`].
    pub fn from_code(code: i64, collapse: bool) -> Option<Cause> {
        match code {
            0 => Some(Cause::Censored),
            1 => Some(Cause::Cause1),
            2 => Some(Cause::Cause2),
            c if collapse && c > 2 => Some(Cause::Cause2),
            _ => None,
        }
    }
}

impl From<Cause> for u8 {
    fn from(c: Cause) -> u8 {
        c.code()
    }
}

impl TryFrom<u8> for Cause {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        Cause::from_code(v as i64, false).ok_or_else(|| format!("invalid cause code {v}"))
    }
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub time: f64,
    pub cause: Cause,
    pub covariates: Vec<f64>,
}

/// Immutable competing-risks sample.
#[derive(Debug, Clone)]
pub struct CompetingRisksDataset {
    records: Vec<SubjectRecord>,
    covariate_names: Vec<String>,
    /// Column-major copy of the covariates, `columns[j * n + i]`.
    columns: Vec<f64>,
    sorted_index: Vec<usize>,
    tie_groups: Vec<Range<usize>>,
}

impl CompetingRisksDataset {
    /// Validates the records and builds the descending-time index.
    ///
    /// When `covariate_names` is `None` the columns are named `z1..zp`.
    pub fn new(records: Vec<SubjectRecord>, covariate_names: Option<Vec<String>>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let p = records[0].covariates.len();
        if p == 0 {
            return Err(Error::Validation("at least one covariate is required".into()));
        }
        for (i, r) in records.iter().enumerate() {
            if !r.time.is_finite() || r.time < 0.0 {
                return Err(Error::Validation(format!(
                    "record {i}: time {} must be finite and non-negative",
                    r.time
                )));
            }
            if r.covariates.len() != p {
                return Err(Error::Validation(format!(
                    "record {i}: expected {p} covariates, found {}",
                    r.covariates.len()
                )));
            }
            if let Some(j) = r.covariates.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "record {i}: covariate {} is not finite",
                    j + 1
                )));
            }
        }
        let names = match covariate_names {
            Some(names) if names.len() == p => names,
            Some(names) => {
                return Err(Error::Validation(format!(
                    "{} covariate names supplied for {p} covariates",
                    names.len()
                )))
            }
            None => (1..=p).map(|j| format!("z{j}")).collect(),
        };

        let n = records.len();
        let mut columns = vec![0.0; n * p];
        for (i, r) in records.iter().enumerate() {
            for (j, &v) in r.covariates.iter().enumerate() {
                columns[j * n + i] = v;
            }
        }

        // Stable: tied times keep file order.
        let mut sorted_index: Vec<usize> = (0..n).collect();
        sorted_index.sort_by(|&a, &b| records[b].time.total_cmp(&records[a].time));

        let mut tie_groups = Vec::new();
        let mut start = 0;
        for pos in 1..=n {
            if pos == n || records[sorted_index[pos]].time != records[sorted_index[start]].time {
                tie_groups.push(start..pos);
                start = pos;
            }
        }

        Ok(CompetingRisksDataset {
            records,
            covariate_names: names,
            columns,
            sorted_index,
            tie_groups,
        })
    }

    /// Builds a dataset from parallel vectors; `covariates` is row-major.
    pub fn from_parts(times: &[f64], causes: &[Cause], covariates: &[Vec<f64>]) -> Result<Self> {
        if times.len() != causes.len() || times.len() != covariates.len() {
            return Err(Error::Validation(format!(
                "length mismatch: {} times, {} causes, {} covariate rows",
                times.len(),
                causes.len(),
                covariates.len()
            )));
        }
        let records = times
            .iter()
            .zip(causes)
            .zip(covariates)
            .map(|((&time, &cause), z)| SubjectRecord {
                time,
                cause,
                covariates: z.clone(),
            })
            .collect();
        Self::new(records, None)
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn p(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn records(&self) -> &[SubjectRecord] {
        &self.records
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Record indices ordered by non-increasing time.
    pub fn sorted_index(&self) -> &[usize] {
        &self.sorted_index
    }

    /// Ranges over [`Self::sorted_index`] that share one time value.
    pub fn tie_groups(&self) -> &[Range<usize>] {
        &self.tie_groups
    }

    /// Covariate column `j` in record order.
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.columns[j * n..(j + 1) * n]
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.time)
    }

    pub fn causes(&self) -> impl Iterator<Item = Cause> + '_ {
        self.records.iter().map(|r| r.cause)
    }

    pub fn count_cause(&self, cause: Cause) -> usize {
        self.records.iter().filter(|r| r.cause == cause).count()
    }

    /// Linear predictor `z_i' beta` for every record, in record order.
    pub fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.covariates.iter().zip(beta).map(|(z, b)| z * b).sum())
            .collect()
    }

    /// Subset of records by index (order as given).
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let records = rows.iter().map(|&i| self.records[i].clone()).collect();
        Self::new(records, Some(self.covariate_names.clone()))
    }

    /// Centers each column to mean zero and scales it to sum of squares
    /// `n - 1`. Returns the new dataset with the centers and scales used, so
    /// that `z_std = (z - center) / scale`.
    pub fn standardize_covariates(&self) -> Result<(Self, Vec<f64>, Vec<f64>)> {
        let n = self.n();
        if n < 2 {
            return Err(Error::Validation("standardization needs at least two records".into()));
        }
        let p = self.p();
        let mut centers = Vec::with_capacity(p);
        let mut scales = Vec::with_capacity(p);
        for j in 0..p {
            let col = self.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            let magnitude = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if !(sd > 1e-12 * magnitude.max(1e-300)) {
                return Err(Error::DegenerateColumn(self.covariate_names[j].clone()));
            }
            centers.push(mean);
            scales.push(sd);
        }
        let records = self
            .records
            .iter()
            .map(|r| SubjectRecord {
                time: r.time,
                cause: r.cause,
                covariates: r
                    .covariates
                    .iter()
                    .zip(centers.iter().zip(&scales))
                    .map(|(v, (c, s))| (v - c) / s)
                    .collect(),
            })
            .collect();
        let out = Self::new(records, Some(self.covariate_names.clone()))?;
        Ok((out, centers, scales))
    }
}

/// Maps coefficients fitted on standardized covariates back to the original
/// covariate scale.
pub fn unstandardize_coefficients(beta: &[f64], scales: &[f64]) -> Vec<f64> {
    beta.iter().zip(scales).map(|(b, s)| b / s).collect()
}

/// A CSV column, by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl ColumnRef {
    fn resolve(&self, headers: Option<&csv::StringRecord>, width: usize) -> Result<usize> {
        match self {
            ColumnRef::Index(i) if *i < width => Ok(*i),
            ColumnRef::Index(i) => Err(Error::Validation(format!(
                "column position {} out of range ({width} columns)",
                i + 1
            ))),
            ColumnRef::Name(name) => headers
                .and_then(|h| h.iter().position(|c| c.trim() == name))
                .ok_or_else(|| Error::Validation(format!("column '{name}' not found"))),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Name(n) => f.write_str(n),
            ColumnRef::Index(i) => write!(f, "#{}", i + 1),
        }
    }
}

/// Column mapping for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub has_header: bool,
    pub time: ColumnRef,
    pub status: ColumnRef,
    /// `None` selects every column other than time and status.
    pub covariates: Option<Vec<ColumnRef>>,
    /// Fold cause codes above 2 into the competing cause.
    pub collapse_causes: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            has_header: true,
            time: ColumnRef::Name("time".into()),
            status: ColumnRef::Name("status".into()),
            covariates: None,
            collapse_causes: false,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<CompetingRisksDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &CsvSchema) -> Result<CompetingRisksDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = if schema.has_header {
        Some(rdr.headers().map_err(csv_error)?.clone())
    } else {
        None
    };

    let mut rows = rdr.records();
    let first = match rows.next() {
        Some(r) => r.map_err(csv_error)?,
        None => return Err(Error::EmptyDataset),
    };
    let width = headers.as_ref().map_or(first.len(), |h| h.len());
    let time_col = schema.time.resolve(headers.as_ref(), width)?;
    let status_col = schema.status.resolve(headers.as_ref(), width)?;
    let cov_cols: Vec<usize> = match &schema.covariates {
        Some(cols) => cols
            .iter()
            .map(|c| c.resolve(headers.as_ref(), width))
            .collect::<Result<_>>()?,
        None => (0..width).filter(|&c| c != time_col && c != status_col).collect(),
    };
    if cov_cols.is_empty() {
        return Err(Error::Validation("no covariate columns selected".into()));
    }
    let col_name = |c: usize| -> String {
        headers
            .as_ref()
            .and_then(|h| h.get(c))
            .map(str::to_string)
            .unwrap_or_else(|| format!("#{}", c + 1))
    };
    let names: Vec<String> = cov_cols.iter().map(|&c| col_name(c)).collect();

    let mut records = Vec::new();
    let first_row = if schema.has_header { 2 } else { 1 };
    for (k, row) in std::iter::once(Ok(first)).chain(rows).enumerate() {
        let row = row.map_err(csv_error)?;
        let line = first_row + k;
        let field = |c: usize| -> Result<f64> {
            let raw = row.get(c).ok_or_else(|| Error::Parse {
                row: line,
                column: col_name(c),
                message: "missing field".into(),
            })?;
            raw.parse::<f64>().map_err(|_| Error::Parse {
                row: line,
                column: col_name(c),
                message: format!("'{raw}' is not a number"),
            })
        };
        let time = field(time_col)?;
        let status = field(status_col)?;
        let cause = (status.fract() == 0.0)
            .then(|| Cause::from_code(status as i64, schema.collapse_causes))
            .flatten()
            .ok_or_else(|| {
                Error::Validation(format!(
                    "row {line}, column '{}': cause {status} is not one of 0, 1, 2",
                    col_name(status_col)
                ))
            })?;
        if !time.is_finite() || time < 0.0 {
            return Err(Error::Validation(format!(
                "row {line}, column '{}': time {time} must be finite and non-negative",
                col_name(time_col)
            )));
        }
        let covariates = cov_cols.iter().map(|&c| field(c)).collect::<Result<Vec<_>>>()?;
        if let Some(pos) = covariates.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "row {line}, column '{}': covariate is not finite",
                names[pos]
            )));
        }
        records.push(SubjectRecord {
            time,
            cause,
            covariates,
        });
    }
    CompetingRisksDataset::new(records, Some(names))
}

/// Writes `time,status,<covariates>` with shortest round-trip float
/// formatting, so reloading reproduces every value bit for bit.
pub fn write_csv(dataset: &CompetingRisksDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(dataset, file).map_err(|e| match e {
        Error::Validation(msg) => Error::io(path, std::io::Error::other(msg)),
        other => other,
    })
}

pub fn write_csv_to<W: std::io::Write>(dataset: &CompetingRisksDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["time".to_string(), "status".to_string()];
    header.extend(dataset.covariate_names().iter().cloned());
    w.write_record(&header).map_err(csv_error)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for r in dataset.records() {
        row.clear();
        row.push(r.time.to_string());
        row.push(r.cause.to_string());
        row.extend(r.covariates.iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Validation(e.to_string()))?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        row,
        column: String::new(),
        message: e.to_string(),
    }
}
