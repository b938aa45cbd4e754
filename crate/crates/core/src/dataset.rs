//! Entity-by-variable panels loaded from CSV, with the standardized and
//! 0–100 views the estimator and index builder consume.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Key of one observation: a country code and, for panels, a year.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityKey {
    pub country: String,
    pub year: Option<i64>,
}

impl EntityKey {
    pub fn new(country: impl Into<String>, year: Option<i64>) -> Self {
        Self {
            country: country.into(),
            year,
        }
    }
}

impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.year {
            Some(y) => write!(f, "{}/{}", self.country, y),
            None => f.write_str(&self.country),
        }
    }
}

/// Numeric panel. Missing cells are stored as NaN until [`complete_cases`]
/// removes them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    entities: Vec<EntityKey>,
    columns: Vec<String>,
    values: Array2<f64>,
}

impl Dataset {
    pub fn new(entities: Vec<EntityKey>, columns: Vec<String>, values: Array2<f64>) -> Result<Self> {
        if values.nrows() != entities.len() || values.ncols() != columns.len() {
            return Err(Error::InvalidModel(format!(
                "dataset shape {:?} does not match {} entities x {} columns",
                values.dim(),
                entities.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(Error::DuplicateColumn(c.clone()));
            }
        }
        let mut keys = HashSet::new();
        for e in &entities {
            if !keys.insert(e) {
                return Err(Error::DuplicateEntity(e.to_string()));
            }
        }
        Ok(Self {
            entities,
            columns,
            values,
        })
    }

    pub fn entities(&self) -> &[EntityKey] {
        &self.entities
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n_rows(&self) -> usize {
        self.entities.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<ArrayView1<'_, f64>> {
        Ok(self.values.column(self.column_index(name)?))
    }

    /// Copy the named columns, in the given order, into a new matrix.
    pub fn select(&self, columns: &[impl AsRef<str>]) -> Result<Array2<f64>> {
        let idx = columns
            .iter()
            .map(|c| self.column_index(c.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.values.select(Axis(1), &idx))
    }

    /// Keep the given rows, in the given order.
    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            entities: rows.iter().map(|&r| self.entities[r].clone()).collect(),
            columns: self.columns.clone(),
            values: self.values.select(Axis(0), rows),
        }
    }

    /// Append (or replace) a column.
    pub fn with_column(mut self, name: &str, values: Array1<f64>) -> Result<Dataset> {
        if values.len() != self.n_rows() {
            return Err(Error::InvalidModel(format!(
                "column `{name}` has {} values for {} rows",
                values.len(),
                self.n_rows()
            )));
        }
        if let Ok(j) = self.column_index(name) {
            self.values.column_mut(j).assign(&values);
            return Ok(self);
        }
        self.values.push_column(values.view()).expect("row count checked");
        self.columns.push(name.to_string());
        Ok(self)
    }

    /// Write in the format [`load_csv`] reads: `country[,year],col...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let with_year = self.entities.iter().any(|e| e.year.is_some());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["country".to_string()];
        if with_year {
            header.push("year".into());
        }
        header.extend(self.columns.iter().cloned());
        let csv_err = |source| Error::Csv {
            path: "<output>".into(),
            source,
        };
        w.write_record(&header).map_err(csv_err)?;
        for (e, row) in self.entities.iter().zip(self.values.rows()) {
            let mut rec = vec![e.country.clone()];
            if with_year {
                rec.push(e.year.map(|y| y.to_string()).unwrap_or_default());
            }
            rec.extend(row.iter().map(|v| {
                if v.is_finite() {
                    format!("{v:?}")
                } else {
                    String::new()
                }
            }));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "<output>".into(),
            source,
        })
    }
}

fn is_missing_token(s: &str) -> bool {
    matches!(s, "" | "NA" | "N/A" | "NaN" | "nan" | "." | "..")
}

/// Load a CSV panel.
///
/// `entity_cols` names the country column and, optionally, the year column.
/// When `year` is given only matching rows are kept. Empty cells and the usual
/// NA tokens become NaN; any other unparseable cell is an error naming its
/// 1-based data row and column.
pub fn load_csv(path: impl AsRef<Path>, entity_cols: &[&str], year: Option<i64>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, path, entity_cols, year)
}

pub(crate) fn read_csv<R: std::io::Read>(
    reader: R,
    path: &Path,
    entity_cols: &[&str],
    year: Option<i64>,
) -> Result<Dataset> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    if entity_cols.is_empty() || entity_cols.len() > 2 {
        return Err(Error::InvalidModel(
            "entity columns must be `country` or `country,year`".into(),
        ));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let country_col = find(entity_cols[0])?;
    let year_col = entity_cols.get(1).map(|c| find(c)).transpose()?;
    if year.is_some() && year_col.is_none() {
        return Err(Error::MissingColumn("year (needed for the year filter)".into()));
    }
    let numeric: Vec<usize> = (0..header.len())
        .filter(|&j| j != country_col && Some(j) != year_col)
        .collect();
    let columns: Vec<String> = numeric.iter().map(|&j| header[j].clone()).collect();

    let mut entities = Vec::new();
    let mut data = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = i + 1;
        let line = rec.position().map(|p| p.line()).unwrap_or(row as u64 + 1);
        let row_year = match year_col {
            Some(yc) => {
                let raw = rec.get(yc).unwrap_or("");
                Some(raw.parse::<i64>().map_err(|_| Error::BadYear {
                    row,
                    column: header[yc].clone(),
                    value: raw.to_string(),
                })?)
            }
            None => None,
        };
        if year.is_some() && row_year != year {
            continue;
        }
        for &j in &numeric {
            let cell = rec.get(j).unwrap_or("");
            let v = if is_missing_token(cell) {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| Error::Parse {
                    row,
                    line,
                    column: header[j].clone(),
                    value: cell.to_string(),
                })?
            };
            data.push(v);
        }
        entities.push(EntityKey::new(rec.get(country_col).unwrap_or(""), row_year));
    }
    let values = Array2::from_shape_vec((entities.len(), columns.len()), data)
        .expect("row-major fill matches shape");
    Dataset::new(entities, columns, values)
}

/// Drop rows with a missing or non-finite value in any of `columns`.
/// Returns the surviving rows and the number dropped.
pub fn complete_cases(d: &Dataset, columns: &[impl AsRef<str>]) -> Result<(Dataset, usize)> {
    let idx = columns
        .iter()
        .map(|c| d.column_index(c.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let keep: Vec<usize> = (0..d.n_rows())
        .filter(|&r| idx.iter().all(|&j| d.values[[r, j]].is_finite()))
        .collect();
    let dropped = d.n_rows() - keep.len();
    if keep.len() < 3 {
        return Err(Error::TooFewRows {
            remaining: keep.len(),
            dropped,
        });
    }
    Ok((d.subset_rows(&keep), dropped))
}

/// Summary of one column; `sd` uses divisor `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub degenerate: bool,
}

impl ColumnStats {
    pub fn of(name: &str, xs: ArrayView1<f64>) -> Self {
        let n = xs.len() as f64;
        let mean = xs.sum() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            name: name.to_string(),
            mean,
            sd,
            min,
            max,
            degenerate: sd == 0.0,
        }
    }
}

/// Write column statistics as `name,mean,sd,min,max`.
pub fn write_stats_csv<W: Write>(stats: &[ColumnStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |source| Error::Csv {
        path: "<stats>".into(),
        source,
    };
    w.write_record(["name", "mean", "sd", "min", "max"]).map_err(err)?;
    for s in stats {
        w.write_record([
            s.name.clone(),
            format!("{:?}", s.mean),
            format!("{:?}", s.sd),
            format!("{:?}", s.min),
            format!("{:?}", s.max),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<stats>".into(),
        source,
    })
}

/// Standardize a matrix column-wise (mean 0, divisor-`n` sd 1).
pub(crate) fn standardize_matrix(
    raw: &Array2<f64>,
    names: &[impl AsRef<str>],
) -> Result<(Array2<f64>, Vec<ColumnStats>)> {
    let mut out = raw.clone();
    let mut stats = Vec::with_capacity(raw.ncols());
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        let s = ColumnStats::of(names[j].as_ref(), raw.column(j));
        // Relative test: rounding noise on a constant column is not variance.
        if s.degenerate || s.sd <= 1e-13 * s.mean.abs().max(1.0) {
            return Err(Error::ZeroVariance(s.name));
        }
        col.mapv_inplace(|x| (x - s.mean) / s.sd);
        stats.push(s);
    }
    Ok((out, stats))
}

/// Z-scores of the named columns.
pub fn standardize(d: &Dataset, columns: &[impl AsRef<str>]) -> Result<(Array2<f64>, Vec<ColumnStats>)> {
    standardize_matrix(&d.select(columns)?, columns)
}

/// Min-max map of one column onto 0–100, best value at 100.
pub fn scale_column_0_100(name: &str, xs: ArrayView1<f64>, invert: bool) -> Result<Array1<f64>> {
    let s = ColumnStats::of(name, xs);
    let range = s.max - s.min;
    if !(range > 0.0) {
        return Err(Error::DegenerateRange(name.to_string()));
    }
    Ok(if invert {
        xs.mapv(|x| (s.max - x) / range * 100.0)
    } else {
        xs.mapv(|x| (x - s.min) / range * 100.0)
    })
}

/// Min-max scale the named columns onto 0–100; `invert[j]` reverses column j.
pub fn scale_0_100(d: &Dataset, columns: &[impl AsRef<str>], invert: &[bool]) -> Result<Array2<f64>> {
    assert_eq!(columns.len(), invert.len(), "one invert flag per column");
    let raw = d.select(columns)?;
    let mut out = Array2::zeros(raw.dim());
    for (j, name) in columns.iter().enumerate() {
        let col = scale_column_0_100(name.as_ref(), raw.column(j), invert[j])?;
        out.column_mut(j).assign(&col);
    }
    Ok(out)
}
