//! Integer-coded categorical/ordinal datasets.
//!
//! A [`Dataset`] stores one column of level codes per variable. Codes are
//! `0..L` and index into the variable's ordered level list; for ordinal and
//! binary variables that order is meaningful, for categorical variables it is
//! arbitrary but fixed. Codes are never renumbered after loading, even when a
//! declared level is absent from the data.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::citest::chi_square_sf;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Measurement scale of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Binary,
    Ordinal,
    Categorical,
}

impl VariableKind {
    /// Binary and ordinal variables get Li-Shepherd residuals; categorical
    /// variables get indicator residuals.
    pub fn is_ordered(self) -> bool {
        !matches!(self, VariableKind::Categorical)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMeta {
    pub name: String,
    pub kind: VariableKind,
    pub levels: Vec<String>,
}

impl VariableMeta {
    pub fn new(name: impl Into<String>, kind: VariableKind, levels: Vec<String>) -> Result<Self> {
        let name = name.into();
        if levels.len() < 2 {
            return Err(Error::Schema(format!("variable `{name}` needs at least 2 levels")));
        }
        if kind == VariableKind::Binary && levels.len() != 2 {
            return Err(Error::Schema(format!(
                "binary variable `{name}` has {} levels",
                levels.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &levels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Schema(format!("variable `{name}` repeats level `{l}`")));
            }
        }
        Ok(VariableMeta { name, kind, levels })
    }

    /// Levels labelled `"0".."L-1"`.
    pub fn numbered(name: impl Into<String>, kind: VariableKind, n_levels: usize) -> Result<Self> {
        Self::new(name, kind, (0..n_levels).map(|l| l.to_string()).collect())
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn code_of(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == label)
    }

    pub fn label(&self, code: usize) -> &str {
        &self.levels[code]
    }
}

/// Immutable table of level codes, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    metas: Vec<VariableMeta>,
    columns: Vec<Vec<usize>>,
    n: usize,
}

impl Dataset {
    pub fn new(metas: Vec<VariableMeta>, columns: Vec<Vec<usize>>) -> Result<Self> {
        if metas.len() != columns.len() {
            return Err(Error::Data(format!(
                "{} variables but {} columns",
                metas.len(),
                columns.len()
            )));
        }
        let mut names = std::collections::HashSet::new();
        for m in &metas {
            if !names.insert(m.name.as_str()) {
                return Err(Error::Schema(format!("duplicate variable `{}`", m.name)));
            }
        }
        let n = columns.first().map_or(0, Vec::len);
        for (m, c) in metas.iter().zip(&columns) {
            if c.len() != n {
                return Err(Error::Data(format!("column `{}` has {} rows, expected {n}", m.name, c.len())));
            }
            if let Some(&bad) = c.iter().find(|&&v| v >= m.n_levels()) {
                return Err(Error::Data(format!("column `{}` holds invalid code {bad}", m.name)));
            }
        }
        Ok(Dataset { metas, columns, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_vars(&self) -> usize {
        self.metas.len()
    }

    pub fn metas(&self) -> &[VariableMeta] {
        &self.metas
    }

    pub fn meta(&self, var: usize) -> &VariableMeta {
        &self.metas[var]
    }

    pub fn column(&self, var: usize) -> &[usize] {
        &self.columns[var]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.metas.iter().map(|m| m.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.metas
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column_by_name(&self, name: &str) -> Result<&[usize]> {
        Ok(self.column(self.index_of(name)?))
    }

    /// Codes of row `i` across all variables.
    pub fn row(&self, i: usize) -> Vec<usize> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Per-level observation counts of a column.
    pub fn level_counts(&self, var: usize) -> Vec<usize> {
        let mut counts = vec![0; self.metas[var].n_levels()];
        for &v in &self.columns[var] {
            counts[v] += 1;
        }
        counts
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&i| c[i]).collect())
            .collect();
        Dataset {
            metas: self.metas.clone(),
            columns,
            n: rows.len(),
        }
    }

    /// New dataset holding the given variables, in the given order.
    pub fn select_columns(&self, vars: &[usize]) -> Dataset {
        Dataset {
            metas: vars.iter().map(|&v| self.metas[v].clone()).collect(),
            columns: vars.iter().map(|&v| self.columns[v].clone()).collect(),
            n: self.n,
        }
    }

    /// Replace one column (and its metadata).
    pub fn with_column(&self, var: usize, meta: VariableMeta, column: Vec<usize>) -> Result<Dataset> {
        let mut metas = self.metas.clone();
        let mut columns = self.columns.clone();
        metas[var] = meta;
        columns[var] = column;
        Dataset::new(metas, columns)
    }

    /// Decode a cell back to its level label.
    pub fn label(&self, row: usize, var: usize) -> &str {
        self.metas[var].label(self.columns[var][row])
    }
}

/// Counts of rows dropped while loading a CSV file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_dropped_missing: usize,
    pub rows_dropped_unknown_level: usize,
}

impl LoadReport {
    pub fn rows_dropped(&self) -> usize {
        self.rows_dropped_missing + self.rows_dropped_unknown_level
    }
}

/// One entry of a JSON schema file. `levels` may be omitted, in which case
/// the observed values become the levels (sorted numerically for ordinal
/// variables, lexicographically otherwise).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub name: String,
    pub kind: VariableKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

pub fn read_schema(path: &Path) -> Result<Vec<SchemaEntry>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

fn is_missing(value: &str) -> bool {
    matches!(value, "" | "?" | "NA" | "NaN" | "nan")
}

fn infer_levels(entry: &SchemaEntry, values: &[&str]) -> Result<Vec<String>> {
    let mut distinct: Vec<String> = values
        .iter()
        .filter(|v| !is_missing(v))
        .map(|v| v.to_string())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let numeric: Option<Vec<f64>> = distinct.iter().map(|v| v.parse::<f64>().ok()).collect();
    match (entry.kind, numeric) {
        (_, Some(nums)) => {
            let mut pairs: Vec<(f64, String)> = nums.into_iter().zip(distinct).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            distinct = pairs.into_iter().map(|p| p.1).collect();
        }
        (VariableKind::Ordinal, None) => {
            return Err(Error::Schema(format!(
                "ordinal column `{}` needs explicit levels (values are not numeric)",
                entry.name
            )))
        }
        _ => {}
    }
    Ok(distinct)
}

/// Load a CSV file (header row, comma separated) using a JSON schema.
///
/// Only columns named in the schema are kept, in schema order. Rows with a
/// missing value (`""`, `?`, `NA`) or a value outside the declared level list
/// are dropped and counted in the returned [`LoadReport`].
pub fn load_csv(data: &Path, schema: &Path) -> Result<(Dataset, LoadReport)> {
    let entries = read_schema(schema)?;
    let file = File::open(data).map_err(|e| Error::io(data, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(BufReader::new(file));
    let header = reader.headers()?.clone();
    let positions: Vec<usize> = entries
        .iter()
        .map(|e| {
            header
                .iter()
                .position(|h| h == e.name)
                .ok_or_else(|| Error::UnknownColumn(e.name.clone()))
        })
        .collect::<Result<_>>()?;

    let mut raw: Vec<Vec<String>> = vec![Vec::new(); entries.len()];
    let mut report = LoadReport::default();
    for record in reader.records() {
        let record = record?;
        report.rows_read += 1;
        for (col, &pos) in raw.iter_mut().zip(&positions) {
            col.push(record.get(pos).unwrap_or("").to_string());
        }
    }
    encode_columns(&entries, &raw, report)
}

/// Encode raw string columns against schema entries (shared by CSV loading
/// and tests).
pub fn encode_columns(
    entries: &[SchemaEntry],
    raw: &[Vec<String>],
    mut report: LoadReport,
) -> Result<(Dataset, LoadReport)> {
    let n_raw = raw.first().map_or(0, Vec::len);
    let mut metas = Vec::with_capacity(entries.len());
    for (entry, col) in entries.iter().zip(raw) {
        let levels = match &entry.levels {
            Some(l) => l.clone(),
            None => {
                let values: Vec<&str> = col.iter().map(String::as_str).collect();
                infer_levels(entry, &values)?
            }
        };
        metas.push(VariableMeta::new(entry.name.clone(), entry.kind, levels)?);
    }

    let lookups: Vec<HashMap<&str, usize>> = metas
        .iter()
        .map(|m| m.levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect())
        .collect();
    let mut columns: Vec<Vec<usize>> = vec![Vec::with_capacity(n_raw); entries.len()];
    for i in 0..n_raw {
        let mut codes = Vec::with_capacity(entries.len());
        let mut missing = false;
        let mut unknown = false;
        for (col, lookup) in raw.iter().zip(&lookups) {
            let v = col[i].as_str();
            if is_missing(v) {
                missing = true;
            } else if let Some(&c) = lookup.get(v) {
                codes.push(c);
            } else {
                unknown = true;
            }
        }
        if missing {
            report.rows_dropped_missing += 1;
        } else if unknown {
            report.rows_dropped_unknown_level += 1;
        } else {
            for (c, code) in columns.iter_mut().zip(codes) {
                c.push(code);
            }
        }
    }
    if report.rows_dropped() > 0 {
        log::warn!(
            "dropped {} of {} rows ({} with missing values, {} with values outside the schema)",
            report.rows_dropped(),
            report.rows_read,
            report.rows_dropped_missing,
            report.rows_dropped_unknown_level
        );
    }
    let ds = Dataset::new(metas, columns)?;
    for v in 0..ds.n_vars() {
        let observed = ds.level_counts(v).iter().filter(|&&c| c > 0).count();
        if observed < 2 {
            return Err(Error::Data(format!(
                "column `{}` has {observed} observed level(s) after encoding",
                ds.meta(v).name
            )));
        }
    }
    Ok((ds, report))
}

/// Write a dataset as CSV plus JSON schema, readable by [`load_csv`].
pub fn write_csv(ds: &Dataset, data: &Path, schema: &Path) -> Result<()> {
    let file = File::create(data).map_err(|e| Error::io(data, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(ds.names())?;
    for i in 0..ds.n() {
        w.write_record((0..ds.n_vars()).map(|v| ds.label(i, v)))?;
    }
    w.flush().map_err(|e| Error::io(data, e))?;

    let entries: Vec<SchemaEntry> = ds
        .metas()
        .iter()
        .map(|m| SchemaEntry {
            name: m.name.clone(),
            kind: m.kind,
            levels: Some(m.levels.clone()),
        })
        .collect();
    let text = serde_json::to_string_pretty(&entries).map_err(|e| Error::Schema(e.to_string()))?;
    std::fs::write(schema, text).map_err(|e| Error::io(schema, e))
}

/// Replace a numeric column by an ordinal binned version.
///
/// The column's level labels must parse as numbers. A value `v` lands in bin
/// `i` when `cutpoints[i-1] < v <= cutpoints[i]`; values at or below the first
/// cutpoint go to bin 0 and values above the last to the final bin.
pub fn discretize(ds: &Dataset, column: &str, cutpoints: &[f64], labels: &[String]) -> Result<Dataset> {
    if labels.len() != cutpoints.len() + 1 {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} cutpoints",
            labels.len(),
            cutpoints.len()
        )));
    }
    if cutpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("cutpoints must be strictly ascending".into()));
    }
    let var = ds.index_of(column)?;
    let meta = ds.meta(var);
    let bin_of_level: Vec<usize> = meta
        .levels
        .iter()
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map(|v| cutpoints.iter().filter(|&&c| v > c).count())
                .map_err(|_| Error::Data(format!("column `{column}` has non-numeric value `{l}`")))
        })
        .collect::<Result<_>>()?;
    let codes: Vec<usize> = ds.column(var).iter().map(|&c| bin_of_level[c]).collect();
    let mut counts = vec![0usize; labels.len()];
    for &c in &codes {
        counts[c] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Data(format!(
            "bin `{}` of column `{column}` is empty",
            labels[empty]
        )));
    }
    let new_meta = VariableMeta::new(column, VariableKind::Ordinal, labels.to_vec())?;
    ds.with_column(var, new_meta, codes)
}

/// Uniform sample of `n` rows without replacement, deterministic in `seed`.
/// Rows keep their original relative order.
pub fn subsample(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n > ds.n() {
        return Err(Error::InvalidArgument(format!(
            "cannot subsample {n} rows from {}",
            ds.n()
        )));
    }
    let mut rng = stream_rng(seed, 0x5ab5);
    let mut rows = index::sample(&mut rng, ds.n(), n).into_vec();
    rows.sort_unstable();
    Ok(ds.select_rows(&rows))
}

/// Two-way table of counts; `counts[i][j]` counts rows with `x = i, y = j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub n: u64,
}

impl ContingencyTable {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let width = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidArgument("ragged contingency table".into()));
        }
        let n = counts.iter().flatten().sum();
        Ok(ContingencyTable { counts, n })
    }

    pub fn transpose(&self) -> ContingencyTable {
        let rows = self.counts.len();
        let cols = self.counts.first().map_or(0, Vec::len);
        let counts = (0..cols)
            .map(|j| (0..rows).map(|i| self.counts[i][j]).collect())
            .collect();
        ContingencyTable { counts, n: self.n }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let cols = self.counts.first().map_or(0, Vec::len);
        (0..cols).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }
}

pub fn contingency(ds: &Dataset, x: &str, y: &str) -> Result<ContingencyTable> {
    let xi = ds.index_of(x)?;
    let yi = ds.index_of(y)?;
    let mut counts = vec![vec![0u64; ds.meta(yi).n_levels()]; ds.meta(xi).n_levels()];
    for (&a, &b) in ds.column(xi).iter().zip(ds.column(yi)) {
        counts[a][b] += 1;
    }
    Ok(ContingencyTable {
        counts,
        n: ds.n() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of independence on a two-way table. Empty rows
/// and columns do not count towards the degrees of freedom; a table with a
/// single non-empty row or column yields `stat = 0, df = 0, p = 1`.
pub fn chi_square_independence(t: &ContingencyTable) -> ChiSquareResult {
    let rows = t.row_sums();
    let cols = t.col_sums();
    let k = rows.iter().filter(|&&r| r > 0).count();
    let r = cols.iter().filter(|&&c| c > 0).count();
    if t.n == 0 || k < 2 || r < 2 {
        return ChiSquareResult {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
        };
    }
    let n = t.n as f64;
    let mut stat = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] as f64 * cols[j] as f64 / n;
            if e > 0.0 {
                let d = o as f64 - e;
                stat += d * d / e;
            }
        }
    }
    let df = (k - 1) * (r - 1);
    ChiSquareResult {
        statistic: stat,
        df,
        p_value: chi_square_sf(stat, df),
    }
}

/// Root mean square error of approximation, `sqrt(max(stat - df, 0) / (n df))`.
pub fn rmsea(stat: f64, df: usize, n: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::InvalidArgument("rmsea needs df >= 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("rmsea needs n >= 1".into()));
    }
    Ok(((stat - df as f64).max(0.0) / (n as f64 * df as f64)).sqrt())
}
