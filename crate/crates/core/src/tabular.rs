//! Tabular datasets: schema, CSV/ARFF loading, imputation, statistics and
//! seeded train/test splitting.
//!
//! A [`Dataset`] is a row-major table of [`Value`] cells together with a
//! schema that marks exactly one numeric attribute as the regression target.
//! Categorical cells hold an index into the attribute's category list.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    /// Category labels, in index order. Empty for numeric attributes.
    pub categories: Vec<String>,
    pub is_target: bool,
}

impl AttributeSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        AttributeSchema {
            name: name.into(),
            kind: AttributeKind::Numeric,
            categories: Vec::new(),
            is_target: false,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        AttributeSchema {
            name: name.into(),
            kind: AttributeKind::Categorical,
            categories: categories.into_iter().map(Into::into).collect(),
            is_target: false,
        }
    }

    pub fn target(name: impl Into<String>) -> Self {
        AttributeSchema {
            is_target: true,
            ..AttributeSchema::numeric(name)
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == AttributeKind::Categorical
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }
}

/// A single table cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Numeric(f64),
    Category(usize),
    Missing,
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    /// Numeric view of the cell: the value itself, or the category index.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Numeric(v) => Some(v),
            Value::Category(c) => Some(c as f64),
            Value::Missing => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<AttributeSchema>,
    rows: Vec<Vec<Value>>,
}

fn validate_schema(schema: &[AttributeSchema]) -> Result<usize> {
    let targets: Vec<usize> = schema
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_target)
        .map(|(i, _)| i)
        .collect();
    if targets.len() != 1 {
        return Err(Error::Schema(format!(
            "expected exactly one target attribute, found {}",
            targets.len()
        )));
    }
    let target = targets[0];
    if schema[target].is_categorical() {
        return Err(Error::CategoricalTarget(schema[target].name.clone()));
    }
    for attr in schema {
        match attr.kind {
            AttributeKind::Categorical => {
                if attr.categories.is_empty() {
                    return Err(Error::Schema(format!(
                        "categorical attribute `{}` has no categories",
                        attr.name
                    )));
                }
                let mut seen = std::collections::HashSet::new();
                for c in &attr.categories {
                    if !seen.insert(c.as_str()) {
                        return Err(Error::Schema(format!(
                            "duplicate category `{c}` in attribute `{}`",
                            attr.name
                        )));
                    }
                }
            }
            AttributeKind::Numeric => {
                if !attr.categories.is_empty() {
                    return Err(Error::Schema(format!(
                        "numeric attribute `{}` lists categories",
                        attr.name
                    )));
                }
            }
        }
    }
    Ok(target)
}

impl Dataset {
    /// Builds a dataset after checking the schema and every cell against it.
    pub fn new(schema: Vec<AttributeSchema>, rows: Vec<Vec<Value>>) -> Result<Self> {
        validate_schema(&schema)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Schema(format!(
                    "row {r} has {} cells, schema has {} attributes",
                    row.len(),
                    schema.len()
                )));
            }
            for (cell, attr) in row.iter().zip(&schema) {
                match (cell, attr.kind) {
                    (Value::Missing, _) => {}
                    (Value::Numeric(_), AttributeKind::Numeric) => {}
                    (&Value::Category(c), AttributeKind::Categorical) => {
                        if c >= attr.categories.len() {
                            return Err(Error::CategoryOutOfRange {
                                attribute: attr.name.clone(),
                                index: c,
                                count: attr.categories.len(),
                            });
                        }
                    }
                    _ => {
                        return Err(Error::Schema(format!(
                            "row {r}: cell {cell:?} does not match attribute `{}`",
                            attr.name
                        )))
                    }
                }
            }
        }
        Ok(Dataset { schema, rows })
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.schema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn target_index(&self) -> usize {
        self.schema
            .iter()
            .position(|a| a.is_target)
            .expect("validated schema has a target")
    }

    /// Indices of the non-target attributes, in schema order.
    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.schema.len())
            .filter(|&i| !self.schema[i].is_target)
            .collect()
    }

    /// Non-missing values of one column, as reals (category indices for
    /// categorical columns).
    pub fn column_values(&self, index: usize) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r[index].as_f64()).collect()
    }

    /// Target column; missing targets are skipped.
    pub fn targets(&self) -> Vec<f64> {
        self.column_values(self.target_index())
    }

    /// New dataset holding the given rows (by index, repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn has_missing(&self) -> bool {
        self.rows.iter().flatten().any(Value::is_missing)
    }

    /// Writes the dataset as CSV with a header line; categorical cells are
    /// written as labels, missing cells as empty fields.
    pub fn to_csv_string(&self, target_last: bool) -> String {
        let mut order: Vec<usize> = (0..self.schema.len()).collect();
        if target_last {
            let t = self.target_index();
            order.retain(|&i| i != t);
            order.push(t);
        }
        let mut out = String::new();
        let header: Vec<&str> = order.iter().map(|&i| self.schema[i].name.as_str()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = order
                .iter()
                .map(|&i| match row[i] {
                    Value::Numeric(v) => format!("{v}"),
                    Value::Category(c) => self.schema[i].categories[c].clone(),
                    Value::Missing => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

// --- loading -------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Arff,
}

impl Format {
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "arff" => Some(Format::Arff),
            _ => None,
        }
    }
}

/// Which column holds the regression target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    Index(usize),
    /// The last column (the usual ARFF convention).
    Last,
}

impl TargetColumn {
    fn resolve(&self, names: &[String]) -> Result<usize> {
        match self {
            TargetColumn::Name(n) => names
                .iter()
                .position(|c| c == n)
                .or_else(|| n.parse::<usize>().ok().filter(|&i| i < names.len()))
                .ok_or_else(|| Error::UnknownColumn(n.clone())),
            TargetColumn::Index(i) if *i < names.len() => Ok(*i),
            TargetColumn::Index(i) => Err(Error::UnknownColumn(i.to_string())),
            TargetColumn::Last if !names.is_empty() => Ok(names.len() - 1),
            TargetColumn::Last => Err(Error::UnknownColumn("<last>".into())),
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: Format, target: &TargetColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ds = match format {
        Format::Csv => parse_csv(&text, target)?,
        Format::Arff => parse_arff(&text, target)?,
    };
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(ds)
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s == "?"
}

/// Parses CSV text. A column is categorical iff any non-missing cell fails
/// to parse as a finite number; categories are ordered by first appearance.
pub fn parse_csv(text: &str, target: &TargetColumn) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "empty header".into(),
        });
    }

    let mut raw: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", names.len(), record.len()),
            });
        }
        raw.push(record.iter().map(str::to_owned).collect());
    }

    let target_idx = target.resolve(&names)?;
    let mut schema = Vec::with_capacity(names.len());
    for (c, name) in names.iter().enumerate() {
        let categorical = raw
            .iter()
            .any(|r| !is_missing_token(&r[c]) && parse_number(&r[c]).is_none());
        if categorical {
            if c == target_idx {
                return Err(Error::CategoricalTarget(name.clone()));
            }
            let mut cats: Vec<String> = Vec::new();
            for r in &raw {
                let cell = &r[c];
                if !is_missing_token(cell) && !cats.contains(cell) {
                    cats.push(cell.clone());
                }
            }
            schema.push(AttributeSchema::categorical(name.clone(), cats));
        } else {
            schema.push(AttributeSchema::numeric(name.clone()));
        }
    }
    schema[target_idx].is_target = true;

    let lookups: Vec<HashMap<&str, usize>> = schema
        .iter()
        .map(|a| {
            a.categories
                .iter()
                .enumerate()
                .map(|(i, c)| (c.as_str(), i))
                .collect()
        })
        .collect();
    let rows = raw
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(c, cell)| {
                    if is_missing_token(cell) {
                        Value::Missing
                    } else if schema[c].is_categorical() {
                        Value::Category(lookups[c][cell.as_str()])
                    } else {
                        Value::Numeric(parse_number(cell).expect("column inferred numeric"))
                    }
                })
                .collect()
        })
        .collect();
    Dataset::new(schema, rows)
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    if s.len() >= 2
        && ((s.starts_with('\'') && s.ends_with('\'')) || (s.starts_with('"') && s.ends_with('"')))
    {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

/// Splits on commas outside single or double quotes.
fn split_fields(line: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut quote: Option<char> = None;
    let mut start = 0;
    for (i, ch) in line.char_indices() {
        match (quote, ch) {
            (None, '\'' | '"') => quote = Some(ch),
            (Some(q), c) if c == q => quote = None,
            (None, ',') => {
                out.push(&line[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&line[start..]);
    out
}

/// Splits an `@attribute` declaration body into (name, type).
fn split_attribute_decl(rest: &str) -> Option<(&str, &str)> {
    let rest = rest.trim_start();
    let first = rest.chars().next()?;
    if first == '\'' || first == '"' {
        let end = rest[1..].find(first)? + 1;
        Some((&rest[1..end], rest[end + 1..].trim()))
    } else {
        let end = rest.find(|c: char| c.is_whitespace() || c == '{')?;
        Some((&rest[..end], rest[end..].trim()))
    }
}

/// Parses the ARFF subset: `@relation`, `@attribute` with numeric/real/
/// integer or nominal `{...}` types, and dense `@data` rows with `?` as
/// the missing marker. Keywords are case-insensitive.
pub fn parse_arff(text: &str, target: &TargetColumn) -> Result<Dataset> {
    let mut schema: Vec<AttributeSchema> = Vec::new();
    let mut in_data = false;
    let mut data_lines: Vec<(u64, &str)> = Vec::new();

    for (n, raw_line) in text.lines().enumerate() {
        let line_no = n as u64 + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if in_data {
            data_lines.push((line_no, line));
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            continue;
        } else if lower.starts_with("@attribute") {
            let rest = &line["@attribute".len()..];
            let (name, ty) = split_attribute_decl(rest).ok_or_else(|| Error::Parse {
                line: line_no,
                message: "malformed @attribute".into(),
            })?;
            let ty_lower = ty.to_ascii_lowercase();
            let attr = if ty.starts_with('{') {
                let close = ty.rfind('}').ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "unterminated nominal specification".into(),
                })?;
                let cats: Vec<String> = split_fields(&ty[1..close])
                    .into_iter()
                    .map(|c| unquote(c).to_owned())
                    .filter(|c| !c.is_empty())
                    .collect();
                AttributeSchema::categorical(name, cats)
            } else if ty_lower == "numeric" || ty_lower == "real" || ty_lower == "integer" {
                AttributeSchema::numeric(name)
            } else {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unsupported attribute type `{ty}` for `{name}`"),
                });
            };
            schema.push(attr);
        } else if lower.starts_with("@data") {
            in_data = true;
        } else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("unexpected header line `{line}`"),
            });
        }
    }
    if schema.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no @attribute declarations".into(),
        });
    }

    let names: Vec<String> = schema.iter().map(|a| a.name.clone()).collect();
    let target_idx = target.resolve(&names)?;
    if schema[target_idx].is_categorical() {
        return Err(Error::CategoricalTarget(names[target_idx].clone()));
    }
    schema[target_idx].is_target = true;

    let mut rows = Vec::with_capacity(data_lines.len());
    for (line_no, line) in data_lines {
        if line.starts_with('{') {
            return Err(Error::Parse {
                line: line_no,
                message: "sparse ARFF rows are not supported".into(),
            });
        }
        let fields = split_fields(line);
        if fields.len() != schema.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} values, found {}", schema.len(), fields.len()),
            });
        }
        let mut row = Vec::with_capacity(schema.len());
        for (field, attr) in fields.iter().zip(&schema) {
            let cell = unquote(field);
            let value = if cell == "?" {
                Value::Missing
            } else if attr.is_categorical() {
                let idx = attr.categories.iter().position(|c| c == cell).ok_or_else(|| {
                    Error::Parse {
                        line: line_no,
                        message: format!("undeclared value `{cell}` for `{}`", attr.name),
                    }
                })?;
                Value::Category(idx)
            } else {
                Value::Numeric(parse_number(cell).ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("`{cell}` is not a number (attribute `{}`)", attr.name),
                })?)
            };
            row.push(value);
        }
        rows.push(row);
    }
    Dataset::new(schema, rows)
}

// --- imputation ----------------------------------------------------------

/// Drops rows with a missing target, then fills numeric gaps with the column
/// mean and categorical gaps with the column mode (lowest index on ties).
pub fn impute(ds: &Dataset) -> Result<Dataset> {
    let t = ds.target_index();
    let rows: Vec<Vec<Value>> = ds
        .rows
        .iter()
        .filter(|r| !r[t].is_missing())
        .cloned()
        .collect();
    if rows.is_empty() {
        return Err(Error::AllMissing(ds.schema[t].name.clone()));
    }

    let mut fills = Vec::with_capacity(ds.schema.len());
    for (c, attr) in ds.schema.iter().enumerate() {
        let present = || rows.iter().map(|r| r[c]).filter(|v| !v.is_missing());
        if present().next().is_none() {
            return Err(Error::AllMissing(attr.name.clone()));
        }
        let fill = match attr.kind {
            AttributeKind::Numeric => {
                let (sum, count) = present().fold((0.0, 0usize), |(s, n), v| {
                    (s + v.as_f64().unwrap(), n + 1)
                });
                Value::Numeric(sum / count as f64)
            }
            AttributeKind::Categorical => {
                let mut counts = vec![0usize; attr.categories.len()];
                for v in present() {
                    if let Value::Category(i) = v {
                        counts[i] += 1;
                    }
                }
                Value::Category(argmax_first(&counts))
            }
        };
        fills.push(fill);
    }

    let rows = rows
        .into_iter()
        .map(|r| {
            r.into_iter()
                .zip(&fills)
                .map(|(v, fill)| if v.is_missing() { *fill } else { v })
                .collect()
        })
        .collect();
    Ok(Dataset {
        schema: ds.schema.clone(),
        rows,
    })
}

fn argmax_first(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

// --- splitting -----------------------------------------------------------

fn train_count(rows: usize, fraction: f64) -> usize {
    let exact = fraction * rows as f64;
    // 0.66 * 100 is 66.00000000000001 in binary floating point.
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

/// Row indices of a train/test split. With `shuffle`, rows are permuted by
/// a generator seeded with `seed`; otherwise order is preserved.
pub fn split_indices(
    rows: usize,
    train_fraction: f64,
    seed: u64,
    shuffle: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidSplit(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    let mut order: Vec<usize> = (0..rows).collect();
    if shuffle {
        order.shuffle(&mut seeded_rng(seed));
    }
    let k = train_count(rows, train_fraction);
    if k == 0 || k >= rows {
        return Err(Error::InvalidSplit(format!(
            "{rows} rows with fraction {train_fraction} leaves an empty side"
        )));
    }
    let test = order.split_off(k);
    Ok((order, test))
}

pub fn split(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
    shuffle: bool,
) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.n_rows(), train_fraction, seed, shuffle)?;
    Ok((ds.select(&train), ds.select(&test)))
}

// --- statistics ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnStats {
    Numeric {
        count: usize,
        min: f64,
        max: f64,
        mean: f64,
        /// Sample standard deviation (n - 1 denominator); 0 for n < 2.
        stddev: f64,
    },
    Categorical {
        counts: Vec<usize>,
        mode: usize,
    },
}

impl ColumnStats {
    pub fn range(&self) -> Option<(f64, f64)> {
        match *self {
            ColumnStats::Numeric { count, min, max, .. } if count > 0 => Some((min, max)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeStats {
    pub columns: Vec<ColumnStats>,
}

/// Mean and sample standard deviation (two-pass).
pub fn mean_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

pub fn stats(ds: &Dataset) -> AttributeStats {
    let columns = ds
        .schema
        .iter()
        .enumerate()
        .map(|(c, attr)| match attr.kind {
            AttributeKind::Numeric => {
                let values = ds.column_values(c);
                let (mean, stddev) = mean_stddev(&values);
                let (min, max) = values.iter().fold(
                    (f64::INFINITY, f64::NEG_INFINITY),
                    |(lo, hi), &v| (lo.min(v), hi.max(v)),
                );
                let (min, max) = if values.is_empty() {
                    (f64::NAN, f64::NAN)
                } else {
                    (min, max)
                };
                ColumnStats::Numeric {
                    count: values.len(),
                    min,
                    max,
                    mean,
                    stddev,
                }
            }
            AttributeKind::Categorical => {
                let mut counts = vec![0usize; attr.categories.len()];
                for row in &ds.rows {
                    if let Value::Category(i) = row[c] {
                        counts[i] += 1;
                    }
                }
                let mode = argmax_first(&counts);
                ColumnStats::Categorical { counts, mode }
            }
        })
        .collect();
    AttributeStats { columns }
}
