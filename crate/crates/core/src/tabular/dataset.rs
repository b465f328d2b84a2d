use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use super::schema::{Attribute, AttributeKind, Schema};
use crate::error::{Error, Result};
use crate::rng;

/// One cell. Numeric attributes hold a finite float, categorical attributes
/// an index into the attribute's vocabulary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(u32),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Num(x) => x,
            Value::Cat(c) => c as f64,
        }
    }

    pub fn num(self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(x),
            Value::Cat(_) => None,
        }
    }

    pub fn cat(self) -> Option<u32> {
        match self {
            Value::Cat(c) => Some(c),
            Value::Num(_) => None,
        }
    }

    /// Bit pattern used for exact-match hashing. `-0.0` folds onto `0.0`.
    pub(crate) fn key(self) -> u64 {
        match self {
            Value::Num(x) => {
                if x == 0.0 {
                    0
                } else {
                    x.to_bits()
                }
            }
            Value::Cat(c) => c as u64,
        }
    }
}

pub type Record = Vec<Value>;

/// Hashable exact-match key of a record.
pub(crate) fn record_key(record: &[Value]) -> Vec<u64> {
    record.iter().map(|v| v.key()).collect()
}

/// Schema-typed table of records.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Record>,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Record>) -> Result<Self> {
        schema.validate(true)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::RaggedRow {
                    row: r,
                    expected: schema.len(),
                    found: row.len(),
                });
            }
            for (attr, value) in schema.attributes().iter().zip(row) {
                match (&attr.kind, value) {
                    (AttributeKind::Numeric { .. }, Value::Num(x)) if x.is_finite() => {}
                    (AttributeKind::Categorical { vocabulary }, Value::Cat(c))
                        if (*c as usize) < vocabulary.len() => {}
                    _ => {
                        return Err(Error::SchemaMismatch(format!(
                            "row {r}: invalid value {value:?} for attribute {:?}",
                            attr.name
                        )))
                    }
                }
            }
        }
        Ok(Dataset { schema, rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Value] {
        &self.rows[i]
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_attributes(&self) -> usize {
        self.schema.len()
    }

    pub fn into_rows(self) -> Vec<Record> {
        self.rows
    }

    /// Rows at the given indices, in order, duplicates allowed.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Builds a dataset sharing this schema, validating the rows.
    pub fn with_rows(&self, rows: Vec<Record>) -> Result<Dataset> {
        Dataset::new(self.schema.clone(), rows)
    }

    /// Concatenates rows of a compatible dataset; the wider schema wins.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        self.schema.ensure_compatible(&other.schema)?;
        let schema = widest_schema(&self.schema, &other.schema);
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Dataset { schema, rows })
    }

    pub fn numeric_column(&self, attr: usize) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r[attr].num()).collect()
    }

    /// Observed `(min, max)` of a numeric attribute, `None` if the dataset is
    /// empty or the attribute is categorical.
    pub fn observed_range(&self, attr: usize) -> Option<(f64, f64)> {
        let col = self.numeric_column(attr);
        if col.is_empty() {
            return None;
        }
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }

    /// Declared bounds if present, observed range otherwise.
    pub fn numeric_range(&self, attr: usize) -> Option<(f64, f64)> {
        match &self.schema.attribute(attr).kind {
            AttributeKind::Numeric { bounds: Some(b) } => Some(*b),
            AttributeKind::Numeric { bounds: None } => self.observed_range(attr),
            AttributeKind::Categorical { .. } => None,
        }
    }

    /// Per-attribute ranges for Gower distances: `Some` for numeric, `None`
    /// for categorical.
    pub fn gower_ranges(&self) -> Vec<Option<(f64, f64)>> {
        (0..self.n_attributes())
            .map(|a| self.numeric_range(a))
            .collect()
    }

    /// Category counts of a categorical attribute.
    pub fn category_counts(&self, attr: usize) -> Vec<usize> {
        let n_levels = self
            .schema
            .attribute(attr)
            .vocabulary()
            .map_or(0, |v| v.len());
        let mut counts = vec![0; n_levels];
        for row in &self.rows {
            if let Value::Cat(c) = row[attr] {
                counts[c as usize] += 1;
            }
        }
        counts
    }

    pub fn display_value(&self, attr: usize, value: Value) -> String {
        match (value, self.schema.attribute(attr).vocabulary()) {
            (Value::Cat(c), Some(vocab)) => vocab[c as usize].clone(),
            (v, _) => format!("{}", v.as_f64()),
        }
    }

    /// Re-expresses the rows against `target`, a compatible schema whose
    /// vocabularies extend this one's.
    pub fn conform_to(&self, target: &Schema) -> Result<Dataset> {
        self.schema.ensure_compatible(target)?;
        for (mine, theirs) in self.schema.attributes().iter().zip(target.attributes()) {
            if let (Some(a), Some(b)) = (mine.vocabulary(), theirs.vocabulary()) {
                if a.len() > b.len() {
                    return Err(Error::UnknownCategory {
                        attribute: mine.name.clone(),
                        value: a[b.len()].clone(),
                    });
                }
            }
        }
        Ok(Dataset {
            schema: target.clone(),
            rows: self.rows.clone(),
        })
    }
}

fn widest_schema(a: &Schema, b: &Schema) -> Schema {
    let mut out = a.clone();
    for (attr, other) in out.attributes_mut().iter_mut().zip(b.attributes()) {
        if let (
            AttributeKind::Categorical { vocabulary },
            AttributeKind::Categorical { vocabulary: wider },
        ) = (&mut attr.kind, &other.kind)
        {
            if wider.len() > vocabulary.len() {
                *vocabulary = wider.clone();
            }
        }
    }
    out
}

/// Reads a CSV file with a header row. Without hints, a column whose every
/// cell parses as a float is numeric and everything else is categorical.
pub fn load_csv(path: impl AsRef<Path>, hints: Option<&Schema>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, hints)
}

pub fn read_csv<R: Read>(reader: R, hints: Option<&Schema>) -> Result<Dataset> {
    let (dataset, added) = read_csv_extending(reader, hints)?;
    for (attr, level) in added {
        log::warn!("attribute {attr:?}: level {level:?} not in hinted vocabulary, appended");
    }
    Ok(dataset)
}

/// Reads a CSV, returning the dataset and any `(attribute, level)` pairs that
/// were appended to hinted vocabularies.
pub(crate) fn read_csv_extending<R: Read>(
    reader: R,
    hints: Option<&Schema>,
) -> Result<(Dataset, Vec<(String, String)>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if let Some(h) = hints {
        let names = h.names();
        if names != header.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::HeaderMismatch(format!(
                "file has {header:?}, schema expects {names:?}"
            )));
        }
    }

    let mut cells: Vec<Vec<String>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::RaggedRow {
                row: r,
                expected: header.len(),
                found: rec.len(),
            });
        }
        let row: Vec<String> = rec.iter().map(|c| c.trim().to_string()).collect();
        if let Some(c) = row.iter().position(|c| c.is_empty()) {
            return Err(Error::MissingValue {
                row: r,
                column: header[c].clone(),
            });
        }
        cells.push(row);
    }
    if cells.is_empty() {
        return Err(Error::EmptyTable);
    }

    let mut added = Vec::new();
    let mut attributes = Vec::with_capacity(header.len());
    for (c, name) in header.iter().enumerate() {
        let attr = match hints.map(|h| &h.attribute(c).kind) {
            Some(AttributeKind::Numeric { bounds }) => Attribute {
                name: name.clone(),
                kind: AttributeKind::Numeric { bounds: *bounds },
            },
            Some(AttributeKind::Categorical { vocabulary }) => {
                let mut vocab = vocabulary.clone();
                let observed: BTreeSet<&str> = cells.iter().map(|r| r[c].as_str()).collect();
                for level in observed {
                    if !vocab.iter().any(|v| v == level) {
                        if !vocabulary.is_empty() {
                            added.push((name.clone(), level.to_string()));
                        }
                        vocab.push(level.to_string());
                    }
                }
                Attribute {
                    name: name.clone(),
                    kind: AttributeKind::Categorical { vocabulary: vocab },
                }
            }
            None => {
                if cells.iter().all(|r| parse_finite(&r[c]).is_some()) {
                    Attribute::numeric(name.clone())
                } else {
                    let observed: BTreeSet<&str> = cells.iter().map(|r| r[c].as_str()).collect();
                    Attribute::categorical(name.clone(), observed)
                }
            }
        };
        attributes.push(attr);
    }
    let schema = Schema::new(attributes)?;

    let lookups: Vec<Option<std::collections::HashMap<&str, u32>>> = schema
        .attributes()
        .iter()
        .map(|a| {
            a.vocabulary().map(|v| {
                v.iter()
                    .enumerate()
                    .map(|(i, s)| (s.as_str(), i as u32))
                    .collect()
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(cells.len());
    for (r, row) in cells.iter().enumerate() {
        let mut rec = Vec::with_capacity(row.len());
        for (c, cell) in row.iter().enumerate() {
            let value = match &lookups[c] {
                Some(map) => Value::Cat(map[cell.as_str()]),
                None => Value::Num(parse_finite(cell).ok_or_else(|| Error::BadNumber {
                    row: r,
                    column: header[c].clone(),
                    value: cell.clone(),
                })?),
            };
            rec.push(value);
        }
        rows.push(rec);
    }
    Ok((Dataset::new(schema, rows)?, added))
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(data, file)
}

pub fn write_csv_to<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(data.schema().names())?;
    for row in data.rows() {
        w.write_record(
            row.iter()
                .enumerate()
                .map(|(a, v)| data.display_value(a, *v)),
        )?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Split fractions for `(train, control, release)`.
pub type SplitFractions = (f64, f64, f64);

/// Seeded random partition into disjoint index sets of sizes `floor(f * n)`.
pub fn split_indices(n: usize, fractions: SplitFractions, seed: u64) -> Result<[Vec<usize>; 3]> {
    let (a, b, c) = fractions;
    for f in [a, b, c] {
        if !(f > 0.0) {
            return Err(Error::param(format!("split fraction {f} must be positive")));
        }
    }
    if a + b + c > 1.0 + 1e-9 {
        return Err(Error::param(format!(
            "split fractions sum to {} > 1",
            a + b + c
        )));
    }
    let sizes = [a, b, c].map(|f| ((f * n as f64) + 1e-9).floor() as usize);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::rng(seed));
    let mut start = 0;
    Ok(sizes.map(|s| {
        let part = order[start..start + s].to_vec();
        start += s;
        part
    }))
}

/// Splits into `(train, control, release)`; the remainder after flooring is
/// dropped.
pub fn split(
    data: &Dataset,
    fractions: SplitFractions,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let [a, b, c] = split_indices(data.n_rows(), fractions, seed)?;
    Ok((data.subset(&a), data.subset(&b), data.subset(&c)))
}
