use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Value};
use crate::error::{Error, Result};

/// Scale applied to one source attribute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnScale {
    Numeric { name: String, min: f64, max: f64 },
    Categorical { name: String, vocabulary: Vec<String> },
}

/// Parameters of the standard embedding, fitted on real (training) data and
/// reused verbatim for synthetic and control data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub columns: Vec<ColumnScale>,
}

impl ScalingParams {
    pub fn fit(data: &Dataset) -> Self {
        let columns = data
            .schema()
            .attributes()
            .iter()
            .enumerate()
            .map(|(a, attr)| match attr.vocabulary() {
                Some(v) => ColumnScale::Categorical {
                    name: attr.name.clone(),
                    vocabulary: v.to_vec(),
                },
                None => {
                    let (min, max) = data.numeric_range(a).unwrap_or((0.0, 0.0));
                    ColumnScale::Numeric {
                        name: attr.name.clone(),
                        min,
                        max,
                    }
                }
            })
            .collect();
        ScalingParams { columns }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Embedded width.
    pub fn n_dims(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c {
                ColumnScale::Numeric { .. } => 1,
                ColumnScale::Categorical { vocabulary, .. } => vocabulary.len(),
            })
            .sum()
    }
}

/// Where an embedded column came from.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnSource {
    Scaled { attribute: usize },
    OneHot { attribute: usize, level: usize },
}

impl ColumnSource {
    pub fn attribute(&self) -> usize {
        match *self {
            ColumnSource::Scaled { attribute } | ColumnSource::OneHot { attribute, .. } => {
                attribute
            }
        }
    }
}

/// Row-major numeric form of a dataset.
#[derive(Clone, Debug)]
pub struct EmbeddedMatrix {
    data: Vec<f64>,
    n_rows: usize,
    n_dims: usize,
    pub column_map: Vec<ColumnSource>,
    pub scaling_params: ScalingParams,
}

impl EmbeddedMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, column_map: Vec<ColumnSource>, params: ScalingParams) -> Self {
        let n_rows = rows.len();
        let n_dims = column_map.len();
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), n_rows * n_dims);
        EmbeddedMatrix {
            data,
            n_rows,
            n_dims,
            column_map,
            scaling_params: params,
        }
    }

    /// Plain matrix without attribute provenance (tests, ad-hoc inputs).
    pub fn from_raw(n_rows: usize, n_dims: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n_rows * n_dims);
        EmbeddedMatrix {
            data,
            n_rows,
            n_dims,
            column_map: (0..n_dims)
                .map(|attribute| ColumnSource::Scaled { attribute })
                .collect(),
            scaling_params: ScalingParams { columns: vec![] },
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_dims..(i + 1) * self.n_dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_dims.max(1)).take(self.n_rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Columns belonging to the given source attributes.
    pub fn columns_for(&self, attributes: &[usize]) -> Vec<usize> {
        (0..self.n_dims)
            .filter(|&j| attributes.contains(&self.column_map[j].attribute()))
            .collect()
    }

    /// Keeps only the listed columns.
    pub fn select_columns(&self, cols: &[usize]) -> EmbeddedMatrix {
        let mut data = Vec::with_capacity(self.n_rows * cols.len());
        for i in 0..self.n_rows {
            let row = self.row(i);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        EmbeddedMatrix {
            data,
            n_rows: self.n_rows,
            n_dims: cols.len(),
            column_map: cols.iter().map(|&j| self.column_map[j].clone()).collect(),
            scaling_params: self.scaling_params.clone(),
        }
    }
}

pub(crate) const ONE_HOT_WEIGHT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Standard embedding: numeric attributes min-max scaled to `[0, 1]` (clamped),
/// categorical attributes one-hot encoded with weight `1/sqrt(2)` so a
/// mismatch costs exactly 1 in squared Euclidean distance.
pub fn embed(data: &Dataset, params: Option<&ScalingParams>) -> Result<EmbeddedMatrix> {
    let fitted;
    let params = match params {
        Some(p) => p,
        None => {
            fitted = ScalingParams::fit(data);
            &fitted
        }
    };
    let schema = data.schema();
    if params.columns.len() != schema.len() {
        return Err(Error::SchemaMismatch(format!(
            "scaling params cover {} attributes, dataset has {}",
            params.columns.len(),
            schema.len()
        )));
    }

    // Per attribute: either (min, span) or a map from the dataset's level
    // index to the params' level index.
    enum Plan {
        Numeric { min: f64, span: f64 },
        Categorical { offset_map: Vec<Option<usize>>, width: usize },
    }
    let mut plans = Vec::with_capacity(schema.len());
    let mut column_map = Vec::new();
    for (a, (attr, col)) in schema.attributes().iter().zip(&params.columns).enumerate() {
        match (col, attr.vocabulary()) {
            (ColumnScale::Numeric { name, min, max }, None) if *name == attr.name => {
                plans.push(Plan::Numeric {
                    min: *min,
                    span: max - min,
                });
                column_map.push(ColumnSource::Scaled { attribute: a });
            }
            (ColumnScale::Categorical { name, vocabulary }, Some(levels)) if *name == attr.name => {
                let index: HashMap<&str, usize> = vocabulary
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.as_str(), i))
                    .collect();
                let offset_map = levels.iter().map(|l| index.get(l.as_str()).copied()).collect();
                plans.push(Plan::Categorical {
                    offset_map,
                    width: vocabulary.len(),
                });
                column_map.extend(
                    (0..vocabulary.len()).map(|level| ColumnSource::OneHot { attribute: a, level }),
                );
            }
            _ => {
                return Err(Error::SchemaMismatch(format!(
                    "scaling params do not match attribute {:?}",
                    attr.name
                )))
            }
        }
    }

    let n_dims = column_map.len();
    let mut out = vec![0.0; data.n_rows() * n_dims];
    for (i, row) in data.rows().iter().enumerate() {
        let dst = &mut out[i * n_dims..(i + 1) * n_dims];
        let mut j = 0;
        for (a, plan) in plans.iter().enumerate() {
            match (plan, row[a]) {
                (Plan::Numeric { min, span }, Value::Num(x)) => {
                    dst[j] = if *span > 0.0 {
                        ((x - min) / span).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    j += 1;
                }
                (Plan::Categorical { offset_map, width }, Value::Cat(c)) => {
                    let level = offset_map[c as usize].ok_or_else(|| Error::UnknownCategory {
                        attribute: schema.attribute(a).name.clone(),
                        value: data.display_value(a, row[a]),
                    })?;
                    dst[j + level] = ONE_HOT_WEIGHT;
                    j += width;
                }
                _ => unreachable!("dataset invariant: value kinds match schema"),
            }
        }
    }
    Ok(EmbeddedMatrix {
        data: out,
        n_rows: data.n_rows(),
        n_dims,
        column_map,
        scaling_params: params.clone(),
    })
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}
