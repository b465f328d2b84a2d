use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttributeKind {
    Numeric {
        /// Declared `(min, max)`; observed range is used when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<(f64, f64)>,
    },
    Categorical {
        #[serde(default)]
        vocabulary: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric { bounds: None },
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        vocabulary: impl IntoIterator<Item = S>,
    ) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Categorical {
                vocabulary: vocabulary.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, AttributeKind::Numeric { .. })
    }

    pub fn vocabulary(&self) -> Option<&[String]> {
        match &self.kind {
            AttributeKind::Categorical { vocabulary } => Some(vocabulary),
            AttributeKind::Numeric { .. } => None,
        }
    }
}

/// Ordered attribute set of a table. Attribute subsets elsewhere in the crate
/// are index lists into this ordering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let schema = Schema { attributes };
        schema.validate(true)?;
        Ok(schema)
    }

    /// Like [`Schema::new`] but allows empty vocabularies, for use as
    /// ingestion hints where levels are filled in from the data.
    pub fn hint(attributes: Vec<Attribute>) -> Result<Self> {
        let schema = Schema { attributes };
        schema.validate(false)?;
        Ok(schema)
    }

    pub(crate) fn validate(&self, require_vocab: bool) -> Result<()> {
        let mut seen = HashSet::new();
        for attr in &self.attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate attribute name {:?}",
                    attr.name
                )));
            }
            match &attr.kind {
                AttributeKind::Numeric { bounds: Some((lo, hi)) } if lo > hi => {
                    return Err(Error::InvalidSchema(format!(
                        "attribute {:?}: declared min {lo} > max {hi}",
                        attr.name
                    )));
                }
                AttributeKind::Categorical { vocabulary } => {
                    if require_vocab && vocabulary.is_empty() {
                        return Err(Error::InvalidSchema(format!(
                            "attribute {:?} has an empty vocabulary",
                            attr.name
                        )));
                    }
                    let distinct: HashSet<_> = vocabulary.iter().collect();
                    if distinct.len() != vocabulary.len() {
                        return Err(Error::InvalidSchema(format!(
                            "attribute {:?} has duplicate levels",
                            attr.name
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, idx: usize) -> &Attribute {
        &self.attributes[idx]
    }

    pub(crate) fn attributes_mut(&mut self) -> &mut [Attribute] {
        &mut self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.attributes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Resolves attribute names to indices.
    pub fn indices_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.index_of(n.as_ref()).ok_or_else(|| {
                    Error::SchemaMismatch(format!("no attribute named {:?}", n.as_ref()))
                })
            })
            .collect()
    }

    pub fn numeric_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.attributes[i].is_numeric())
            .collect()
    }

    pub fn categorical_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| !self.attributes[i].is_numeric())
            .collect()
    }

    /// Same names and kinds, and each categorical vocabulary of one schema is
    /// a prefix of the other's. Value indices are then interchangeable for
    /// every level both schemas know.
    pub fn is_compatible(&self, other: &Schema) -> bool {
        self.len() == other.len()
            && self
                .attributes
                .iter()
                .zip(&other.attributes)
                .all(|(a, b)| {
                    a.name == b.name
                        && match (&a.kind, &b.kind) {
                            (AttributeKind::Numeric { .. }, AttributeKind::Numeric { .. }) => true,
                            (
                                AttributeKind::Categorical { vocabulary: va },
                                AttributeKind::Categorical { vocabulary: vb },
                            ) => {
                                let n = va.len().min(vb.len());
                                va[..n] == vb[..n]
                            }
                            _ => false,
                        }
                })
    }

    pub(crate) fn ensure_compatible(&self, other: &Schema) -> Result<()> {
        if self.is_compatible(other) {
            Ok(())
        } else {
            Err(Error::SchemaMismatch(format!(
                "attributes {:?} vs {:?}",
                self.names(),
                other.names()
            )))
        }
    }
}
