//! Datasets: ingestion, validation, normalization, label-flip noise and
//! cross-validation plans.

mod folds;
mod load;
mod noise;
mod normalize;
mod synthetic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use folds::{FoldPlan, make_folds};
pub use load::{
    DataFormat, Delimiter, HeaderMode, LabelColumn, LabelMap, LoadOptions, load_dataset,
    parse_dataset,
};
pub use noise::{FlipRecord, NoiseSpec, choose_flips, flip_count, inject_label_noise};
pub use normalize::{NormalizationParams, Scheme, normalize};
pub use synthetic::two_gaussians;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("io error reading {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}, column {column}: cannot parse {value:?} as a number")]
    Parse { line: usize, column: usize, value: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount { line: usize, expected: usize, found: usize },
    #[error("line {line}: malformed sparse entry {entry:?}")]
    SparseEntry { line: usize, entry: String },
    #[error("line {line}, column {column}: missing value")]
    MissingValue { line: usize, column: usize },
    #[error("line {line}: label value {value:?} is not covered by the label mapping")]
    UnmappedLabel { line: usize, value: String },
    #[error("label column {0} not found")]
    UnknownLabelColumn(String),
    #[error("invalid label mapping entry {0:?}")]
    InvalidLabelMap(String),
    #[error("dataset must have at least 2 rows and 1 feature (got {n} x {p})")]
    TooSmall { n: usize, p: usize },
    #[error("feature matrix has {len} entries, not a multiple of {p} features")]
    Shape { len: usize, p: usize },
    #[error("feature value at row {row}, column {column} is not finite")]
    NonFinite { row: usize, column: usize },
    #[error("training data contains a single class; both labels are required")]
    SingleClass,
    #[error("noise rate {0} outside [0, 0.5]")]
    InvalidNoiseRate(f64),
    #[error("invalid fold request: k={k}, n={n} (need 2 <= k <= n)")]
    InvalidFolds { n: usize, k: usize },
    #[error("dimension mismatch: expected {expected} features, got {found}")]
    Dimension { expected: usize, found: usize },
}

/// A binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "-1")]
    Negative,
    #[serde(rename = "+1")]
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }

    /// Label predicted by a decision value; zero maps to `Positive`.
    pub fn from_decision(f: f64) -> Label {
        if f >= 0.0 { Label::Positive } else { Label::Negative }
    }

    pub fn from_bool(positive: bool) -> Label {
        if positive { Label::Positive } else { Label::Negative }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Negative => "-1",
            Label::Positive => "+1",
        })
    }
}

/// Feature matrix (row-major, `n x p`) with one label per row.
///
/// Immutable once built: every transformation returns a new dataset, so a
/// dataset can be shared freely between worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    id: String,
    p: usize,
    x: Vec<f64>,
    y: Vec<Label>,
    names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(id: impl Into<String>, x: Vec<f64>, p: usize, y: Vec<Label>) -> Result<Self, DataError> {
        if p == 0 || !x.len().is_multiple_of(p) {
            return Err(DataError::Shape { len: x.len(), p });
        }
        let n = x.len() / p;
        if n != y.len() {
            return Err(DataError::Shape { len: x.len(), p: y.len().max(1) });
        }
        if n < 2 {
            return Err(DataError::TooSmall { n, p });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { row: pos / p, column: pos % p });
        }
        Ok(Dataset { id: id.into(), p, x, y, names: None })
    }

    /// Builds a dataset from row vectors; all rows must share one length.
    pub fn from_rows(id: impl Into<String>, rows: &[Vec<f64>], y: Vec<Label>) -> Result<Self, DataError> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(DataError::Dimension { expected: p, found: bad.len() });
        }
        Dataset::new(id, rows.concat(), p, y)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        if names.len() == self.p {
            self.names = Some(names);
        }
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.x.chunks_exact(self.p)
    }

    /// Row-major feature storage.
    pub fn features(&self) -> &[f64] {
        &self.x
    }

    pub fn labels(&self) -> &[Label] {
        &self.y
    }

    pub fn label(&self, i: usize) -> Label {
        self.y[i]
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn count_positive(&self) -> usize {
        self.y.iter().filter(|l| l.is_positive()).count()
    }

    /// Rejects single-class data, which no trainer accepts.
    pub fn require_both_classes(&self) -> Result<(), DataError> {
        let pos = self.count_positive();
        if pos == 0 || pos == self.n() {
            Err(DataError::SingleClass)
        } else {
            Ok(())
        }
    }

    /// Copy with replaced labels (same length required).
    pub fn with_labels(&self, y: Vec<Label>) -> Result<Dataset, DataError> {
        if y.len() != self.n() {
            return Err(DataError::Dimension { expected: self.n(), found: y.len() });
        }
        Ok(Dataset { y, ..self.clone() })
    }

    /// Copy with every label negated.
    pub fn negated(&self) -> Dataset {
        Dataset { y: self.y.iter().map(|l| l.flipped()).collect(), ..self.clone() }
    }

    /// Rows selected by `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset, DataError> {
        let mut x = Vec::with_capacity(indices.len() * self.p);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        let mut d = Dataset::new(self.id.clone(), x, self.p, y)?;
        d.names = self.names.clone();
        Ok(d)
    }
}
