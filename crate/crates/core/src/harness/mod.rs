//! Noise-injection / cross-validation protocol and report emission.
//!
//! A sweep visits every (dataset, noise rate, repeat, fold) cell. In each cell
//! the training portion gets a fresh label-flip draw, features are scaled with
//! parameters fitted on that portion, every model is trained at every grid
//! point, and accuracy is measured on the untouched test portion. By default
//! the training portion is a single fold and the test portion is the other
//! `k − 1` folds; the conventional orientation swaps the two.
//!
//! Model selection reports, for each (dataset, model, rate), the grid point
//! with the best mean test accuracy. This selects on test data and is
//! therefore optimistic; it is kept because it is the protocol the reported
//! reference numbers were produced with. A second aggregate (mean over repeats
//! of the per-repeat best) is computed and labelled alongside.

mod plan;
mod report;
mod run;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Label};
use crate::fit::ModelFamily;

pub use plan::{DatasetSource, ExperimentPlan, PLAN_HEADER, load_datasets, parse_plan};
pub use report::{
    Aggregate, BoxplotRow, ReportFormat, emit_report, emit_timings, parse_records,
};
pub use run::{CellAudit, ExperimentReport, Record, Timing, run_experiment, run_experiment_with_progress};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("accuracy: {0}")]
    Accuracy(String),
    #[error("plan line {line}: {message}")]
    Plan { line: usize, message: String },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("report: {0}")]
    Report(String),
    #[error("{path}: {source}")]
    Dataset { path: String, source: DataError },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// `100 · matches / total`.
pub fn accuracy(predicted: &[Label], actual: &[Label]) -> Result<f64, HarnessError> {
    if predicted.len() != actual.len() {
        return Err(HarnessError::Accuracy(format!(
            "{} predictions for {} observations",
            predicted.len(),
            actual.len()
        )));
    }
    if actual.is_empty() {
        return Err(HarnessError::Accuracy("no observations to score".into()));
    }
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(100.0 * hits as f64 / actual.len() as f64)
}

/// Quantile with linear interpolation between order statistics
/// (`h = (n − 1) q`, the common "type 7" rule). Sorts a copy.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Train on one fold, test on the remaining `k − 1`.
    #[default]
    Paper,
    /// Train on `k − 1` folds, test on one.
    Conventional,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Paper => "paper",
            Orientation::Conventional => "conventional",
        })
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Orientation::Paper),
            "conventional" => Ok(Orientation::Conventional),
            _ => Err(format!("unknown orientation `{s}` (expected paper or conventional)")),
        }
    }
}

/// `{10^i : i = lo..=hi}`, parsed from decimal text so every value is the
/// correctly rounded power of ten.
pub fn pow10(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|i| format!("1e{i}").parse().expect("valid literal")).collect()
}

/// Hyperparameter values per parameter. `c` serves the single-parameter
/// families (SVM, ramp-loss SVM).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub c: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub c3: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { c: pow10(-5, 5), c1: pow10(-5, 5), c2: pow10(-5, 5), c3: pow10(-3, 0) }
    }
}

impl GridSpec {
    /// Grid points `(c1, c2, c3)` for a family, in nested order (last
    /// parameter fastest). Unused parameters are `0`.
    pub fn cells(&self, family: ModelFamily) -> Vec<(f64, f64, f64)> {
        match family {
            ModelFamily::Svm | ModelFamily::Rlsvm => self.c.iter().map(|&c| (c, 0.0, 0.0)).collect(),
            ModelFamily::Resvm => {
                self.c1.iter().flat_map(|&a| self.c2.iter().map(move |&b| (a, b, 0.0))).collect()
            }
            ModelFamily::ClusterL1 | ModelFamily::ClusterL2 => self
                .c1
                .iter()
                .flat_map(|&a| self.c2.iter().flat_map(move |&b| self.c3.iter().map(move |&c| (a, b, c))))
                .collect(),
        }
    }
}

/// Display name used in report tables.
pub fn model_label(m: ModelFamily) -> &'static str {
    match m {
        ModelFamily::Svm => "SVM",
        ModelFamily::Resvm => "RE-SVM",
        ModelFamily::Rlsvm => "RL-SVM",
        ModelFamily::ClusterL1 => "2-medians-SVM",
        ModelFamily::ClusterL2 => "2-means-SVM",
    }
}
