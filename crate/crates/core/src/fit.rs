//! One entry point for every model family, and the model file.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{
    self, ClusterError, ClusterNorm, ClusterSolver, ClusterSvmResult, ClusterSvmSpec, train_cluster_svm_seeded,
};
use crate::convex::{ConvexError, Hyperplane, QP_TOL, SolveStatus, train_svm};
use crate::data::{DataError, Dataset, Label, NormalizationParams};
use crate::resvm::{self, LossMode, ReSvmResult, ReSvmSolver, ReSvmSpec, ResvmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Svm,
    Resvm,
    Rlsvm,
    ClusterL1,
    ClusterL2,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] =
        [ModelFamily::Svm, ModelFamily::Resvm, ModelFamily::Rlsvm, ModelFamily::ClusterL1, ModelFamily::ClusterL2];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Svm => "svm",
            ModelFamily::Resvm => "resvm",
            ModelFamily::Rlsvm => "rlsvm",
            ModelFamily::ClusterL1 => "cluster-l1",
            ModelFamily::ClusterL2 => "cluster-l2",
        }
    }

    /// Which of `c1`, `c2`, `c3` the family reads (`svm` and `rlsvm` read
    /// their single `C` from `c1`).
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            ModelFamily::Svm | ModelFamily::Rlsvm => &["c1"],
            ModelFamily::Resvm => &["c1", "c2"],
            ModelFamily::ClusterL1 | ModelFamily::ClusterL2 => &["c1", "c2", "c3"],
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = FitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelFamily::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| FitError::InvalidSpec(format!("unknown model family `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    /// Alternating heuristics (the only mode for the plain SVM, which is
    /// always solved to optimality).
    #[default]
    Heuristic,
    /// Branch-and-bound (relabeling models) or enumeration (cluster models);
    /// small instances only.
    Exact,
}

impl FromStr for SolverMode {
    type Err = FitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "heuristic" | "alternating" => Ok(SolverMode::Heuristic),
            "exact" => Ok(SolverMode::Exact),
            _ => Err(FitError::InvalidSpec(format!("unknown solver mode `{s}` (expected heuristic or exact)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub solver: SolverMode,
    /// l2 cluster model only: squared instead of plain Euclidean margin.
    #[serde(default)]
    pub squared_margin: bool,
    pub time_limit_s: Option<f64>,
}

impl ModelSpec {
    pub fn new(family: ModelFamily) -> Self {
        ModelSpec { family, c1: 1.0, c2: 1.0, c3: 1.0, solver: SolverMode::Heuristic, squared_margin: false, time_limit_s: None }
    }

    pub fn with_params(mut self, c1: f64, c2: f64, c3: f64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self.c3 = c3;
        self
    }

    /// `name=value` pairs of the parameters the family reads, e.g. `C1=1 C2=0.1`.
    pub fn describe_params(&self) -> String {
        self.family
            .parameters()
            .iter()
            .map(|p| {
                let v = match *p {
                    "c1" => self.c1,
                    "c2" => self.c2,
                    _ => self.c3,
                };
                let name = if self.family.parameters().len() == 1 { "C".to_string() } else { p.to_uppercase() };
                format!("{name}={v:e}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn time_budget(&self) -> Result<Option<Duration>, FitError> {
        match self.time_limit_s {
            None => Ok(None),
            Some(s) if s > 0.0 && s.is_finite() => Ok(Some(Duration::from_secs_f64(s))),
            Some(s) => Err(FitError::InvalidSpec(format!("time limit must be positive (got {s})"))),
        }
    }

    pub fn resvm_spec(&self) -> Result<ReSvmSpec, FitError> {
        let mode = match self.family {
            ModelFamily::Resvm => LossMode::Hinge,
            ModelFamily::Rlsvm => LossMode::Ramp,
            _ => return Err(FitError::InvalidSpec(format!("{} is not a relabeling model", self.family))),
        };
        let solver = match self.solver {
            SolverMode::Heuristic => ReSvmSolver::Alternating,
            SolverMode::Exact => ReSvmSolver::ExactBnb,
        };
        let c2 = if mode == LossMode::Ramp { 0.0 } else { self.c2 };
        Ok(ReSvmSpec { c1: self.c1, c2, mode, solver, time_budget: self.time_budget()?, ..ReSvmSpec::default() })
    }

    pub fn cluster_spec(&self) -> Result<ClusterSvmSpec, FitError> {
        let norm = match self.family {
            ModelFamily::ClusterL1 => ClusterNorm::L1,
            ModelFamily::ClusterL2 => ClusterNorm::L2,
            _ => return Err(FitError::InvalidSpec(format!("{} is not a cluster model", self.family))),
        };
        let solver = match self.solver {
            SolverMode::Heuristic => ClusterSolver::Alternating,
            SolverMode::Exact => ClusterSolver::ExactTiny,
        };
        Ok(ClusterSvmSpec {
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            norm,
            solver,
            squared_margin: self.squared_margin,
            time_budget: self.time_budget()?,
            ..ClusterSvmSpec::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    /// Certified optimal (duality gap for the SVM, exhausted search otherwise).
    Optimal,
    /// Local solution of a heuristic.
    Heuristic,
    NodeCap,
    CycleCap,
    TimeCap,
    IterationLimit,
    NumericalIssue,
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error(transparent)]
    Resvm(#[from] ResvmError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("model file: {0}")]
    ModelFile(String),
}

impl FitError {
    /// Bad input or parameters, as opposed to a solver failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, FitError::Convex(ConvexError::EmptyPointSet))
    }
}

/// Trained model plus everything needed to predict with it and to audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub hyperplane: Hyperplane,
    pub objective: f64,
    pub status: FitStatus,
    /// Valid lower bound on the optimum when the solver certifies one.
    pub bound: Option<f64>,
    /// Observations with `ξ_i = 1` (flipped, outlier or sign-violating).
    pub flips: Vec<usize>,
    /// Cluster `+` membership (cluster models).
    pub clusters: Option<Vec<bool>>,
    pub k_plus: Option<Vec<f64>>,
    pub k_minus: Option<Vec<f64>>,
    #[serde(default)]
    pub degenerate_cluster: bool,
    pub n_train: usize,
    /// Feature scaling the model was trained under; applied before predicting.
    pub normalization: NormalizationParams,
}

impl FitResult {
    /// `sign(f(x))` on a raw (unnormalized) row, `sign(0) = +1`. Depends on
    /// the hyperplane and normalization only.
    pub fn predict_row(&self, raw: &[f64]) -> Label {
        self.hyperplane.predict(&self.normalization.apply_row(raw))
    }

    pub fn predict(&self, d: &Dataset) -> Result<Vec<Label>, FitError> {
        if d.p() != self.hyperplane.dim() {
            return Err(DataError::Dimension { expected: self.hyperplane.dim(), found: d.p() }.into());
        }
        Ok(d.rows().map(|x| self.predict_row(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.hyperplane.dim()
    }

    /// Cluster state suitable for warm-starting another cluster model.
    pub fn cluster_seed(&self) -> Option<(Vec<bool>, Hyperplane)> {
        self.clusters.clone().map(|t| (t, self.hyperplane.clone()))
    }
}

/// Trains `spec` on `d` (already normalized with `normalization`).
pub fn fit(d: &Dataset, spec: &ModelSpec, normalization: NormalizationParams) -> Result<FitResult, FitError> {
    fit_with_warm_start(d, spec, normalization, None)
}

/// As [`fit`]; a cluster model may be seeded with a previous cluster model's
/// assignment and hyperplane.
pub fn fit_with_warm_start(
    d: &Dataset,
    spec: &ModelSpec,
    normalization: NormalizationParams,
    warm: Option<&FitResult>,
) -> Result<FitResult, FitError> {
    d.require_both_classes()?;
    if normalization.p() != d.p() {
        return Err(DataError::Dimension { expected: d.p(), found: normalization.p() }.into());
    }
    let base = |hyperplane: Hyperplane, objective: f64, status: FitStatus| FitResult {
        spec: spec.clone(),
        hyperplane,
        objective,
        status,
        bound: None,
        flips: Vec::new(),
        clusters: None,
        k_plus: None,
        k_minus: None,
        degenerate_cluster: false,
        n_train: d.n(),
        normalization: normalization.clone(),
    };
    match spec.family {
        ModelFamily::Svm => {
            let s = train_svm(d, spec.c1, QP_TOL)?;
            let status = match s.status {
                SolveStatus::Converged => FitStatus::Optimal,
                SolveStatus::IterationLimit => FitStatus::IterationLimit,
                SolveStatus::Infeasible | SolveStatus::NumericalIssue => FitStatus::NumericalIssue,
            };
            Ok(FitResult { bound: Some(s.lower_bound), ..base(s.hyperplane, s.objective, status) })
        }
        ModelFamily::Resvm | ModelFamily::Rlsvm => {
            let rs = spec.resvm_spec()?;
            let r: ReSvmResult = resvm::train_resvm(d, &rs, None)?;
            let status = match r.status {
                resvm::ReSvmStatus::Optimal => FitStatus::Optimal,
                resvm::ReSvmStatus::Heuristic => FitStatus::Heuristic,
                resvm::ReSvmStatus::NodeCap => FitStatus::NodeCap,
                resvm::ReSvmStatus::TimeCap => FitStatus::TimeCap,
            };
            let bound = (rs.solver == ReSvmSolver::ExactBnb).then_some(r.bound);
            Ok(FitResult { bound, flips: r.flips.indices(), ..base(r.hyperplane, r.objective, status) })
        }
        ModelFamily::ClusterL1 | ModelFamily::ClusterL2 => {
            let cs = spec.cluster_spec()?;
            let r: ClusterSvmResult = match (cs.solver, warm.and_then(FitResult::cluster_seed)) {
                (ClusterSolver::Alternating, Some((theta, h))) if theta.len() == d.n() && h.dim() == d.p() => {
                    train_cluster_svm_seeded(d, &cs, theta, Some(h))?
                }
                (ClusterSolver::Alternating, Some(_)) => {
                    return Err(FitError::InvalidSpec("warm start does not match the training data".into()));
                }
                _ => cluster::train_cluster_svm(d, &cs, None)?,
            };
            let status = match r.status {
                cluster::ClusterStatus::Optimal => FitStatus::Optimal,
                cluster::ClusterStatus::Heuristic => FitStatus::Heuristic,
                cluster::ClusterStatus::CycleCap => FitStatus::CycleCap,
                cluster::ClusterStatus::TimeCap => FitStatus::TimeCap,
            };
            let flips = r.state.xi.iter().enumerate().filter(|(_, x)| **x).map(|(i, _)| i).collect();
            Ok(FitResult {
                flips,
                clusters: Some(r.state.theta),
                k_plus: Some(r.state.k_plus),
                k_minus: Some(r.state.k_minus),
                degenerate_cluster: r.degenerate_cluster,
                ..base(r.hyperplane, r.objective, status)
            })
        }
    }
}

/// Objective of a cluster `spec` at a warm start's assignment and hyperplane
/// (reference points recomputed for `spec`'s norm). A fit seeded with `warm`
/// never ends above this value.
pub fn warm_start_objective(d: &Dataset, spec: &ModelSpec, warm: &FitResult) -> Result<f64, FitError> {
    let cs = spec.cluster_spec()?;
    let (theta, h) = warm
        .cluster_seed()
        .ok_or_else(|| FitError::InvalidSpec("warm start is not a cluster model".into()))?;
    if theta.len() != d.n() || h.dim() != d.p() {
        return Err(FitError::InvalidSpec("warm start does not match the training data".into()));
    }
    let c = cluster::update_centroids(d, &theta, &cs, None);
    Ok(cluster::evaluate(d, &cs, &h, theta, c.k_plus, c.k_minus).0)
}

const MODEL_FORMAT: &str = "relabel-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: FitResult,
}

/// Self-describing JSON model file.
pub fn model_to_json(r: &FitResult) -> String {
    let file = ModelFile { format: MODEL_FORMAT.into(), version: MODEL_VERSION, model: r.clone() };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<FitResult, FitError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| FitError::ModelFile(e.to_string()))?;
    if file.format != MODEL_FORMAT {
        return Err(FitError::ModelFile(format!("not a model file (format `{}`)", file.format)));
    }
    if file.version != MODEL_VERSION {
        return Err(FitError::ModelFile(format!("unsupported model file version {}", file.version)));
    }
    if file.model.normalization.p() != file.model.hyperplane.dim() {
        return Err(FitError::ModelFile("normalization and hyperplane dimensions differ".into()));
    }
    Ok(file.model)
}
