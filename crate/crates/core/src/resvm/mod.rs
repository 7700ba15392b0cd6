//! Relabeling SVM and its ramp-loss variant.
//!
//! Both models attach a binary `ξ_i` to every observation:
//!
//! * hinge mode (RE-SVM): `ξ_i = 1` flips the label the hyperplane is fitted
//!   to, at cost `C2`. Objective `½‖w‖² + C1 Σ e_i + C2 Σ ξ_i` with
//!   `e_i = max(0, 1 − ŷ_i f(x_i))` and `ŷ_i = (1 − 2ξ_i) y_i`.
//! * ramp mode (RL-SVM): `ξ_i = 1` marks an outlier whose hinge error is
//!   replaced by a flat `2`. Objective `½‖w‖² + C (Σ e_i + 2 Σ ξ_i)`, i.e.
//!   `C Σ min(hinge_i, 2)` pointwise. `C` is read from `c1`; `c2` is ignored.
//!
//! For a fixed hyperplane the best `ξ` is pointwise ([`pointwise_flip_rule`],
//! [`ramp_pointwise_cost`]); for a fixed `ξ` the best hyperplane is a convex
//! quadratic program. [`train_resvm_alternating`] alternates the two, and
//! [`train_resvm_exact`] branches on `ξ`.

mod alternating;
mod exact;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convex::{ConvexSubproblem, Hyperplane, MarginNorm, hinge};
use crate::data::{DataError, Dataset, Label};

pub use alternating::train_resvm_alternating;
pub use exact::{BranchOrder, train_resvm_exact, train_resvm_exact_ordered};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossMode {
    Hinge,
    Ramp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReSvmSolver {
    ExactBnb,
    Alternating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReSvmSpec {
    pub c1: f64,
    pub c2: f64,
    pub mode: LossMode,
    pub solver: ReSvmSolver,
    /// Relative duality-gap tolerance of every convex subproblem.
    pub tol: f64,
    pub max_iterations: usize,
    pub node_cap: usize,
    /// Largest `n` the exact solver accepts.
    pub exact_cap: usize,
    pub time_budget: Option<Duration>,
}

impl Default for ReSvmSpec {
    fn default() -> Self {
        ReSvmSpec {
            c1: 1.0,
            c2: 1.0,
            mode: LossMode::Hinge,
            solver: ReSvmSolver::Alternating,
            tol: crate::convex::QP_TOL,
            max_iterations: 100,
            node_cap: 1_000_000,
            exact_cap: 20,
            time_budget: None,
        }
    }
}

impl ReSvmSpec {
    pub fn hinge(c1: f64, c2: f64) -> Self {
        ReSvmSpec { c1, c2, ..Self::default() }
    }

    pub fn ramp(c: f64) -> Self {
        ReSvmSpec { c1: c, c2: 0.0, mode: LossMode::Ramp, ..Self::default() }
    }

    pub fn with_solver(mut self, solver: ReSvmSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn validate(&self) -> Result<(), ResvmError> {
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return Err(ResvmError::InvalidParameter(format!("C1 must be positive and finite (got {})", self.c1)));
        }
        if self.mode == LossMode::Hinge && !(self.c2 >= 0.0 && self.c2.is_finite()) {
            return Err(ResvmError::InvalidParameter(format!("C2 must be non-negative and finite (got {})", self.c2)));
        }
        if !(self.tol > 0.0) {
            return Err(ResvmError::InvalidParameter(format!("tolerance must be positive (got {})", self.tol)));
        }
        if self.max_iterations == 0 || self.node_cap == 0 || self.exact_cap == 0 {
            return Err(ResvmError::InvalidParameter("iteration, node and size caps must be positive".into()));
        }
        Ok(())
    }

    /// Price of one `ξ_i = 1`.
    pub fn flip_cost(&self) -> f64 {
        match self.mode {
            LossMode::Hinge => self.c2,
            LossMode::Ramp => 2.0 * self.c1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResvmError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("exact solver accepts at most {cap} observations (got {n})")]
    TooLarge { n: usize, cap: usize },
    #[error("flip vector has {found} entries for {expected} observations")]
    FlipLength { expected: usize, found: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// `ξ_i`, one per observation: `true` means flipped (hinge mode) or outlier
/// (ramp mode).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlipVector {
    pub xi: Vec<bool>,
}

impl FlipVector {
    pub fn keep_all(n: usize) -> Self {
        FlipVector { xi: vec![false; n] }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Self {
        let mut xi = vec![false; n];
        for &i in indices {
            xi[i] = true;
        }
        FlipVector { xi }
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn count(&self) -> usize {
        self.xi.iter().filter(|&&f| f).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.xi.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| i).collect()
    }

    /// `ŷ_i = (1 − 2ξ_i) y_i`.
    pub fn effective_labels(&self, y: &[Label]) -> Vec<Label> {
        y.iter().zip(&self.xi).map(|(l, &f)| if f { l.flipped() } else { *l }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReSvmStatus {
    Optimal,
    Heuristic,
    NodeCap,
    TimeCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReSvmResult {
    pub hyperplane: Hyperplane,
    pub flips: FlipVector,
    pub errors: Vec<f64>,
    pub objective: f64,
    pub status: ReSvmStatus,
    pub nodes_explored: usize,
    /// Valid lower bound on the global optimum (exact solver only; the
    /// heuristic reports `0`).
    pub bound: f64,
    /// Objective after every half-step of the alternating scheme that produced
    /// the hyperplane.
    pub history: Vec<f64>,
}

/// Best `(ξ_i, e_i)` for a fixed decision value in hinge mode. Ties keep the
/// original label.
pub fn pointwise_flip_rule(f: f64, y: Label, c1: f64, c2: f64) -> (bool, f64) {
    let keep = hinge(y.sign() * f);
    let flip = hinge(-y.sign() * f);
    if c1 * flip + c2 < c1 * keep { (true, flip) } else { (false, keep) }
}

/// Best `(cost, ξ_i, e_i)` for a fixed decision value in ramp mode. The hinge
/// branch is kept on ties.
pub fn ramp_pointwise_cost(f: f64, y: Label, c: f64) -> (f64, bool, f64) {
    let e = hinge(y.sign() * f);
    if e > 2.0 { (2.0 * c, true, 0.0) } else { (c * e, false, e) }
}

/// Honest evaluation of a hyperplane: the optimal `ξ` and `e` for it and the
/// resulting objective, summed part by part.
pub fn evaluate(d: &Dataset, spec: &ReSvmSpec, h: &Hyperplane) -> (f64, FlipVector, Vec<f64>) {
    let mut xi = Vec::with_capacity(d.n());
    let mut errors = Vec::with_capacity(d.n());
    for (x, &y) in d.rows().zip(d.labels()) {
        let f = h.decision(x);
        let (flip, e) = match spec.mode {
            LossMode::Hinge => pointwise_flip_rule(f, y, spec.c1, spec.c2),
            LossMode::Ramp => {
                let (_, flip, e) = ramp_pointwise_cost(f, y, spec.c1);
                (flip, e)
            }
        };
        xi.push(flip);
        errors.push(e);
    }
    let flips = FlipVector { xi };
    let objective = objective_from_parts(spec, h, &errors, &flips);
    (objective, flips, errors)
}

/// `½‖w‖² + C1 Σe + cost(ξ) Σξ` from explicit parts.
pub fn objective_from_parts(spec: &ReSvmSpec, h: &Hyperplane, errors: &[f64], flips: &FlipVector) -> f64 {
    0.5 * h.norm_sq() + spec.c1 * errors.iter().sum::<f64>() + spec.flip_cost() * flips.count() as f64
}

/// Convex subproblem for the points in `fixed`, with their `ξ` taken from
/// `flips`. Unlisted points are left out.
pub(crate) fn fixed_subproblem<'a>(
    d: &'a Dataset,
    spec: &ReSvmSpec,
    flips: &FlipVector,
    fixed: impl Iterator<Item = usize>,
) -> ConvexSubproblem<'a> {
    let mut sp = ConvexSubproblem::for_dataset(d, MarginNorm::L2Squared);
    for i in fixed {
        let y = d.label(i);
        match (spec.mode, flips.xi[i]) {
            (LossMode::Hinge, flip) => {
                sp.add_hinge(i, if flip { y.flipped() } else { y }, spec.c1);
            }
            (LossMode::Ramp, false) => {
                sp.add_hinge(i, y, spec.c1);
            }
            (LossMode::Ramp, true) => {}
        }
    }
    sp
}

/// Dispatches on `spec.solver` and `spec.mode`.
pub fn train_resvm(d: &Dataset, spec: &ReSvmSpec, init: Option<&FlipVector>) -> Result<ReSvmResult, ResvmError> {
    match spec.solver {
        ReSvmSolver::Alternating => train_resvm_alternating(d, spec, init),
        ReSvmSolver::ExactBnb => train_resvm_exact(d, spec),
    }
}

/// Ramp-loss SVM; `spec.mode` is forced to [`LossMode::Ramp`].
pub fn train_rlsvm(d: &Dataset, spec: &ReSvmSpec) -> Result<ReSvmResult, ResvmError> {
    let spec = ReSvmSpec { mode: LossMode::Ramp, ..spec.clone() };
    train_resvm(d, &spec, None)
}
