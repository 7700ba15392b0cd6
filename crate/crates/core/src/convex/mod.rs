//! Continuous convex solvers shared by every model.
//!
//! * [`train_svm`]: the soft-margin SVM, solved in the dual by two-coordinate
//!   (SMO-style) descent over box-constrained multipliers, with the primal
//!   recovered as `w = Σ α_i y_i x_i` and an exact one-dimensional search for
//!   the intercept. The returned duality gap certifies the optimum.
//! * [`solve_subproblem`]: the fixed-binaries subproblem used by the mixed
//!   integer trainers: weighted hinge terms, hard sign constraints
//!   `s_j f(x_j) >= 0` and one of three margin terms.
//! * [`coordinate_median`] / [`geometric_median`]: optimal cluster reference
//!   points under summed l1 and l2 distances.

mod conic;
mod dual;
mod intercept;
mod median;
mod subproblem;
mod svm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Label;

pub use median::{coordinate_median, geometric_median, l1_distance, l2_distance, summed_distance};
pub use subproblem::{ConvexSubproblem, HingeTerm, MarginNorm, SignConstraint, solve_subproblem};
pub use svm::{hinge_objective, train_svm};

/// Default relative duality-gap tolerance for the quadratic programs.
pub const QP_TOL: f64 = 1e-8;
/// Default tolerance for the l1 / l2 (non-squared) margin subproblems.
pub const CONIC_TOL: f64 = 1e-6;
/// Largest tolerated violation of a hard sign constraint.
pub const SIGN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvexError {
    #[error("cannot compute a reference point of an empty point set")]
    EmptyPointSet,
    #[error("point dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("penalty parameter must be positive and finite (got {0})")]
    InvalidPenalty(f64),
}

/// Affine classifier `f(x) = w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub w: Vec<f64>,
    pub b: f64,
}

impl Hyperplane {
    pub fn new(w: Vec<f64>, b: f64) -> Self {
        Hyperplane { w, b }
    }

    pub fn zeros(p: usize) -> Self {
        Hyperplane { w: vec![0.0; p], b: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    /// `sign(f(x))` with `sign(0) = +1`.
    pub fn predict(&self, x: &[f64]) -> Label {
        Label::from_decision(self.decision(x))
    }

    pub fn negated(&self) -> Hyperplane {
        Hyperplane { w: self.w.iter().map(|v| -v).collect(), b: -self.b }
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.w, &self.w)
    }

    pub fn norm_l1(&self) -> f64 {
        self.w.iter().map(|v| v.abs()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.w.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    /// Hard sign constraints could not be met within [`SIGN_TOL`].
    Infeasible,
    NumericalIssue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    pub hyperplane: Hyperplane,
    /// Hinge errors `max(0, 1 - t f(x))`, one per hinge term.
    pub errors: Vec<f64>,
    pub objective: f64,
    /// Valid lower bound on the optimal objective (dual objective for the
    /// quadratic path, conic dual objective otherwise).
    pub lower_bound: f64,
    /// `(objective - lower_bound) / max(1, |objective|)`.
    pub dual_gap: f64,
    /// Largest violation of a hard sign constraint at the returned plane.
    pub max_violation: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn relative_gap(objective: f64, lower: f64) -> f64 {
    ((objective - lower) / objective.abs().max(1.0)).max(0.0)
}

#[inline]
pub(crate) fn hinge(margin: f64) -> f64 {
    (1.0 - margin).max(0.0)
}
