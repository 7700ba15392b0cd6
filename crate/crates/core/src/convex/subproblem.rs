use serde::{Deserialize, Serialize};

use super::{Hyperplane, SvmSolution, dot, hinge};
use crate::data::{Dataset, Label};

/// Margin term of a subproblem, multiplied by `margin_weight`:
/// `½‖w‖₁`, `½‖w‖₂²` or `½‖w‖₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginNorm {
    L1,
    L2Squared,
    L2,
}

impl MarginNorm {
    pub fn value(self, w: &[f64]) -> f64 {
        match self {
            MarginNorm::L1 => 0.5 * w.iter().map(|v| v.abs()).sum::<f64>(),
            MarginNorm::L2Squared => 0.5 * dot(w, w),
            MarginNorm::L2 => 0.5 * dot(w, w).sqrt(),
        }
    }
}

/// `coef · max(0, 1 − target · f(x_point))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HingeTerm {
    pub point: usize,
    pub target: Label,
    pub coef: f64,
}

/// Hard constraint `sign · f(x_point) >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignConstraint {
    pub point: usize,
    pub sign: Label,
}

/// Convex minimisation over `(w, b)`:
///
/// ```text
/// margin_weight · margin(w) + Σ_k coef_k · max(0, 1 − target_k f(x_k))
/// s.t. sign_j · f(x_j) >= 0
/// ```
///
/// This carries the fixed-binaries relaxations of every mixed-integer model
/// in the crate. Points are borrowed row-major.
#[derive(Debug, Clone)]
pub struct ConvexSubproblem<'a> {
    points: &'a [f64],
    dim: usize,
    pub hinges: Vec<HingeTerm>,
    pub signs: Vec<SignConstraint>,
    pub margin: MarginNorm,
    pub margin_weight: f64,
}

impl<'a> ConvexSubproblem<'a> {
    pub fn new(points: &'a [f64], dim: usize, margin: MarginNorm) -> Self {
        assert!(dim > 0 && points.len().is_multiple_of(dim), "points must be a row-major matrix");
        ConvexSubproblem { points, dim, hinges: Vec::new(), signs: Vec::new(), margin, margin_weight: 1.0 }
    }

    pub fn for_dataset(d: &'a Dataset, margin: MarginNorm) -> Self {
        ConvexSubproblem::new(d.features(), d.p(), margin)
    }

    pub fn add_hinge(&mut self, point: usize, target: Label, coef: f64) -> &mut Self {
        debug_assert!(coef >= 0.0 && point < self.n_points());
        self.hinges.push(HingeTerm { point, target, coef });
        self
    }

    pub fn add_sign(&mut self, point: usize, sign: Label) -> &mut Self {
        debug_assert!(point < self.n_points());
        self.signs.push(SignConstraint { point, sign });
        self
    }

    pub fn points(&self) -> &'a [f64] {
        self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn point(&self, i: usize) -> &'a [f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn hinge_errors(&self, h: &Hyperplane) -> Vec<f64> {
        self.hinges
            .iter()
            .map(|t| hinge(t.target.sign() * h.decision(self.point(t.point))))
            .collect()
    }

    /// Objective at `h`, ignoring the sign constraints.
    pub fn objective(&self, h: &Hyperplane) -> f64 {
        let errors: f64 = self
            .hinges
            .iter()
            .map(|t| t.coef * hinge(t.target.sign() * h.decision(self.point(t.point))))
            .sum();
        self.margin_weight * self.margin.value(&h.w) + errors
    }

    /// Largest `max(0, −sign · f(x))` over the sign constraints.
    pub fn max_violation(&self, h: &Hyperplane) -> f64 {
        self.signs
            .iter()
            .map(|s| -s.sign.sign() * h.decision(self.point(s.point)))
            .fold(0.0, f64::max)
    }
}

/// Solves a subproblem.
///
/// The squared-l2 margin goes through the dual coordinate solver and is
/// certified by its duality gap (`tol` relative). The l1 and l2 margins are a
/// linear and a second-order-cone program respectively, handed to an
/// interior-point conic solver; the intercept is then re-optimised exactly.
///
/// Sign constraints are homogeneous, so `w = 0, b = 0` is always feasible and
/// infeasibility can only arise numerically. When `warm_start` is given, the
/// result is never worse than the warm start's objective.
pub fn solve_subproblem(sp: &ConvexSubproblem<'_>, tol: f64, warm_start: Option<&Hyperplane>) -> SvmSolution {
    let mut sol = match sp.margin {
        MarginNorm::L2Squared => super::svm::solve_quadratic(sp, tol),
        MarginNorm::L1 | MarginNorm::L2 => super::conic::solve_conic(sp, tol),
    };
    if let Some(warm) = warm_start.filter(|w| w.dim() == sp.dim() && w.is_finite()) {
        let warm_obj = sp.objective(warm);
        let warm_viol = sp.max_violation(warm);
        if warm_viol <= super::SIGN_TOL && (warm_obj < sol.objective || sol.max_violation > super::SIGN_TOL) {
            sol.errors = sp.hinge_errors(warm);
            sol.hyperplane = warm.clone();
            sol.objective = warm_obj;
            sol.max_violation = warm_viol;
            sol.lower_bound = sol.lower_bound.min(warm_obj);
            sol.dual_gap = super::relative_gap(warm_obj, sol.lower_bound);
        }
    }
    sol
}
