//! Two-cluster SVMs.
//!
//! Each observation is assigned to cluster `+` or `−` (`θ_i`). The hyperplane
//! is fitted to the cluster labels `ĉ_i = 2θ_i − 1`, the clusters are kept
//! compact around two reference points `K±`, and observations on the wrong
//! side of the hyperplane with respect to their original label pay `C2`:
//!
//! ```text
//! min ½‖w‖ + C1 Σ e_i + C2 Σ ξ_i + C3 Σ d_i
//! e_i = max(0, 1 − ĉ_i f(x_i)),  ξ_i = [y_i f(x_i) < 0],  d_i = ‖x_i − K_{ĉ_i}‖
//! ```
//!
//! The norm is l1 for the 2-median model and l2 for the 2-means model; it sets
//! both the margin term and the distance. Under l2 the best reference point of
//! a cluster is its geometric median (distances are not squared), which is what
//! [`update_centroids`] computes despite the model's name.

pub(crate) mod alternating;
mod exact;
mod export;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convex::{
    ConvexError, Hyperplane, MarginNorm, SIGN_TOL, coordinate_median, geometric_median, hinge, l1_distance,
    l2_distance,
};
use crate::data::{DataError, Dataset};

pub use alternating::{train_cluster_svm_alternating, train_cluster_svm_from, train_cluster_svm_seeded};
pub use exact::train_cluster_svm_exact_tiny;
pub use export::{big_m, export_lp};

const MEDIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterNorm {
    L1,
    L2,
}

impl ClusterNorm {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            ClusterNorm::L1 => l1_distance(a, b),
            ClusterNorm::L2 => l2_distance(a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterSolver {
    Alternating,
    ExactTiny,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSvmSpec {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub norm: ClusterNorm,
    pub solver: ClusterSolver,
    /// Use `½‖w‖₂²` instead of `½‖w‖₂` for the l2 model.
    pub squared_margin: bool,
    pub tol: f64,
    pub max_cycles: usize,
    pub exact_cap: usize,
    pub time_budget: Option<Duration>,
}

impl Default for ClusterSvmSpec {
    fn default() -> Self {
        ClusterSvmSpec {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            norm: ClusterNorm::L1,
            solver: ClusterSolver::Alternating,
            squared_margin: false,
            tol: crate::convex::CONIC_TOL,
            max_cycles: 100,
            exact_cap: 8,
            time_budget: None,
        }
    }
}

impl ClusterSvmSpec {
    pub fn new(c1: f64, c2: f64, c3: f64, norm: ClusterNorm) -> Self {
        ClusterSvmSpec { c1, c2, c3, norm, ..Self::default() }
    }

    pub fn with_solver(mut self, solver: ClusterSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn margin(&self) -> MarginNorm {
        match (self.norm, self.squared_margin) {
            (ClusterNorm::L1, _) => MarginNorm::L1,
            (ClusterNorm::L2, false) => MarginNorm::L2,
            (ClusterNorm::L2, true) => MarginNorm::L2Squared,
        }
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        for (name, v) in [("C1", self.c1), ("C2", self.c2), ("C3", self.c3)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ClusterError::InvalidParameter(format!("{name} must be non-negative and finite (got {v})")));
            }
        }
        if !(self.tol > 0.0) || self.max_cycles == 0 || self.exact_cap == 0 {
            return Err(ClusterError::InvalidParameter("tolerance and caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("exact enumeration accepts at most {cap} observations (got {n})")]
    TooLarge { n: usize, cap: usize },
    #[error("initial state has {found} entries for {expected} observations")]
    StateLength { expected: usize, found: usize },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    /// `true`: assigned to cluster `+`.
    pub theta: Vec<bool>,
    /// `true`: `y_i f(x_i) < −1e−9` at the accompanying hyperplane.
    pub xi: Vec<bool>,
    pub k_plus: Vec<f64>,
    pub k_minus: Vec<f64>,
    pub d: Vec<f64>,
}

impl ClusterState {
    pub fn cluster_labels(&self) -> Vec<crate::data::Label> {
        self.theta.iter().map(|&t| crate::data::Label::from_bool(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterStatus {
    Optimal,
    Heuristic,
    CycleCap,
    TimeCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSvmResult {
    pub hyperplane: Hyperplane,
    pub state: ClusterState,
    /// `max(0, 1 − ĉ_i f(x_i))`.
    pub errors: Vec<f64>,
    pub objective: f64,
    pub status: ClusterStatus,
    /// A cluster was empty when training stopped.
    pub degenerate_cluster: bool,
    pub margin: MarginNorm,
    /// Objective after every full cycle (alternating solver).
    pub history: Vec<f64>,
}

/// Best cluster per point for a fixed hyperplane and reference points.
/// Cost ties go to the nearer reference point, then to `+`.
pub fn assign_points(
    d: &Dataset,
    h: &Hyperplane,
    k_plus: &[f64],
    k_minus: &[f64],
    spec: &ClusterSvmSpec,
) -> ClusterState {
    let n = d.n();
    let mut theta = Vec::with_capacity(n);
    for x in d.rows() {
        let f = h.decision(x);
        let (dp, dm) = (spec.norm.distance(x, k_plus), spec.norm.distance(x, k_minus));
        let cost_plus = spec.c1 * hinge(f) + spec.c3 * dp;
        let cost_minus = spec.c1 * hinge(-f) + spec.c3 * dm;
        theta.push(cost_plus < cost_minus || (cost_plus == cost_minus && dp <= dm));
    }
    complete_state(d, h, theta, k_plus.to_vec(), k_minus.to_vec(), spec.norm)
}

/// Fills `ξ` and `d` for the given assignment.
pub(crate) fn complete_state(
    d: &Dataset,
    h: &Hyperplane,
    theta: Vec<bool>,
    k_plus: Vec<f64>,
    k_minus: Vec<f64>,
    norm: ClusterNorm,
) -> ClusterState {
    let xi = d.rows().zip(d.labels()).map(|(x, y)| y.sign() * h.decision(x) < -SIGN_TOL).collect();
    let dist = d
        .rows()
        .zip(&theta)
        .map(|(x, &t)| norm.distance(x, if t { &k_plus } else { &k_minus }))
        .collect();
    ClusterState { theta, xi, k_plus, k_minus, d: dist }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidUpdate {
    pub k_plus: Vec<f64>,
    pub k_minus: Vec<f64>,
    pub empty_plus: bool,
    pub empty_minus: bool,
}

/// Optimal reference point of each cluster (coordinate median under l1,
/// geometric median under l2).
///
/// An empty cluster keeps its `previous` point, or takes the other cluster's
/// point when there is none. A previous point is also kept whenever the new one
/// is not strictly better for its cluster.
pub fn update_centroids(
    d: &Dataset,
    theta: &[bool],
    spec: &ClusterSvmSpec,
    previous: Option<(&[f64], &[f64])>,
) -> CentroidUpdate {
    let members = |side: bool| -> Vec<&[f64]> {
        d.rows().zip(theta).filter(|(_, t)| **t == side).map(|(x, _)| x).collect()
    };
    let center = |pts: &[&[f64]], prev: Option<&[f64]>| -> Option<Vec<f64>> {
        if pts.is_empty() {
            return None;
        }
        let fresh = match spec.norm {
            ClusterNorm::L1 => coordinate_median(pts),
            ClusterNorm::L2 => geometric_median(pts, MEDIAN_TOL),
        }
        .expect("non-empty cluster with consistent dimension");
        let cost = |c: &[f64]| pts.iter().map(|x| spec.norm.distance(x, c)).sum::<f64>();
        Some(match prev {
            Some(p) if cost(p) <= cost(&fresh) => p.to_vec(),
            _ => fresh,
        })
    };
    let (plus, minus) = (members(true), members(false));
    let kp = center(&plus, previous.map(|p| p.0));
    let km = center(&minus, previous.map(|p| p.1));
    let (empty_plus, empty_minus) = (kp.is_none(), km.is_none());
    let (k_plus, k_minus) = match (kp, km) {
        (Some(a), Some(b)) => (a, b),
        (Some(a), None) => (a.clone(), previous.map_or(a, |p| p.1.to_vec())),
        (None, Some(b)) => (previous.map_or_else(|| b.clone(), |p| p.0.to_vec()), b),
        (None, None) => unreachable!("every point belongs to a cluster"),
    };
    CentroidUpdate { k_plus, k_minus, empty_plus, empty_minus }
}

/// Objective from explicit parts.
pub fn objective_from_parts(spec: &ClusterSvmSpec, h: &Hyperplane, errors: &[f64], state: &ClusterState) -> f64 {
    spec.margin().value(&h.w)
        + spec.c1 * errors.iter().sum::<f64>()
        + spec.c2 * state.xi.iter().filter(|&&x| x).count() as f64
        + spec.c3 * state.d.iter().sum::<f64>()
}

/// `max(0, 1 − ĉ_i f(x_i))` for every point.
pub fn cluster_errors(d: &Dataset, h: &Hyperplane, theta: &[bool]) -> Vec<f64> {
    d.rows().zip(theta).map(|(x, &t)| hinge(if t { 1.0 } else { -1.0 } * h.decision(x))).collect()
}

/// Honest objective of `(h, θ, K±)`, with `ξ` and `d` recomputed.
pub fn evaluate(
    d: &Dataset,
    spec: &ClusterSvmSpec,
    h: &Hyperplane,
    theta: Vec<bool>,
    k_plus: Vec<f64>,
    k_minus: Vec<f64>,
) -> (f64, ClusterState, Vec<f64>) {
    let state = complete_state(d, h, theta, k_plus, k_minus, spec.norm);
    let errors = cluster_errors(d, h, &state.theta);
    (objective_from_parts(spec, h, &errors, &state), state, errors)
}

/// Dispatches on `spec.solver`.
pub fn train_cluster_svm(
    d: &Dataset,
    spec: &ClusterSvmSpec,
    init: Option<&ClusterState>,
) -> Result<ClusterSvmResult, ClusterError> {
    match spec.solver {
        ClusterSolver::Alternating => train_cluster_svm_alternating(d, spec, init),
        ClusterSolver::ExactTiny => train_cluster_svm_exact_tiny(d, spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;

    fn data(rows: &[[f64; 2]], y: &[Label]) -> Dataset {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Dataset::from_rows("t", &rows, y.to_vec()).unwrap()
    }

    #[test]
    fn assignment_examples() {
        let d = data(&[[0.0, 0.0], [5.0, 0.0]], &[Label::Positive, Label::Positive]);
        let spec = ClusterSvmSpec::new(1.0, 1.0, 1.0, ClusterNorm::L2);
        // f(x0) = 3, equidistant centroids.
        let h = Hyperplane::new(vec![-1.0, 0.0], 3.0);
        let s = assign_points(&d, &h, &[1.0, 0.0], &[-1.0, 0.0], &spec);
        assert!(s.theta[0]);
        assert!(!s.xi[0]);
        // x1: f = −2 < 0 with y = +1, so ξ = 1 whatever θ.
        assert!(s.xi[1]);

        let spec0 = ClusterSvmSpec::new(0.0, 1.0, 1.0, ClusterNorm::L1);
        let s = assign_points(&d, &h, &[10.0, 0.0], &[0.5, 0.0], &spec0);
        assert!(!s.theta[0]);
    }

    #[test]
    fn centroid_examples() {
        let d = data(&[[0.0, 0.0], [2.0, 0.0], [0.0, 4.0], [9.0, 9.0]], &[Label::Positive; 4]);
        let spec = ClusterSvmSpec::new(1.0, 1.0, 1.0, ClusterNorm::L1);
        let u = update_centroids(&d, &[true, true, true, false], &spec, None);
        assert_eq!(u.k_plus, vec![0.0, 0.0]);
        assert_eq!(u.k_minus, vec![9.0, 9.0]);
        assert!(!u.empty_plus && !u.empty_minus);

        let s3 = 3f64.sqrt();
        let tri = data(&[[0.0, 0.0], [2.0, 0.0], [1.0, s3]], &[Label::Positive; 3]);
        let spec2 = ClusterSvmSpec::new(1.0, 1.0, 1.0, ClusterNorm::L2);
        let u = update_centroids(&tri, &[true, true, true], &spec2, None);
        assert!(l2_distance(&u.k_plus, &[1.0, s3 / 3.0]) < 1e-6);
        assert!(u.empty_minus);
        assert_eq!(u.k_minus, u.k_plus);
    }

    #[test]
    fn empty_cluster_keeps_previous_point() {
        let d = data(&[[0.0, 0.0], [1.0, 1.0]], &[Label::Positive, Label::Negative]);
        let spec = ClusterSvmSpec::new(1.0, 1.0, 1.0, ClusterNorm::L1);
        let prev_minus = [7.0, 7.0];
        let u = update_centroids(&d, &[true, true], &spec, Some((&[0.0, 0.0], &prev_minus)));
        assert!(u.empty_minus);
        assert_eq!(u.k_minus, prev_minus.to_vec());
    }

    #[test]
    fn spec_validation() {
        assert!(ClusterSvmSpec::new(0.0, 0.0, 0.0, ClusterNorm::L1).validate().is_ok());
        assert!(ClusterSvmSpec::new(-1.0, 0.0, 0.0, ClusterNorm::L1).validate().is_err());
        assert!(ClusterSvmSpec::new(1.0, f64::INFINITY, 0.0, ClusterNorm::L2).validate().is_err());
    }
}
