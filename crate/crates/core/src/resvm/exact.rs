use super::{
    FlipVector, ReSvmResult, ReSvmSpec, ReSvmStatus, ResvmError, evaluate, fixed_subproblem,
    train_resvm_alternating,
};
use crate::convex::{Hyperplane, hinge, solve_subproblem};
use crate::data::Dataset;
use crate::deadline::Deadline;

const PRUNE_SLACK: f64 = 1e-9;

/// Order in which the exact solver fixes the binaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchOrder {
    /// Largest hinge error under the heuristic hyperplane first.
    HeuristicError,
    /// Observation index order.
    Index,
}

/// Depth-first branch-and-bound over `ξ`.
///
/// A node fixes `ξ` on a prefix of the branching order. Its bound is the dual
/// value of the quadratic program over the fixed points only, plus the price of
/// the fixed flips; the points not yet fixed can only add non-negative cost.
/// Every node's hyperplane is also evaluated with the pointwise rule, which
/// feeds the incumbent. The incumbent starts from the alternating heuristic.
pub fn train_resvm_exact(d: &Dataset, spec: &ReSvmSpec) -> Result<ReSvmResult, ResvmError> {
    train_resvm_exact_ordered(d, spec, BranchOrder::HeuristicError)
}

pub fn train_resvm_exact_ordered(
    d: &Dataset,
    spec: &ReSvmSpec,
    order: BranchOrder,
) -> Result<ReSvmResult, ResvmError> {
    spec.validate()?;
    d.require_both_classes()?;
    let n = d.n();
    if n > spec.exact_cap {
        return Err(ResvmError::TooLarge { n, cap: spec.exact_cap });
    }
    let deadline = Deadline::from_budget(spec.time_budget);
    let seed = train_resvm_alternating(d, &ReSvmSpec { time_budget: None, ..spec.clone() }, None)?;

    let mut branching: Vec<usize> = (0..n).collect();
    if order == BranchOrder::HeuristicError {
        let err: Vec<f64> =
            d.rows().zip(d.labels()).map(|(x, y)| hinge(y.sign() * seed.hyperplane.decision(x))).collect();
        branching.sort_by(|&a, &b| err[b].total_cmp(&err[a]).then(a.cmp(&b)));
    }

    let mut search = Search {
        d,
        spec,
        order: branching,
        preferred: seed.flips.xi.clone(),
        current: FlipVector::keep_all(n),
        incumbent: seed.hyperplane.clone(),
        incumbent_value: seed.objective,
        nodes: 0,
        open_bound: f64::INFINITY,
        capped: None,
        deadline,
    };
    search.explore(0, 0.0, 0);

    let (objective, flips, errors) = evaluate(d, spec, &search.incumbent);
    let status = search.capped.unwrap_or(ReSvmStatus::Optimal);
    let bound = search.open_bound.min(objective);
    Ok(ReSvmResult {
        hyperplane: search.incumbent,
        flips,
        errors,
        objective,
        status,
        nodes_explored: search.nodes,
        bound,
        history: seed.history,
    })
}

struct Search<'a> {
    d: &'a Dataset,
    spec: &'a ReSvmSpec,
    order: Vec<usize>,
    preferred: Vec<bool>,
    current: FlipVector,
    incumbent: Hyperplane,
    incumbent_value: f64,
    nodes: usize,
    /// Smallest bound among subtrees abandoned because of a cap.
    open_bound: f64,
    capped: Option<ReSvmStatus>,
    deadline: Deadline,
}

impl Search<'_> {
    fn prune_level(&self) -> f64 {
        self.incumbent_value - PRUNE_SLACK * self.incumbent_value.abs().max(1.0)
    }

    fn explore(&mut self, depth: usize, bound: f64, fixed_flips: usize) {
        if depth == self.order.len() {
            return;
        }
        let i = self.order[depth];
        let first = self.preferred[i];
        for choice in [first, !first] {
            if self.capped.is_none() {
                if self.nodes >= self.spec.node_cap {
                    self.capped = Some(ReSvmStatus::NodeCap);
                } else if self.deadline.expired() {
                    self.capped = Some(ReSvmStatus::TimeCap);
                }
            }
            if self.capped.is_some() {
                self.open_bound = self.open_bound.min(bound);
                return;
            }
            self.current.xi[i] = choice;
            let flips = fixed_flips + usize::from(choice);
            let sp = fixed_subproblem(self.d, self.spec, &self.current, self.order[..=depth].iter().copied());
            let sol = solve_subproblem(&sp, self.spec.tol, None);
            self.nodes += 1;

            let (value, _, _) = evaluate(self.d, self.spec, &sol.hyperplane);
            if value < self.incumbent_value {
                self.incumbent_value = value;
                self.incumbent = sol.hyperplane;
            }
            let child_bound = bound.max(sol.lower_bound + self.spec.flip_cost() * flips as f64);
            if child_bound < self.prune_level() {
                self.explore(depth + 1, child_bound, flips);
            }
        }
        self.current.xi[i] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::train_svm;
    use crate::data::two_gaussians;
    use crate::resvm::LossMode;

    #[test]
    fn priced_out_matches_svm() {
        let d = two_gaussians(12, 2, 1.0, 4);
        let r = train_resvm_exact(&d, &ReSvmSpec::hinge(1.0, 1e6)).unwrap();
        let svm = train_svm(&d, 1.0, 1e-10).unwrap();
        assert_eq!(r.status, ReSvmStatus::Optimal);
        assert_eq!(r.flips.count(), 0);
        assert!((r.objective - svm.objective).abs() <= 1e-6 * svm.objective);
    }

    #[test]
    fn rejects_large_instances() {
        let d = two_gaussians(25, 2, 1.0, 4);
        assert!(matches!(train_resvm_exact(&d, &ReSvmSpec::hinge(1.0, 1.0)), Err(ResvmError::TooLarge { .. })));
    }

    #[test]
    fn node_cap_reports_valid_bound() {
        let d = two_gaussians(14, 2, 0.3, 8);
        let spec = ReSvmSpec { node_cap: 3, ..ReSvmSpec::hinge(1.0, 0.4) };
        let capped = train_resvm_exact(&d, &spec).unwrap();
        let full = train_resvm_exact(&d, &ReSvmSpec::hinge(1.0, 0.4)).unwrap();
        assert_eq!(capped.status, ReSvmStatus::NodeCap);
        assert!(capped.bound <= full.objective + 1e-9);
        assert!(capped.objective >= full.objective - 1e-9);
    }

    #[test]
    fn ramp_mode_separable_has_no_outliers() {
        let d = two_gaussians(10, 2, 12.0, 2);
        let spec = ReSvmSpec { mode: LossMode::Ramp, ..ReSvmSpec::ramp(10.0) };
        let r = train_resvm_exact(&d, &spec).unwrap();
        assert_eq!(r.flips.count(), 0);
        assert!(r.errors.iter().sum::<f64>() <= 1e-6);
    }
}
