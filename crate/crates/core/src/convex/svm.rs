use super::dual::{DualRow, Smo};
use super::intercept::{InterceptTerm, best_intercept, sign_interval};
use super::subproblem::{ConvexSubproblem, MarginNorm};
use super::{ConvexError, Hyperplane, SIGN_TOL, SolveStatus, SvmSolution, dot, hinge, relative_gap};
use crate::data::Dataset;

/// `½‖w‖² + C Σ max(0, 1 − y_i f(x_i))`.
pub fn hinge_objective(d: &Dataset, c: f64, h: &Hyperplane) -> f64 {
    0.5 * h.norm_sq()
        + c * d.rows().zip(d.labels()).map(|(x, y)| hinge(y.sign() * h.decision(x))).sum::<f64>()
}

/// Soft-margin linear SVM, solved to a relative duality gap of `tol`.
///
/// Single-class input is accepted here (the optimum is then `w = 0` with the
/// intercept pushed to the class sign); callers that need both classes check
/// [`Dataset::require_both_classes`] themselves.
pub fn train_svm(d: &Dataset, c: f64, tol: f64) -> Result<SvmSolution, ConvexError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(ConvexError::InvalidPenalty(c));
    }
    let mut sp = ConvexSubproblem::for_dataset(d, MarginNorm::L2Squared);
    for (i, y) in d.labels().iter().enumerate() {
        sp.add_hinge(i, *y, c);
    }
    Ok(solve_quadratic(&sp, tol))
}

/// Dual route for the squared-l2 margin; also handles sign constraints
/// (unbounded multipliers with no linear term).
pub(crate) fn solve_quadratic(sp: &ConvexSubproblem<'_>, tol: f64) -> SvmSolution {
    let lambda = sp.margin_weight;
    let rows: Vec<DualRow> = sp
        .hinges
        .iter()
        .filter(|h| h.coef > 0.0)
        .map(|h| DualRow { point: h.point, sign: h.target.sign(), linear: 1.0, upper: h.coef / lambda })
        .chain(
            sp.signs
                .iter()
                .map(|s| DualRow { point: s.point, sign: s.sign.sign(), linear: 0.0, upper: f64::INFINITY }),
        )
        .collect();
    let mut smo = Smo::new(sp.points(), sp.dim(), &rows);
    let max_iter = 200_000usize.max(2000 * rows.len());
    let mut eps = 1e-3;
    let mut status = SolveStatus::IterationLimit;
    let mut best: Option<(Hyperplane, f64, f64, f64)> = None;
    loop {
        let reached = smo.run(eps, max_iter);
        let w = smo.primal_w();
        let h = recover_intercept(sp, w);
        let violation = sp.max_violation(&h);
        let objective = sp.objective(&h);
        let lower = lambda * smo.dual_value(&h.w) ;
        let gap = relative_gap(objective, lower);
        let improves = best.as_ref().is_none_or(|b| (violation, objective) < (b.2, b.1));
        if improves {
            best = Some((h, objective, violation, lower));
        }
        if gap <= tol && violation <= SIGN_TOL {
            status = SolveStatus::Converged;
            break;
        }
        if !reached || eps < 1e-15 {
            if smo.violation() <= 1e-15 && violation > SIGN_TOL {
                status = SolveStatus::Infeasible;
            }
            break;
        }
        eps *= 0.1;
    }
    let (hyperplane, objective, max_violation, lower) = best.expect("at least one round");
    // The dual bound is valid for every feasible multiplier vector; keep the
    // tightest one seen.
    let lower_bound = lower.min(objective);
    let smo_solution = SvmSolution {
        errors: sp.hinge_errors(&hyperplane),
        dual_gap: relative_gap(objective, lower_bound),
        hyperplane,
        objective,
        lower_bound,
        max_violation,
        iterations: smo.iterations,
        status,
    };
    if status == SolveStatus::Converged {
        return smo_solution;
    }
    // Coordinate descent stalls on low-rank, large-C problems; finish with the
    // interior-point route and keep whichever plane and bound are better.
    let ip = super::conic::solve_conic(sp, tol);
    if ip.max_violation > SIGN_TOL || !ip.objective.is_finite() {
        return smo_solution;
    }
    let (mut out, other) =
        if ip.objective < smo_solution.objective { (ip, smo_solution) } else { (smo_solution, ip) };
    out.lower_bound = out.lower_bound.max(other.lower_bound).min(out.objective);
    out.dual_gap = relative_gap(out.objective, out.lower_bound);
    out.iterations += other.iterations;
    out.status = if out.dual_gap <= tol { SolveStatus::Converged } else { status };
    out
}

/// Completes `w` with the exact best intercept under the subproblem's hinge
/// terms and sign constraints.
pub(crate) fn recover_intercept(sp: &ConvexSubproblem<'_>, w: Vec<f64>) -> Hyperplane {
    let terms: Vec<InterceptTerm> = sp
        .hinges
        .iter()
        .map(|t| InterceptTerm { a: dot(&w, sp.point(t.point)), t: t.target.sign(), c: t.coef })
        .collect();
    let (lo, hi) = sign_interval(sp.signs.iter().map(|s| (dot(&w, sp.point(s.point)), s.sign.sign())));
    let b = best_intercept(&terms, lo, hi);
    Hyperplane { w, b }
}
