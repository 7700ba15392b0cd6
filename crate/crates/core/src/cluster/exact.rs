use rayon::prelude::*;

use super::{
    ClusterError, ClusterStatus, ClusterSvmResult, ClusterSvmSpec, evaluate, update_centroids,
};
use crate::convex::{ConvexSubproblem, Hyperplane, solve_subproblem};
use crate::data::{Dataset, Label};

/// Exhaustive search over the assignment `θ` and the sign-violation set `ξ`.
///
/// For a fixed `θ` the distance term decouples (each cluster takes its optimal
/// reference point) and the rest is
/// `min_ξ [ min_h {margin + C1 Σ e_i : y_i f(x_i) >= 0 for ξ_i = 0} + C2 |ξ| ]`.
/// Every `ξ` with `v_free + C2 |ξ|` at or above the best value found for the
/// same `θ` is skipped, where `v_free` is the unconstrained optimum. Each `θ`
/// is searched independently, so the result does not depend on scheduling;
/// ties go to the lexicographically smallest `(θ, ξ)`.
pub fn train_cluster_svm_exact_tiny(d: &Dataset, spec: &ClusterSvmSpec) -> Result<ClusterSvmResult, ClusterError> {
    spec.validate()?;
    d.require_both_classes()?;
    let n = d.n();
    if n > spec.exact_cap || n >= usize::BITS as usize {
        return Err(ClusterError::TooLarge { n, cap: spec.exact_cap });
    }
    let bits = |mask: usize| -> Vec<bool> { (0..n).map(|i| mask >> i & 1 == 1).collect() };

    let best = (0..1usize << n)
        .into_par_iter()
        .map(|theta_mask| {
            let theta = bits(theta_mask);
            let (value, h, xi_mask) = best_for_assignment(d, spec, &theta, &bits);
            let c = update_centroids(d, &theta, spec, None);
            let cluster_cost: f64 = spec.c3
                * d.rows()
                    .zip(&theta)
                    .map(|(x, &t)| spec.norm.distance(x, if t { &c.k_plus } else { &c.k_minus }))
                    .sum::<f64>();
            (value + cluster_cost, theta, bits(xi_mask), h, c)
        })
        .reduce_with(|a, b| {
            match a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)).then_with(|| a.2.cmp(&b.2)) {
                std::cmp::Ordering::Greater => b,
                _ => a,
            }
        })
        .expect("at least one assignment");

    let (_, theta, _, h, c) = best;
    let (objective, state, errors) = evaluate(d, spec, &h, theta, c.k_plus, c.k_minus);
    Ok(ClusterSvmResult {
        hyperplane: h,
        state,
        errors,
        objective,
        status: ClusterStatus::Optimal,
        degenerate_cluster: c.empty_plus || c.empty_minus,
        margin: spec.margin(),
        history: Vec::new(),
    })
}

/// `(margin + C1 Σe + C2 Σξ, plane, ξ mask)` minimised over `ξ` for one `θ`,
/// each leaf scored honestly (its `ξ` recomputed from the plane's signs).
fn best_for_assignment(
    d: &Dataset,
    spec: &ClusterSvmSpec,
    theta: &[bool],
    bits: &dyn Fn(usize) -> Vec<bool>,
) -> (f64, Hyperplane, usize) {
    let n = d.n();
    let base = || {
        let mut sp = ConvexSubproblem::for_dataset(d, spec.margin());
        for (i, &t) in theta.iter().enumerate() {
            sp.add_hinge(i, Label::from_bool(t), spec.c1);
        }
        sp
    };
    let honest = |h: &Hyperplane| -> (f64, usize) {
        let mut mask = 0usize;
        for (i, (x, y)) in d.rows().zip(d.labels()).enumerate() {
            if y.sign() * h.decision(x) < -crate::convex::SIGN_TOL {
                mask |= 1 << i;
            }
        }
        let sp = base();
        (sp.objective(h) + spec.c2 * mask.count_ones() as f64, mask)
    };

    let free = solve_subproblem(&base(), spec.tol, None);
    let v_free = free.lower_bound.min(free.objective);
    let (mut best_value, mut best_mask) = honest(&free.hyperplane);
    let mut best_plane = free.hyperplane;

    for xi_mask in 0..1usize << n {
        let flips = xi_mask.count_ones() as f64;
        if v_free + spec.c2 * flips >= best_value {
            continue;
        }
        let mut sp = base();
        for (i, violated) in bits(xi_mask).into_iter().enumerate() {
            if !violated {
                sp.add_sign(i, d.label(i));
            }
        }
        let sol = solve_subproblem(&sp, spec.tol, None);
        let (value, mask) = honest(&sol.hyperplane);
        if value < best_value || (value == best_value && mask < best_mask) {
            best_value = value;
            best_mask = mask;
            best_plane = sol.hyperplane;
        }
    }
    (best_value, best_plane, best_mask)
}
