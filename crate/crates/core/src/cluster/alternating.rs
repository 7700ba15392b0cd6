use super::{
    ClusterError, ClusterState, ClusterStatus, ClusterSvmResult, ClusterSvmSpec, assign_points, evaluate,
    update_centroids,
};
use crate::convex::{ConvexSubproblem, Hyperplane, SIGN_TOL, solve_subproblem, train_svm};
use crate::data::{Dataset, Label};
use crate::deadline::Deadline;

const REL_IMPROVEMENT: f64 = 1e-9;

/// Alternates (a) [`assign_points`], (b) [`update_centroids`] and (c) a
/// hyperplane step for fixed clusters.
///
/// The hyperplane step is mixed-integer because `ξ` follows the sign of `f`.
/// Three convex candidates are tried: the sign pattern of the current plane
/// imposed as hard constraints, no sign constraints at all, and the sign
/// pattern of that unconstrained plane imposed as constraints. The best one
/// replaces the current plane only if the full objective strictly drops, so
/// the per-cycle objective never increases.
///
/// Without `init`, three starts are run and the best result kept: clusters
/// equal to the labels, the sign pattern of the plain SVM, and a label-free
/// two-cluster split of the features oriented by majority label. An `init`
/// state supplies the single starting assignment instead.
pub fn train_cluster_svm_alternating(
    d: &Dataset,
    spec: &ClusterSvmSpec,
    init: Option<&ClusterState>,
) -> Result<ClusterSvmResult, ClusterError> {
    spec.validate()?;
    d.require_both_classes()?;
    let starts = match init {
        Some(s) if s.theta.len() != d.n() => {
            return Err(ClusterError::StateLength { expected: d.n(), found: s.theta.len() });
        }
        Some(s) => vec![s.theta.clone()],
        None => {
            let labels: Vec<bool> = d.labels().iter().map(|l| l.is_positive()).collect();
            let mut starts = vec![labels];
            if let Ok(svm) = train_svm(d, spec.c1, spec.tol) {
                starts.push(d.rows().map(|x| svm.hyperplane.decision(x) >= 0.0).collect());
            }
            starts.push(feature_split(d, spec));
            starts.dedup();
            starts
        }
    };
    let deadline = Deadline::from_budget(spec.time_budget);
    let mut best: Option<ClusterSvmResult> = None;
    for theta in starts {
        if best.is_some() && deadline.expired() {
            break;
        }
        let r = run(d, spec, theta, None);
        if best.as_ref().is_none_or(|b| r.objective < b.objective) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Two clusters of the features alone: start from the farthest pair, then
/// alternate nearest-centre assignment and the norm's median. The cluster
/// holding more positive labels becomes `θ = 1`.
pub(crate) fn feature_split(d: &Dataset, spec: &ClusterSvmSpec) -> Vec<bool> {
    let n = d.n();
    let mut far = (0, 1, f64::NEG_INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let v = spec.norm.distance(d.row(i), d.row(j));
            if v > far.2 {
                far = (i, j, v);
            }
        }
    }
    let (mut kp, mut km) = (d.row(far.0).to_vec(), d.row(far.1).to_vec());
    let mut theta: Vec<bool> = Vec::new();
    for _ in 0..50 {
        let next: Vec<bool> =
            d.rows().map(|x| spec.norm.distance(x, &kp) <= spec.norm.distance(x, &km)).collect();
        if next == theta || next.iter().all(|&t| t) || next.iter().all(|&t| !t) {
            break;
        }
        theta = next;
        let c = update_centroids(d, &theta, spec, Some((&kp, &km)));
        kp = c.k_plus;
        km = c.k_minus;
    }
    if theta.is_empty() {
        theta = (0..n).map(|i| i != far.1).collect();
    }
    // Orient: agreement with the labels should be at least half.
    let agree = theta.iter().zip(d.labels()).filter(|(t, y)| **t == y.is_positive()).count();
    if 2 * agree < n {
        theta.iter_mut().for_each(|t| *t = !*t);
    }
    theta
}

/// Warm start from another model's result: its assignment and hyperplane seed
/// the run (used to chain the l1 model into the l2 model).
pub fn train_cluster_svm_from(
    d: &Dataset,
    spec: &ClusterSvmSpec,
    previous: &ClusterSvmResult,
) -> Result<ClusterSvmResult, ClusterError> {
    train_cluster_svm_seeded(d, spec, previous.state.theta.clone(), Some(previous.hyperplane.clone()))
}

/// Starts from an explicit assignment and, optionally, a hyperplane.
pub fn train_cluster_svm_seeded(
    d: &Dataset,
    spec: &ClusterSvmSpec,
    theta: Vec<bool>,
    hyperplane: Option<Hyperplane>,
) -> Result<ClusterSvmResult, ClusterError> {
    spec.validate()?;
    d.require_both_classes()?;
    if theta.len() != d.n() {
        return Err(ClusterError::StateLength { expected: d.n(), found: theta.len() });
    }
    if let Some(h) = &hyperplane
        && h.dim() != d.p() {
            return Err(crate::data::DataError::Dimension { expected: d.p(), found: h.dim() }.into());
        }
    Ok(run(d, spec, theta, hyperplane))
}

fn run(d: &Dataset, spec: &ClusterSvmSpec, theta: Vec<bool>, seed: Option<Hyperplane>) -> ClusterSvmResult {
    let deadline = Deadline::from_budget(spec.time_budget);
    let c = update_centroids(d, &theta, spec, None);
    let mut empty = c.empty_plus || c.empty_minus;
    let (mut k_plus, mut k_minus) = (c.k_plus, c.k_minus);

    let start = Hyperplane::zeros(d.p());
    let (mut current, _, _) = evaluate(d, spec, &start, theta.clone(), k_plus.clone(), k_minus.clone());
    let mut h = start;
    if let Some(s) = seed {
        let (v, _, _) = evaluate(d, spec, &s, theta.clone(), k_plus.clone(), k_minus.clone());
        if v < current {
            current = v;
            h = s;
        }
    }
    let mut theta = theta;
    if let Some((v, better)) = hyperplane_step(d, spec, &h, &theta, &k_plus, &k_minus, current) {
        current = v;
        h = better;
    }

    let mut history = vec![current];
    let mut status = ClusterStatus::CycleCap;
    for _ in 0..spec.max_cycles {
        if deadline.expired() {
            status = ClusterStatus::TimeCap;
            break;
        }
        let assigned = assign_points(d, &h, &k_plus, &k_minus, spec);
        let c = update_centroids(d, &assigned.theta, spec, Some((&k_plus, &k_minus)));
        empty = c.empty_plus || c.empty_minus;
        let (after_clusters, _, _) =
            evaluate(d, spec, &h, assigned.theta.clone(), c.k_plus.clone(), c.k_minus.clone());
        let same_clusters = assigned.theta == theta;
        theta = assigned.theta;
        k_plus = c.k_plus;
        k_minus = c.k_minus;
        let mut value = after_clusters;
        let moved = match hyperplane_step(d, spec, &h, &theta, &k_plus, &k_minus, after_clusters) {
            Some((v, better)) => {
                value = v;
                h = better;
                true
            }
            None => false,
        };
        history.push(value);
        let stalled = current - value <= REL_IMPROVEMENT * current.abs().max(1.0);
        current = value;
        if (same_clusters && !moved) || stalled {
            status = ClusterStatus::Heuristic;
            break;
        }
    }

    let (objective, state, errors) = evaluate(d, spec, &h, theta, k_plus, k_minus);
    ClusterSvmResult {
        hyperplane: h,
        state,
        errors,
        objective,
        status,
        degenerate_cluster: empty,
        margin: spec.margin(),
        history,
    }
}

/// Best of the three candidate planes for fixed clusters, if it beats
/// `current` (the objective at `h`).
fn hyperplane_step(
    d: &Dataset,
    spec: &ClusterSvmSpec,
    h: &Hyperplane,
    theta: &[bool],
    k_plus: &[f64],
    k_minus: &[f64],
    current: f64,
) -> Option<(f64, Hyperplane)> {
    let build = |constrained: Option<&[bool]>| {
        let mut sp = ConvexSubproblem::for_dataset(d, spec.margin());
        for (i, &t) in theta.iter().enumerate() {
            sp.add_hinge(i, Label::from_bool(t), spec.c1);
        }
        if let Some(xi) = constrained {
            for (i, &violated) in xi.iter().enumerate() {
                if !violated {
                    sp.add_sign(i, d.label(i));
                }
            }
        }
        sp
    };
    let sign_pattern = |h: &Hyperplane| -> Vec<bool> {
        d.rows().zip(d.labels()).map(|(x, y)| y.sign() * h.decision(x) < -SIGN_TOL).collect()
    };
    let score = |h: &Hyperplane| evaluate(d, spec, h, theta.to_vec(), k_plus.to_vec(), k_minus.to_vec()).0;

    let mut candidates = Vec::with_capacity(3);
    let pattern = sign_pattern(h);
    candidates.push(solve_subproblem(&build(Some(&pattern)), spec.tol, Some(h)).hyperplane);
    let free = solve_subproblem(&build(None), spec.tol, None).hyperplane;
    let free_pattern = sign_pattern(&free);
    if free_pattern != pattern {
        candidates.push(solve_subproblem(&build(Some(&free_pattern)), spec.tol, None).hyperplane);
    }
    candidates.push(free);

    let mut best: Option<(f64, Hyperplane)> = None;
    for cand in candidates {
        let v = score(&cand);
        if v < current && best.as_ref().is_none_or(|b| v < b.0) {
            best = Some((v, cand));
        }
    }
    best
}
