//! Exact intercept for a fixed normal vector.
//!
//! With `w` fixed, the hinge sum `g(b) = Σ c_k max(0, 1 − t_k (a_k + b))` is
//! convex and piecewise linear in `b` with kinks at `b = t_k − a_k`. Its
//! minimisers form an interval `[lo, hi]`; sign constraints restrict `b` to a
//! second interval. Among all minimisers we return the one closest to zero,
//! which keeps the choice deterministic and odd under label negation.

/// One hinge term seen from the intercept: `a = w·x`, target `t = ±1`, weight `c`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct InterceptTerm {
    pub a: f64,
    pub t: f64,
    pub c: f64,
}

/// Feasible intercepts from sign constraints `s (a + b) >= 0`.
/// Returns `(lo, hi)`; `lo > hi` means the constraints conflict for this `w`.
pub(crate) fn sign_interval(constraints: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (a, s) in constraints {
        if s > 0.0 {
            lo = lo.max(-a);
        } else {
            hi = hi.min(-a);
        }
    }
    (lo, hi)
}

/// Minimiser set `[left, right]` of the hinge sum (possibly unbounded).
fn minimiser_interval(terms: &[InterceptTerm]) -> (f64, f64) {
    // Each term contributes slope -c left of its kink (t = +1) or +c right of
    // it (t = -1).
    let mut kinks: Vec<(f64, f64, f64)> = terms
        .iter()
        .filter(|t| t.c > 0.0)
        .map(|t| (t.t - t.a, t.t, t.c))
        .collect();
    if kinks.is_empty() {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }
    kinks.sort_by(|x, y| x.0.total_cmp(&y.0));

    let pos_total: f64 = kinks.iter().filter(|k| k.1 > 0.0).map(|k| k.2).sum();
    let neg_total: f64 = kinks.iter().filter(|k| k.1 < 0.0).map(|k| k.2).sum();

    // Right derivative at b: −(pos weight with kink > b) + (neg weight with kink <= b).
    let left = if pos_total == 0.0 {
        f64::NEG_INFINITY
    } else {
        let mut pos_left = pos_total;
        let mut neg_seen = 0.0;
        let mut found = f64::INFINITY;
        let mut i = 0;
        while i < kinks.len() {
            let v = kinks[i].0;
            while i < kinks.len() && kinks[i].0 == v {
                if kinks[i].1 > 0.0 {
                    pos_left -= kinks[i].2;
                } else {
                    neg_seen += kinks[i].2;
                }
                i += 1;
            }
            if neg_seen - pos_left >= 0.0 {
                found = v;
                break;
            }
        }
        found
    };
    // Left derivative at b: −(pos weight with kink >= b) + (neg weight with kink < b).
    let right = if neg_total == 0.0 {
        f64::INFINITY
    } else {
        let mut neg_right = neg_total;
        let mut pos_seen = 0.0;
        let mut found = f64::NEG_INFINITY;
        let mut i = kinks.len();
        while i > 0 {
            let v = kinks[i - 1].0;
            while i > 0 && kinks[i - 1].0 == v {
                if kinks[i - 1].1 < 0.0 {
                    neg_right -= kinks[i - 1].2;
                } else {
                    pos_seen += kinks[i - 1].2;
                }
                i -= 1;
            }
            if neg_right - pos_seen <= 0.0 {
                found = v;
                break;
            }
        }
        found
    };
    (left, right.max(left))
}

/// Best intercept within `[lo, hi]`. If the interval is empty the midpoint is
/// returned and the caller reports the resulting violation.
pub(crate) fn best_intercept(terms: &[InterceptTerm], lo: f64, hi: f64) -> f64 {
    if lo > hi {
        return 0.5 * (lo + hi);
    }
    let (left, right) = minimiser_interval(terms);
    0.0f64.clamp(left, right).clamp(lo, hi)
}
