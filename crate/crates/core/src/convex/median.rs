use super::ConvexError;

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `Σ_i dist(x_i, center)` under l1 (`l1 = true`) or l2.
pub fn summed_distance<'a>(points: impl IntoIterator<Item = &'a [f64]>, center: &[f64], l1: bool) -> f64 {
    points
        .into_iter()
        .map(|x| if l1 { l1_distance(x, center) } else { l2_distance(x, center) })
        .sum()
}

fn check(points: &[&[f64]]) -> Result<usize, ConvexError> {
    let first = points.first().ok_or(ConvexError::EmptyPointSet)?;
    let p = first.len();
    for x in points {
        if x.len() != p {
            return Err(ConvexError::Dimension { expected: p, found: x.len() });
        }
    }
    Ok(p)
}

/// Per-coordinate median; the lower median for even counts. Minimises the
/// summed l1 distance.
pub fn coordinate_median(points: &[&[f64]]) -> Result<Vec<f64>, ConvexError> {
    let p = check(points)?;
    let mut column = Vec::with_capacity(points.len());
    Ok((0..p)
        .map(|j| {
            column.clear();
            column.extend(points.iter().map(|x| x[j]));
            column.sort_by(f64::total_cmp);
            column[(column.len() - 1) / 2]
        })
        .collect())
}

const MAX_WEISZFELD_ITERS: usize = 10_000;

/// Point minimising the summed l2 distance (Weiszfeld iteration with the
/// Vardi–Zhang modification at data points).
///
/// Stops once the step is below `tol` relative to the data's spread, or the
/// current iterate is a data point whose pull is dominated by its
/// multiplicity.
pub fn geometric_median(points: &[&[f64]], tol: f64) -> Result<Vec<f64>, ConvexError> {
    let p = check(points)?;
    let n = points.len() as f64;
    let mut y: Vec<f64> = (0..p).map(|j| points.iter().map(|x| x[j]).sum::<f64>() / n).collect();
    if points.len() == 1 {
        return Ok(y);
    }
    let scale = points.iter().map(|x| l2_distance(x, &y)).fold(0.0, f64::max).max(1e-300);
    let coincide = 1e-12 * scale;

    for _ in 0..MAX_WEISZFELD_ITERS {
        let mut num = vec![0.0; p];
        let mut denom = 0.0;
        let mut eta = 0.0;
        // r = Σ_{x_i ≠ y} (x_i − y) / ‖x_i − y‖
        let mut r = vec![0.0; p];
        for x in points {
            let d = l2_distance(x, &y);
            if d <= coincide {
                eta += 1.0;
                continue;
            }
            for j in 0..p {
                num[j] += x[j] / d;
                r[j] += (x[j] - y[j]) / d;
            }
            denom += 1.0 / d;
        }
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if denom == 0.0 || r_norm <= eta {
            // All points coincide with y, or y is a data point satisfying the
            // optimality condition.
            return Ok(y);
        }
        let t: Vec<f64> = num.iter().map(|v| v / denom).collect();
        let next: Vec<f64> = if eta == 0.0 {
            t
        } else {
            let step = (1.0 - eta / r_norm).max(0.0);
            (0..p).map(|j| step * t[j] + (1.0 - step) * y[j]).collect()
        };
        let moved = l2_distance(&next, &y);
        y = next;
        if moved <= tol * scale {
            return Ok(y);
        }
    }
    Ok(y)
}
