//! Instance generators and brute-force oracles shared by the integration
//! tests. Oracles recompute objectives from first principles instead of
//! calling the library's own evaluators.

#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use relabel_core::cluster::ClusterNorm;
use relabel_core::convex::{QP_TOL, train_svm};
use relabel_core::rng::rng_from_seed;
use relabel_core::{Dataset, Hyperplane, Label};

/// Gaussian features, labels from a random plane with about 15% of them
/// flipped. Rows 0 and 1 are forced to opposite classes.
pub fn random_instance(seed: u64, n: usize, p: usize) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let w: Vec<f64> = (0..p).map(|_| gauss(&mut rng)).collect();
    let b: f64 = 0.3 * gauss(&mut rng);
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<f64> = (0..p).map(|_| gauss(&mut rng)).collect();
        let f: f64 = row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b;
        let mut label = Label::from_decision(f);
        if rng.random::<f64>() < 0.15 {
            label = label.flipped();
        }
        if i < 2 {
            label = Label::from_bool(i == 0);
        }
        x.extend(row);
        y.push(label);
    }
    Dataset::new(format!("random-{seed}"), x, p, y).unwrap()
}

/// One standard normal draw.
pub fn gauss(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn pick<T: Copy>(rng: &mut impl Rng, options: &[T]) -> T {
    options[rng.random_range(0..options.len())]
}

pub fn decision(h: &Hyperplane, x: &[f64]) -> f64 {
    h.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + h.b
}

pub fn hinge(v: f64) -> f64 {
    (1.0 - v).max(0.0)
}

/// `½‖w‖² + C Σ hinge(y f(x))`.
pub fn svm_primal(d: &Dataset, c: f64, h: &Hyperplane) -> f64 {
    let loss: f64 = d.rows().zip(d.labels()).map(|(x, y)| hinge(y.sign() * decision(h, x))).sum();
    0.5 * h.w.iter().map(|v| v * v).sum::<f64>() + c * loss
}

/// Optimal soft-margin value on the rows `keep` with labels `labels`.
/// A single class is fit by `w = 0, b = y` at value `0`.
pub fn svm_value(d: &Dataset, keep: &[usize], labels: &[Label], c: f64) -> f64 {
    if keep.iter().all(|&i| labels[i] == labels[keep[0]]) {
        return 0.0;
    }
    let rows: Vec<Vec<f64>> = keep.iter().map(|&i| d.row(i).to_vec()).collect();
    let y: Vec<Label> = keep.iter().map(|&i| labels[i]).collect();
    let sub = Dataset::from_rows("oracle", &rows, y).unwrap();
    let s = train_svm(&sub, c, QP_TOL * 1e-2).unwrap();
    // Honest primal value of the returned plane on the subset.
    svm_primal(&sub, c, &s.hyperplane)
}

/// Relabeling objective of a fixed flip set: best plane for the relabeled
/// data plus `C2` per flip.
pub fn resvm_value_of_flips(d: &Dataset, c1: f64, c2: f64, flips: &[bool]) -> f64 {
    let labels: Vec<Label> = d.labels().iter().zip(flips).map(|(y, &f)| if f { y.flipped() } else { *y }).collect();
    let all: Vec<usize> = (0..d.n()).collect();
    svm_value(d, &all, &labels, c1) + c2 * flips.iter().filter(|&&f| f).count() as f64
}

/// Ramp objective of a fixed outlier set: best plane for the other points
/// plus `2C` per outlier.
pub fn ramp_value_of_outliers(d: &Dataset, c: f64, outliers: &[bool]) -> f64 {
    let keep: Vec<usize> = (0..d.n()).filter(|&i| !outliers[i]).collect();
    svm_value(d, &keep, d.labels(), c) + 2.0 * c * outliers.iter().filter(|&&o| o).count() as f64
}

/// `(min value, argmin mask)` of `value` over all `2^n` masks.
pub fn enumerate_masks(n: usize, mut value: impl FnMut(&[bool]) -> f64) -> (f64, Vec<bool>) {
    let mut best = (f64::INFINITY, vec![false; n]);
    for m in 0u32..(1 << n) {
        let mask: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
        let v = value(&mask);
        if v < best.0 {
            best = (v, mask);
        }
    }
    best
}

pub fn distance(norm: ClusterNorm, a: &[f64], b: &[f64]) -> f64 {
    match norm {
        ClusterNorm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        ClusterNorm::L2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
    }
}

/// Cluster objective of an explicit `(h, θ, K+, K−)`, with `ξ` and `e` at
/// their forced values.
#[allow(clippy::too_many_arguments)]
pub fn cluster_value(
    d: &Dataset,
    norm: ClusterNorm,
    squared_margin: bool,
    (c1, c2, c3): (f64, f64, f64),
    h: &Hyperplane,
    theta: &[bool],
    k_plus: &[f64],
    k_minus: &[f64],
) -> f64 {
    let margin = match norm {
        ClusterNorm::L1 => 0.5 * h.w.iter().map(|v| v.abs()).sum::<f64>(),
        ClusterNorm::L2 if squared_margin => 0.5 * h.w.iter().map(|v| v * v).sum::<f64>(),
        ClusterNorm::L2 => 0.5 * h.w.iter().map(|v| v * v).sum::<f64>().sqrt(),
    };
    let mut total = margin;
    for ((x, y), &t) in d.rows().zip(d.labels()).zip(theta) {
        let f = decision(h, x);
        let c_hat = if t { 1.0 } else { -1.0 };
        total += c1 * hinge(c_hat * f);
        if y.sign() * f < -1e-9 {
            total += c2;
        }
        total += c3 * distance(norm, x, if t { k_plus } else { k_minus });
    }
    total
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 { values[m] } else { 0.5 * (values[m - 1] + values[m]) }
}
