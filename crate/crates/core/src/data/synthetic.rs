use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, Label};
use crate::rng::rng_from_seed;

/// Two isotropic unit-variance Gaussian classes in `p` dimensions whose means
/// sit at `±separation / 2` on the first axis. The first `ceil(n / 2)` rows
/// are positive.
pub fn two_gaussians(n: usize, p: usize, separation: f64, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let n_pos = n.div_ceil(2);
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = Label::from_bool(i < n_pos);
        for j in 0..p {
            let z: f64 = StandardNormal.sample(&mut rng);
            let centre = if j == 0 { label.sign() * separation / 2.0 } else { 0.0 };
            x.push(centre + z);
        }
        y.push(label);
    }
    Dataset::new(format!("gauss{p}d-sep{separation}-s{seed}"), x, p, y).expect("n >= 2, p >= 1")
}
