use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};
use crate::rng::rng_from_seed;

/// Exact-count label-flip noise: `round(rate * n)` labels are negated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub rate: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(rate: f64, seed: u64) -> Result<Self, DataError> {
        let spec = NoiseSpec { rate, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.rate.is_finite() && (0.0..=0.5).contains(&self.rate) {
            Ok(())
        } else {
            Err(DataError::InvalidNoiseRate(self.rate))
        }
    }
}

/// Indices whose labels were negated, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipRecord {
    pub n: usize,
    pub rate: f64,
    pub seed: u64,
    pub indices: Vec<usize>,
}

impl FlipRecord {
    pub fn to_text(&self) -> String {
        let mut out = String::from("# flip-record v1\n");
        let _ = writeln!(out, "n={} rate={} seed={} count={}", self.n, self.rate, self.seed, self.indices.len());
        let list: Vec<String> = self.indices.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "flipped={}", list.join(" "));
        out
    }

    pub fn from_text(text: &str) -> Option<FlipRecord> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let head = lines.next()?;
        let field = |key: &str| {
            head.split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        };
        let n = field("n")?.parse().ok()?;
        let rate = field("rate")?.parse().ok()?;
        let seed = field("seed")?.parse().ok()?;
        let indices = lines
            .next()?
            .strip_prefix("flipped=")?
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<usize>, _>>()
            .ok()?;
        Some(FlipRecord { n, rate, seed, indices })
    }
}

pub fn flip_count(n: usize, rate: f64) -> usize {
    ((rate * n as f64).round() as usize).min(n)
}

/// Chooses `flip_count(n, rate)` distinct indices uniformly at random.
pub fn choose_flips(n: usize, spec: &NoiseSpec) -> Result<Vec<usize>, DataError> {
    spec.validate()?;
    let count = flip_count(n, spec.rate);
    let mut rng = rng_from_seed(spec.seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, count).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Negates exactly `round(rate * n)` labels; the input dataset is untouched.
pub fn inject_label_noise(d: &Dataset, spec: &NoiseSpec) -> Result<(Dataset, FlipRecord), DataError> {
    let indices = choose_flips(d.n(), spec)?;
    let mut y = d.labels().to_vec();
    for &i in &indices {
        y[i] = y[i].flipped();
    }
    let noisy = d.with_labels(y)?;
    Ok((noisy, FlipRecord { n: d.n(), rate: spec.rate, seed: spec.seed, indices }))
}
