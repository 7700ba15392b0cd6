//! Line-oriented `key = value` plan files.
//!
//! ```text
//! # relabel-plan v1
//! dataset = data/heart.dat
//! synthetic = blobs n=200 p=2 separation=4 seed=1
//! noise_rates = 0, 0.2, 0.3, 0.4, 0.5
//! folds = 5
//! repeats = 5
//! models = svm, resvm, cluster-l1, cluster-l2
//! grid.c1 = pow10:-5..5
//! ```
//!
//! `dataset` and `synthetic` may repeat; every other key appears at most once.
//! Grid values are comma lists or `pow10:lo..hi`. Blank lines and lines
//! starting with `#` are skipped after the header.

use std::collections::HashSet;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use super::{GridSpec, HarnessError, Orientation, pow10};
use crate::data::{Dataset, LabelColumn, LabelMap, LoadOptions, Scheme, load_dataset, two_gaussians};
use crate::fit::{ModelFamily, SolverMode};

pub const PLAN_HEADER: &str = "# relabel-plan v1";

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    File(PathBuf),
    /// Two unit-variance Gaussian classes (see [`two_gaussians`]).
    Synthetic { name: String, n: usize, p: usize, separation: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub datasets: Vec<DatasetSource>,
    pub noise_rates: Vec<f64>,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub orientation: Orientation,
    pub normalize: Scheme,
    pub models: Vec<ModelFamily>,
    pub solver: SolverMode,
    pub grid: GridSpec,
    /// Per-fit budget in seconds; `None` disables it.
    pub time_limit_s: Option<f64>,
    /// Seed each l2 cluster fit with the l1 cluster fit of the same cell and
    /// grid point.
    pub warm_start: bool,
    pub workers: usize,
    pub label_column: LabelColumn,
    /// Empty means the loader's automatic label recognition.
    pub label_map: LabelMap,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            datasets: Vec::new(),
            noise_rates: vec![0.0, 0.2, 0.3, 0.4, 0.5],
            folds: 5,
            repeats: 5,
            seed: 0,
            orientation: Orientation::Paper,
            normalize: Scheme::MinMax,
            models: vec![ModelFamily::Svm, ModelFamily::Resvm, ModelFamily::ClusterL1, ModelFamily::ClusterL2],
            solver: SolverMode::Heuristic,
            grid: GridSpec::default(),
            time_limit_s: Some(30.0),
            warm_start: true,
            workers: 1,
            label_column: LabelColumn::Last,
            label_map: LabelMap::default(),
        }
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidPlan(m.to_string()));
        if self.datasets.is_empty() {
            return bad("no datasets");
        }
        if self.noise_rates.is_empty() || self.noise_rates.iter().any(|r| !(0.0..=0.5).contains(r)) {
            return bad("noise rates must be a non-empty list of values in [0, 0.5]");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.repeats == 0 || self.workers == 0 {
            return bad("repeats and workers must be positive");
        }
        if self.models.is_empty() {
            return bad("no models");
        }
        if self.time_limit_s.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return bad("time limit must be positive");
        }
        for m in &self.models {
            if self.grid.cells(*m).is_empty() {
                return bad(&format!("empty grid for {m}"));
            }
        }
        let g = &self.grid;
        if [&g.c, &g.c1, &g.c2, &g.c3].iter().any(|v| v.iter().any(|x| !(x.is_finite() && *x >= 0.0))) {
            return bad("grid values must be finite and non-negative");
        }
        let mut seen = HashSet::new();
        for r in &self.noise_rates {
            if !seen.insert(r.to_bits()) {
                return bad("duplicate noise rate");
            }
        }
        Ok(())
    }

    /// Canonical plan text; parsing it gives back an equal plan.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{PLAN_HEADER}");
        for d in &self.datasets {
            match d {
                DatasetSource::File(p) => {
                    let _ = writeln!(s, "dataset = {}", p.display());
                }
                DatasetSource::Synthetic { name, n, p, separation, seed } => {
                    let _ = writeln!(s, "synthetic = {name} n={n} p={p} separation={separation} seed={seed}");
                }
            }
        }
        let _ = writeln!(s, "noise_rates = {}", self.noise_rates.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","));
        let _ = writeln!(s, "folds = {}", self.folds);
        let _ = writeln!(s, "repeats = {}", self.repeats);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "orientation = {}", self.orientation);
        let _ = writeln!(s, "normalize = {}", self.normalize);
        let _ = writeln!(s, "models = {}", self.models.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(","));
        let _ = writeln!(s, "solver = {}", match self.solver {
            SolverMode::Heuristic => "heuristic",
            SolverMode::Exact => "exact",
        });
        let _ = writeln!(s, "grid.c = {}", fmt_list(&self.grid.c));
        let _ = writeln!(s, "grid.c1 = {}", fmt_list(&self.grid.c1));
        let _ = writeln!(s, "grid.c2 = {}", fmt_list(&self.grid.c2));
        let _ = writeln!(s, "grid.c3 = {}", fmt_list(&self.grid.c3));
        let _ = writeln!(s, "time_limit_s = {}", self.time_limit_s.map_or("none".to_string(), |t| t.to_string()));
        let _ = writeln!(s, "warm_start = {}", self.warm_start);
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "label_column = {}", self.label_column);
        let map = self.label_map.to_spec();
        if !map.is_empty() {
            let _ = writeln!(s, "label_map = {map}");
        }
        s
    }
}

fn parse_grid(v: &str) -> Result<Vec<f64>, String> {
    if let Some(range) = v.strip_prefix("pow10:") {
        let (lo, hi) = range.split_once("..").ok_or("expected pow10:lo..hi")?;
        let lo: i32 = lo.trim().parse().map_err(|_| format!("bad exponent `{lo}`"))?;
        let hi: i32 = hi.trim().parse().map_err(|_| format!("bad exponent `{hi}`"))?;
        if lo > hi {
            return Err("empty pow10 range".into());
        }
        return Ok(pow10(lo, hi));
    }
    parse_list(v)
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("not a number: `{}`", t.trim())))
        .collect()
}

fn parse_synthetic(v: &str) -> Result<DatasetSource, String> {
    let mut parts = v.split_whitespace();
    let name = parts.next().ok_or("synthetic dataset needs a name")?.to_string();
    let (mut n, mut p, mut separation, mut seed) = (None, None, None, 0u64);
    for kv in parts {
        let (k, val) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
        let err = || format!("bad value for {k}: `{val}`");
        match k {
            "n" => n = Some(val.parse().map_err(|_| err())?),
            "p" => p = Some(val.parse().map_err(|_| err())?),
            "separation" => separation = Some(val.parse().map_err(|_| err())?),
            "seed" => seed = val.parse().map_err(|_| err())?,
            _ => return Err(format!("unknown synthetic parameter `{k}`")),
        }
    }
    Ok(DatasetSource::Synthetic {
        name,
        n: n.ok_or("synthetic dataset needs n")?,
        p: p.ok_or("synthetic dataset needs p")?,
        separation: separation.ok_or("synthetic dataset needs separation")?,
        seed,
    })
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got `{v}`")),
    }
}

/// Parses and validates plan text. Diagnostics carry 1-based line numbers.
pub fn parse_plan(text: &str) -> Result<ExperimentPlan, HarnessError> {
    let mut plan = ExperimentPlan::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let header = lines.by_ref().find(|(_, l)| !l.is_empty());
    match header {
        Some((_, l)) if l == PLAN_HEADER => {}
        Some((line, l)) => {
            return Err(HarnessError::Plan { line, message: format!("expected header `{PLAN_HEADER}`, found `{l}`") });
        }
        None => return Err(HarnessError::Plan { line: 1, message: "empty plan".into() }),
    }
    for (line, l) in lines {
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let fail = |message: String| HarnessError::Plan { line, message };
        let (key, value) = l.split_once('=').ok_or_else(|| fail(format!("expected key = value, got `{l}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !matches!(key, "dataset" | "synthetic") && !seen.insert(key.to_string()) {
            return Err(fail(format!("duplicate key `{key}`")));
        }
        let r: Result<(), String> = (|| {
            match key {
                "dataset" => plan.datasets.push(DatasetSource::File(PathBuf::from(value))),
                "synthetic" => plan.datasets.push(parse_synthetic(value)?),
                "noise_rates" => plan.noise_rates = parse_list(value)?,
                "folds" => plan.folds = value.parse().map_err(|_| format!("bad fold count `{value}`"))?,
                "repeats" => plan.repeats = value.parse().map_err(|_| format!("bad repeat count `{value}`"))?,
                "seed" => plan.seed = value.parse().map_err(|_| format!("bad seed `{value}`"))?,
                "orientation" => plan.orientation = value.parse()?,
                "normalize" => plan.normalize = value.parse()?,
                "models" => {
                    plan.models = value
                        .split(',')
                        .map(|m| m.trim().parse::<ModelFamily>().map_err(|e| e.to_string()))
                        .collect::<Result<_, _>>()?
                }
                "solver" => plan.solver = value.parse::<SolverMode>().map_err(|e| e.to_string())?,
                "grid.c" => plan.grid.c = parse_grid(value)?,
                "grid.c1" => plan.grid.c1 = parse_grid(value)?,
                "grid.c2" => plan.grid.c2 = parse_grid(value)?,
                "grid.c3" => plan.grid.c3 = parse_grid(value)?,
                "time_limit_s" => {
                    plan.time_limit_s = if value == "none" {
                        None
                    } else {
                        Some(value.parse().map_err(|_| format!("bad time limit `{value}`"))?)
                    }
                }
                "warm_start" => plan.warm_start = parse_bool(value)?,
                "workers" => plan.workers = value.parse().map_err(|_| format!("bad worker count `{value}`"))?,
                "label_column" => plan.label_column = value.parse().map_err(|e: crate::data::DataError| e.to_string())?,
                "label_map" => plan.label_map = LabelMap::parse(value).map_err(|e| e.to_string())?,
                _ => return Err(format!("unknown key `{key}`")),
            }
            Ok(())
        })();
        r.map_err(fail)?;
    }
    plan.validate()?;
    Ok(plan)
}

/// Loads every dataset of the plan; relative paths resolve against `base`.
pub fn load_datasets(plan: &ExperimentPlan, base: &Path) -> Result<Vec<Dataset>, HarnessError> {
    plan.datasets
        .iter()
        .map(|src| match src {
            DatasetSource::File(p) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                let opts = LoadOptions {
                    label_column: plan.label_column.clone(),
                    label_map: plan.label_map.clone(),
                    ..LoadOptions::default()
                };
                load_dataset(&path, &opts)
                    .map_err(|source| HarnessError::Dataset { path: path.display().to_string(), source })
            }
            DatasetSource::Synthetic { name, n, p, separation, seed } => {
                let d = two_gaussians(*n, *p, *separation, *seed);
                Ok(Dataset::new(name.clone(), d.features().to_vec(), d.p(), d.labels().to_vec())?)
            }
        })
        .collect()
}
