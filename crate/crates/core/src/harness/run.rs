use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentPlan, HarnessError, Orientation, accuracy};
use crate::data::{Dataset, FoldPlan, NoiseSpec, inject_label_noise, make_folds, normalize};
use crate::fit::{FitResult, ModelFamily, ModelSpec, fit_with_warm_start};
use crate::rng::derive_seed;

/// One (cell, model, grid point) outcome. A failed fit has no accuracy and
/// its status carries the error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub dataset: String,
    pub model: ModelFamily,
    pub rate: f64,
    pub repeat: usize,
    pub fold: usize,
    pub grid_index: usize,
    pub params: String,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: Option<f64>,
    pub objective: Option<f64>,
    pub status: String,
    /// Training points the model itself marked as flipped.
    pub model_flips: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub dataset: String,
    pub model: ModelFamily,
    pub rate: f64,
    pub repeat: usize,
    pub fold: usize,
    pub grid_index: usize,
    pub seconds: f64,
}

/// Per-cell check that injected noise never reaches the test portion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAudit {
    pub dataset: String,
    pub rate: f64,
    pub repeat: usize,
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub injected: usize,
    /// Flipped indices found in the test portion; must be zero.
    pub flipped_in_test: usize,
    /// Points shared by the training and test portions; must be zero.
    pub overlap: usize,
    /// Test labels differing from the clean labels; must be zero.
    pub test_labels_changed: usize,
}

impl CellAudit {
    pub fn is_pure(&self) -> bool {
        self.flipped_in_test == 0 && self.overlap == 0 && self.test_labels_changed == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub orientation: Orientation,
    pub folds: usize,
    pub repeats: usize,
    /// Records ordered by dataset, model, rate (plan order), then repeat,
    /// fold and grid index.
    pub records: Vec<Record>,
    pub audits: Vec<CellAudit>,
    pub timings: Vec<Timing>,
}

impl ExperimentReport {
    pub fn is_pure(&self) -> bool {
        self.audits.iter().all(CellAudit::is_pure)
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.accuracy.is_none()).count()
    }
}

struct Cell {
    dataset: usize,
    rate: usize,
    repeat: usize,
    fold: usize,
}

struct CellOutput {
    records: Vec<(usize, Record)>,
    timings: Vec<Timing>,
    audit: CellAudit,
}

pub fn run_experiment(plan: &ExperimentPlan, datasets: &[Dataset]) -> Result<ExperimentReport, HarnessError> {
    run_experiment_with_progress(plan, datasets, &|_, _, _| {})
}

/// Runs the sweep; `progress(audit, done, total)` is called as each cell
/// finishes (from worker threads, in completion order). The report itself is
/// independent of scheduling and worker count.
pub fn run_experiment_with_progress(
    plan: &ExperimentPlan,
    datasets: &[Dataset],
    progress: &(dyn Fn(&CellAudit, usize, usize) + Sync),
) -> Result<ExperimentReport, HarnessError> {
    plan.validate()?;
    if datasets.len() != plan.datasets.len() {
        return Err(HarnessError::InvalidPlan(format!(
            "{} datasets loaded for {} plan entries",
            datasets.len(),
            plan.datasets.len()
        )));
    }
    let mut ids = HashSet::new();
    if let Some(d) = datasets.iter().find(|d| !ids.insert(d.id())) {
        return Err(HarnessError::InvalidPlan(format!("dataset name `{}` used twice", d.id())));
    }
    let folds: Vec<FoldPlan> = datasets
        .iter()
        .enumerate()
        .map(|(di, d)| make_folds(d.n(), plan.folds, plan.repeats, derive_seed(plan.seed, &[di as u64, 0])))
        .collect::<Result<_, _>>()?;

    let mut cells = Vec::new();
    for dataset in 0..datasets.len() {
        for rate in 0..plan.noise_rates.len() {
            for (repeat, fold) in folds[dataset].cells() {
                cells.push(Cell { dataset, rate, repeat, fold });
            }
        }
    }
    let total = cells.len();
    let done = AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| HarnessError::InvalidPlan(format!("worker pool: {e}")))?;
    let outputs: Vec<CellOutput> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| {
                let out = run_cell(plan, &datasets[c.dataset], &folds[c.dataset], c)?;
                progress(&out.audit, done.fetch_add(1, Ordering::SeqCst) + 1, total);
                Ok(out)
            })
            .collect::<Result<_, HarnessError>>()
    })?;

    // Cells are enumerated dataset-major then rate; sorting by model position
    // yields dataset, model, rate, repeat, fold, grid order.
    let mut keyed = Vec::new();
    let mut timings = Vec::new();
    let mut audits = Vec::new();
    for (c, out) in cells.iter().zip(outputs) {
        for (mi, rec) in out.records {
            keyed.push(((c.dataset, mi, c.rate, c.repeat, c.fold, rec.grid_index), rec));
        }
        timings.extend(out.timings);
        audits.push(out.audit);
    }
    keyed.sort_by_key(|(k, _)| *k);
    Ok(ExperimentReport {
        orientation: plan.orientation,
        folds: plan.folds,
        repeats: plan.repeats,
        records: keyed.into_iter().map(|(_, r)| r).collect(),
        audits,
        timings,
    })
}

/// Models in training order: an l2 cluster model follows the l1 one so it
/// can be warm-started from it. Paired with their plan positions.
fn training_order(models: &[ModelFamily]) -> Vec<(usize, ModelFamily)> {
    let mut order: Vec<(usize, ModelFamily)> = models.iter().copied().enumerate().collect();
    order.sort_by_key(|&(i, m)| (m == ModelFamily::ClusterL2 && models.contains(&ModelFamily::ClusterL1), i));
    order
}

fn run_cell(plan: &ExperimentPlan, d: &Dataset, folds: &FoldPlan, c: &Cell) -> Result<CellOutput, HarnessError> {
    let (train_idx, test_idx) = match plan.orientation {
        Orientation::Paper => (folds.fold(c.repeat, c.fold), folds.complement(c.repeat, c.fold)),
        Orientation::Conventional => (folds.complement(c.repeat, c.fold), folds.fold(c.repeat, c.fold)),
    };
    let rate = plan.noise_rates[c.rate];
    let clean_train = d.subset(&train_idx)?;
    let noise = NoiseSpec::new(rate, derive_seed(plan.seed, &[c.dataset as u64, 1, c.rate as u64, c.repeat as u64, c.fold as u64]))?;
    let (noisy_train, flips) = inject_label_noise(&clean_train, &noise)?;
    let test = d.subset(&test_idx)?;

    let test_set: HashSet<usize> = test_idx.iter().copied().collect();
    let audit = CellAudit {
        dataset: d.id().to_string(),
        rate,
        repeat: c.repeat,
        fold: c.fold,
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        injected: flips.indices.len(),
        flipped_in_test: flips.indices.iter().filter(|&&i| test_set.contains(&train_idx[i])).count(),
        overlap: train_idx.iter().filter(|i| test_set.contains(i)).count(),
        test_labels_changed: test_idx.iter().zip(test.labels()).filter(|(i, l)| d.label(**i) != **l).count(),
    };

    let (train, params) = normalize(&noisy_train, plan.normalize);
    let mut records = Vec::new();
    let mut timings = Vec::new();
    let mut l1_fits: Vec<Option<FitResult>> = Vec::new();
    for (mi, model) in training_order(&plan.models) {
        for (gi, (c1, c2, c3)) in plan.grid.cells(model).into_iter().enumerate() {
            let mut spec = ModelSpec::new(model).with_params(c1, c2, c3);
            spec.solver = plan.solver;
            spec.time_limit_s = plan.time_limit_s;
            let warm = match model {
                ModelFamily::ClusterL2 if plan.warm_start => l1_fits.get(gi).and_then(Option::as_ref),
                _ => None,
            };
            let start = Instant::now();
            let fitted = fit_with_warm_start(&train, &spec, params.clone(), warm);
            let seconds = start.elapsed().as_secs_f64();
            let mut rec = Record {
                dataset: d.id().to_string(),
                model,
                rate,
                repeat: c.repeat,
                fold: c.fold,
                grid_index: gi,
                params: spec.describe_params(),
                n_train: train.n(),
                n_test: test.n(),
                accuracy: None,
                objective: None,
                status: String::new(),
                model_flips: 0,
            };
            match fitted.map_err(|e| e.to_string()).and_then(|f| {
                let pred = f.predict(&test).map_err(|e| e.to_string())?;
                let acc = accuracy(&pred, test.labels()).map_err(|e| e.to_string())?;
                Ok((f, acc))
            }) {
                Ok((f, acc)) => {
                    rec.accuracy = Some(acc);
                    rec.objective = Some(f.objective);
                    rec.status = serde_json::to_value(f.status)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default();
                    rec.model_flips = f.flips.len();
                    if model == ModelFamily::ClusterL1 {
                        l1_fits.push(Some(f));
                    }
                }
                Err(e) => {
                    rec.status = format!("error: {e}");
                    if model == ModelFamily::ClusterL1 {
                        l1_fits.push(None);
                    }
                }
            }
            timings.push(Timing {
                dataset: rec.dataset.clone(),
                model,
                rate,
                repeat: c.repeat,
                fold: c.fold,
                grid_index: gi,
                seconds,
            });
            records.push((mi, rec));
        }
    }
    Ok(CellOutput { records, timings, audit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{DatasetSource, GridSpec, load_datasets};

    fn small_plan() -> ExperimentPlan {
        ExperimentPlan {
            datasets: vec![DatasetSource::Synthetic { name: "blobs".into(), n: 40, p: 2, separation: 5.0, seed: 2 }],
            noise_rates: vec![0.0, 0.3],
            folds: 2,
            repeats: 2,
            models: vec![ModelFamily::ClusterL2, ModelFamily::Svm, ModelFamily::ClusterL1],
            grid: GridSpec { c: vec![0.1, 10.0], c1: vec![1.0], c2: vec![1.0], c3: vec![0.1] },
            time_limit_s: None,
            ..ExperimentPlan::default()
        }
    }

    #[test]
    fn l2_trains_after_l1() {
        let plan = small_plan();
        let order: Vec<ModelFamily> = training_order(&plan.models).into_iter().map(|(_, m)| m).collect();
        assert_eq!(order, vec![ModelFamily::Svm, ModelFamily::ClusterL1, ModelFamily::ClusterL2]);
    }

    #[test]
    fn sweep_is_complete_pure_and_worker_independent() {
        let mut plan = small_plan();
        let data = load_datasets(&plan, std::path::Path::new(".")).unwrap();
        let a = run_experiment(&plan, &data).unwrap();
        // 2 rates × 2 repeats × 2 folds, 2 + 1 + 1 grid points.
        assert_eq!(a.records.len(), 8 * 4);
        assert_eq!(a.audits.len(), 8);
        assert!(a.is_pure());
        assert_eq!(a.failures(), 0);
        // Plan order is preserved in the record order.
        assert_eq!(a.records[0].model, ModelFamily::ClusterL2);
        assert!(a.audits.iter().filter(|x| x.rate == 0.3).all(|x| x.injected == 6));
        plan.workers = 2;
        let b = run_experiment(&plan, &data).unwrap();
        assert_eq!(a.records, b.records);
    }
}
