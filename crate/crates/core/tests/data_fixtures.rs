//! Ingestion of files shaped like the two largest benchmark datasets. The
//! values are generated; only the layouts and label encodings match.

use std::fmt::Write as _;
use std::path::PathBuf;

use proptest::prelude::*;
use rand::Rng;
use relabel_core::data::{
    LabelColumn, LabelMap, LoadOptions, NoiseSpec, Scheme, inject_label_noise, load_dataset, make_folds, normalize,
};
use relabel_core::rng::rng_from_seed;
use relabel_core::{Dataset, Label};

fn write_fixture(name: &str, text: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// 690 rows, 14 mixed integer/real attributes, class 0/1 in the last column.
fn australian_like() -> String {
    let mut rng = rng_from_seed(690);
    let mut s = String::new();
    for _ in 0..690 {
        for j in 0..14 {
            if j % 3 == 0 {
                let _ = write!(s, "{} ", rng.random_range(0..10));
            } else {
                let _ = write!(s, "{:.3} ", rng.random::<f64>() * 50.0);
            }
        }
        let _ = writeln!(s, "{}", rng.random_range(0..2));
    }
    s
}

/// 683 rows: sample id, nine attributes in 1..=10, class 2 (benign) or 4.
fn breast_cancer_like() -> String {
    let mut rng = rng_from_seed(683);
    let mut s = String::new();
    for i in 0..683 {
        let _ = write!(s, "{}", 1_000_000 + i * 37);
        for _ in 0..9 {
            let _ = write!(s, ",{}", rng.random_range(1..=10));
        }
        let _ = writeln!(s, ",{}", if rng.random::<f64>() < 0.35 { 4 } else { 2 });
    }
    s
}

#[test]
fn australian_layout() {
    let path = write_fixture("australian.dat", &australian_like());
    let opts = LoadOptions { label_map: LabelMap::parse("0:-1,1:+1").unwrap(), ..LoadOptions::default() };
    let d = load_dataset(&path, &opts).unwrap();
    assert_eq!((d.n(), d.p(), d.id()), (690, 14, "australian"));
    assert!(d.count_positive() > 0 && d.count_positive() < 690);
}

#[test]
fn breast_cancer_layout() {
    let path = write_fixture("breast-cancer.csv", &breast_cancer_like());
    let opts = LoadOptions {
        label_map: LabelMap::parse("2:-1,4:+1").unwrap(),
        skip_columns: vec![0],
        ..LoadOptions::default()
    };
    let d = load_dataset(&path, &opts).unwrap();
    assert_eq!((d.n(), d.p()), (683, 9));
    assert!(d.features().iter().all(|v| (1.0..=10.0).contains(v)));
}

#[test]
fn unmapped_label_names_its_row() {
    let path = write_fixture("bad-label.csv", "1,2,0\n3,4,7\n");
    let opts = LoadOptions { label_map: LabelMap::parse("0:-1,1:+1").unwrap(), ..LoadOptions::default() };
    let err = load_dataset(&path, &opts).unwrap_err().to_string();
    assert!(err.contains('2') && err.contains('7'), "{err}");
}

#[test]
fn first_column_labels_with_header() {
    let path = write_fixture("header.csv", "class,a,b\n1,0.5,2\n0,1.5,3\n");
    let opts = LoadOptions {
        label_column: LabelColumn::First,
        label_map: LabelMap::parse("0:-1,1:+1").unwrap(),
        ..LoadOptions::default()
    };
    let d = load_dataset(&path, &opts).unwrap();
    assert_eq!(d.labels(), &[Label::Positive, Label::Negative]);
    assert_eq!(d.names().unwrap(), &["a".to_string(), "b".to_string()]);
}

fn dataset(seed: u64, n: usize, p: usize) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let x: Vec<f64> = (0..n * p).map(|_| rng.random_range(-100.0..100.0)).collect();
    let y: Vec<Label> = (0..n).map(|i| Label::from_bool(i % 2 == 0)).collect();
    Dataset::new("prop", x, p, y).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn noise_flips_exactly_the_recorded_labels(seed in 0u64..1000, n in 2usize..300, rate in 0.0f64..=0.5) {
        let d = dataset(seed, n, 2);
        let (noisy, record) = inject_label_noise(&d, &NoiseSpec::new(rate, seed).unwrap()).unwrap();
        prop_assert_eq!(record.indices.len(), (rate * n as f64).round() as usize);
        for i in 0..n {
            let changed = noisy.label(i) != d.label(i);
            prop_assert_eq!(changed, record.indices.binary_search(&i).is_ok());
        }
        prop_assert_eq!(noisy.features(), d.features());
    }

    #[test]
    fn folds_partition_each_repeat(seed in 0u64..1000, n in 2usize..200, k in 2usize..=10, repeats in 1usize..4) {
        prop_assume!(k <= n);
        let plan = make_folds(n, k, repeats, seed).unwrap();
        for r in 0..repeats {
            let mut seen = vec![0usize; n];
            let mut sizes = Vec::new();
            for f in 0..k {
                let fold = plan.fold(r, f);
                sizes.push(fold.len());
                for i in fold {
                    seen[i] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn minmax_lands_in_unit_box(seed in 0u64..1000, n in 2usize..50, p in 1usize..6) {
        let d = dataset(seed, n, p);
        let (scaled, _) = normalize(&d, Scheme::MinMax);
        prop_assert!(scaled.features().iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
    }
}
