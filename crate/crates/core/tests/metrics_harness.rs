mod common;

use common::*;
use proptest::prelude::*;
use qadbench_core::data::ToyConfig;
use qadbench_core::harness::{
    mean_auc_by_model, parse_kernel_mode, run_experiment, run_suite, DatasetSource, ModelKind,
    ModelSettings, Overrides,
};
use qadbench_core::kernel::KernelMode;
use qadbench_core::metrics::{roc_auc, threshold_metrics};
use qadbench_core::report::{parse_csv, render, to_csv, to_json, ReportFormat, CSV_HEADER};
use qadbench_core::{ExperimentConfig, ReportRow};
use rand::Rng;

/// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
fn pair_count_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li == 1 && lj == 0 {
                den += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

fn labels_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (4usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![(-3i32..3).prop_map(f64::from), -5.0..5.0f64], n),
            prop::collection::vec(0u8..2, n)
                .prop_filter("both classes", |l| l.contains(&0) && l.contains(&1)),
        )
    })
}

proptest! {
    #[test]
    fn auc_matches_pair_counting((scores, labels) in labels_strategy()) {
        let auc = roc_auc(&scores, &labels).unwrap();
        prop_assert!((auc - pair_count_auc(&scores, &labels)).abs() < 1e-12);
    }

    #[test]
    fn auc_is_invariant_under_increasing_maps((scores, labels) in labels_strategy()) {
        let auc = roc_auc(&scores, &labels).unwrap();
        let mapped: Vec<f64> = scores.iter().map(|s| (0.7 * s).exp() + 3.0).collect();
        prop_assert!((auc - roc_auc(&mapped, &labels).unwrap()).abs() < 1e-12);
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((1.0 - auc - roc_auc(&negated, &labels).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn threshold_metrics_count_strict_exceedance() {
    let scores = [0.1, 0.5, 0.9, 0.5, 0.2, 0.8];
    let labels = [0, 0, 1, 1, 0, 1];
    let m = threshold_metrics(&scores, &labels, 0.5).unwrap();
    assert_eq!(
        (
            m.confusion.tp,
            m.confusion.fp,
            m.confusion.tn,
            m.confusion.fn_
        ),
        (2, 0, 3, 1)
    );
    assert_eq!(m.precision, Some(1.0));
    assert_eq!(m.recall, Some(2.0 / 3.0));
    assert!((m.f1.unwrap() - 0.8).abs() < 1e-12);
    assert!((m.accuracy - 5.0 / 6.0).abs() < 1e-12);
}

#[test]
fn no_positive_predictions_leave_precision_undefined() {
    let scores: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
    let labels: Vec<u8> = (0..50).map(|i| u8::from(i >= 25)).collect();
    let m = threshold_metrics(&scores, &labels, 10.0).unwrap();
    assert_eq!(m.precision, None);
    assert_eq!(m.f1, None);
    assert_eq!(m.recall, Some(0.0));
    assert_eq!(m.accuracy, 0.5);
    assert_eq!(m.auc, Some(1.0));
}

#[test]
fn single_class_has_no_auc() {
    let m = threshold_metrics(&[0.1, 0.2], &[0, 0], 0.15).unwrap();
    assert_eq!(m.auc, None);
    assert_eq!(m.recall, None);
    assert!(roc_auc(&[0.1, 0.2], &[1, 1]).is_err());
}

fn row(dataset: &str, model: &str, auc: Option<f64>) -> ReportRow {
    ReportRow {
        dataset: dataset.into(),
        model: model.into(),
        auc,
        precision: None,
        recall: Some(0.0),
        f1: None,
        accuracy: 0.5,
        nonzero_params: 0,
        total_params: 300,
        tau: 0.125,
        wall_time_seconds: 0.25,
    }
}

#[test]
fn mean_auc_is_exact_on_fixtures() {
    let rows = vec![
        row("a", "qsvr", Some(0.5)),
        row("b", "qsvr", Some(0.75)),
        row("c", "qsvr", Some(1.0)),
        row("a", "cae", Some(0.25)),
        row("b", "cae", None),
        row("c", "cae", Some(0.75)),
    ];
    let means = mean_auc_by_model(&rows);
    assert_eq!(means.len(), 2);
    assert_eq!(means["qsvr"], 0.75);
    assert_eq!(means["cae"], 0.5);
}

#[test]
fn csv_and_json_mark_undefined_values() {
    let rows = vec![row("toy", "qsvr", Some(0.98765432))];
    let csv = to_csv(&rows);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(
        lines.next(),
        Some("toy,qsvr,0.987654,nan,0.000000,nan,0.500000,0,300,0.125000,0.250000")
    );
    assert_eq!(parse_csv(&csv).unwrap()[0].precision, None);

    let json: serde_json::Value = serde_json::from_str(&to_json(&rows)).unwrap();
    let obj = &json[0];
    assert!(obj["precision"].is_null());
    assert!(obj["f1"].is_null());
    assert_eq!(obj["recall"], 0.0);
    assert_eq!(obj["auc"], 0.987654);
    assert!(render(&[], ReportFormat::Csv).is_err());
}

#[test]
fn kernel_mode_strings() {
    assert_eq!(parse_kernel_mode("EXACT", 1).unwrap(), KernelMode::Exact);
    assert!(parse_kernel_mode("shots:abc", 1).is_err());
}

#[test]
fn suite_rows_are_sorted_and_deterministic() {
    let mut r = rng(0);
    let seed = r.random_range(0..1000);
    let sources = [DatasetSource::Toy(ToyConfig {
        seed,
        ..ToyConfig::default()
    })];
    let run = || {
        run_suite(
            &sources,
            &ModelKind::ALL,
            KernelMode::Exact,
            seed,
            Overrides::default(),
        )
        .unwrap()
    };
    let a = run();
    let b = run();
    let names: Vec<&str> = a.iter().map(|r| r.model.as_str()).collect();
    assert_eq!(names, ["cae", "csvr", "qae", "qsvr"]);
    let strip = |rows: &[ReportRow]| {
        rows.iter()
            .map(ReportRow::without_wall_time)
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn overrides_reach_the_models() {
    let source = DatasetSource::Toy(ToyConfig::default());
    let settings = ModelSettings {
        model: ModelKind::Qsvr,
        kernel_mode: KernelMode::Exact,
        seed: 0,
        overrides: Overrides {
            svr_eps: Some(10.0),
            ..Overrides::default()
        },
    };
    let wide = run_experiment(&ExperimentConfig {
        source: source.clone(),
        settings,
    })
    .unwrap();
    assert_eq!(wide.nonzero_params, 0);
    let bad = ModelSettings {
        model: ModelKind::Cae,
        kernel_mode: KernelMode::Exact,
        seed: 0,
        overrides: Overrides {
            lr: Some(-1.0),
            ..Overrides::default()
        },
    };
    let err = run_experiment(&ExperimentConfig {
        source,
        settings: bad,
    })
    .unwrap_err();
    assert!(err.to_string().starts_with("fit:"), "{err}");
}

#[test]
fn missing_file_is_a_load_error() {
    let source = DatasetSource::Csv {
        path: "/nonexistent/file.csv".into(),
        label_column: "label".into(),
    };
    let settings = ModelSettings {
        model: ModelKind::Cae,
        kernel_mode: KernelMode::Exact,
        seed: 0,
        overrides: Overrides::default(),
    };
    let err = run_experiment(&ExperimentConfig { source, settings }).unwrap_err();
    assert!(err.to_string().starts_with("load:"), "{err}");
}
