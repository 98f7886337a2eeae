//! End-to-end use of the public API: generate, persist, train, reload,
//! predict and export.

use std::fs;

use dbcsp_core::classify::{cross_validate_selected, SelectQRow};
use dbcsp_core::dataio::{
    export_features, generate_synthetic, load_dataset, load_model, save_dataset, save_model,
    SyntheticSpec,
};
use dbcsp_core::{
    compute_filters, predict_pipeline, select_q, train_pipeline, CspParams, CvConfig, DistanceKind,
    DistanceSpec, Error, FeatureKind, FeatureSpec, LabeledDataset, SelectMode, Trial,
};

fn spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        channels: 6,
        samples: 80,
        n1: 14,
        n2: 13,
        seed,
        ..SyntheticSpec::default()
    }
}

#[test]
fn train_save_reload_predict() {
    let dir = tempfile::tempdir().unwrap();
    // One draw, split into a training part and held-out trials that share
    // its mixing matrix.
    let full = generate_synthetic(&SyntheticSpec {
        n1: 24,
        n2: 23,
        ..spec(3)
    })
    .unwrap();
    let part = |k: usize, range: std::ops::Range<usize>| full.class(k)[range].to_vec();
    let data = LabeledDataset::new("C1", part(0, 0..14), "C2", part(1, 0..13)).unwrap();
    let manifest = save_dataset(&data, dir.path()).unwrap();
    let data = load_dataset(&manifest).unwrap();

    let params = CspParams::new(
        2,
        DistanceSpec::new(DistanceKind::Dtw),
        FeatureSpec::default(),
    );
    let (model, report) = train_pipeline(&data, &params, 1, &CvConfig::new(3, 8)).unwrap();
    assert!(report.mean_acc >= 0.9, "{report:?}");
    assert_eq!(model.cv().unwrap().folds, 3);

    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();

    let mut trials = part(0, 14..24);
    trials.extend(part(1, 13..23));
    let targets: Vec<String> = (0..20)
        .map(|i| if i < 10 { "C1" } else { "C2" }.to_string())
        .collect();
    let a = predict_pipeline(&model, &trials, Some(&targets)).unwrap();
    let b = predict_pipeline(&loaded, &trials, Some(&targets)).unwrap();
    assert_eq!(a, b);
    assert!(
        a.accuracy.unwrap() >= 0.9,
        "held-out accuracy {:?}",
        a.accuracy
    );
}

#[test]
fn cross_validation_is_reproducible_and_stratified() {
    let data = generate_synthetic(&spec(5)).unwrap();
    let params = CspParams::new(2, DistanceSpec::default(), FeatureSpec::default());
    let cfg = CvConfig::new(4, 21);
    let a = cross_validate_selected(&data, &params, Some(1), &cfg).unwrap();
    let b = cross_validate_selected(&data, &params, Some(1), &cfg).unwrap();
    assert_eq!(a, b);
    for class in [0..14, 14..27] {
        let mut sizes = [0usize; 4];
        for i in class {
            sizes[a.fold_membership[i]] += 1;
        }
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        assert!(hi - lo <= 1, "{sizes:?}");
    }
}

#[test]
fn select_q_matches_separate_cross_validations() {
    let data = generate_synthetic(&SyntheticSpec {
        variance_ratio: 1.5,
        noise_sd: 1.0,
        ..spec(9)
    })
    .unwrap();
    let features = FeatureSpec::new(vec![FeatureKind::LogVariance, FeatureKind::Max]).unwrap();
    let params = CspParams::new(3, DistanceSpec::default(), features);
    let cfg = CvConfig::new(3, 2);
    let report = select_q(
        &data,
        &[3, 1, 2],
        &params,
        SelectMode::CrossValidation,
        &cfg,
    )
    .unwrap();
    assert_eq!(
        report.rows.iter().map(|r| r.q).collect::<Vec<_>>(),
        vec![1, 2, 3]
    );
    for SelectQRow { q, accuracy, sd } in report.rows {
        let single = CspParams {
            q,
            ..params.clone()
        };
        let cv = cross_validate_selected(&data, &single, Some(q), &cfg).unwrap();
        assert_eq!(accuracy, cv.mean_acc, "q = {q}");
        assert_eq!(sd, Some(cv.sd_acc));
    }
}

#[test]
fn exported_features_match_prediction_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_synthetic(&spec(6)).unwrap();
    let features = FeatureSpec::new(vec![FeatureKind::Variance, FeatureKind::Iqr]).unwrap();
    let filters = compute_filters(&data, 3, &DistanceSpec::default(), 1e-6).unwrap();
    let path = dir.path().join("f.csv");
    let table = export_features(&data, &filters, 2, &features, &path).unwrap();
    assert_eq!(table.columns.len(), 8);
    assert_eq!(table.columns[0], "variance_a1");
    assert_eq!(table.columns[3], "variance_b2");
    assert_eq!(table.rows.len(), 27);

    let mut reader = csv::Reader::from_path(&path).unwrap();
    let header = reader.headers().unwrap().clone();
    assert_eq!(header.len(), 9);
    assert_eq!(&header[8], "label");
    for (record, (row, label)) in reader.records().zip(table.rows.iter().zip(&table.labels)) {
        let record = record.unwrap();
        for (cell, v) in record.iter().zip(row) {
            assert_eq!(cell.parse::<f64>().unwrap(), *v);
        }
        assert_eq!(&record[8], label);
    }
}

#[test]
fn loading_reports_the_broken_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_synthetic(&spec(1)).unwrap();
    let manifest = save_dataset(&data, dir.path()).unwrap();
    let victim = dir.path().join("class2/trial_0004.csv");
    let text = fs::read_to_string(&victim).unwrap();
    fs::write(&victim, text.replacen(',', ",oops,", 1)).unwrap();
    let err = load_dataset(&manifest).unwrap_err();
    assert!(matches!(err, Error::Parse { .. }));
    let msg = err.to_string();
    assert!(msg.contains("trial_0004.csv:1"), "{msg}");
}

#[test]
fn mismatched_trials_are_rejected_at_prediction() {
    let data = generate_synthetic(&spec(2)).unwrap();
    let params = CspParams::new(1, DistanceSpec::default(), FeatureSpec::default());
    let (model, _) = train_pipeline(&data, &params, 1, &CvConfig::new(3, 1)).unwrap();
    let narrow = generate_synthetic(&SyntheticSpec {
        channels: 4,
        ..spec(2)
    })
    .unwrap();
    let trials: Vec<Trial> = narrow.iter().map(|(_, t)| t.clone()).collect();
    assert!(matches!(
        predict_pipeline(&model, &trials, None),
        Err(Error::DimensionMismatch(_))
    ));
    let wrong_labels = vec!["X".to_string(); data.len()];
    let same: Vec<Trial> = data.iter().map(|(_, t)| t.clone()).collect();
    assert!(matches!(
        predict_pipeline(&model, &same, Some(&wrong_labels)),
        Err(Error::LabelMismatch(_))
    ));
}
