mod common;

use std::fs;
use std::process::Command;

use common::{dbcsp, dbcsp_expect, path_str, small_dataset};

fn fit_small(dir: &std::path::Path) -> (String, String) {
    let manifest = small_dataset(dir);
    let model = dir.join("model.json");
    dbcsp_expect(
        &[
            "fit",
            "--dataset",
            path_str(&manifest),
            "--model",
            path_str(&model),
            "--q",
            "2",
            "--selected-q",
            "1",
            "--folds",
            "3",
            "--seed",
            "4",
        ],
        0,
    );
    (
        path_str(&manifest).to_string(),
        path_str(&model).to_string(),
    )
}

#[test]
fn info_without_model_mirrors_summary_text() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_dataset(dir.path());
    let text = dbcsp_expect(&["info", "--dataset", path_str(&m)], 0);
    assert!(text.contains("There are 12 instances of class C1 with [5x30] dimension."));
    assert!(text.contains("There are 12 instances of class C2 with [5x30] dimension."));
    assert!(text.contains("The DB-CSP method has used 15 vectors for the projection."));
    assert!(text.contains("EUCL distance has been used."));
    assert!(text.contains("Training has not been performed yet."));
}

#[test]
fn info_with_model_reports_training() {
    let dir = tempfile::tempdir().unwrap();
    let (m, model) = fit_small(dir.path());
    let text = dbcsp_expect(&["info", "--dataset", &m, "--model", &model], 0);
    assert!(text.contains("used 2 vectors for the projection"), "{text}");
    assert!(text.contains("with 3 fold cross validation and using 1 vectors when training."));
}

#[test]
fn info_reports_mixture() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_dataset(dir.path());
    let text = dbcsp_expect(
        &[
            "info",
            "--dataset",
            path_str(&m),
            "--distance",
            "dtw",
            "--mixture",
            "--w",
            "0.25",
        ],
        0,
    );
    assert!(
        text.contains("A mixture of EUCL (weight 0.25) and dtw (weight 0.75)"),
        "{text}"
    );
}

#[test]
fn predict_with_true_targets_prints_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sep");
    dbcsp_expect(
        &[
            "generate",
            "--out",
            path_str(&data),
            "--n1",
            "10",
            "--n2",
            "10",
        ],
        0,
    );
    let manifest = data.join("manifest.json");
    let model = dir.path().join("m.json");
    dbcsp_expect(
        &[
            "fit",
            "--dataset",
            path_str(&manifest),
            "--model",
            path_str(&model),
            "--q",
            "1",
            "--folds",
            "5",
            "--seed",
            "1",
        ],
        0,
    );
    let text = dbcsp_expect(
        &[
            "predict",
            "--model",
            path_str(&model),
            "--dataset",
            path_str(&manifest),
            "--true-targets",
        ],
        0,
    );
    assert!(text.ends_with("accuracy: 1.0\n"), "{text}");
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn predict_single_trials_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (m, model) = fit_small(dir.path());
    let base = std::path::Path::new(&m).parent().unwrap();
    let t1 = base.join("class1/trial_0001.csv");
    let t2 = base.join("class2/trial_0001.csv");
    let report = dir.path().join("pred.json");
    let text = dbcsp_expect(
        &[
            "predict",
            "--model",
            &model,
            "--trial",
            path_str(&t1),
            "--trial",
            path_str(&t2),
            "--out",
            path_str(&report),
        ],
        0,
    );
    assert_eq!(text.lines().count(), 2);
    assert!(!text.contains("accuracy"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["predictions"].as_array().unwrap().len(), 2);
    assert!(json.get("accuracy").is_none());
}

#[test]
fn fit_exports_feature_table() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_dataset(dir.path());
    let model = dir.path().join("m.json");
    let table = dir.path().join("features.csv");
    dbcsp_expect(
        &[
            "fit",
            "--dataset",
            path_str(&manifest),
            "--model",
            path_str(&model),
            "--q",
            "2",
            "--features",
            "log_variance,iqr",
            "--folds",
            "3",
            "--seed",
            "2",
            "--export-features",
            path_str(&table),
        ],
        0,
    );
    let text = fs::read_to_string(table).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "log_variance_a1,log_variance_a2,log_variance_b1,log_variance_b2,iqr_a1,iqr_a2,iqr_b1,iqr_b2,label"
    );
    assert_eq!(lines.count(), 24);
}

#[test]
fn holdout_select_q_is_deterministic_with_seed() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_dataset(dir.path());
    let args = [
        "select-q",
        "--dataset",
        path_str(&m),
        "--grid",
        "2,1",
        "--seed",
        "9",
    ];
    let a = dbcsp_expect(&args, 0);
    assert_eq!(a, dbcsp_expect(&args, 0));
    let rows: Vec<&str> = a.lines().skip(1).take(2).collect();
    assert!(rows[0].trim_start().starts_with("1 ") && rows[1].trim_start().starts_with("2 "));
    assert!(
        rows.iter().all(|r| r.trim_end().ends_with('-')),
        "holdout has no sd: {a}"
    );
}

#[test]
fn unseeded_runs_record_their_seed() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_dataset(dir.path());
    let report = dir.path().join("r.json");
    dbcsp_expect(
        &[
            "evaluate",
            "--dataset",
            path_str(&m),
            "--q",
            "1",
            "--folds",
            "3",
            "--out",
            path_str(&report),
        ],
        0,
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let seed = json["seed"].as_u64().unwrap().to_string();
    let replay = dir.path().join("replay.json");
    dbcsp_expect(
        &[
            "evaluate",
            "--dataset",
            path_str(&m),
            "--q",
            "1",
            "--folds",
            "3",
            "--seed",
            &seed,
            "--out",
            path_str(&replay),
        ],
        0,
    );
    assert_eq!(
        fs::read_to_string(report).unwrap(),
        fs::read_to_string(replay).unwrap()
    );
}

#[test]
fn default_plot_draws_every_filter() {
    let dir = tempfile::tempdir().unwrap();
    let (m, model) = fit_small(dir.path());
    let svg = dir.path().join("p.svg");
    dbcsp_expect(
        &[
            "plot",
            "--dataset",
            &m,
            "--model",
            &model,
            "--class",
            "2",
            "--index",
            "3",
            "--out",
            path_str(&svg),
        ],
        0,
    );
    let text = fs::read_to_string(svg).unwrap();
    roxmltree::Document::parse(&text).unwrap();
    // 5 raw signals plus a1, a2, b1, b2.
    assert_eq!(text.matches("<polyline").count(), 9);
    assert!(text.contains("C2 trial 3"));
}

#[test]
fn boxplot_raw_variances() {
    let dir = tempfile::tempdir().unwrap();
    let (m, model) = fit_small(dir.path());
    let svg = dir.path().join("b.svg");
    dbcsp_expect(
        &[
            "boxplot",
            "--dataset",
            &m,
            "--model",
            &model,
            "--vectors",
            "4",
            "--no-show-log",
            "--out",
            path_str(&svg),
        ],
        0,
    );
    let text = fs::read_to_string(svg).unwrap();
    assert!(text.contains("Variances of the projected signals"));
    assert_eq!(text.matches("class=\"box\"").count(), 4);
}

#[test]
fn argument_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (m, model) = fit_small(dir.path());
    let svg = dir.path().join("x.svg");
    let svg = path_str(&svg);
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "plot",
            "--dataset",
            &m,
            "--model",
            &model,
            "--class",
            "3",
            "--out",
            svg,
        ],
        vec![
            "plot",
            "--dataset",
            &m,
            "--model",
            &model,
            "--index",
            "13",
            "--out",
            svg,
        ],
        vec![
            "plot",
            "--dataset",
            &m,
            "--model",
            &model,
            "--vectors",
            "2:1",
            "--out",
            svg,
        ],
        vec![
            "boxplot",
            "--dataset",
            &m,
            "--model",
            &model,
            "--vectors",
            "0",
            "--out",
            svg,
        ],
        vec!["evaluate", "--dataset", &m, "--w", "1.5", "--mixture"],
        vec!["evaluate", "--dataset", &m, "--folds", "1"],
        vec!["evaluate", "--dataset", &m, "--q", "2", "--selected-q", "3"],
        vec!["evaluate", "--dataset", &m, "--features", "kurtosis"],
        // 2q may not exceed the 5 channels.
        vec!["evaluate", "--dataset", &m, "--q", "3"],
        vec!["select-q", "--dataset", &m, "--grid", "1,x"],
        vec!["predict", "--model", &model],
        vec![
            "predict",
            "--model",
            &model,
            "--trial",
            svg,
            "--true-targets",
        ],
    ];
    for args in cases {
        let out = dbcsp(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn data_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (m, _) = fit_small(dir.path());
    let bad_model = dir.path().join("bad.json");
    fs::write(&bad_model, "{\"format_version\": 1}").unwrap();
    let out = dbcsp(&["info", "--dataset", &m, "--model", path_str(&bad_model)]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:"), "{stderr}");

    let missing = dir.path().join("missing.csv");
    let out = dbcsp(&[
        "predict",
        "--model",
        path_str(&bad_model),
        "--trial",
        path_str(&missing),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_variable_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_dbcsp"))
        .args(["info", "--dataset", "unused"])
        .env("DBCSP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DBCSP_THREADS"));
}

#[test]
fn help_exits_cleanly() {
    let out = dbcsp(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in [
        "generate", "info", "select-q", "fit", "evaluate", "predict", "plot", "boxplot",
    ] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}
