use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use dbcsp_core::classify::{cross_validate_selected, feature_matrix, CvSummary};
use dbcsp_core::csp::{
    project, standardize_trial, FeatureKind, FeatureSpec, LabeledDataset, Trial,
};
use dbcsp_core::dataio::{
    export_features, generate_synthetic, load_dataset, load_model, read_trial_csv, save_dataset,
    save_model, SyntheticSpec,
};
use dbcsp_core::distances::{DistanceKind, DistanceSpec};
use dbcsp_core::{
    predict_pipeline, select_q, train_pipeline, CspParams, CspPipelineModel, CvConfig, SelectMode,
};

use crate::args::{
    BoxplotArgs, Command, CspArgs, CvArgs, EvaluateArgs, FitArgs, GenerateArgs, InfoArgs, PlotArgs,
    PredictArgs, SelectQArgs,
};
use crate::svg::{self, BoxGroup, BoxStats, LinePanel, Series};
use crate::CliError;

type CmdResult = Result<(), CliError>;

pub fn dispatch(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Generate(a) => generate(&a, out),
        Command::Info(a) => info(&a, out),
        Command::SelectQ(a) => select_q_cmd(&a, out),
        Command::Fit(a) => fit(&a, out),
        Command::Evaluate(a) => evaluate(&a, out),
        Command::Predict(a) => predict(&a, out),
        Command::Plot(a) => plot(&a, out),
        Command::Boxplot(a) => boxplot(&a, out),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn write_report(path: Option<&Path>, report: &impl Serialize) -> CmdResult {
    if let Some(path) = path {
        let text = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
        fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn params(csp: &CspArgs) -> Result<CspParams, CliError> {
    if csp.q == 0 {
        return Err(usage("--q must be at least 1"));
    }
    if !(csp.eig_tol > 0.0 && csp.eig_tol.is_finite()) {
        return Err(usage(format!(
            "--eig-tol must be positive, got {}",
            csp.eig_tol
        )));
    }
    Ok(CspParams::new(csp.q, csp.distance_spec()?, csp.feature_spec()?).with_eig_tol(csp.eig_tol))
}

fn cv_config(cv: &CvArgs) -> Result<CvConfig, CliError> {
    if cv.folds < 2 {
        return Err(usage(format!(
            "--folds must be at least 2, got {}",
            cv.folds
        )));
    }
    Ok(CvConfig {
        folds: cv.folds,
        seed: cv.seed,
    })
}

fn distance_phrase(d: &DistanceSpec) -> String {
    if d.mixture {
        format!(
            "A mixture of EUCL (weight {}) and {} (weight {}) distances has been used.",
            d.w,
            d.kind,
            1.0 - d.w
        )
    } else {
        format!("{} distance has been used.", d.kind)
    }
}

/// Console rendering of an accuracy: at most 7 decimals, trailing zeros dropped.
fn fmt_acc(x: f64) -> String {
    let s = format!("{x:.7}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn generate(a: &GenerateArgs, out: &mut dyn Write) -> CmdResult {
    let labels: Vec<&str> = a.labels.split(',').map(str::trim).collect();
    let [l1, l2] = labels[..] else {
        return Err(usage(format!(
            "--labels needs two comma-separated names, got '{}'",
            a.labels
        )));
    };
    let spec = SyntheticSpec {
        channels: a.channels,
        samples: a.samples,
        n1: a.n1,
        n2: a.n2,
        variance_ratio: a.variance_ratio,
        noise_sd: a.noise_sd,
        seed: a.seed,
        labels: [l1.to_string(), l2.to_string()],
    };
    let data = generate_synthetic(&spec)?;
    let manifest = save_dataset(&data, &a.out)?;
    writeln!(
        out,
        "Wrote {} + {} trials of [{}x{}] to {}",
        a.n1,
        a.n2,
        a.channels,
        a.samples,
        manifest.display()
    )?;
    Ok(())
}

#[derive(Serialize)]
struct ClassInfo {
    label: String,
    instances: usize,
    channels: usize,
    /// Samples per trial, or `None` when trials differ in length.
    samples: Option<usize>,
}

#[derive(Serialize)]
struct TrainingInfo {
    selected_q: usize,
    features: FeatureSpec,
    cv: Option<CvSummary>,
}

#[derive(Serialize)]
struct InfoReport {
    classes: Vec<ClassInfo>,
    q: usize,
    distance: DistanceSpec,
    training: Option<TrainingInfo>,
}

fn class_info(data: &LabeledDataset, k: usize) -> ClassInfo {
    let trials = data.class(k);
    let t = trials[0].samples();
    ClassInfo {
        label: data.label(k).to_string(),
        instances: trials.len(),
        channels: data.channels(),
        samples: trials.iter().all(|x| x.samples() == t).then_some(t),
    }
}

fn info(a: &InfoArgs, out: &mut dyn Write) -> CmdResult {
    let data = load_dataset(&a.dataset)?;
    let model = a.model.as_deref().map(load_model).transpose()?;
    if let Some(m) = &model {
        check_compatible(m, &data)?;
    }
    let (q, distance) = match &model {
        Some(m) => (m.filters().q(), m.filters().distance().clone()),
        None => {
            let kind: DistanceKind = a.distance.parse()?;
            let spec = DistanceSpec {
                kind,
                mixture: a.mixture,
                w: a.w,
            };
            spec.validate()?;
            (a.q, spec)
        }
    };
    let classes: Vec<ClassInfo> = (0..2).map(|k| class_info(&data, k)).collect();
    for c in &classes {
        let samples = c.samples.map_or("variable".to_string(), |t| t.to_string());
        writeln!(
            out,
            "There are {} instances of class {} with [{}x{}] dimension.",
            c.instances, c.label, c.channels, samples
        )?;
    }
    writeln!(
        out,
        "The DB-CSP method has used {q} vectors for the projection."
    )?;
    writeln!(out, "{}", distance_phrase(&distance))?;
    let training = model.as_ref().map(|m| TrainingInfo {
        selected_q: m.selected_q(),
        features: m.feature_spec().clone(),
        cv: m.cv().copied(),
    });
    match &training {
        None => writeln!(out, "Training has not been performed yet.")?,
        Some(TrainingInfo { selected_q, cv: Some(cv), .. }) => writeln!(
            out,
            "An accuracy of {} has been obtained with {} fold cross validation and using {} vectors when training.",
            fmt_acc(cv.mean_acc),
            cv.folds,
            selected_q
        )?,
        Some(TrainingInfo { selected_q, cv: None, .. }) => {
            writeln!(out, "Training used {selected_q} vectors.")?
        }
    }
    write_report(
        a.out.as_deref(),
        &InfoReport {
            classes,
            q,
            distance,
            training,
        },
    )
}

fn parse_grid(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<usize>()
                .ok()
                .filter(|q| *q > 0)
                .ok_or_else(|| usage(format!("--grid entry '{p}' is not a positive integer")))
        })
        .collect()
}

#[derive(Serialize)]
struct SelectQJson<'a> {
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    train_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    folds: Option<usize>,
    distance: &'a DistanceSpec,
    features: &'a FeatureSpec,
    seed: u64,
    rows: &'a [dbcsp_core::classify::SelectQRow],
}

fn select_q_cmd(a: &SelectQArgs, out: &mut dyn Write) -> CmdResult {
    let grid = parse_grid(&a.grid)?;
    let mut p = params(&a.csp)?;
    p.q = grid.iter().copied().max().unwrap_or(p.q);
    let cfg = cv_config(&a.cv_args)?;
    let mode = if a.cv {
        SelectMode::CrossValidation
    } else {
        SelectMode::Holdout {
            train_size: a.train_size,
        }
    };
    let data = load_dataset(&a.dataset)?;
    let report = select_q(&data, &grid, &p, mode, &cfg)?;
    writeln!(out, "{:>4}  {:>9}  {:>9}", "q", "accuracy", "sd")?;
    for row in &report.rows {
        let sd = row.sd.map_or("-".to_string(), |s| format!("{s:.6}"));
        writeln!(out, "{:>4}  {:>9.6}  {:>9}", row.q, row.accuracy, sd)?;
    }
    writeln!(out, "seed: {}", report.seed)?;
    write_report(
        a.out.as_deref(),
        &SelectQJson {
            mode: if a.cv { "cross_validation" } else { "holdout" },
            train_size: (!a.cv).then_some(a.train_size),
            folds: a.cv.then_some(cfg.folds),
            distance: &p.distance,
            features: &p.features,
            seed: report.seed,
            rows: &report.rows,
        },
    )
}

#[derive(Serialize)]
struct CvJson<'a> {
    q: usize,
    selected_q: usize,
    distance: &'a DistanceSpec,
    features: &'a FeatureSpec,
    folds: usize,
    seed: u64,
    mean_acc: f64,
    sd_acc: f64,
    fold_accuracies: &'a [f64],
    fold_membership: &'a [usize],
}

fn print_cv(out: &mut dyn Write, r: &dbcsp_core::CvReport, folds: usize, s: usize) -> CmdResult {
    for (i, acc) in r.fold_accuracies.iter().enumerate() {
        writeln!(out, "fold {:>2}: {acc:.6}", i + 1)?;
    }
    writeln!(
        out,
        "An accuracy of {} (sd {}) has been obtained with {folds} fold cross validation and using {s} vectors.",
        fmt_acc(r.mean_acc),
        fmt_acc(r.sd_acc)
    )?;
    writeln!(out, "seed: {}", r.seed)?;
    Ok(())
}

fn resolve_selected(selected: Option<usize>, q: usize) -> Result<usize, CliError> {
    let s = selected.unwrap_or(q);
    if s == 0 || s > q {
        return Err(usage(format!("--selected-q must lie in 1..={q}, got {s}")));
    }
    Ok(s)
}

fn fit(a: &FitArgs, out: &mut dyn Write) -> CmdResult {
    let p = params(&a.csp)?;
    let cfg = cv_config(&a.cv_args)?;
    let s = resolve_selected(a.selected_q, p.q)?;
    let data = load_dataset(&a.dataset)?;
    let (model, report) = train_pipeline(&data, &p, s, &cfg)?;
    save_model(&model, &a.model)?;
    print_cv(out, &report, cfg.folds, s)?;
    writeln!(out, "Model written to {}", a.model.display())?;
    if let Some(path) = &a.export_features {
        let table = export_features(&data, model.filters(), s, &p.features, path)?;
        writeln!(
            out,
            "Features ({} columns) written to {}",
            table.columns.len(),
            path.display()
        )?;
    }
    write_report(
        a.out.as_deref(),
        &CvJson {
            q: p.q,
            selected_q: s,
            distance: &p.distance,
            features: &p.features,
            folds: cfg.folds,
            seed: report.seed,
            mean_acc: report.mean_acc,
            sd_acc: report.sd_acc,
            fold_accuracies: &report.fold_accuracies,
            fold_membership: &report.fold_membership,
        },
    )
}

fn evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> CmdResult {
    let p = params(&a.csp)?;
    let cfg = cv_config(&a.cv_args)?;
    let s = resolve_selected(a.selected_q, p.q)?;
    let data = load_dataset(&a.dataset)?;
    let report = cross_validate_selected(&data, &p, Some(s), &cfg)?;
    print_cv(out, &report, cfg.folds, s)?;
    write_report(
        a.out.as_deref(),
        &CvJson {
            q: p.q,
            selected_q: s,
            distance: &p.distance,
            features: &p.features,
            folds: cfg.folds,
            seed: report.seed,
            mean_acc: report.mean_acc,
            sd_acc: report.sd_acc,
            fold_accuracies: &report.fold_accuracies,
            fold_membership: &report.fold_membership,
        },
    )
}

fn check_compatible(m: &CspPipelineModel, data: &LabeledDataset) -> CmdResult {
    if m.channels() != data.channels() {
        return Err(CliError::Runtime(format!(
            "the model expects {} signals per trial, the dataset has {}",
            m.channels(),
            data.channels()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct PredictJson<'a> {
    predictions: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
}

fn predict(a: &PredictArgs, out: &mut dyn Write) -> CmdResult {
    if a.true_targets && a.dataset.is_none() {
        return Err(usage("--true-targets needs --dataset to know the classes"));
    }
    let model = load_model(&a.model)?;
    let (trials, targets): (Vec<Trial>, Option<Vec<String>>) = match &a.dataset {
        Some(path) => {
            let data = load_dataset(path)?;
            let targets = data
                .iter()
                .map(|(k, _)| data.label(k).to_string())
                .collect();
            let trials = data.iter().map(|(_, t)| t.clone()).collect();
            (trials, a.true_targets.then_some(targets))
        }
        None => {
            let trials = a
                .trial
                .iter()
                .map(|p| read_trial_csv(p))
                .collect::<dbcsp_core::Result<Vec<_>>>()?;
            (trials, None)
        }
    };
    let report = predict_pipeline(&model, &trials, targets.as_deref())?;
    for (i, label) in report.labels.iter().enumerate() {
        writeln!(out, "{}\t{label}", i + 1)?;
    }
    if let Some(acc) = report.accuracy {
        writeln!(out, "accuracy: {acc:?}")?;
    }
    write_report(
        a.out.as_deref(),
        &PredictJson {
            predictions: &report.labels,
            accuracy: report.accuracy,
        },
    )
}

fn pick_trial(data: &LabeledDataset, class: usize, index: usize) -> Result<&Trial, CliError> {
    if !(1..=2).contains(&class) {
        return Err(usage(format!("--class must be 1 or 2, got {class}")));
    }
    let trials = data.class(class - 1);
    if index == 0 || index > trials.len() {
        return Err(usage(format!(
            "--index must lie in 1..={} for class {}, got {index}",
            trials.len(),
            data.label(class - 1)
        )));
    }
    Ok(&trials[index - 1])
}

fn plot(a: &PlotArgs, out: &mut dyn Write) -> CmdResult {
    let (before, after) = (a.before(), a.after());
    if !before && !after {
        return Err(usage("nothing to draw: enable --before or --after"));
    }
    let model = load_model(&a.model)?;
    let q = model.filters().q();
    let selectors = match &a.vectors {
        Some(v) => svg::parse_vectors(v)?,
        None => (1..=2 * q).collect(),
    };
    let cols = svg::resolve_vectors(&selectors, q, a.pairs())?;
    let data = load_dataset(&a.dataset)?;
    check_compatible(&model, &data)?;
    let trial = pick_trial(&data, a.class, a.index)?;
    let title = format!("{} trial {}", data.label(a.class - 1), a.index);
    let mut panels = Vec::new();
    if before {
        panels.push(LinePanel {
            id: "before".into(),
            title: format!("{title}: original signals"),
            series: (0..trial.channels())
                .map(|i| Series {
                    name: format!("signal {}", i + 1),
                    values: trial.row(i),
                    dashed: false,
                })
                .collect(),
            legend: a.legend,
        });
    }
    if after {
        let projected = project(&standardize_trial(trial)?, model.filters())?;
        panels.push(LinePanel {
            id: "after".into(),
            title: format!("{title}: projected signals"),
            series: cols
                .iter()
                .map(|&k| Series {
                    name: model.filters().column_label(k),
                    values: projected.row(k),
                    dashed: k >= q,
                })
                .collect(),
            legend: a.legend,
        });
    }
    write_file(&a.out, &svg::line_panels(&panels))?;
    writeln!(out, "Plot written to {}", a.out.display())?;
    Ok(())
}

fn boxplot(a: &BoxplotArgs, out: &mut dyn Write) -> CmdResult {
    let model = load_model(&a.model)?;
    let q = model.filters().q();
    let cols = svg::resolve_vectors(&svg::parse_vectors(&a.vectors)?, q, a.pairs())?;
    let data = load_dataset(&a.dataset)?;
    check_compatible(&model, &data)?;
    let kind = if a.show_log() {
        FeatureKind::LogVariance
    } else {
        FeatureKind::Variance
    };
    let spec = FeatureSpec::new(vec![kind])?;
    let mut groups = Vec::new();
    let per_class = (0..2)
        .map(|k| {
            let trials: Vec<&Trial> = data.class(k).iter().collect();
            feature_matrix(&trials, model.filters(), &spec)
        })
        .collect::<dbcsp_core::Result<Vec<_>>>()?;
    for &col in &cols {
        for (k, x) in per_class.iter().enumerate() {
            let values: Vec<f64> = x.column(col).iter().copied().collect();
            groups.push(BoxGroup {
                vector: model.filters().column_label(col),
                class: data.label(k).to_string(),
                class_index: k,
                stats: BoxStats::from_values(&values).expect("classes are non-empty"),
            });
        }
    }
    let (title, y_label) = if a.show_log() {
        ("Log-variances of the projected signals", "log variance")
    } else {
        ("Variances of the projected signals", "variance")
    };
    write_file(&a.out, &svg::boxplot(title, y_label, &groups))?;
    writeln!(out, "Boxplot written to {}", a.out.display())?;
    Ok(())
}
