use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{feature_matrix, lda_fit, lda_predict, CspParams};
use crate::csp::{compute_filters_with, CspFilters, LabeledDataset, Trial};
use crate::error::{Error, Result};

/// k-fold settings. Without a seed, a fresh one is drawn per run and
/// recorded in the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: Option<u64>,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            seed: None,
        }
    }
}

impl CvConfig {
    pub fn new(folds: usize, seed: u64) -> Self {
        CvConfig {
            folds,
            seed: Some(seed),
        }
    }

    fn resolve_seed(&self) -> u64 {
        self.seed.unwrap_or_else(rand::random)
    }
}

/// Outcome of k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    pub mean_acc: f64,
    /// Sample standard deviation across folds.
    pub sd_acc: f64,
    /// Fold index of every trial, class 1 trials first.
    pub fold_membership: Vec<usize>,
    pub seed: u64,
}

/// One row of a dimension-selection report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectQRow {
    pub q: usize,
    pub accuracy: f64,
    /// Spread across folds; absent for a holdout split.
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectQReport {
    pub rows: Vec<SelectQRow>,
    pub seed: u64,
}

/// How [`select_q`] scores each dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectMode {
    /// One stratified split with this fraction of each class for training.
    Holdout {
        train_size: f64,
    },
    CrossValidation,
}

impl Default for SelectMode {
    fn default() -> Self {
        SelectMode::Holdout { train_size: 0.75 }
    }
}

fn seeded_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

fn fold_assignment(n1: usize, n2: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut membership = vec![0; n1 + n2];
    for (slot, &i) in seeded_permutation(&mut rng, n1).iter().enumerate() {
        membership[i] = slot % folds;
    }
    // Class 2 continues the deal where class 1 stopped, so that overall fold
    // sizes are balanced as well.
    for (slot, &i) in seeded_permutation(&mut rng, n2).iter().enumerate() {
        membership[n1 + i] = (n1 + slot) % folds;
    }
    membership
}

/// Stratified fold membership for `n1` class-1 trials followed by `n2`
/// class-2 trials. Each class is shuffled with a ChaCha8 generator seeded
/// from the config and dealt round-robin, so per-class fold sizes differ by
/// at most one.
pub fn stratified_folds(n1: usize, n2: usize, cfg: &CvConfig) -> Result<Vec<usize>> {
    check_folds(n1, n2, cfg.folds)?;
    Ok(fold_assignment(n1, n2, cfg.folds, cfg.resolve_seed()))
}

fn check_folds(n1: usize, n2: usize, folds: usize) -> Result<()> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n1.min(n2) {
        return Err(Error::Config(format!(
            "{folds} folds exceed the smaller class size {}",
            n1.min(n2)
        )));
    }
    Ok(())
}

/// Trials split by a boolean mask, per class.
struct Split<'a> {
    train: [Vec<&'a Trial>; 2],
    test: Vec<(usize, &'a Trial)>,
}

fn split<'a>(data: &'a LabeledDataset, is_test: impl Fn(usize) -> bool) -> Split<'a> {
    let mut train: [Vec<&Trial>; 2] = [Vec::new(), Vec::new()];
    let mut test = Vec::new();
    for (i, (class, trial)) in data.iter().enumerate() {
        if is_test(i) {
            test.push((class, trial));
        } else {
            train[class].push(trial);
        }
    }
    Split { train, test }
}

fn fit_filters(train: &[Vec<&Trial>; 2], q: usize, params: &CspParams) -> Result<CspFilters> {
    let owned: [Vec<Trial>; 2] = [0, 1].map(|k| train[k].iter().map(|&t| t.clone()).collect());
    compute_filters_with(&owned[0], &owned[1], q, &params.distance, &params.filter)
}

/// Accuracy of each `selected_q` on the held-out trials of a split, with
/// filters of dimension `q_fit` fitted on its training trials only.
fn split_accuracies(
    data: &LabeledDataset,
    split: &Split<'_>,
    q_fit: usize,
    selections: &[usize],
    params: &CspParams,
) -> Result<Vec<f64>> {
    let filters = fit_filters(&split.train, q_fit, params)?;
    let labels = data.labels();
    let train_targets: Vec<usize> = [0, 1]
        .iter()
        .flat_map(|&k| std::iter::repeat_n(k, split.train[k].len()))
        .collect();
    let train_trials: Vec<&Trial> = split.train.iter().flatten().copied().collect();
    let test_trials: Vec<&Trial> = split.test.iter().map(|(_, t)| *t).collect();
    selections
        .iter()
        .map(|&s| {
            let selected = filters.select(s)?;
            let x_train = feature_matrix(&train_trials, &selected, &params.features)?;
            let model = lda_fit(&x_train, &train_targets, labels)?;
            let x_test = feature_matrix(&test_trials, &selected, &params.features)?;
            let predictions = lda_predict(&model, &x_test)?;
            let correct = predictions
                .iter()
                .zip(&split.test)
                .filter(|(p, (class, _))| p.class == *class)
                .count();
            Ok(correct as f64 / split.test.len() as f64)
        })
        .collect()
}

/// Filters fitted on everything outside `fold`. Exposed so that callers can
/// check that held-out trials never influence them.
pub fn fold_filters(
    data: &LabeledDataset,
    params: &CspParams,
    membership: &[usize],
    fold: usize,
) -> Result<CspFilters> {
    if membership.len() != data.len() {
        return Err(Error::DimensionMismatch(format!(
            "membership has {} entries for {} trials",
            membership.len(),
            data.len()
        )));
    }
    let s = split(data, |i| membership[i] == fold);
    fit_filters(&s.train, params.q, params)
}

/// Runs every fold and returns `accuracies[fold][selection]`.
fn cv_grid(
    data: &LabeledDataset,
    membership: &[usize],
    folds: usize,
    q_fit: usize,
    selections: &[usize],
    params: &CspParams,
) -> Result<Vec<Vec<f64>>> {
    (0..folds)
        .into_par_iter()
        .map(|fold| {
            let s = split(data, |i| membership[i] == fold);
            split_accuracies(data, &s, q_fit, selections, params)
        })
        .collect()
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

fn check_q(data: &LabeledDataset, q: usize) -> Result<()> {
    if q == 0 || 2 * q > data.channels() {
        return Err(Error::Config(format!(
            "q = {q} needs 1 <= 2q <= {} channels",
            data.channels()
        )));
    }
    Ok(())
}

/// Stratified k-fold accuracy of the full pipeline, using the first and
/// last `selected_q` of `params.q` filters (all of them when `None`).
/// Filters and LDA are refitted on the training part of every fold.
pub fn cross_validate_selected(
    data: &LabeledDataset,
    params: &CspParams,
    selected_q: Option<usize>,
    cfg: &CvConfig,
) -> Result<CvReport> {
    params.validate()?;
    check_q(data, params.q)?;
    let selected = selected_q.unwrap_or(params.q);
    if selected == 0 || selected > params.q {
        return Err(Error::Config(format!(
            "selected q must lie in 1..={}, got {selected}",
            params.q
        )));
    }
    let [n1, n2] = data.counts();
    check_folds(n1, n2, cfg.folds)?;
    let seed = cfg.resolve_seed();
    let membership = fold_assignment(n1, n2, cfg.folds, seed);
    let grid = cv_grid(data, &membership, cfg.folds, params.q, &[selected], params)?;
    let fold_accuracies: Vec<f64> = grid.into_iter().map(|row| row[0]).collect();
    let (mean_acc, sd_acc) = mean_sd(&fold_accuracies);
    Ok(CvReport {
        fold_accuracies,
        mean_acc,
        sd_acc,
        fold_membership: membership,
        seed,
    })
}

/// Stratified k-fold accuracy using all `2q` filters.
pub fn cross_validate(
    data: &LabeledDataset,
    params: &CspParams,
    cfg: &CvConfig,
) -> Result<CvReport> {
    cross_validate_selected(data, params, None, cfg)
}

fn holdout_test_mask(n1: usize, n2: usize, train_size: f64, seed: u64) -> Result<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; n1 + n2];
    for (offset, n) in [(0, n1), (n1, n2)] {
        if n < 3 {
            return Err(Error::InsufficientData(format!(
                "holdout needs at least 3 trials per class, got {n}"
            )));
        }
        // Keep at least two training trials and one test trial per class.
        let n_train = ((train_size * n as f64).round() as usize).clamp(2, n - 1);
        for &i in &seeded_permutation(&mut rng, n)[n_train..] {
            is_test[offset + i] = true;
        }
    }
    Ok(is_test)
}

/// Scores each `q` in `q_grid` by holdout or cross-validated accuracy.
///
/// Filters are fitted once per split at the largest `q` of the grid; the
/// leading and trailing columns for a smaller `q` are exactly the filters a
/// dedicated fit at that `q` would produce.
pub fn select_q(
    data: &LabeledDataset,
    q_grid: &[usize],
    params: &CspParams,
    mode: SelectMode,
    cfg: &CvConfig,
) -> Result<SelectQReport> {
    params.validate()?;
    let mut grid = q_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let q_max = *grid
        .last()
        .ok_or_else(|| Error::Config("the q grid is empty".into()))?;
    for &q in &grid {
        check_q(data, q)?;
    }
    let [n1, n2] = data.counts();
    let seed = cfg.resolve_seed();
    let rows = match mode {
        SelectMode::Holdout { train_size } => {
            if !(train_size > 0.0 && train_size < 1.0) {
                return Err(Error::Config(format!(
                    "train_size must lie in (0, 1), got {train_size}"
                )));
            }
            let is_test = holdout_test_mask(n1, n2, train_size, seed)?;
            let s = split(data, |i| is_test[i]);
            let accs = split_accuracies(data, &s, q_max, &grid, params)?;
            grid.iter()
                .zip(accs)
                .map(|(&q, accuracy)| SelectQRow {
                    q,
                    accuracy,
                    sd: None,
                })
                .collect()
        }
        SelectMode::CrossValidation => {
            check_folds(n1, n2, cfg.folds)?;
            let membership = fold_assignment(n1, n2, cfg.folds, seed);
            let per_fold = cv_grid(data, &membership, cfg.folds, q_max, &grid, params)?;
            grid.iter()
                .enumerate()
                .map(|(j, &q)| {
                    let column: Vec<f64> = per_fold.iter().map(|row| row[j]).collect();
                    let (accuracy, sd) = mean_sd(&column);
                    SelectQRow {
                        q,
                        accuracy,
                        sd: Some(sd),
                    }
                })
                .collect()
        }
    };
    Ok(SelectQReport { rows, seed })
}

/// Feature rows of many trials stacked into one matrix.
pub(crate) fn stack(rows: Vec<Vec<f64>>, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j])
}
