//! Grouped k-fold cross-validation and the one-shot 50/50 holdout.

use rayon::prelude::*;

use super::report::{AucReport, EvalMode, MetricSummary};
use super::roc::{accuracy, one_vs_all_aucs};
use super::split::{grouped_folds, grouped_split, subject_ids};
use crate::error::Result;
use crate::features::{Diagnosis, EyeFeatures};
use crate::forest::{train_forest, ForestParams};
use crate::seed;

/// Metrics of one train/test round.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub aucs: [f64; 3],
    pub accuracy: f64,
    pub n_test: usize,
}

/// Train on `train`, evaluate on `test`. The forest seed is derived from
/// `params.seed` and the round index.
pub fn evaluate_fold(
    features: &[EyeFeatures],
    train: &[usize],
    test: &[usize],
    params: &ForestParams,
    round: usize,
) -> Result<FoldResult> {
    let train_set: Vec<EyeFeatures> = train.iter().map(|&i| features[i].clone()).collect();
    let fold_params = ForestParams {
        seed: seed::derive_seed(params.seed, "fold", round as u64),
        ..params.clone()
    };
    let model = train_forest(&train_set, &fold_params)?;
    let mut probs = Vec::with_capacity(test.len());
    let mut pred = Vec::with_capacity(test.len());
    let mut truth = Vec::with_capacity(test.len());
    for &i in test {
        let f = &features[i];
        let p = model.predict_proba(f.vector())?;
        pred.push(model.predict_class(f.vector())?);
        probs.push(p);
        truth.push(f.true_class.expect("split checked labels"));
    }
    Ok(FoldResult {
        aucs: one_vs_all_aucs(&probs, &truth)?,
        accuracy: accuracy(&pred, &truth)?,
        n_test: test.len(),
    })
}

fn summarize(
    mode: EvalMode,
    features: &[EyeFeatures],
    params: &ForestParams,
    seed: u64,
    rounds: Vec<FoldResult>,
) -> Result<AucReport> {
    let col = |f: &dyn Fn(&FoldResult) -> f64| MetricSummary::new(rounds.iter().map(f).collect());
    Ok(AucReport {
        mode,
        seed,
        trees: params.n_trees,
        n_eyes: features.len(),
        n_subjects: subject_ids(features).len(),
        fold_sizes: rounds.iter().map(|r| r.n_test).collect(),
        auc_odd: col(&|r| r.aucs[Diagnosis::Odd.index()])?,
        auc_papilledema: col(&|r| r.aucs[Diagnosis::Papilledema.index()])?,
        auc_healthy: col(&|r| r.aucs[Diagnosis::Healthy.index()])?,
        accuracy: col(&|r| r.accuracy)?,
    })
}

/// `k` subject-grouped, stratified folds; each fold is held out once while a
/// forest trains on the rest. Folds run concurrently and are reported in order.
pub fn cross_validate(
    features: &[EyeFeatures],
    k: usize,
    params: &ForestParams,
    seed: u64,
) -> Result<AucReport> {
    params.validate()?;
    let folds = grouped_folds(features, k, seed)?;
    let rounds = (0..k)
        .into_par_iter()
        .map(|i| {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .flat_map(|(_, f)| f.iter().copied())
                .collect();
            let mut train = train;
            train.sort_unstable();
            evaluate_fold(features, &train, &folds[i], params, i)
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(
        EvalMode::CrossValidation { folds: k },
        features,
        params,
        seed,
        rounds,
    )
}

/// One subject-grouped split: train on `train_fraction` of subjects per class,
/// test on the rest.
pub fn holdout(
    features: &[EyeFeatures],
    train_fraction: f64,
    params: &ForestParams,
    seed: u64,
) -> Result<AucReport> {
    params.validate()?;
    let parts = grouped_split(features, &[train_fraction, 1.0 - train_fraction], seed)?;
    let round = evaluate_fold(features, &parts[0], &parts[1], params, 0)?;
    summarize(EvalMode::Holdout, features, params, seed, vec![round])
}
