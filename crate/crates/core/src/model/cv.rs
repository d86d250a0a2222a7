use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baseline::GridBaseline;
use super::logistic::{saga_fit, SagaOptions};
use super::metrics::{evaluate, mean_std, Metrics};
use super::standardize::Standardizer;
use super::{FeatureSet, ModelError};
use crate::config::ModelConfig;
use crate::features::FeatureVector;
use crate::pitch::Pitch;

/// `w_c = N / (2 N_c)` for the positive and negative class.
pub fn class_weights(labels: &[bool]) -> Result<(f64, f64), ModelError> {
    let n = labels.len();
    let pos = labels.iter().filter(|y| **y).count();
    let neg = n - pos;
    if pos == 0 || neg == 0 {
        return Err(ModelError::DegenerateInput("both classes must be present".into()));
    }
    Ok((n as f64 / (2.0 * pos as f64), n as f64 / (2.0 * neg as f64)))
}

pub fn sample_weights(labels: &[bool]) -> Result<Vec<f64>, ModelError> {
    let (wp, wn) = class_weights(labels)?;
    Ok(labels.iter().map(|y| if *y { wp } else { wn }).collect())
}

/// Fold index per sample. Each class is shuffled and dealt round-robin, the
/// negatives continuing where the positives stopped.
pub fn stratified_kfold(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>, ModelError> {
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if k < 2 || pos.len() < k || neg.len() < k {
        return Err(ModelError::ClassTooSmall {
            folds: k,
            positives: pos.len(),
            negatives: neg.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![0; labels.len()];
    for (slot, i) in pos.iter().chain(&neg).enumerate() {
        folds[*i] = slot % k;
    }
    Ok(folds)
}

/// Where the standardiser statistics come from. Anything but the training
/// fold is a leak and is caught by the harness.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitScope {
    #[default]
    TrainingFold,
    AllRows,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    /// `None` uses `1 / N_train` in each fold.
    pub lambda: Option<f64>,
    pub max_epochs: usize,
    pub tol: f64,
    pub threshold: f64,
    pub pitch: Pitch,
    #[doc(hidden)]
    pub fit_scope: FitScope,
}

impl CvOptions {
    pub fn from_config(cfg: &ModelConfig, pitch: Pitch) -> Self {
        CvOptions {
            folds: cfg.cv_folds,
            seed: cfg.seed,
            lambda: cfg.lambda,
            max_epochs: cfg.max_epochs,
            tol: cfg.tol,
            threshold: cfg.threshold,
            pitch,
            fit_scope: FitScope::TrainingFold,
        }
    }

    pub fn saga(&self, n_train: usize, fold: usize) -> SagaOptions {
        SagaOptions {
            lambda: self.lambda.unwrap_or(1.0 / n_train as f64),
            max_epochs: self.max_epochs,
            tol: self.tol,
            seed: self.seed.wrapping_add(fold as u64),
        }
    }
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions::from_config(&ModelConfig::default(), Pitch::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: FeatureSet,
    pub samples: usize,
    pub seed: u64,
    pub per_fold: Vec<Metrics>,
    /// Regularisation strength used in each fold; empty for the baseline.
    pub lambdas: Vec<f64>,
    pub mean: Metrics,
    pub std: Metrics,
}

fn summarise(per_fold: &[Metrics]) -> (Metrics, Metrics) {
    let col = |k: usize| mean_std(&per_fold.iter().map(|m| m.as_array()[k]).collect::<Vec<_>>());
    let (p, r, f, b) = (col(0), col(1), col(2), col(3));
    (
        Metrics { precision: p.0, recall: r.0, f1: f.0, brier: b.0 },
        Metrics { precision: p.1, recall: r.1, f1: f.1, brier: b.1 },
    )
}

fn fold_predictions(
    rows: &[FeatureVector],
    x: &[Vec<f64>],
    set: FeatureSet,
    train: &[usize],
    test: &[usize],
    fold: usize,
    opts: &CvOptions,
) -> Result<(Vec<f64>, Option<f64>), ModelError> {
    let y_train: Vec<bool> = train.iter().map(|&i| rows[i].label).collect();
    if set == FeatureSet::Baseline {
        let starts: Vec<_> = train.iter().map(|&i| rows[i].start).collect();
        let g = GridBaseline::fit(&starts, &y_train, opts.pitch);
        return Ok((test.iter().map(|&i| g.predict(rows[i].start)).collect(), None));
    }
    let std = match opts.fit_scope {
        FitScope::TrainingFold => Standardizer::fit_rows(x, train)?,
        FitScope::AllRows => Standardizer::fit(x)?,
    };
    let mut in_test = vec![false; rows.len()];
    test.iter().for_each(|&i| in_test[i] = true);
    if std.fitted_on().iter().any(|&i| in_test[i]) {
        return Err(ModelError::Leakage { fold });
    }
    let xt: Vec<Vec<f64>> = train.iter().map(|&i| std.transform_row(&x[i])).collect();
    let saga = opts.saga(train.len(), fold);
    let model = saga_fit(&xt, &y_train, &sample_weights(&y_train)?, &saga)?;
    let p = test
        .iter()
        .map(|&i| model.predict_proba(&std.transform_row(&x[i])))
        .collect();
    Ok((p, Some(saga.lambda)))
}

/// Trains and scores one configuration on a given fold assignment.
pub fn cross_validate(
    rows: &[FeatureVector],
    set: FeatureSet,
    folds: &[usize],
    opts: &CvOptions,
) -> Result<EvalReport, ModelError> {
    let k = folds.iter().copied().max().map_or(0, |m| m + 1);
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.select(set.features())).collect();
    let results = (0..k)
        .into_par_iter()
        .map(|fold| {
            let train: Vec<usize> = (0..rows.len()).filter(|&i| folds[i] != fold).collect();
            let test: Vec<usize> = (0..rows.len()).filter(|&i| folds[i] == fold).collect();
            let (p, lambda) = fold_predictions(rows, &x, set, &train, &test, fold, opts)?;
            let y: Vec<bool> = test.iter().map(|&i| rows[i].label).collect();
            Ok((evaluate(&y, &p, opts.threshold), lambda))
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let per_fold: Vec<Metrics> = results.iter().map(|r| r.0).collect();
    let (mean, std) = summarise(&per_fold);
    Ok(EvalReport {
        model: set,
        samples: rows.len(),
        seed: opts.seed,
        per_fold,
        lambdas: results.iter().filter_map(|r| r.1).collect(),
        mean,
        std,
    })
}

/// Baseline, 2D and 2D+3D configurations on one shared fold assignment.
pub fn run_ablation(rows: &[FeatureVector], opts: &CvOptions) -> Result<Vec<EvalReport>, ModelError> {
    let labels: Vec<bool> = rows.iter().map(|r| r.label).collect();
    let folds = stratified_kfold(&labels, opts.folds, opts.seed)?;
    FeatureSet::ALL
        .iter()
        .map(|set| cross_validate(rows, *set, &folds, opts))
        .collect()
}

/// One row per configuration: mean and std of every metric.
pub fn write_report_table<W: Write>(w: W, reports: &[EvalReport]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["model".to_string()];
    for m in Metrics::NAMES {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    header.extend(["lambda_mean", "folds", "samples", "seed"].map(String::from));
    out.write_record(&header)?;
    for r in reports {
        let mut rec = vec![r.model.label().to_string()];
        for (m, s) in r.mean.as_array().iter().zip(r.std.as_array()) {
            rec.push(format!("{m:.6}"));
            rec.push(format!("{s:.6}"));
        }
        rec.push(if r.lambdas.is_empty() {
            String::new()
        } else {
            format!("{:.6e}", mean_std(&r.lambdas).0)
        });
        rec.push(r.per_fold.len().to_string());
        rec.push(r.samples.to_string());
        rec.push(r.seed.to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Human-readable version of the report table.
pub fn render_report_table(reports: &[EvalReport]) -> String {
    let mut s = format!("{:<12} {:>17} {:>17} {:>17} {:>17}\n", "model", "precision", "recall", "f1", "brier");
    for r in reports {
        s.push_str(&format!("{:<12}", r.model.label()));
        for (m, sd) in r.mean.as_array().iter().zip(r.std.as_array()) {
            s.push_str(&format!(" {:>8.4} ± {:<6.4}", m, sd));
        }
        s.push('\n');
    }
    s
}
