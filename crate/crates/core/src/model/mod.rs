//! Standardisation, class-weighted logistic regression, the zone baseline and
//! cross-validated evaluation.

mod baseline;
mod cv;
mod logistic;
mod metrics;
mod standardize;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Feature, FeatureVector};

pub use baseline::{grid_cell, GridBaseline, GRID_X, GRID_Y};
pub use cv::{
    class_weights, cross_validate, render_report_table, run_ablation, sample_weights,
    stratified_kfold, write_report_table, CvOptions, EvalReport, FitScope,
};
pub use logistic::{objective_gradient, saga_fit, sigmoid, LogisticModel, SagaOptions};
pub use metrics::{evaluate, mean_std, Metrics};
pub use standardize::Standardizer;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("feature column {0} is constant")]
    ConstantFeature(usize),
    #[error("{folds} folds need at least {folds} samples per class, got {positives} positive / {negatives} negative")]
    ClassTooSmall {
        folds: usize,
        positives: usize,
        negatives: usize,
    },
    #[error("fold {fold}: standardiser statistics include test rows")]
    Leakage { fold: usize },
    #[error("model file: {0}")]
    File(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Baseline,
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "2d3d")]
    TwoDThreeD,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Baseline, FeatureSet::TwoD, FeatureSet::TwoDThreeD];

    /// Model inputs; the baseline uses the start position instead.
    pub fn features(self) -> &'static [Feature] {
        match self {
            FeatureSet::Baseline => &[],
            FeatureSet::TwoD => &Feature::TWO_D,
            FeatureSet::TwoDThreeD => &Feature::SELECTED,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureSet::Baseline => "baseline",
            FeatureSet::TwoD => "2d",
            FeatureSet::TwoDThreeD => "2d3d",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.label() == s)
            .ok_or_else(|| format!("unknown feature set `{s}` (baseline, 2d, 2d3d)"))
    }
}

/// Everything needed to score new dribbles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub feature_set: FeatureSet,
    pub features: Vec<Feature>,
    pub seed: u64,
    pub samples: usize,
    pub standardizer: Option<Standardizer>,
    pub logistic: Option<LogisticModel>,
    pub baseline: Option<GridBaseline>,
}

impl TrainedModel {
    pub fn fit(rows: &[FeatureVector], set: FeatureSet, opts: &CvOptions) -> Result<Self, ModelError> {
        let labels: Vec<bool> = rows.iter().map(|r| r.label).collect();
        let mut m = TrainedModel {
            feature_set: set,
            features: set.features().to_vec(),
            seed: opts.seed,
            samples: rows.len(),
            standardizer: None,
            logistic: None,
            baseline: None,
        };
        if set == FeatureSet::Baseline {
            let starts: Vec<_> = rows.iter().map(|r| r.start).collect();
            m.baseline = Some(GridBaseline::fit(&starts, &labels, opts.pitch));
            return Ok(m);
        }
        let x: Vec<Vec<f64>> = rows.iter().map(|r| r.select(set.features())).collect();
        let std = Standardizer::fit(&x)?;
        let xt = std.transform(&x);
        let saga = SagaOptions {
            seed: opts.seed,
            ..opts.saga(rows.len(), 0)
        };
        m.logistic = Some(saga_fit(&xt, &labels, &sample_weights(&labels)?, &saga)?);
        m.standardizer = Some(std);
        Ok(m)
    }

    pub fn predict(&self, row: &FeatureVector) -> f64 {
        match (&self.baseline, &self.logistic, &self.standardizer) {
            (Some(g), _, _) => g.predict(row.start),
            (None, Some(l), Some(s)) => l.predict_proba(&s.transform_row(&row.select(&self.features))),
            _ => unreachable!("model has neither a baseline nor a logistic part"),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let m: TrainedModel = serde_json::from_str(text).map_err(|e| ModelError::File(e.to_string()))?;
        let ok = match (&m.baseline, &m.logistic, &m.standardizer) {
            (Some(_), None, None) => m.features.is_empty(),
            (None, Some(l), Some(s)) => l.coef.len() == m.features.len() && s.dims() == m.features.len(),
            _ => false,
        };
        if !ok {
            return Err(ModelError::File("inconsistent model parts".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| ModelError::File(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::File(e.to_string()))?;
        TrainedModel::from_json(&text)
    }
}
