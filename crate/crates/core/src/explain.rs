//! Shapley attributions of the logistic margin (log-odds), with missing
//! features replaced by their background mean.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;
use crate::model::{LogisticModel, TrainedModel};

pub const MAX_EXACT_FEATURES: usize = 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExplainError {
    #[error("background set is empty")]
    EmptyBackground,
    #[error("exact enumeration supports at most {MAX_EXACT_FEATURES} features, got {0}")]
    TooManyFeatures(usize),
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the zone baseline has no per-feature attributions")]
    NotLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// Expected margin over the background.
    pub base: f64,
    pub margin: f64,
    pub phi: Vec<f64>,
}

pub fn column_means(background: &[Vec<f64>]) -> Result<Vec<f64>, ExplainError> {
    let first = background.first().ok_or(ExplainError::EmptyBackground)?;
    let n = background.len() as f64;
    let mut m = vec![0.0; first.len()];
    for r in background {
        for (a, v) in m.iter_mut().zip(r) {
            *a += v / n;
        }
    }
    Ok(m)
}

/// `phi_j = beta_j (x_j - mean_j)` on standardised inputs.
pub fn linear_shap(model: &LogisticModel, background: &[Vec<f64>], x: &[f64]) -> Result<Attribution, ExplainError> {
    let mean = column_means(background)?;
    if x.len() != model.coef.len() || mean.len() != x.len() {
        return Err(ExplainError::DimensionMismatch { expected: model.coef.len(), got: x.len() });
    }
    let base = background.iter().map(|r| model.margin(r)).sum::<f64>() / background.len() as f64;
    Ok(Attribution {
        base,
        margin: model.margin(x),
        phi: model.coef.iter().zip(x.iter().zip(&mean)).map(|(b, (v, m))| b * (v - m)).collect(),
    })
}

/// Exact Shapley values of `f` by enumerating every coalition. Features
/// outside a coalition take their background mean.
pub fn exact_shapley(
    f: impl Fn(&[f64]) -> f64,
    background: &[Vec<f64>],
    x: &[f64],
) -> Result<Attribution, ExplainError> {
    let mean = column_means(background)?;
    let d = x.len();
    if mean.len() != d {
        return Err(ExplainError::DimensionMismatch { expected: mean.len(), got: d });
    }
    if d > MAX_EXACT_FEATURES {
        return Err(ExplainError::TooManyFeatures(d));
    }
    let coalitions = 1usize << d;
    let mut z = mean.clone();
    let value: Vec<f64> = (0..coalitions)
        .map(|mask| {
            for k in 0..d {
                z[k] = if mask >> k & 1 == 1 { x[k] } else { mean[k] };
            }
            f(&z)
        })
        .collect();
    // weight[s] = s! (d - s - 1)! / d!
    let mut fact = vec![1.0f64; d + 1];
    for i in 1..=d {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight: Vec<f64> = (0..d).map(|s| fact[s] * fact[d - s - 1] / fact[d]).collect();
    let mut phi = vec![0.0; d];
    for mask in 0..coalitions {
        let size = mask.count_ones() as usize;
        for (j, p) in phi.iter_mut().enumerate() {
            if mask >> j & 1 == 0 {
                *p += weight[size] * (value[mask | 1 << j] - value[mask]);
            }
        }
    }
    Ok(Attribution {
        base: value[0],
        margin: value[coalitions - 1],
        phi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    pub mean_abs_phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSummary {
    pub features: Vec<String>,
    /// Descending mean |phi|; ties keep feature order.
    pub ranking: Vec<RankedFeature>,
    pub ids: Vec<String>,
    pub attributions: Vec<Attribution>,
}

pub fn shap_summary(features: &[String], ids: &[String], attributions: Vec<Attribution>) -> ShapSummary {
    let n = attributions.len().max(1) as f64;
    let mut ranking: Vec<RankedFeature> = features
        .iter()
        .enumerate()
        .map(|(j, name)| RankedFeature {
            feature: name.clone(),
            mean_abs_phi: attributions.iter().map(|a| a.phi[j].abs()).sum::<f64>() / n,
        })
        .collect();
    ranking.sort_by(|a, b| b.mean_abs_phi.total_cmp(&a.mean_abs_phi));
    ShapSummary {
        features: features.to_vec(),
        ranking,
        ids: ids.to_vec(),
        attributions,
    }
}

/// Attributions of a trained logistic model for every row, with the rows
/// themselves (after the model's standardisation) as background.
pub fn explain_model(model: &TrainedModel, rows: &[FeatureVector]) -> Result<ShapSummary, ExplainError> {
    let (Some(logistic), Some(std)) = (&model.logistic, &model.standardizer) else {
        return Err(ExplainError::NotLinear);
    };
    let x: Vec<Vec<f64>> = rows.iter().map(|r| std.transform_row(&r.select(&model.features))).collect();
    let attributions = x
        .iter()
        .map(|r| linear_shap(logistic, &x, r))
        .collect::<Result<Vec<_>, _>>()?;
    let names: Vec<String> = model.features.iter().map(|f| f.name().to_string()).collect();
    let ids: Vec<String> = rows.iter().map(|r| r.dribble_id.clone()).collect();
    Ok(shap_summary(&names, &ids, attributions))
}

impl ShapSummary {
    /// Position of `feature` in the ranking, 0 for the most important.
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.ranking.iter().position(|r| r.feature == feature)
    }

    /// Per-dribble values: `dribble_id, base, margin, <one column per feature>`.
    pub fn write_values<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["dribble_id".to_string(), "base".into(), "margin".into()];
        header.extend(self.features.iter().cloned());
        out.write_record(&header)?;
        for (id, a) in self.ids.iter().zip(&self.attributions) {
            let mut rec = vec![id.clone(), a.base.to_string(), a.margin.to_string()];
            rec.extend(a.phi.iter().map(f64::to_string));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// `rank, feature, mean_abs_phi`.
    pub fn write_ranking<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rank", "feature", "mean_abs_phi"])?;
        for (i, r) in self.ranking.iter().enumerate() {
            out.write_record([(i + 1).to_string(), r.feature.clone(), r.mean_abs_phi.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}
