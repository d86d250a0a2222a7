use serde::{Deserialize, Serialize};

use super::ModelError;

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Row indices the statistics were computed from. Not serialised.
    #[serde(skip)]
    pub(crate) fitted_on: Vec<usize>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self, ModelError> {
        let rows: Vec<usize> = (0..x.len()).collect();
        Standardizer::fit_rows(x, &rows)
    }

    /// Fits on the given rows of `x` only.
    pub fn fit_rows(x: &[Vec<f64>], rows: &[usize]) -> Result<Self, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::DegenerateInput("no rows to standardise".into()));
        }
        let d = x[rows[0]].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for &i in rows {
            for (m, v) in mean.iter_mut().zip(&x[i]) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &i in rows {
            for j in 0..d {
                var[j] += (x[i][j] - mean[j]).powi(2);
            }
        }
        let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
        for (j, (s, m)) in std.iter().zip(&mean).enumerate() {
            if !(*s > 1e-12 * m.abs().max(1.0)) {
                return Err(ModelError::ConstantFeature(j));
            }
        }
        Ok(Standardizer {
            mean,
            std,
            fitted_on: rows.to_vec(),
        })
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }

    pub fn fitted_on(&self) -> &[usize] {
        &self.fitted_on
    }
}
