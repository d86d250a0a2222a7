use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Logistic regression coefficients in standardised feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub epochs: usize,
    /// Max parameter change over the last epoch.
    pub last_change: f64,
    /// Norm of the full objective gradient at the returned parameters.
    pub grad_norm: f64,
    pub converged: bool,
}

impl LogisticModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SagaOptions {
    pub lambda: f64,
    pub max_epochs: usize,
    pub tol: f64,
    pub seed: u64,
}

fn validate(x: &[Vec<f64>], y: &[bool], w: &[f64]) -> Result<usize, ModelError> {
    if x.is_empty() {
        return Err(ModelError::DegenerateInput("no samples".into()));
    }
    if x.len() != y.len() || x.len() != w.len() {
        return Err(ModelError::DegenerateInput("sample, label and weight counts differ".into()));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d || r.iter().any(|v| !v.is_finite())) {
        return Err(ModelError::DegenerateInput("ragged or non-finite design matrix".into()));
    }
    if w.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(ModelError::DegenerateInput("weights must be positive".into()));
    }
    Ok(d)
}

/// Gradient of the weighted, L2-penalised mean log-loss; the last entry is
/// the intercept.
pub fn objective_gradient(x: &[Vec<f64>], y: &[bool], w: &[f64], lambda: f64, coef: &[f64], intercept: f64) -> Vec<f64> {
    let d = coef.len();
    let n = x.len() as f64;
    let mut g = vec![0.0; d + 1];
    for ((xi, yi), wi) in x.iter().zip(y).zip(w) {
        let z = intercept + coef.iter().zip(xi).map(|(b, v)| b * v).sum::<f64>();
        let r = wi * (sigmoid(z) - f64::from(u8::from(*yi)));
        for j in 0..d {
            g[j] += r * xi[j] / n;
        }
        g[d] += r / n;
    }
    for j in 0..d {
        g[j] += lambda * coef[j];
    }
    g
}

/// SAGA on `(1/N) sum w_i logloss_i + (lambda/2) |beta|^2`, intercept unpenalised.
/// One epoch is `N` uniformly drawn samples.
pub fn saga_fit(x: &[Vec<f64>], y: &[bool], w: &[f64], opts: &SagaOptions) -> Result<LogisticModel, ModelError> {
    let d = validate(x, y, w)?;
    let n = x.len();
    let nf = n as f64;
    let lambda = opts.lambda;
    let target: Vec<f64> = y.iter().map(|v| f64::from(u8::from(*v))).collect();

    // x~ carries an implicit trailing 1 for the intercept
    let lmax = x
        .iter()
        .zip(w)
        .map(|(xi, wi)| wi * (xi.iter().map(|v| v * v).sum::<f64>() + 1.0))
        .fold(0.0, f64::max);
    let step = 1.0 / (3.0 * (0.25 * lmax + lambda));

    let mut theta = vec![0.0; d + 1];
    let margin = |theta: &[f64], xi: &[f64]| theta[d] + theta[..d].iter().zip(xi).map(|(b, v)| b * v).sum::<f64>();
    let mut table: Vec<f64> = (0..n).map(|i| w[i] * (0.5 - target[i])).collect();
    let mut avg = vec![0.0; d + 1];
    for i in 0..n {
        for j in 0..d {
            avg[j] += table[i] * x[i][j] / nf;
        }
        avg[d] += table[i] / nf;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut epochs = 0;
    let mut last_change = f64::INFINITY;
    let mut converged = false;
    let mut start = theta.clone();
    while epochs < opts.max_epochs {
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let xi = &x[i];
            let g_new = w[i] * (sigmoid(margin(&theta, xi)) - target[i]);
            let diff = g_new - table[i];
            for j in 0..d {
                theta[j] -= step * (diff * xi[j] + avg[j] + lambda * theta[j]);
            }
            theta[d] -= step * (diff + avg[d]);
            for j in 0..d {
                avg[j] += diff * xi[j] / nf;
            }
            avg[d] += diff / nf;
            table[i] = g_new;
        }
        epochs += 1;
        last_change = theta
            .iter()
            .zip(&start)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if last_change < opts.tol {
            converged = true;
            break;
        }
        start.clone_from(&theta);
    }
    if !converged {
        log::warn!("SAGA stopped after {epochs} epochs, last change {last_change:e}");
    }
    let coef = theta[..d].to_vec();
    let intercept = theta[d];
    let grad = objective_gradient(x, y, w, lambda, &coef, intercept);
    Ok(LogisticModel {
        coef,
        intercept,
        lambda,
        epochs,
        last_change,
        grad_norm: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand_distr::{Distribution, StandardNormal};

    /// Full-batch Newton iterations on the same objective.
    fn newton_oracle(x: &[Vec<f64>], y: &[bool], w: &[f64], lambda: f64) -> Vec<f64> {
        let d = x[0].len();
        let n = x.len() as f64;
        let mut theta = DVector::<f64>::zeros(d + 1);
        for _ in 0..100 {
            let mut g = DVector::<f64>::zeros(d + 1);
            let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
            for ((xi, yi), wi) in x.iter().zip(y).zip(w) {
                let mut xt = DVector::from_vec(xi.clone());
                xt = xt.push(1.0);
                let p = sigmoid(theta.dot(&xt));
                let t = if *yi { 1.0 } else { 0.0 };
                g += &xt * (wi * (p - t) / n);
                h += &xt * xt.transpose() * (wi * p * (1.0 - p) / n);
            }
            for j in 0..d {
                g[j] += lambda * theta[j];
                h[(j, j)] += lambda;
            }
            let delta = h.cholesky().expect("positive definite").solve(&g);
            theta -= &delta;
            if delta.amax() < 1e-14 {
                break;
            }
        }
        theta.iter().copied().collect()
    }

    fn synthetic(n: usize, beta: &[f64], seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let xi: Vec<f64> = beta.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
            let z: f64 = 0.3 + xi.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
            y.push(rng.random::<f64>() < sigmoid(z));
            x.push(xi);
        }
        (x, y)
    }

    fn opts(lambda: f64) -> SagaOptions {
        SagaOptions { lambda, max_epochs: 1000, tol: 1e-6, seed: 3 }
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(0.5) - 0.6225).abs() < 1e-4);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        let m = LogisticModel {
            coef: vec![1.0],
            intercept: 0.0,
            lambda: 0.0,
            epochs: 0,
            last_change: 0.0,
            grad_norm: 0.0,
            converged: true,
        };
        assert!((m.predict_proba(&[0.5]) - 0.622_459_3).abs() < 1e-6);
        assert!(m.predict_proba(&[2.0]) > m.predict_proba(&[1.0]));
    }

    #[test]
    fn matches_newton_oracle() {
        let (x, y) = synthetic(200, &[1.2, -0.7], 11);
        let w: Vec<f64> = y.iter().map(|v| if *v { 1.3 } else { 0.8 }).collect();
        let lambda = 1.0 / 200.0;
        let m = saga_fit(&x, &y, &w, &opts(lambda)).unwrap();
        let oracle = newton_oracle(&x, &y, &w, lambda);
        assert!(m.converged);
        for (a, b) in m.coef.iter().chain([&m.intercept]).zip(&oracle) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    fn intercept_only(n: usize, every: usize, w: impl Fn(bool) -> f64, tol: f64) -> (f64, f64) {
        let y: Vec<bool> = (0..n).map(|i| i % every == 0).collect();
        let x = vec![Vec::new(); n];
        let w: Vec<f64> = y.iter().map(|v| w(*v)).collect();
        let m = saga_fit(&x, &y, &w, &SagaOptions { tol, ..opts(0.0) }).unwrap();
        let pos: f64 = w.iter().zip(&y).filter(|(_, y)| **y).map(|(w, _)| w).sum();
        let rate = pos / w.iter().sum::<f64>();
        (m.intercept, (rate / (1.0 - rate)).ln())
    }

    #[test]
    fn intercept_only_recovers_weighted_rate() {
        for (n, every) in [(90, 3), (500, 4), (37, 2)] {
            let (b, logit) = intercept_only(n, every, |y| if y { 2.0 } else { 0.7 }, 1e-8);
            assert!((b - logit).abs() < 1e-6, "{b} vs {logit}");
            assert!((sigmoid(b) - sigmoid(logit)).abs() < 1e-6);
            let (b, logit) = intercept_only(n, every, |y| if y { 2.0 } else { 0.7 }, 1e-6);
            assert!((b - logit).abs() < 1e-5);
        }
    }

    #[test]
    fn heavy_shrinkage() {
        let (x, y) = synthetic(200, &[2.0, -1.0, 0.5], 5);
        let w = vec![1.0; 200];
        let m = saga_fit(&x, &y, &w, &opts(1e6)).unwrap();
        assert!(m.coef.iter().all(|b| b.abs() < 1e-3), "{:?}", m.coef);
    }

    #[test]
    fn deterministic_under_seed() {
        let (x, y) = synthetic(100, &[1.0, 1.0], 2);
        let w = vec![1.0; 100];
        assert_eq!(saga_fit(&x, &y, &w, &opts(0.01)).unwrap(), saga_fit(&x, &y, &w, &opts(0.01)).unwrap());
    }

    #[test]
    fn degenerate_inputs() {
        assert!(saga_fit(&[], &[], &[], &opts(0.1)).is_err());
        assert!(saga_fit(&[vec![1.0]], &[true, false], &[1.0], &opts(0.1)).is_err());
        assert!(saga_fit(&[vec![f64::NAN]], &[true], &[1.0], &opts(0.1)).is_err());
        assert!(saga_fit(&[vec![1.0]], &[true], &[0.0], &opts(0.1)).is_err());
    }

    #[test]
    fn epoch_cap_reports_non_convergence() {
        let (x, y) = synthetic(100, &[1.0, -2.0], 9);
        let w = vec![1.0; 100];
        let m = saga_fit(&x, &y, &w, &SagaOptions { max_epochs: 1, ..opts(0.01) }).unwrap();
        assert!(!m.converged);
        assert_eq!(m.epochs, 1);
    }
}
