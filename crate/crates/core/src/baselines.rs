//! Reference forecasters: moving average, simple exponential smoothing,
//! least-squares window regression, and a reconstruction of the earlier
//! visibility-graph + random-walk-with-restart forecaster.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, DvsError, Result};
use crate::series::WindowSet;
use crate::visibility::{visibility_adjacency, AdjacencyMatrix};

/// Mean of the last `k` values.
pub fn sma_forecast(window: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > window.len() {
        return Err(DvsError::KTooLarge {
            k,
            len: window.len(),
        });
    }
    let tail = &window[window.len() - k..];
    Ok(tail.iter().sum::<f64>() / k as f64)
}

/// Final level of `l_t = alpha * v_t + (1 - alpha) * l_{t-1}`, `l_1 = v_1`.
pub fn ses_forecast(window: &[f64], alpha: f64) -> Result<f64> {
    let (&first, rest) = window
        .split_first()
        .ok_or(DvsError::TooShort { needed: 1, got: 0 })?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(DvsError::InvalidConfig(vec![format!(
            "alpha must lie in (0, 1] (got {alpha})"
        )]));
    }
    if alpha == 1.0 {
        return Ok(*rest.last().unwrap_or(&first));
    }
    Ok(rest
        .iter()
        .fold(first, |level, &v| level + alpha * (v - level)))
}

/// Grid search over `alpha in {0.01, ..., 0.99}` minimizing one-step squared
/// error on the training windows.
pub fn fit_ses_alpha(train: &WindowSet) -> Result<f64> {
    if train.is_empty() {
        return Err(DvsError::TooShort { needed: 1, got: 0 });
    }
    let mut best = (f64::INFINITY, 0.01);
    for step in 1..=99 {
        let alpha = step as f64 / 100.0;
        let mut sse = 0.0;
        for w in &train.windows {
            let e = ses_forecast(&w.input, alpha)? - w.target;
            sse += e * e;
        }
        if sse < best.0 {
            best = (sse, alpha);
        }
    }
    Ok(best.1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearWindowModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearWindowModel {
    pub fn predict(&self, window: &[f64]) -> Result<f64> {
        if window.len() != self.weights.len() {
            return Err(DvsError::DimensionMismatch {
                expected: self.weights.len(),
                got: window.len(),
            });
        }
        Ok(self.bias
            + self
                .weights
                .iter()
                .zip(window)
                .map(|(w, x)| w * x)
                .sum::<f64>())
    }
}

const RIDGE_LAMBDA: f64 = 1e-8;
/// Pivot ratio below which the Gram matrix is treated as rank deficient.
const RANK_TOL: f64 = 1e-12;

/// Ordinary least squares on centered data (the intercept is never
/// penalized). Falls back to ridge with `lambda = 1e-8` when the normal
/// equations are rank deficient.
pub fn fit_linear(train: &WindowSet) -> Result<LinearWindowModel> {
    let rows = train.len();
    let w = train.window_len;
    if rows == 0 || w == 0 {
        return Err(DvsError::TooShort {
            needed: 1,
            got: rows,
        });
    }
    for win in &train.windows {
        ensure_finite(&win.input, "window input")?;
        ensure_finite(&[win.target], "window target")?;
    }

    let mut x_mean = vec![0.0; w];
    let mut y_mean = 0.0;
    for win in &train.windows {
        for (m, &x) in x_mean.iter_mut().zip(&win.input) {
            *m += x;
        }
        y_mean += win.target;
    }
    x_mean.iter_mut().for_each(|m| *m /= rows as f64);
    y_mean /= rows as f64;

    let x = DMatrix::from_fn(rows, w, |r, c| train.windows[r].input[c] - x_mean[c]);
    let y = DVector::from_fn(rows, |r, _| train.windows[r].target - y_mean);
    let gram = x.transpose() * &x;
    let rhs = x.transpose() * &y;

    let weights = match solve_spd(gram.clone(), &rhs, true) {
        Some(sol) => sol,
        None => {
            let ridged = gram + DMatrix::identity(w, w) * RIDGE_LAMBDA;
            solve_spd(ridged, &rhs, false).ok_or(DvsError::SingularSystem)?
        }
    };
    let bias = y_mean - weights.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
    let model = LinearWindowModel {
        weights: weights.iter().copied().collect(),
        bias,
    };
    if !model.bias.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
        return Err(DvsError::SingularSystem);
    }
    Ok(model)
}

/// Cholesky solve; `None` if the factorization fails or, with
/// `check_rank`, a pivot is negligible relative to the largest.
fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>, check_rank: bool) -> Option<DVector<f64>> {
    let chol = a.cholesky()?;
    if check_rank {
        let diag = chol.l_dirty().diagonal();
        let max = diag.iter().fold(0.0f64, |m, &d| m.max(d * d));
        let min = diag.iter().fold(f64::INFINITY, |m, &d| m.min(d * d));
        if !(max > 0.0) || min < RANK_TOL * max {
            return None;
        }
    }
    let x = chol.solve(b);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomWalkConfig {
    pub restart_prob: f64,
    pub max_steps: usize,
    pub convergence_tol: f64,
    pub top_k: usize,
}

impl Default for RandomWalkConfig {
    fn default() -> Self {
        RandomWalkConfig {
            restart_prob: 0.15,
            max_steps: 10_000,
            convergence_tol: 1e-10,
            top_k: 5,
        }
    }
}

impl RandomWalkConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.restart_prob > 0.0 && self.restart_prob < 1.0) {
            problems.push(format!(
                "restart_prob must lie in (0, 1) (got {})",
                self.restart_prob
            ));
        }
        if self.max_steps == 0 {
            problems.push("max_steps must be at least 1".into());
        }
        if !(self.convergence_tol > 0.0) {
            problems.push("convergence_tol must be positive".into());
        }
        if self.top_k == 0 {
            problems.push("top_k must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DvsError::InvalidConfig(problems))
        }
    }
}

/// Stationary vector of a walk on the row-normalized adjacency that jumps
/// back to `source` with probability `restart_prob` each step. Sums to 1.
pub fn random_walk_similarity(
    adjacency: &AdjacencyMatrix,
    source: usize,
    cfg: &RandomWalkConfig,
) -> Vec<f64> {
    let n = adjacency.n();
    let c = cfg.restart_prob;
    let mut r = vec![0.0; n];
    r[source] = 1.0;
    let mut next = vec![0.0; n];
    for _ in 0..cfg.max_steps {
        next.fill(0.0);
        for (i, &ri) in r.iter().enumerate() {
            let nb = adjacency.neighbors(i);
            if nb.is_empty() {
                // dangling mass returns to the source
                next[source] += (1.0 - c) * ri;
                continue;
            }
            let share = (1.0 - c) * ri / nb.len() as f64;
            for &j in nb {
                next[j] += share;
            }
        }
        next[source] += c;
        let change = r
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut r, &mut next);
        if change < cfg.convergence_tol {
            break;
        }
    }
    r
}

/// Forecast from the nodes most similar to the last one: each selected node
/// `i` contributes the line through `(i, v_i)` and `(n-1, v_{n-1})`
/// evaluated at `n`, weighted by similarity.
pub fn vg_randomwalk_forecast(window: &[f64], cfg: &RandomWalkConfig) -> Result<f64> {
    if window.len() < 3 {
        return Err(DvsError::TooShort {
            needed: 3,
            got: window.len(),
        });
    }
    cfg.validate()?;
    let adjacency = visibility_adjacency(window)?;
    let last = window.len() - 1;
    let sim = random_walk_similarity(&adjacency, last, cfg);

    let mut ranked: Vec<usize> = (0..last).collect();
    // ties go to the node closer in time
    ranked.sort_by(|&a, &b| sim[b].total_cmp(&sim[a]).then(b.cmp(&a)));
    ranked.truncate(cfg.top_k);

    let v_last = window[last];
    let extrapolate = |i: usize| v_last + (v_last - window[i]) / (last - i) as f64;
    if let [only] = ranked[..] {
        return Ok(extrapolate(only));
    }
    let mass: f64 = ranked.iter().map(|&i| sim[i]).sum();
    if !(mass > 0.0) {
        return Err(DvsError::DegenerateWalk);
    }
    Ok(ranked.iter().map(|&i| sim[i] * extrapolate(i)).sum::<f64>() / mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{make_windows, TimeSeries};

    #[test]
    fn sma_examples() {
        assert_eq!(sma_forecast(&[1.0, 2.0, 3.0], 1).unwrap(), 3.0);
        assert_eq!(sma_forecast(&[1.0, 2.0, 3.0], 3).unwrap(), 2.0);
        assert!(matches!(
            sma_forecast(&[5.0], 2),
            Err(DvsError::KTooLarge { k: 2, len: 1 })
        ));
    }

    #[test]
    fn ses_examples() {
        assert_eq!(ses_forecast(&[1.0, 9.0, 4.0], 1.0).unwrap(), 4.0);
        assert_eq!(ses_forecast(&[2.0, 4.0], 0.5).unwrap(), 3.0);
        assert_eq!(ses_forecast(&[6.0; 5], 0.3).unwrap(), 6.0);
        assert!(ses_forecast(&[], 0.3).is_err());
        assert!(ses_forecast(&[1.0], 0.0).is_err());
    }

    #[test]
    fn ses_alpha_grid_prefers_tracking_on_trends() {
        let s = TimeSeries::from_values((0..40).map(|i| 3.0 * i as f64).collect()).unwrap();
        let ws = make_windows(&s, 5).unwrap();
        assert_eq!(fit_ses_alpha(&ws).unwrap(), 0.99);
    }

    #[test]
    fn linear_exact_on_line() {
        let s = TimeSeries::from_values((0..60).map(|i| 2.0 * i as f64).collect()).unwrap();
        let ws = make_windows(&s, 5).unwrap();
        let m = fit_linear(&ws).unwrap();
        for w in &ws.windows {
            assert!((m.predict(&w.input).unwrap() - w.target).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_single_window_interpolates() {
        let s = TimeSeries::from_values(vec![3.0, 6.0]).unwrap();
        let ws = make_windows(&s, 1).unwrap();
        let m = fit_linear(&ws).unwrap();
        assert!((m.weights[0] * 3.0 + m.bias - 6.0).abs() < 1e-9);
    }

    #[test]
    fn linear_degenerate_design() {
        let ws = WindowSet {
            window_len: 3,
            windows: (0..6)
                .map(|_| crate::series::Window {
                    input: vec![2.0, 2.0, 2.0],
                    target: 7.0,
                })
                .collect(),
            source_len: 0,
            target_indices: vec![0; 6],
        };
        let m = fit_linear(&ws).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-9));
        assert!((m.bias - 7.0).abs() < 1e-9);
    }

    #[test]
    fn walk_examples() {
        let cfg = RandomWalkConfig::default();
        let line: Vec<f64> = (1..=10).map(f64::from).collect();
        assert!((vg_randomwalk_forecast(&line, &cfg).unwrap() - 11.0).abs() < 1e-9);
        assert_eq!(vg_randomwalk_forecast(&[4.0; 8], &cfg).unwrap(), 4.0);
        assert!(vg_randomwalk_forecast(&[1.0, 2.0], &cfg).is_err());

        let w = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let one = RandomWalkConfig {
            top_k: 1,
            ..cfg.clone()
        };
        let a = visibility_adjacency(&w).unwrap();
        let sim = random_walk_similarity(&a, 7, &cfg);
        let best = (0..7)
            .max_by(|&x, &y| sim[x].total_cmp(&sim[y]).then(x.cmp(&y)))
            .unwrap();
        let expect = 6.0 + (6.0 - w[best]) / (7 - best) as f64;
        assert_eq!(vg_randomwalk_forecast(&w, &one).unwrap(), expect);
    }

    #[test]
    fn similarity_is_a_distribution() {
        let w = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0];
        let a = visibility_adjacency(&w).unwrap();
        let sim = random_walk_similarity(&a, 9, &RandomWalkConfig::default());
        assert!((sim.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(sim.iter().all(|&s| s > 0.0));
    }
}
