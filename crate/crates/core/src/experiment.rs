//! Method comparison on a shared chronological split.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    fit_linear, fit_ses_alpha, ses_forecast, sma_forecast, vg_randomwalk_forecast, RandomWalkConfig,
};
use crate::error::{DvsError, Result};
use crate::metrics::{evaluate_metrics, MetricFlag, MetricReport};
use crate::nn::{build_ablation_ann, build_ablation_cnn, build_dvs_cnn, LayerStack};
use crate::series::{make_windows_with, split_train_test, TimeSeries, WindowSet};
use crate::training::{predict, train, TrainConfig, TrainReport};

/// Everything a run needs besides the series itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub window_len: usize,
    pub train_fraction: f64,
    /// Drop the final window (`n - w - 1` windows instead of `n - w`).
    pub drop_last: bool,
    pub sma_k: usize,
    pub train: TrainConfig,
    pub random_walk: RandomWalkConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            window_len: 30,
            train_fraction: 0.8,
            drop_last: false,
            sma_k: 1,
            train: TrainConfig::default(),
            random_walk: RandomWalkConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.window_len == 0 {
            problems.push("window_len must be at least 1".to_string());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            problems.push(format!(
                "train_fraction must lie in (0, 1) (got {})",
                self.train_fraction
            ));
        }
        if self.sma_k == 0 || self.sma_k > self.window_len {
            problems.push(format!(
                "sma_k must lie in 1..=window_len (got {})",
                self.sma_k
            ));
        }
        for (section, res) in [
            ("train", self.train.validate()),
            ("random_walk", self.random_walk.validate()),
        ] {
            if let Err(DvsError::InvalidConfig(p)) = res {
                problems.extend(p.into_iter().map(|m| format!("{section}.{m}")));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DvsError::InvalidConfig(problems))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DvsCnn,
    Cnn,
    DvsAnn,
    Ann,
    Sma,
    Ses,
    Linear,
    VgWalk,
}

/// Names recognised but deliberately not implemented.
const OUT_OF_SCOPE: &[&str] = &[
    "arima",
    "sarima",
    "seasonal-arima",
    "ets",
    "ets-ann",
    "arima-ann",
    "svm",
    "lasso",
    "bayesian-ridge",
    "logistic",
    "dtr",
    "decision-tree",
    "lstm",
    "dvs-lstm",
];

impl Method {
    pub const ALL: [Method; 8] = [
        Method::DvsCnn,
        Method::Cnn,
        Method::DvsAnn,
        Method::Ann,
        Method::Sma,
        Method::Ses,
        Method::Linear,
        Method::VgWalk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::DvsCnn => "dvs-cnn",
            Method::Cnn => "cnn",
            Method::DvsAnn => "dvs-ann",
            Method::Ann => "ann",
            Method::Sma => "sma",
            Method::Ses => "ses",
            Method::Linear => "linear",
            Method::VgWalk => "vg-walk",
        }
    }

    pub fn is_neural(self) -> bool {
        matches!(
            self,
            Method::DvsCnn | Method::Cnn | Method::DvsAnn | Method::Ann
        )
    }

    pub fn uses_dvs(self) -> bool {
        matches!(self, Method::DvsCnn | Method::DvsAnn)
    }

    /// Freshly initialised network for a neural method.
    pub fn build_network(self, input_len: usize, seed: u64) -> Result<LayerStack> {
        match self {
            Method::DvsCnn => build_dvs_cnn(input_len, seed),
            Method::Cnn => build_ablation_cnn(input_len, seed),
            Method::DvsAnn | Method::Ann => build_ablation_ann(input_len, seed),
            other => Err(DvsError::UnknownMethod(format!(
                "{} has no network",
                other.name()
            ))),
        }
    }
}

impl FromStr for Method {
    type Err = DvsError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        if let Some(m) = Method::ALL.iter().find(|m| m.name() == key) {
            return Ok(*m);
        }
        if OUT_OF_SCOPE.contains(&key.as_str()) {
            Err(DvsError::UnknownMethod(format!("{key} (out of scope)")))
        } else {
            Err(DvsError::UnknownMethod(key))
        }
    }
}

/// Train one network method with `seed` on the training windows.
pub fn train_method(
    method: Method,
    train_set: &WindowSet,
    cfg: &RunConfig,
    seed: u64,
) -> Result<TrainReport> {
    let stack = method.build_network(train_set.window_len, seed)?;
    let tcfg = TrainConfig {
        seed,
        use_dvs: method.uses_dvs(),
        ..cfg.train.clone()
    };
    train(stack, train_set, &tcfg)
}

/// Test-set predictions of `method`, fitted on `train_set` where it has
/// anything to fit.
pub fn run_method(
    method: Method,
    train_set: &WindowSet,
    test_set: &WindowSet,
    cfg: &RunConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let inputs = || test_set.windows.iter().map(|w| w.input.as_slice());
    match method {
        Method::DvsCnn | Method::Cnn | Method::DvsAnn | Method::Ann => {
            let report = train_method(method, train_set, cfg, seed)?;
            predict(&report.model, test_set)
        }
        Method::Sma => inputs().map(|w| sma_forecast(w, cfg.sma_k)).collect(),
        Method::Ses => {
            let alpha = fit_ses_alpha(train_set)?;
            inputs().map(|w| ses_forecast(w, alpha)).collect()
        }
        Method::Linear => {
            let model = fit_linear(train_set)?;
            inputs().map(|w| model.predict(w)).collect()
        }
        Method::VgWalk => inputs()
            .map(|w| vg_randomwalk_forecast(w, &cfg.random_walk))
            .collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub metrics: MetricReport,
    pub predictions: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodResult {
    pub method: Method,
    /// Median over seeds, field by field.
    pub summary: MetricReport,
    pub runs: Vec<SeedRun>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub window_len: usize,
    pub train_windows: usize,
    pub test_windows: usize,
    /// Series index of each test target.
    pub test_indices: Vec<usize>,
    pub actuals: Vec<f64>,
    pub methods: Vec<MethodResult>,
}

pub fn split_series(series: &TimeSeries, cfg: &RunConfig) -> Result<(WindowSet, WindowSet)> {
    let windows = make_windows_with(series, cfg.window_len, cfg.drop_last)?;
    split_train_test(&windows, cfg.train_fraction)
}

/// Neural methods run once per seed; the rest run once. Jobs execute in
/// parallel and results keep input order.
pub fn compare(
    series: &TimeSeries,
    cfg: &RunConfig,
    methods: &[Method],
    seeds: &[u64],
) -> Result<Comparison> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(DvsError::InvalidConfig(vec![
            "at least one seed is required".into(),
        ]));
    }
    let (train_set, test_set) = split_series(series, cfg)?;
    let actuals = test_set.targets();

    let jobs: Vec<(usize, u64)> = methods
        .iter()
        .enumerate()
        .flat_map(|(k, m)| {
            let seeds: Vec<u64> = if m.is_neural() {
                seeds.to_vec()
            } else {
                vec![seeds[0]]
            };
            seeds.into_iter().map(move |s| (k, s))
        })
        .collect();

    let outcomes = jobs
        .par_iter()
        .map(|&(k, seed)| {
            let predictions = run_method(methods[k], &train_set, &test_set, cfg, seed)?;
            let metrics = evaluate_metrics(&predictions, &actuals)?;
            Ok((
                k,
                SeedRun {
                    seed,
                    metrics,
                    predictions,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut grouped: Vec<Vec<SeedRun>> = vec![Vec::new(); methods.len()];
    for (k, run) in outcomes {
        grouped[k].push(run);
    }
    let methods = methods
        .iter()
        .zip(grouped)
        .map(|(&method, runs)| MethodResult {
            method,
            summary: median_report(&runs),
            runs,
        })
        .collect();

    Ok(Comparison {
        window_len: cfg.window_len,
        train_windows: train_set.len(),
        test_windows: test_set.len(),
        test_indices: test_set.target_indices.clone(),
        actuals,
        methods,
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn median_report(runs: &[SeedRun]) -> MetricReport {
    let pick = |f: &dyn Fn(&MetricReport) -> f64| {
        median(&runs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
    };
    let pick_opt = |f: &dyn Fn(&MetricReport) -> Option<f64>| {
        runs.iter()
            .map(|r| f(&r.metrics))
            .collect::<Option<Vec<f64>>>()
            .map(|v| median(&v))
    };
    let mut flags: Vec<MetricFlag> = Vec::new();
    for r in runs {
        for f in &r.metrics.flags {
            if !flags.contains(f) {
                flags.push(*f);
            }
        }
    }
    MetricReport {
        n: runs[0].metrics.n,
        mad: pick(&|m| m.mad),
        mape: pick_opt(&|m| m.mape),
        smape: pick_opt(&|m| m.smape),
        rmse: pick(&|m| m.rmse),
        nrmse: pick_opt(&|m| m.nrmse),
        flags,
    }
}

impl Comparison {
    pub fn result(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == method)
    }

    /// Aligned plain-text table; multi-seed methods get one extra line per
    /// seed.
    pub fn to_text(&self) -> String {
        fn cell(x: Option<f64>) -> String {
            x.map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "undef".into())
        }
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>12} {:>12} {:>12} {:>12} {:>12}",
            "method", "MAD", "MAPE", "SMAPE", "RMSE", "NRMSE"
        );
        let mut row = |label: &str, m: &MetricReport| {
            let _ = writeln!(
                out,
                "{:<16} {:>12} {:>12} {:>12} {:>12} {:>12}",
                label,
                cell(Some(m.mad)),
                cell(m.mape),
                cell(m.smape),
                cell(Some(m.rmse)),
                cell(m.nrmse)
            );
        };
        for r in &self.methods {
            row(r.method.name(), &r.summary);
            if r.runs.len() > 1 {
                for run in &r.runs {
                    row(&format!("  seed {}", run.seed), &run.metrics);
                }
            }
        }
        out
    }

    /// `index,actual,predicted` for one run.
    pub fn predictions_csv(&self, run: &SeedRun) -> String {
        let mut out = String::from("index,actual,predicted\n");
        for ((i, a), p) in self
            .test_indices
            .iter()
            .zip(&self.actuals)
            .zip(&run.predictions)
        {
            let _ = writeln!(
                out,
                "{i},{},{}",
                crate::series::format_sig17(*a),
                crate::series::format_sig17(*p)
            );
        }
        out
    }
}
