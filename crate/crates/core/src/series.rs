//! Time-series container, CSV ingestion, sliding windows and the seeded
//! synthetic generator that stands in for index data we cannot ship.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{DvsError, Result};

/// Ordered `(time, value)` observations with strictly increasing times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(DvsError::DimensionMismatch {
                expected: times.len(),
                got: values.len(),
            });
        }
        if values.len() < 2 {
            return Err(DvsError::TooShort {
                needed: 2,
                got: values.len(),
            });
        }
        crate::error::ensure_finite(&times, "times")?;
        crate::error::ensure_finite(&values, "values")?;
        if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
            // data row k+1 sits on file line k+3 (header is line 1)
            return Err(DvsError::Order { line: k as u64 + 3 });
        }
        Ok(TimeSeries { times, values })
    }

    /// Series indexed `0, 1, 2, ...`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len()).map(|i| i as f64).collect();
        Self::new(times, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.points() {
            out.push_str(&format!("{},{}\n", format_sig17(t), format_sig17(v)));
        }
        out
    }
}

/// Parses a `t,value` CSV. Line numbers in errors are 1-based and count the
/// header.
pub fn load_series(csv_text: &str) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut seen_header = false;

    for record in reader.records() {
        let record = record.map_err(|e| DvsError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if !seen_header {
            if record.len() != 2 || &record[0] != "t" || &record[1] != "value" {
                return Err(DvsError::Parse {
                    line,
                    message: "header must be exactly `t,value`".into(),
                });
            }
            seen_header = true;
            continue;
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(DvsError::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let parse = |field: &str, name: &str| -> Result<f64> {
            let x: f64 = field.parse().map_err(|_| DvsError::Parse {
                line,
                message: format!("{name} `{field}` is not a number"),
            })?;
            if !x.is_finite() {
                return Err(DvsError::Parse {
                    line,
                    message: format!("{name} `{field}` is not finite"),
                });
            }
            Ok(x)
        };
        let t = parse(&record[0], "time")?;
        let v = parse(&record[1], "value")?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(DvsError::Order { line });
            }
        }
        times.push(t);
        values.push(v);
    }

    if !seen_header {
        return Err(DvsError::Parse {
            line: 1,
            message: "missing `t,value` header".into(),
        });
    }
    if values.len() < 2 {
        return Err(DvsError::TooShort {
            needed: 2,
            got: values.len(),
        });
    }
    Ok(TimeSeries { times, values })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub input: Vec<f64>,
    pub target: f64,
}

/// Supervised one-step-ahead samples cut from a single series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSet {
    pub window_len: usize,
    pub windows: Vec<Window>,
    #[serde(skip)]
    pub source_len: usize,
    /// Series index of each window's target.
    #[serde(skip)]
    pub target_indices: Vec<usize>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.windows.iter().map(|w| w.target).collect()
    }

    /// Debug export: `{window_len, windows: [{input, target}]}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    fn subset(&self, range: std::ops::Range<usize>) -> WindowSet {
        WindowSet {
            window_len: self.window_len,
            windows: self.windows[range.clone()].to_vec(),
            source_len: self.source_len,
            target_indices: self.target_indices[range].to_vec(),
        }
    }
}

/// All `n - w` windows of `w` inputs followed by one target.
pub fn make_windows(series: &TimeSeries, w: usize) -> Result<WindowSet> {
    make_windows_with(series, w, false)
}

/// With `drop_last` the final window is discarded, giving `n - w - 1`
/// windows (264 for a 295-point series at `w = 30`).
pub fn make_windows_with(series: &TimeSeries, w: usize, drop_last: bool) -> Result<WindowSet> {
    if w == 0 {
        return Err(DvsError::Shape("window length must be positive".into()));
    }
    let values = series.values();
    let n = values.len();
    let needed = w + 1 + usize::from(drop_last);
    if n < needed {
        return Err(DvsError::TooShort { needed, got: n });
    }
    let count = n - w - usize::from(drop_last);
    let windows = (0..count)
        .map(|k| Window {
            input: values[k..k + w].to_vec(),
            target: values[k + w],
        })
        .collect();
    Ok(WindowSet {
        window_len: w,
        windows,
        source_len: n,
        target_indices: (w..w + count).collect(),
    })
}

/// Chronological split: the first `floor(count * train_fraction)` windows
/// train, the rest test.
pub fn split_train_test(ws: &WindowSet, train_fraction: f64) -> Result<(WindowSet, WindowSet)> {
    let count = ws.len();
    let degenerate = DvsError::DegenerateSplit {
        count,
        fraction: train_fraction,
    };
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(degenerate);
    }
    let cut = (count as f64 * train_fraction).floor() as usize;
    if cut == 0 || cut >= count {
        return Err(degenerate);
    }
    Ok((ws.subset(0..cut), ws.subset(cut..count)))
}

/// Trend + sinusoidal season + Gaussian noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub length: usize,
    pub trend_slope: f64,
    pub seasonal_amplitude: f64,
    pub seasonal_period: f64,
    pub noise_sigma: f64,
    pub base_level: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Monthly cost-index-like defaults: 295 points around 4700 with a
    /// yearly cycle.
    pub fn cci_like(seed: u64) -> Self {
        SynthSpec {
            length: 295,
            trend_slope: 20.0,
            seasonal_amplitude: 150.0,
            seasonal_period: 12.0,
            noise_sigma: 30.0,
            base_level: 4700.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.length < 2 {
            problems.push(format!("length must be at least 2 (got {})", self.length));
        }
        if !(self.seasonal_period.is_finite() && self.seasonal_period > 0.0) {
            problems.push("seasonal_period must be positive".to_string());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            problems.push("noise_sigma must be non-negative".to_string());
        }
        for (name, x) in [
            ("trend_slope", self.trend_slope),
            ("seasonal_amplitude", self.seasonal_amplitude),
            ("base_level", self.base_level),
        ] {
            if !x.is_finite() {
                problems.push(format!("{name} must be finite"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DvsError::InvalidConfig(problems))
        }
    }
}

pub fn synth_series(spec: &SynthSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| DvsError::InvalidConfig(vec![format!("noise_sigma: {e}")]))?;
    let values = (0..spec.length)
        .map(|i| {
            let x = i as f64;
            let season = if spec.seasonal_amplitude == 0.0 {
                0.0
            } else {
                spec.seasonal_amplitude
                    * (2.0 * std::f64::consts::PI * x / spec.seasonal_period).sin()
            };
            let eps = if spec.noise_sigma == 0.0 {
                0.0
            } else {
                noise.sample(&mut rng)
            };
            spec.base_level + spec.trend_slope * x + season + eps
        })
        .collect();
    TimeSeries::from_values(values)
}

/// Formats with 17 significant digits, which round-trips any `f64`.
pub fn format_sig17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..=16).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.16e}")
    }
}
