//! MAD, MAPE, SMAPE, RMSE and NRMSE.
//!
//! MAPE divides by the signed actual and SMAPE by the signed sum
//! `pred + actual`. Undefined denominators are reported through flags so a
//! single zero does not void the rest of the report.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, DvsError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFlag {
    /// Some actual is zero.
    MapeUndefined,
    /// Some `pred + actual` is zero.
    SmapeUndefined,
    /// Some SMAPE denominator is negative.
    SmapeNegativeDenominator,
    /// All actuals are equal.
    NrmseUndefined,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmapeMode {
    /// `|p - a| / (p + a)`.
    #[default]
    Literal,
    /// `|p - a| / (|p| + |a|)`.
    Absolute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: usize,
    pub mad: f64,
    pub mape: Option<f64>,
    pub smape: Option<f64>,
    pub rmse: f64,
    pub nrmse: Option<f64>,
    pub flags: Vec<MetricFlag>,
}

impl MetricReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn has_flag(&self, flag: MetricFlag) -> bool {
        self.flags.contains(&flag)
    }
}

pub fn evaluate_metrics(preds: &[f64], actuals: &[f64]) -> Result<MetricReport> {
    evaluate_metrics_with(preds, actuals, SmapeMode::Literal)
}

pub fn evaluate_metrics_with(
    preds: &[f64],
    actuals: &[f64],
    mode: SmapeMode,
) -> Result<MetricReport> {
    if preds.len() != actuals.len() || preds.is_empty() {
        return Err(DvsError::LengthMismatch {
            preds: preds.len(),
            actuals: actuals.len(),
        });
    }
    ensure_finite(preds, "predictions")?;
    ensure_finite(actuals, "actuals")?;

    let n = preds.len() as f64;
    let mut flags = Vec::new();
    let (mut abs_sum, mut sq_sum, mut ape_sum, mut sape_sum) = (0.0, 0.0, 0.0, 0.0);
    let (mut mape_ok, mut smape_ok, mut negative_den) = (true, true, false);

    for (&p, &a) in preds.iter().zip(actuals) {
        let err = (p - a).abs();
        abs_sum += err;
        sq_sum += err * err;

        if a == 0.0 {
            mape_ok = false;
        } else {
            ape_sum += err / a;
        }

        let den = match mode {
            SmapeMode::Literal => p + a,
            SmapeMode::Absolute => p.abs() + a.abs(),
        };
        if den == 0.0 {
            smape_ok = false;
        } else {
            if den < 0.0 {
                negative_den = true;
            }
            sape_sum += err / den;
        }
    }

    let (lo, hi) = actuals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
            (lo.min(a), hi.max(a))
        });
    let rmse = (sq_sum / n).sqrt();

    if !mape_ok {
        flags.push(MetricFlag::MapeUndefined);
    }
    if !smape_ok {
        flags.push(MetricFlag::SmapeUndefined);
    }
    if negative_den {
        flags.push(MetricFlag::SmapeNegativeDenominator);
    }
    let nrmse = if hi > lo {
        Some(rmse / (hi - lo))
    } else {
        flags.push(MetricFlag::NrmseUndefined);
        None
    };

    Ok(MetricReport {
        n: preds.len(),
        mad: abs_sum / n,
        mape: mape_ok.then(|| ape_sum / n),
        smape: smape_ok.then(|| 2.0 * sape_sum / n),
        rmse,
        nrmse,
        flags,
    })
}
