//! Regression metrics on unscaled prices, and turning test windows into
//! price-unit predictions.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lstm::{predict_one, LstmError, NetworkConfig, NetworkParams};
use crate::preprocess::{ScalerParams, WindowedDataset};
use crate::training::{mse_loss, PredictionSet, TrainingError};

/// Actuals with `|y|` below this are left out of MAPE.
pub const MAPE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum EvaluateError {
    #[error("actual values have zero variance")]
    ZeroVariance,
    #[error("all {0} actual values fall below the MAPE threshold")]
    AllExcluded(usize),
    #[error("scaler mismatch: {0}")]
    ScalerMismatch(String),
    #[error("model expects windows of {model} steps, dataset has {data}")]
    WindowMismatch { model: usize, data: usize },
    #[error(transparent)]
    Network(#[from] LstmError),
    #[error(transparent)]
    Set(#[from] TrainingError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse: f64,
    pub mae: f64,
    pub r_squared: f64,
    /// A fraction, not a percentage.
    pub mape: f64,
    pub explained_variance: f64,
    pub mape_excluded_count: usize,
}

pub fn rmse(p: &PredictionSet) -> f64 {
    mse_loss(p).sqrt()
}

pub fn mae(p: &PredictionSet) -> f64 {
    p.residuals().map(f64::abs).sum::<f64>() / p.len() as f64
}

/// Population variance.
fn variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n
}

fn actual_variance(p: &PredictionSet) -> Result<f64, EvaluateError> {
    let var = variance(p.actual());
    if p.len() < 2 || !(var > 0.0) {
        return Err(EvaluateError::ZeroVariance);
    }
    Ok(var)
}

/// `1 - SS_res / SS_tot`
pub fn r_squared(p: &PredictionSet) -> Result<f64, EvaluateError> {
    let var_y = actual_variance(p)?;
    let n = p.len() as f64;
    let ss_res: f64 = p.residuals().map(|r| r * r).sum();
    Ok(1.0 - ss_res / (var_y * n))
}

/// `1 - Var(y - y_hat) / Var(y)` with population variances, so the result is
/// never below [`r_squared`].
pub fn explained_variance(p: &PredictionSet) -> Result<f64, EvaluateError> {
    let var_y = actual_variance(p)?;
    let var_r = variance(&p.residuals().collect::<Vec<_>>());
    Ok(1.0 - var_r / var_y)
}

/// Mean of `|y - y_hat| / |y|` over samples with `|y| >= threshold`. Returns
/// the fraction and how many samples were skipped.
pub fn mape(p: &PredictionSet, threshold: f64) -> Result<(f64, usize), EvaluateError> {
    let mut total = 0.0;
    let mut kept = 0usize;
    for (&y, &y_hat) in p.actual().iter().zip(p.predicted()) {
        if y.abs() >= threshold {
            total += (y - y_hat).abs() / y.abs();
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(EvaluateError::AllExcluded(p.len()));
    }
    Ok((total / kept as f64, p.len() - kept))
}

pub fn metrics_report(p: &PredictionSet) -> Result<MetricsReport, EvaluateError> {
    let (mape, mape_excluded_count) = mape(p, MAPE_THRESHOLD)?;
    Ok(MetricsReport {
        rmse: rmse(p),
        mae: mae(p),
        r_squared: r_squared(p)?,
        mape,
        explained_variance: explained_variance(p)?,
        mape_excluded_count,
    })
}

/// Anything that maps one scaled input window to one scaled next value.
pub trait Predictor: Sync {
    /// Window length the model was built for; `None` accepts any length.
    fn window(&self) -> Option<usize>;
    fn predict_scaled(&self, window: &[f64]) -> Result<f64, EvaluateError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub config: NetworkConfig,
    pub params: NetworkParams,
    pub window: usize,
}

impl Predictor for LstmModel {
    fn window(&self) -> Option<usize> {
        Some(self.window)
    }

    fn predict_scaled(&self, window: &[f64]) -> Result<f64, EvaluateError> {
        Ok(predict_one(&self.params, &self.config, window)?)
    }
}

/// Predicts tomorrow's value as today's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PersistenceModel;

impl Predictor for PersistenceModel {
    fn window(&self) -> Option<usize> {
        None
    }

    fn predict_scaled(&self, window: &[f64]) -> Result<f64, EvaluateError> {
        window.last().copied().ok_or(EvaluateError::WindowMismatch { model: 1, data: 0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPrediction {
    pub set: PredictionSet,
    /// Empty when the dataset carries no dates.
    pub dates: Vec<NaiveDate>,
}

/// Runs `model` over every window of `test` and maps both predictions and
/// targets back to price units.
pub fn predict_series(
    model: &dyn Predictor,
    scaler: &ScalerParams,
    test: &WindowedDataset,
) -> Result<SeriesPrediction, EvaluateError> {
    scaler
        .validate()
        .map_err(|e| EvaluateError::ScalerMismatch(e.to_string()))?;
    if let Some(w) = model.window() {
        if w != test.window() {
            return Err(EvaluateError::WindowMismatch {
                model: w,
                data: test.window(),
            });
        }
    }
    let predicted = (0..test.len())
        .into_par_iter()
        .map(|i| model.predict_scaled(test.input(i)).map(|s| scaler.unscale(s)))
        .collect::<Result<Vec<f64>, _>>()?;
    let actual = test.targets().iter().map(|&s| scaler.unscale(s)).collect();
    Ok(SeriesPrediction {
        set: PredictionSet::new(actual, predicted)?,
        dates: test.target_dates().to_vec(),
    })
}
