//! Leakage-free min-max scaling and sliding-window sample construction.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("need at least 2 training values to fit a scaler, got {0}")]
    TooFewValues(usize),
    #[error("training values are all equal ({0}); min-max range is degenerate")]
    DegenerateRange(f64),
    #[error("training values contain a non-finite entry")]
    NonFinite,
    #[error("invalid scaler parameters: min {min} must be strictly below max {max}")]
    InvalidParams { min: f64, max: f64 },
    #[error("window length must be at least 1")]
    InvalidWindow,
    #[error("series of length {len} yields no samples for window {window}")]
    WindowTooLarge { len: usize, window: usize },
    #[error("train tail has {got} values but the window needs {window}")]
    TailTooShort { got: usize, window: usize },
    #[error("expected {expected} dates, got {got}")]
    DateCount { expected: usize, got: usize },
}

/// Affine map taking the training minimum to 0 and maximum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min_value: f64,
    pub max_value: f64,
}

impl ScalerParams {
    pub fn new(min_value: f64, max_value: f64) -> Result<Self, PreprocessError> {
        let params = Self {
            min_value,
            max_value,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.min_value.is_finite() && self.max_value.is_finite() && self.max_value > self.min_value
        {
            Ok(())
        } else {
            Err(PreprocessError::InvalidParams {
                min: self.min_value,
                max: self.max_value,
            })
        }
    }

    fn range(&self) -> f64 {
        self.max_value - self.min_value
    }

    pub fn scale(&self, value: f64) -> f64 {
        (value - self.min_value) / self.range()
    }

    pub fn unscale(&self, scaled: f64) -> f64 {
        scaled * self.range() + self.min_value
    }
}

/// Fits the scaler on training values only.
pub fn fit_scaler(train_values: &[f64]) -> Result<ScalerParams, PreprocessError> {
    if train_values.len() < 2 {
        return Err(PreprocessError::TooFewValues(train_values.len()));
    }
    if train_values.iter().any(|v| !v.is_finite()) {
        return Err(PreprocessError::NonFinite);
    }
    let (min, max) = train_values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if max <= min {
        return Err(PreprocessError::DegenerateRange(min));
    }
    Ok(ScalerParams {
        min_value: min,
        max_value: max,
    })
}

/// `(v - min) / (max - min)`. Values outside the training range are kept
/// as-is (below 0 or above 1), never clipped.
pub fn transform(params: &ScalerParams, values: &[f64]) -> Result<Vec<f64>, PreprocessError> {
    params.validate()?;
    Ok(values.iter().map(|&v| params.scale(v)).collect())
}

pub fn inverse_transform(
    params: &ScalerParams,
    scaled: &[f64],
) -> Result<Vec<f64>, PreprocessError> {
    params.validate()?;
    Ok(scaled.iter().map(|&s| params.unscale(s)).collect())
}

/// Supervised samples cut from a univariate series: each input is `window`
/// consecutive values and its target is the value right after them.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    /// Row-major `[samples x window]` (one feature per step).
    inputs: Vec<f64>,
    targets: Vec<f64>,
    window: usize,
    target_dates: Vec<NaiveDate>,
}

impl WindowedDataset {
    /// Builds the dataset over `source`, one sample per position
    /// `window..source.len()`.
    fn over(source: &[f64], window: usize) -> Self {
        let samples = source.len().saturating_sub(window);
        let mut inputs = Vec::with_capacity(samples * window);
        for i in 0..samples {
            inputs.extend_from_slice(&source[i..i + window]);
        }
        Self {
            inputs,
            targets: source[window.min(source.len())..].to_vec(),
            window,
            target_dates: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Input sequence of sample `i` (length `window`).
    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.window..(i + 1) * self.window]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn target_dates(&self) -> &[NaiveDate] {
        &self.target_dates
    }

    /// Attaches one calendar day per sample target.
    pub fn with_target_dates(mut self, dates: Vec<NaiveDate>) -> Result<Self, PreprocessError> {
        if dates.len() != self.len() {
            return Err(PreprocessError::DateCount {
                expected: self.len(),
                got: dates.len(),
            });
        }
        self.target_dates = dates;
        Ok(self)
    }
}

/// Sample `i` is `values[i..i + window]` with target `values[i + window]`.
pub fn make_windows(values: &[f64], window: usize) -> Result<WindowedDataset, PreprocessError> {
    if window < 1 {
        return Err(PreprocessError::InvalidWindow);
    }
    if values.len() <= window {
        return Err(PreprocessError::WindowTooLarge {
            len: values.len(),
            window,
        });
    }
    Ok(WindowedDataset::over(values, window))
}

/// Windows whose targets are exactly the test values, using the end of the
/// training series as history for the first test days. If `train_tail` is
/// longer than `window`, only its last `window` values are used.
pub fn bridge_test_windows(
    train_tail: &[f64],
    test_values: &[f64],
    window: usize,
) -> Result<WindowedDataset, PreprocessError> {
    if window < 1 {
        return Err(PreprocessError::InvalidWindow);
    }
    if train_tail.len() < window {
        return Err(PreprocessError::TailTooShort {
            got: train_tail.len(),
            window,
        });
    }
    let mut source = train_tail[train_tail.len() - window..].to_vec();
    source.extend_from_slice(test_values);
    Ok(WindowedDataset::over(&source, window))
}
