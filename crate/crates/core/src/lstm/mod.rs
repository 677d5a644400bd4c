//! Stacked LSTM regressor with exact backpropagation through time.
//!
//! Arithmetic is `f64` throughout. The default configuration stacks four
//! layers of 50, 60, 80 and 120 units with dropout 0.2, 0.3, 0.4 and 0.5
//! after each, and finishes with a one-unit dense head on the last hidden
//! state of the top layer. All layers but the last return full sequences.

mod cell;
mod dropout;
mod layer;
pub mod linalg;
mod network;
mod params;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cell::{lstm_cell_forward, GateRecord, LstmState};
pub use dropout::dropout_apply;
pub use layer::{lstm_layer_forward, LayerCache};
pub use network::{network_backward, network_forward, predict_one, BatchForward, ForwardCache};
pub use params::{init_params, DenseParams, Gate, LstmLayerParams, NetworkGrads, NetworkParams};

pub(crate) use network::{sample_backward, sample_forward};

#[derive(Debug, Error, PartialEq)]
pub enum LstmError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("input sequence is empty")]
    EmptySequence,
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("dropout rate {0} is outside [0, 1)")]
    BadRate(f64),
    #[error("stale forward cache: {0}")]
    StaleCache(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Inference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub layer_units: Vec<usize>,
    pub dropout_rates: Vec<f64>,
    pub input_features: usize,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            layer_units: vec![50, 60, 80, 120],
            dropout_rates: vec![0.2, 0.3, 0.4, 0.5],
            input_features: 1,
            seed: 42,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), LstmError> {
        if self.layer_units.is_empty() {
            return Err(LstmError::InvalidConfig("at least one layer is required".into()));
        }
        if self.layer_units.len() != self.dropout_rates.len() {
            return Err(LstmError::InvalidConfig(format!(
                "{} layers but {} dropout rates",
                self.layer_units.len(),
                self.dropout_rates.len()
            )));
        }
        if self.layer_units.contains(&0) {
            return Err(LstmError::InvalidConfig("layer with zero units".into()));
        }
        if self.input_features == 0 {
            return Err(LstmError::InvalidConfig("input_features must be at least 1".into()));
        }
        if let Some(&bad) = self.dropout_rates.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(LstmError::BadRate(bad));
        }
        Ok(())
    }

    /// Same network with every dropout rate set to zero.
    pub fn without_dropout(&self) -> Self {
        Self {
            dropout_rates: vec![0.0; self.dropout_rates.len()],
            ..self.clone()
        }
    }

    pub fn param_count(&self) -> usize {
        let mut prev = self.input_features;
        let mut total = 0;
        for &h in &self.layer_units {
            total += 4 * (prev + h + 1) * h;
            prev = h;
        }
        total + prev + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matches_reference_architecture() {
        let c = NetworkConfig::default();
        assert_eq!(c.layer_units, vec![50, 60, 80, 120]);
        assert_eq!(c.dropout_rates, vec![0.2, 0.3, 0.4, 0.5]);
        assert_eq!(c.param_count(), 178_761);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        let bad = |c: NetworkConfig| assert!(c.validate().is_err(), "{c:?}");
        let base = NetworkConfig::default();
        bad(NetworkConfig { layer_units: vec![], dropout_rates: vec![], ..base.clone() });
        bad(NetworkConfig { dropout_rates: vec![0.1], ..base.clone() });
        bad(NetworkConfig { layer_units: vec![4, 0, 2, 2], ..base.clone() });
        bad(NetworkConfig { dropout_rates: vec![0.1, 0.2, 1.0, 0.0], ..base.clone() });
        bad(NetworkConfig { input_features: 0, ..base });
        assert!(init_params(&NetworkConfig { layer_units: vec![], dropout_rates: vec![], ..Default::default() }).is_err());
    }
}
