//! On-disk model checkpoints (pretty-printed JSON).
//!
//! Layer weights are stored per gate as row-major `hidden x (hidden + input)`
//! matrices whose columns run over `[h_prev, x]`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluate::{LstmModel, PersistenceModel, Predictor};
use crate::lstm::{DenseParams, Gate, LstmError, LstmLayerParams, NetworkConfig, NetworkParams};
use crate::market_data::PriceField;
use crate::preprocess::ScalerParams;
use crate::training::TrainConfig;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error(transparent)]
    Shape(#[from] LstmError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBlocks {
    pub input_size: usize,
    pub hidden: usize,
    pub w_f: Vec<f64>,
    pub w_i: Vec<f64>,
    pub w_c: Vec<f64>,
    pub w_o: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_o: Vec<f64>,
}

impl LayerBlocks {
    fn from_layer(layer: &LstmLayerParams) -> Self {
        let w = |g| layer.gate_weights(g).to_vec();
        let b = |g| layer.gate_bias(g).to_vec();
        Self {
            input_size: layer.input_size(),
            hidden: layer.hidden(),
            w_f: w(Gate::Forget),
            w_i: w(Gate::Input),
            w_c: w(Gate::Candidate),
            w_o: w(Gate::Output),
            b_f: b(Gate::Forget),
            b_i: b(Gate::Input),
            b_c: b(Gate::Candidate),
            b_o: b(Gate::Output),
        }
    }

    fn to_layer(&self) -> Result<LstmLayerParams, LstmError> {
        LstmLayerParams::from_gates(
            self.input_size,
            self.hidden,
            [&self.w_f, &self.w_i, &self.w_c, &self.w_o],
            [&self.b_f, &self.b_i, &self.b_c, &self.b_o],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelPayload {
    Lstm {
        network: NetworkConfig,
        layers: Vec<LayerBlocks>,
        dense: DenseParams,
    },
    /// Next value = last input value. Used as a baseline.
    Persistence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub symbol: String,
    pub config_hash: String,
    pub seed: u64,
    pub window: usize,
    pub split_ratio: f64,
    pub price_field: PriceField,
    pub scaler: ScalerParams,
    pub training: TrainConfig,
    /// Mean loss of the last epoch; absent for untrained models.
    pub final_loss: Option<f64>,
    pub model: ModelPayload,
}

impl ModelPayload {
    pub fn lstm(config: &NetworkConfig, params: &NetworkParams) -> Self {
        ModelPayload::Lstm {
            network: config.clone(),
            layers: params.layers.iter().map(LayerBlocks::from_layer).collect(),
            dense: params.dense.clone(),
        }
    }
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(ck.version));
        }
        ck.network()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Network configuration and parameters, or `None` for baseline models.
    pub fn network(&self) -> Result<Option<(NetworkConfig, NetworkParams)>, CheckpointError> {
        match &self.model {
            ModelPayload::Persistence => Ok(None),
            ModelPayload::Lstm {
                network,
                layers,
                dense,
            } => {
                network.validate()?;
                let params = NetworkParams {
                    layers: layers.iter().map(LayerBlocks::to_layer).collect::<Result<_, _>>()?,
                    dense: dense.clone(),
                };
                if !params.matches(network) {
                    return Err(LstmError::ShapeMismatch(
                        "stored blocks do not match the stored network configuration".into(),
                    )
                    .into());
                }
                Ok(Some((network.clone(), params)))
            }
        }
    }

    pub fn predictor(&self) -> Result<Box<dyn Predictor>, CheckpointError> {
        Ok(match self.network()? {
            None => Box::new(PersistenceModel),
            Some((config, params)) => Box::new(LstmModel {
                config,
                params,
                window: self.window,
            }),
        })
    }
}
