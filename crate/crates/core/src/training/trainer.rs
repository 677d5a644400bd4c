use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamHyper, AdamState};
use super::TrainingError;
use crate::lstm::{sample_backward, sample_forward, Mode, NetworkConfig, NetworkGrads, NetworkParams};
use crate::preprocess::WindowedDataset;
use crate::rng::{derive_seed, SeededRng};

const SHUFFLE_STREAM: u64 = 0x5348_5546;
const DROPOUT_STREAM: u64 = 0x4452_4f50;

/// How the samples of one batch are processed. Both settings produce
/// bitwise-identical results: per-sample gradients are always summed in
/// sample order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub shuffle_seed: u64,
    /// Rescale the batch gradient to at most this L2 norm. Off by default.
    pub clip_norm: Option<f64>,
    /// Not serialized: it cannot change the result.
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamHyper::default();
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            shuffle_seed: 42,
            clip_norm: None,
            execution: Execution::Parallel,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainingError> {
        let fail = |msg: &str| Err(TrainingError::InvalidConfig(msg.to_string()));
        if self.epochs < 1 {
            return fail("epochs must be at least 1");
        }
        if self.batch_size < 1 {
            return fail("batch_size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return fail("Adam betas must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return fail("epsilon must be positive");
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return fail("clip_norm must be positive");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamHyper {
        AdamHyper {
            lr: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    /// Mean squared error over all samples of the epoch, measured on the
    /// training-mode predictions made before each batch's update.
    pub loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    pub logs: Vec<EpochLog>,
    pub adam: AdamState<NetworkParams>,
}

/// Sample visiting order for `epoch` (0-based).
pub fn epoch_order(samples: usize, shuffle_seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..samples).collect();
    SeededRng::derived(shuffle_seed, &[SHUFFLE_STREAM, epoch as u64]).shuffle(&mut order);
    order
}

struct SampleResult {
    squared_error: f64,
    grads: NetworkGrads,
}

/// Trains with Adam on mean squared error; see [`train_with`].
pub fn train(
    params: NetworkParams,
    config: &NetworkConfig,
    dataset: &WindowedDataset,
    tc: &TrainConfig,
) -> Result<TrainOutcome, TrainingError> {
    train_with(params, config, dataset, tc, |_| {})
}

/// Trains with Adam on mean squared error, calling `on_epoch` after every
/// epoch.
///
/// Each epoch shuffles the sample order with a generator derived from
/// `(shuffle_seed, epoch)`, cuts it into batches of `batch_size` (the last
/// batch may be short) and takes one Adam step per batch. Dropout masks for
/// the sample at position `p` of batch `b` come from a generator derived from
/// `(shuffle_seed, epoch, b, p)`, so they do not depend on scheduling.
pub fn train_with(
    mut params: NetworkParams,
    config: &NetworkConfig,
    dataset: &WindowedDataset,
    tc: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome, TrainingError> {
    tc.validate()?;
    config.validate()?;
    if !params.matches(config) {
        return Err(TrainingError::ShapeMismatch(
            "parameters do not match the network configuration".into(),
        ));
    }
    if dataset.is_empty() {
        return Err(TrainingError::EmptyDataset);
    }
    if config.input_features != 1 {
        return Err(TrainingError::ShapeMismatch(
            "windowed datasets carry a single feature".into(),
        ));
    }
    let mut adam = AdamState::new(&params, tc.adam());
    let mut logs = Vec::with_capacity(tc.epochs);
    for epoch in 0..tc.epochs {
        let started = Instant::now();
        let order = epoch_order(dataset.len(), tc.shuffle_seed, epoch);
        let mut sse = 0.0;
        for (b, chunk) in order.chunks(tc.batch_size).enumerate() {
            let batch_seed = derive_seed(tc.shuffle_seed, &[DROPOUT_STREAM, epoch as u64, b as u64]);
            let n = chunk.len() as f64;
            let run = |(pos, &idx): (usize, &usize)| -> Result<SampleResult, TrainingError> {
                let mut rng = SeededRng::derived(batch_seed, &[pos as u64]);
                let cache = sample_forward(&params, config, dataset.input(idx), Mode::Train, &mut rng)?;
                let err = cache.prediction() - dataset.target(idx);
                Ok(SampleResult {
                    squared_error: err * err,
                    grads: sample_backward(&params, &cache, 2.0 * err / n),
                })
            };
            let mut total = params.zeros_like();
            match tc.execution {
                Execution::Parallel => {
                    let results: Vec<SampleResult> =
                        chunk.par_iter().enumerate().map(run).collect::<Result<_, _>>()?;
                    for r in &results {
                        sse += r.squared_error;
                        total.add_assign(&r.grads);
                    }
                }
                Execution::Serial => {
                    for item in chunk.iter().enumerate() {
                        let r = run(item)?;
                        sse += r.squared_error;
                        total.add_assign(&r.grads);
                    }
                }
            }
            if let Some(max_norm) = tc.clip_norm {
                let norm = total.l2_norm();
                if norm > max_norm {
                    total.scale(max_norm / norm);
                }
            }
            adam_step(&mut adam, &mut params, &total)?;
        }
        let log = EpochLog {
            epoch: epoch + 1,
            loss: sse / dataset.len() as f64,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&log);
        logs.push(log);
    }
    Ok(TrainOutcome { params, logs, adam })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::init_params;
    use crate::preprocess::make_windows;

    fn tiny(units: usize, seed: u64) -> (NetworkConfig, NetworkParams) {
        let config = NetworkConfig {
            layer_units: vec![units],
            dropout_rates: vec![0.0],
            input_features: 1,
            seed,
        };
        let params = init_params(&config).unwrap();
        (config, params)
    }

    fn sine(len: usize) -> Vec<f64> {
        // Already in [0, 1].
        (0..len)
            .map(|i| 0.5 + 0.4 * (std::f64::consts::TAU * i as f64 / 25.0).sin())
            .collect()
    }

    #[test]
    fn log_and_batch_counts() {
        let (config, params) = tiny(2, 1);
        let ds = make_windows(&sine(85), 5).unwrap();
        assert_eq!(ds.len(), 80);
        let tc = TrainConfig {
            epochs: 50,
            batch_size: 32,
            ..TrainConfig::default()
        };
        let out = train(params, &config, &ds, &tc).unwrap();
        assert_eq!(out.logs.len(), 50);
        assert_eq!(out.logs.last().unwrap().epoch, 50);
        // ceil(80 / 32) = 3 Adam steps per epoch.
        assert_eq!(out.adam.t, 150);
    }

    #[test]
    fn seeded_runs_repeat_exactly() {
        let config = NetworkConfig {
            layer_units: vec![4, 3],
            dropout_rates: vec![0.3, 0.2],
            input_features: 1,
            seed: 9,
        };
        let ds = make_windows(&sine(60), 8).unwrap();
        let tc = TrainConfig {
            epochs: 3,
            batch_size: 7,
            ..TrainConfig::default()
        };
        let a = train(init_params(&config).unwrap(), &config, &ds, &tc).unwrap();
        let b = train(init_params(&config).unwrap(), &config, &ds, &tc).unwrap();
        let bits = |p: &NetworkParams| p.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.params), bits(&b.params));
        let losses = |o: &TrainOutcome| o.logs.iter().map(|l| l.loss.to_bits()).collect::<Vec<_>>();
        assert_eq!(losses(&a), losses(&b));
    }

    #[test]
    fn serial_and_parallel_agree_bitwise() {
        let config = NetworkConfig {
            layer_units: vec![5, 4],
            dropout_rates: vec![0.25, 0.5],
            input_features: 1,
            seed: 3,
        };
        let ds = make_windows(&sine(70), 10).unwrap();
        let base = TrainConfig {
            epochs: 2,
            batch_size: 16,
            ..TrainConfig::default()
        };
        let serial = TrainConfig {
            execution: Execution::Serial,
            ..base.clone()
        };
        let a = train(init_params(&config).unwrap(), &config, &ds, &base).unwrap();
        let b = train(init_params(&config).unwrap(), &config, &ds, &serial).unwrap();
        let bits = |p: &NetworkParams| p.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.params), bits(&b.params));
    }

    #[test]
    fn shuffle_is_a_permutation_per_epoch() {
        for epoch in 0..5 {
            let mut order = epoch_order(40, 7, epoch);
            order.sort_unstable();
            assert_eq!(order, (0..40).collect::<Vec<_>>());
        }
        assert_ne!(epoch_order(40, 7, 0), epoch_order(40, 7, 1));
    }

    #[test]
    fn overfits_noiseless_sine() {
        let (config, params) = tiny(8, 5);
        let ds = make_windows(&sine(200), 10).unwrap();
        let tc = TrainConfig {
            epochs: 30,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let out = train(params, &config, &ds, &tc).unwrap();
        let first = out.logs[0].loss;
        let last = out.logs.last().unwrap().loss;
        assert!(last < first / 10.0, "first {first} last {last}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let (config, params) = tiny(2, 1);
        let ds = make_windows(&sine(20), 5).unwrap();
        let zero_epochs = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(params.clone(), &config, &ds, &zero_epochs),
            Err(TrainingError::InvalidConfig(_))
        ));
        let zero_batch = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(train(params.clone(), &config, &ds, &zero_batch).is_err());
        let (_, wrong) = tiny(3, 1);
        assert!(matches!(
            train(wrong, &config, &ds, &TrainConfig::default()),
            Err(TrainingError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn clipping_limits_first_step() {
        let (config, params) = tiny(3, 2);
        let ds = make_windows(&sine(40), 5).unwrap();
        let tc = TrainConfig {
            epochs: 1,
            batch_size: 64,
            clip_norm: Some(1e-12),
            ..TrainConfig::default()
        };
        // Clipping rescales the gradient, which Adam's normalization undoes
        // for a single step; the run must still complete and stay finite.
        let out = train(params, &config, &ds, &tc).unwrap();
        assert!(out.params.all_finite());
    }
}
