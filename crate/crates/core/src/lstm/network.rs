//! The stacked network: LSTM layers with dropout between them and a
//! single-unit dense head on the last hidden state.

use super::dropout::dropout_mask;
use super::layer::{self, LayerCache};
use super::linalg::dot;
use super::{LstmError, LstmState, Mode, NetworkConfig, NetworkGrads, NetworkParams};
use crate::rng::SeededRng;

/// Intermediates of one sample's forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    mode: Mode,
    layers: Vec<LayerCache>,
    /// Dropout multipliers on each layer's output: `[T, hidden]` for
    /// sequence-returning layers, `[hidden]` for the last one. Empty in
    /// inference mode.
    masks: Vec<Vec<f64>>,
    dense_input: Vec<f64>,
    prediction: f64,
}

impl ForwardCache {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn layers(&self) -> &[LayerCache] {
        &self.layers
    }

    pub fn masks(&self) -> &[Vec<f64>] {
        &self.masks
    }

    pub fn prediction(&self) -> f64 {
        self.prediction
    }
}

#[derive(Debug, Clone)]
pub struct BatchForward {
    pub predictions: Vec<f64>,
    /// One cache per sample in training mode; empty in inference mode.
    pub caches: Vec<ForwardCache>,
}

fn check_shapes(params: &NetworkParams, config: &NetworkConfig) -> Result<(), LstmError> {
    config.validate()?;
    if params.matches(config) {
        Ok(())
    } else {
        Err(LstmError::ShapeMismatch(
            "parameters do not match the network configuration".into(),
        ))
    }
}

/// Forward pass for one input sequence (`[T, input_features]`). Dropout masks
/// are drawn from `rng` in training mode; `rng` is unused for inference.
pub(crate) fn sample_forward(
    params: &NetworkParams,
    config: &NetworkConfig,
    sequence: &[f64],
    mode: Mode,
    rng: &mut SeededRng,
) -> Result<ForwardCache, LstmError> {
    let depth = params.layers.len();
    let mut layers = Vec::with_capacity(depth);
    let mut masks = Vec::new();
    let mut current = sequence.to_vec();
    let mut dense_input = Vec::new();
    for (idx, (lp, &rate)) in params.layers.iter().zip(&config.dropout_rates).enumerate() {
        let cache = layer::unroll(lp, &current, &LstmState::zeros(lp.hidden()))?;
        let is_last = idx + 1 == depth;
        let mut out = if is_last {
            cache.last_hidden().to_vec()
        } else {
            cache.hidden_states().to_vec()
        };
        if mode == Mode::Train {
            let mask = dropout_mask(out.len(), rate, rng);
            for (v, m) in out.iter_mut().zip(&mask) {
                *v *= m;
            }
            masks.push(mask);
        }
        layers.push(cache);
        if is_last {
            dense_input = out;
        } else {
            current = out;
        }
    }
    let prediction = dot(&params.dense.w, &dense_input) + params.dense.b;
    Ok(ForwardCache {
        mode,
        layers,
        masks,
        dense_input,
        prediction,
    })
}

/// Gradient of `d_prediction * prediction` with respect to every parameter.
pub(crate) fn sample_backward(
    params: &NetworkParams,
    cache: &ForwardCache,
    d_prediction: f64,
) -> NetworkGrads {
    let mut grads = params.zeros_like();
    for (g, x) in grads.dense.w.iter_mut().zip(&cache.dense_input) {
        *g = d_prediction * x;
    }
    grads.dense.b = d_prediction;

    let depth = params.layers.len();
    let last = &cache.layers[depth - 1];
    let steps = last.steps();
    let hidden = last.hidden();
    let mut d_hidden = vec![0.0; steps * hidden];
    let tail = &mut d_hidden[(steps - 1) * hidden..];
    for (j, d) in tail.iter_mut().enumerate() {
        *d = d_prediction * params.dense.w[j] * cache.masks[depth - 1][j];
    }
    for l in (0..depth).rev() {
        let d_input = layer::backward(
            &params.layers[l],
            &cache.layers[l],
            &d_hidden,
            &mut grads.layers[l],
            l > 0,
        );
        if let Some(mut d_input) = d_input {
            for (d, m) in d_input.iter_mut().zip(&cache.masks[l - 1]) {
                *d *= m;
            }
            d_hidden = d_input;
        }
    }
    grads
}

fn batch_steps(config: &NetworkConfig, batch: &[&[f64]]) -> Result<usize, LstmError> {
    let first = batch.first().map_or(0, |s| s.len());
    if batch.iter().any(|s| s.len() != first) {
        return Err(LstmError::ShapeMismatch(
            "all sequences in a batch must have the same length".into(),
        ));
    }
    if first == 0 {
        return Err(LstmError::EmptySequence);
    }
    if !first.is_multiple_of(config.input_features) {
        return Err(LstmError::ShapeMismatch(format!(
            "sequence length {first} is not a multiple of {} features",
            config.input_features
        )));
    }
    Ok(first / config.input_features)
}

/// Forward pass over a batch of equal-length sequences, each `[T, features]`
/// flattened row-major.
///
/// In training mode every sample gets its own dropout generator seeded from
/// successive `rng` words (sample order), so results do not depend on how
/// samples are scheduled.
pub fn network_forward(
    params: &NetworkParams,
    config: &NetworkConfig,
    batch: &[&[f64]],
    mode: Mode,
    rng: &mut SeededRng,
) -> Result<BatchForward, LstmError> {
    check_shapes(params, config)?;
    if batch.is_empty() {
        return Ok(BatchForward {
            predictions: Vec::new(),
            caches: Vec::new(),
        });
    }
    batch_steps(config, batch)?;
    let mut predictions = Vec::with_capacity(batch.len());
    let mut caches = Vec::new();
    for seq in batch {
        let mut sample_rng = match mode {
            Mode::Train => SeededRng::new(rng.next_u64()),
            Mode::Inference => SeededRng::new(0),
        };
        let cache = sample_forward(params, config, seq, mode, &mut sample_rng)?;
        predictions.push(cache.prediction);
        if mode == Mode::Train {
            caches.push(cache);
        }
    }
    Ok(BatchForward {
        predictions,
        caches,
    })
}

/// Backpropagation through the whole network.
///
/// `d_predictions[i]` is the derivative of the batch loss with respect to
/// prediction `i` (for the mean squared error this already carries the
/// `1/B` factor, see `training::mse_grad`). Per-sample gradients are summed
/// in sample index order.
pub fn network_backward(
    params: &NetworkParams,
    config: &NetworkConfig,
    caches: &[ForwardCache],
    d_predictions: &[f64],
) -> Result<NetworkGrads, LstmError> {
    check_shapes(params, config)?;
    if caches.len() != d_predictions.len() {
        return Err(LstmError::StaleCache(format!(
            "{} caches for {} upstream gradients",
            caches.len(),
            d_predictions.len()
        )));
    }
    for cache in caches {
        if cache.mode != Mode::Train {
            return Err(LstmError::StaleCache("cache comes from an inference pass".into()));
        }
        let shapes_ok = cache.layers.len() == params.layers.len()
            && cache.masks.len() == params.layers.len()
            && cache
                .layers
                .iter()
                .zip(&params.layers)
                .all(|(c, p)| c.hidden() == p.hidden() && c.input_size() == p.input_size());
        if !shapes_ok {
            return Err(LstmError::StaleCache(
                "cache shapes do not match the parameters".into(),
            ));
        }
    }
    let mut total = params.zeros_like();
    for (cache, &d) in caches.iter().zip(d_predictions) {
        total.add_assign(&sample_backward(params, cache, d));
    }
    Ok(total)
}

/// Inference-mode prediction for a single sequence.
pub fn predict_one(
    params: &NetworkParams,
    config: &NetworkConfig,
    sequence: &[f64],
) -> Result<f64, LstmError> {
    check_shapes(params, config)?;
    batch_steps(config, &[sequence])?;
    let cache = sample_forward(params, config, sequence, Mode::Inference, &mut SeededRng::new(0))?;
    Ok(cache.prediction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::{init_params, lstm_layer_forward};

    fn small_config(units: Vec<usize>, rates: Vec<f64>, seed: u64) -> NetworkConfig {
        NetworkConfig {
            layer_units: units,
            dropout_rates: rates,
            input_features: 1,
            seed,
        }
    }

    fn ramp(len: usize, offset: f64) -> Vec<f64> {
        (0..len).map(|i| offset + 0.01 * i as f64).collect()
    }

    #[test]
    fn default_batch_shape() {
        let config = NetworkConfig::default();
        let params = init_params(&config).unwrap();
        let seqs: Vec<Vec<f64>> = (0..4).map(|b| ramp(100, b as f64 * 0.1)).collect();
        let batch: Vec<&[f64]> = seqs.iter().map(Vec::as_slice).collect();
        let out = network_forward(&params, &config, &batch, Mode::Inference, &mut SeededRng::new(0)).unwrap();
        assert_eq!(out.predictions.len(), 4);
        assert!(out.caches.is_empty());
        assert!(out.predictions.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn identical_inputs_identical_outputs() {
        let config = small_config(vec![5, 3], vec![0.3, 0.3], 4);
        let params = init_params(&config).unwrap();
        let s = ramp(12, 0.2);
        let batch = [s.as_slice(), s.as_slice(), s.as_slice()];
        let out = network_forward(&params, &config, &batch, Mode::Inference, &mut SeededRng::new(0)).unwrap();
        assert_eq!(out.predictions[0].to_bits(), out.predictions[1].to_bits());
        assert_eq!(out.predictions[1].to_bits(), out.predictions[2].to_bits());
        let again = network_forward(&params, &config, &batch, Mode::Inference, &mut SeededRng::new(9)).unwrap();
        assert_eq!(out.predictions, again.predictions);
    }

    #[test]
    fn single_layer_matches_manual_composition() {
        let config = small_config(vec![2], vec![0.0], 11);
        let mut params = init_params(&config).unwrap();
        for w in params.layers[0].weights_mut() {
            *w *= 0.01;
        }
        params.dense.b = 0.25;
        let s = ramp(6, -0.3);
        let (h, _) = lstm_layer_forward(&params.layers[0], &s, &LstmState::zeros(2), false).unwrap();
        let manual = params.dense.w[0] * h[0] + params.dense.w[1] * h[1] + params.dense.b;
        let got = predict_one(&params, &config, &s).unwrap();
        assert!((got - manual).abs() < 1e-14);
    }

    #[test]
    fn zero_dropout_train_equals_inference() {
        let config = small_config(vec![4, 3], vec![0.0, 0.0], 2);
        let params = init_params(&config).unwrap();
        let seqs: Vec<Vec<f64>> = (0..3).map(|b| ramp(7, b as f64)).collect();
        let batch: Vec<&[f64]> = seqs.iter().map(Vec::as_slice).collect();
        let train = network_forward(&params, &config, &batch, Mode::Train, &mut SeededRng::new(1)).unwrap();
        let infer = network_forward(&params, &config, &batch, Mode::Inference, &mut SeededRng::new(1)).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&train.predictions), bits(&infer.predictions));
    }

    #[test]
    fn dropout_changes_training_output_only() {
        let config = small_config(vec![6, 6], vec![0.5, 0.5], 2);
        let params = init_params(&config).unwrap();
        let s = ramp(10, 0.1);
        let infer = predict_one(&params, &config, &s).unwrap();
        let train = network_forward(&params, &config, &[&s], Mode::Train, &mut SeededRng::new(3)).unwrap();
        assert_ne!(train.predictions[0], infer);
        let masks = train.caches[0].masks();
        assert_eq!(masks[0].len(), 10 * 6);
        assert_eq!(masks[1].len(), 6);
    }

    #[test]
    fn zero_upstream_gradient() {
        let config = small_config(vec![3, 2], vec![0.2, 0.1], 5);
        let params = init_params(&config).unwrap();
        let s = ramp(5, 0.0);
        let fwd = network_forward(&params, &config, &[&s, &s], Mode::Train, &mut SeededRng::new(3)).unwrap();
        let grads = network_backward(&params, &config, &fwd.caches, &[0.0, 0.0]).unwrap();
        assert!(grads.to_flat().iter().all(|&g| g == 0.0));
        assert!(grads.same_shape(&params));
    }

    #[test]
    fn stale_cache_detection() {
        let config = small_config(vec![3], vec![0.0], 5);
        let params = init_params(&config).unwrap();
        let s = ramp(5, 0.0);
        let fwd = network_forward(&params, &config, &[&s], Mode::Train, &mut SeededRng::new(3)).unwrap();
        assert!(matches!(
            network_backward(&params, &config, &fwd.caches, &[1.0, 2.0]),
            Err(LstmError::StaleCache(_))
        ));
        let other = small_config(vec![3, 2], vec![0.0, 0.0], 5);
        let other_params = init_params(&other).unwrap();
        assert!(matches!(
            network_backward(&other_params, &other, &fwd.caches, &[1.0]),
            Err(LstmError::StaleCache(_))
        ));
        let inference = sample_forward(&params, &config, &s, Mode::Inference, &mut SeededRng::new(0)).unwrap();
        assert!(matches!(
            network_backward(&params, &config, &[inference], &[1.0]),
            Err(LstmError::StaleCache(_))
        ));
    }

    #[test]
    fn shape_errors() {
        let config = small_config(vec![3], vec![0.0], 5);
        let params = init_params(&config).unwrap();
        let a = ramp(5, 0.0);
        let b = ramp(4, 0.0);
        let mut rng = SeededRng::new(0);
        assert!(matches!(
            network_forward(&params, &config, &[&a, &b], Mode::Inference, &mut rng),
            Err(LstmError::ShapeMismatch(_))
        ));
        let wrong = small_config(vec![4], vec![0.0], 5);
        assert!(matches!(
            network_forward(&params, &wrong, &[&a], Mode::Inference, &mut rng),
            Err(LstmError::ShapeMismatch(_))
        ));
    }

    /// Central differences on every parameter of a 1-unit, T=2 network.
    #[test]
    fn tiny_network_gradients_exact() {
        let config = small_config(vec![1], vec![0.0], 8);
        let params = init_params(&config).unwrap();
        let s = [0.4, -0.7];
        let target = 0.3;
        let loss = |p: &NetworkParams| {
            let y = predict_one(p, &config, &s).unwrap();
            (y - target).powi(2)
        };
        let fwd = network_forward(&params, &config, &[&s], Mode::Train, &mut SeededRng::new(0)).unwrap();
        let d = 2.0 * (fwd.predictions[0] - target);
        let grads = network_backward(&params, &config, &fwd.caches, &[d]).unwrap();
        let h = 1e-5;
        for idx in 0..params.param_count() {
            let mut plus = params.clone();
            *plus.get_mut(idx).unwrap() += h;
            let mut minus = params.clone();
            *minus.get_mut(idx).unwrap() -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let a = grads.get(idx).unwrap();
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
            assert!(rel < 1e-6, "param {idx}: analytic {a} fd {fd} rel {rel}");
        }
    }
}
