use serde::{Deserialize, Serialize};

use super::{LstmError, NetworkConfig};
use crate::rng::SeededRng;

/// The four gate blocks, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Forget = 0,
    Input = 1,
    Candidate = 2,
    Output = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Forget, Gate::Input, Gate::Candidate, Gate::Output];
}

/// Weights of one LSTM layer.
///
/// All four gates share one row-major matrix of shape
/// `[4 * hidden, hidden + input]`: rows `g*hidden..(g+1)*hidden` belong to
/// gate `g` (forget, input, candidate, output) and each row is laid out over
/// the concatenation `[h_prev, x]`. The per-gate matrices `W_f`, `W_i`,
/// `W_c`, `W_o` are therefore contiguous sub-slices, as are `b_f..b_o` in
/// `bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    input_size: usize,
    hidden: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LstmLayerParams {
    pub fn zeros(input_size: usize, hidden: usize) -> Self {
        Self {
            input_size,
            hidden,
            weights: vec![0.0; 4 * hidden * (hidden + input_size)],
            bias: vec![0.0; 4 * hidden],
        }
    }

    /// Assembles a layer from per-gate blocks in the order f, i, c, o.
    pub fn from_gates(
        input_size: usize,
        hidden: usize,
        weights: [&[f64]; 4],
        biases: [&[f64]; 4],
    ) -> Result<Self, LstmError> {
        let block = hidden * (hidden + input_size);
        if weights.iter().any(|w| w.len() != block) || biases.iter().any(|b| b.len() != hidden) {
            return Err(LstmError::ShapeMismatch(format!(
                "gate blocks must be {hidden}x{} weights and {hidden} biases",
                hidden + input_size
            )));
        }
        Ok(Self {
            input_size,
            hidden,
            weights: weights.concat(),
            bias: biases.concat(),
        })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Row length of the fused weight matrix: `hidden + input`.
    pub fn row_len(&self) -> usize {
        self.hidden + self.input_size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    /// `[hidden, hidden + input]` block of `gate`.
    pub fn gate_weights(&self, gate: Gate) -> &[f64] {
        let block = self.hidden * self.row_len();
        let g = gate as usize;
        &self.weights[g * block..(g + 1) * block]
    }

    pub fn gate_weights_mut(&mut self, gate: Gate) -> &mut [f64] {
        let block = self.hidden * self.row_len();
        let g = gate as usize;
        &mut self.weights[g * block..(g + 1) * block]
    }

    pub fn gate_bias(&self, gate: Gate) -> &[f64] {
        let g = gate as usize;
        &self.bias[g * self.hidden..(g + 1) * self.hidden]
    }

    pub fn gate_bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let g = gate as usize;
        let h = self.hidden;
        &mut self.bias[g * h..(g + 1) * h]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Single-output linear head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams {
    pub w: Vec<f64>,
    pub b: f64,
}

/// All trainable parameters of the stacked network. Gradients use the same
/// container (see [`NetworkGrads`]).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<LstmLayerParams>,
    pub dense: DenseParams,
}

/// Gradient container; shape-identical to [`NetworkParams`].
pub type NetworkGrads = NetworkParams;

impl NetworkParams {
    pub fn zeros(config: &NetworkConfig) -> Self {
        let mut input = config.input_features;
        let layers = config
            .layer_units
            .iter()
            .map(|&h| {
                let layer = LstmLayerParams::zeros(input, h);
                input = h;
                layer
            })
            .collect();
        Self {
            layers,
            dense: DenseParams {
                w: vec![0.0; input],
                b: 0.0,
            },
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| LstmLayerParams::zeros(l.input_size, l.hidden))
                .collect(),
            dense: DenseParams {
                w: vec![0.0; self.dense.w.len()],
                b: 0.0,
            },
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LstmLayerParams::param_count).sum::<usize>() + self.dense.w.len() + 1
    }

    /// True if `self` has the layer shapes `config` describes.
    pub fn matches(&self, config: &NetworkConfig) -> bool {
        let mut input = config.input_features;
        self.layers.len() == config.layer_units.len()
            && self.layers.iter().zip(&config.layer_units).all(|(l, &h)| {
                let ok = l.input_size == input && l.hidden == h;
                input = h;
                ok
            })
            && self.dense.w.len() == input
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.input_size == b.input_size && a.hidden == b.hidden)
            && self.dense.w.len() == other.dense.w.len()
    }

    /// Parameter blocks in declared order: per layer `W_f, W_i, W_c, W_o`
    /// (as one fused slice) then `b_f, b_i, b_c, b_o`; finally the dense
    /// weights and the dense bias.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(2 * self.layers.len() + 2);
        for layer in &self.layers {
            out.push(&layer.weights);
            out.push(&layer.bias);
        }
        out.push(&self.dense.w);
        out.push(std::slice::from_ref(&self.dense.b));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(2 * self.layers.len() + 2);
        for layer in &mut self.layers {
            out.push(&mut layer.weights);
            out.push(&mut layer.bias);
        }
        out.push(&mut self.dense.w);
        out.push(std::slice::from_mut(&mut self.dense.b));
        out
    }

    /// Scalar at flat position `index` in declared order.
    pub fn get(&self, mut index: usize) -> Option<f64> {
        for block in self.blocks() {
            if index < block.len() {
                return Some(block[index]);
            }
            index -= block.len();
        }
        None
    }

    pub fn get_mut(&mut self, mut index: usize) -> Option<&mut f64> {
        for block in self.blocks_mut() {
            if index < block.len() {
                return Some(&mut block[index]);
            }
            index -= block.len();
        }
        None
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    /// `self += other`, element by element in declared order.
    pub fn add_assign(&mut self, other: &Self) {
        debug_assert!(self.same_shape(other));
        for (dst, src) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for block in self.blocks_mut() {
            for v in block {
                *v *= factor;
            }
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Glorot-uniform weights, zero biases except the forget-gate bias which
/// starts at 1.0. Draws come from `SeededRng::new(config.seed)` in declared
/// parameter order, so a seed fully determines the result.
pub fn init_params(config: &NetworkConfig) -> Result<NetworkParams, LstmError> {
    config.validate()?;
    let mut rng = SeededRng::new(config.seed);
    let mut params = NetworkParams::zeros(config);
    for layer in &mut params.layers {
        let fan_in = layer.row_len() as f64;
        let fan_out = layer.hidden as f64;
        let limit = (6.0 / (fan_in + fan_out)).sqrt();
        for w in &mut layer.weights {
            *w = rng.uniform(-limit, limit);
        }
        layer.gate_bias_mut(Gate::Forget).fill(1.0);
    }
    let limit = (6.0 / (params.dense.w.len() as f64 + 1.0)).sqrt();
    for w in &mut params.dense.w {
        *w = rng.uniform(-limit, limit);
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_params() -> NetworkParams {
        init_params(&NetworkConfig::default()).unwrap()
    }

    /// 4 * (in + hid + 1) * hid per layer plus hid + 1 for the head.
    fn formula_count(units: &[usize], input: usize) -> usize {
        let mut prev = input;
        let mut total = 0;
        for &h in units {
            total += 4 * (prev + h + 1) * h;
            prev = h;
        }
        total + prev + 1
    }

    #[test]
    fn default_param_count() {
        let p = default_params();
        assert_eq!(formula_count(&[50, 60, 80, 120], 1), 178_761);
        assert_eq!(p.param_count(), 178_761);
        assert_eq!(p.to_flat().len(), 178_761);
    }

    #[test]
    fn seeded_init_is_deterministic() {
        let a = default_params();
        let b = default_params();
        let bits = |p: &NetworkParams| p.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let other = init_params(&NetworkConfig {
            seed: 43,
            ..NetworkConfig::default()
        })
        .unwrap();
        assert_ne!(bits(&a), bits(&other));
    }

    #[test]
    fn bias_rule() {
        let p = default_params();
        for layer in &p.layers {
            assert!(layer.gate_bias(Gate::Forget).iter().all(|&b| b == 1.0));
            for g in [Gate::Input, Gate::Candidate, Gate::Output] {
                assert!(layer.gate_bias(g).iter().all(|&b| b == 0.0));
            }
        }
        assert_eq!(p.dense.b, 0.0);
    }

    #[test]
    fn weights_within_glorot_limit() {
        let p = default_params();
        for layer in &p.layers {
            let limit = (6.0 / (layer.row_len() + layer.hidden()) as f64).sqrt();
            assert!(layer.weights().iter().all(|w| w.abs() <= limit));
            // Not degenerate: spread should reach a decent fraction of the limit.
            let max = layer.weights().iter().fold(0.0f64, |m, w| m.max(w.abs()));
            assert!(max > 0.9 * limit);
        }
    }

    #[test]
    fn flat_index_round_trip() {
        let mut p = default_params();
        let flat = p.to_flat();
        for idx in [0, 1, 10_399, 10_400, 100_000, 178_759, 178_760] {
            assert_eq!(p.get(idx), Some(flat[idx]));
        }
        assert_eq!(p.get(178_761), None);
        *p.get_mut(178_760).unwrap() = 3.5;
        assert_eq!(p.dense.b, 3.5);
    }

    #[test]
    fn gate_blocks_are_contiguous_slices() {
        let h = 2;
        let input = 1;
        let n = h * (h + input);
        let w: Vec<Vec<f64>> = (0..4).map(|g| vec![g as f64; n]).collect();
        let b: Vec<Vec<f64>> = (0..4).map(|g| vec![10.0 + g as f64; h]).collect();
        let layer = LstmLayerParams::from_gates(
            input,
            h,
            [&w[0], &w[1], &w[2], &w[3]],
            [&b[0], &b[1], &b[2], &b[3]],
        )
        .unwrap();
        for g in Gate::ALL {
            assert_eq!(layer.gate_weights(g), w[g as usize].as_slice());
            assert_eq!(layer.gate_bias(g), b[g as usize].as_slice());
        }
        assert!(LstmLayerParams::from_gates(input, h, [&w[0], &w[1], &w[2], &[]], [&b[0]; 4]).is_err());
    }
}
