//! Sequence unrolling and backpropagation through time for one layer.

use super::linalg::{axpy, dot, gemm, sigmoid, MatMut, MatRef};
use super::{LstmError, LstmLayerParams, LstmState};

/// Everything the backward pass needs from a forward unroll of one layer.
///
/// `gates` holds the activated gates per step as `[T, 4 * hidden]` in block
/// order forget, input, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerCache {
    steps: usize,
    input_size: usize,
    hidden: usize,
    inputs: Vec<f64>,
    initial: LstmState,
    gates: Vec<f64>,
    cells: Vec<f64>,
    hidden_states: Vec<f64>,
}

impl LayerCache {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    /// Layer input at step `t`.
    pub fn input(&self, t: usize) -> &[f64] {
        &self.inputs[t * self.input_size..(t + 1) * self.input_size]
    }

    fn gate(&self, t: usize, block: usize) -> &[f64] {
        let h = self.hidden;
        let base = t * 4 * h + block * h;
        &self.gates[base..base + h]
    }

    pub fn forget(&self, t: usize) -> &[f64] {
        self.gate(t, 0)
    }

    pub fn input_gate(&self, t: usize) -> &[f64] {
        self.gate(t, 1)
    }

    pub fn candidate(&self, t: usize) -> &[f64] {
        self.gate(t, 2)
    }

    pub fn output_gate(&self, t: usize) -> &[f64] {
        self.gate(t, 3)
    }

    pub fn cell(&self, t: usize) -> &[f64] {
        &self.cells[t * self.hidden..(t + 1) * self.hidden]
    }

    pub fn hidden_state(&self, t: usize) -> &[f64] {
        &self.hidden_states[t * self.hidden..(t + 1) * self.hidden]
    }

    /// All hidden states, `[T, hidden]`.
    pub fn hidden_states(&self) -> &[f64] {
        &self.hidden_states
    }

    pub fn last_hidden(&self) -> &[f64] {
        self.hidden_state(self.steps - 1)
    }

    fn prev_cell(&self, t: usize) -> &[f64] {
        if t == 0 {
            &self.initial.c
        } else {
            self.cell(t - 1)
        }
    }
}

/// Unrolls the layer over `sequence` (`[T, input]`, row-major).
///
/// The input projection `W_x x_t` for all steps is computed up front as one
/// matrix product; the recurrent term is added step by step.
pub(crate) fn unroll(
    params: &LstmLayerParams,
    sequence: &[f64],
    initial: &LstmState,
) -> Result<LayerCache, LstmError> {
    let input_size = params.input_size();
    let hidden = params.hidden();
    if input_size == 0 || !sequence.len().is_multiple_of(input_size) {
        return Err(LstmError::ShapeMismatch(format!(
            "sequence of {} values is not a whole number of {input_size}-wide steps",
            sequence.len()
        )));
    }
    if initial.h.len() != hidden || initial.c.len() != hidden {
        return Err(LstmError::ShapeMismatch(format!(
            "initial state must have {hidden} units"
        )));
    }
    let steps = sequence.len() / input_size;
    if steps == 0 {
        return Err(LstmError::EmptySequence);
    }
    let row_len = params.row_len();
    let width = 4 * hidden;
    let w = params.weights();
    let bias = params.bias();

    let mut gates = vec![0.0; steps * width];
    gemm(
        1.0,
        MatRef { data: sequence, rows: steps, cols: input_size, row_stride: input_size, col_stride: 1 },
        MatRef { data: &w[hidden..], rows: input_size, cols: width, row_stride: 1, col_stride: row_len },
        0.0,
        MatMut { data: &mut gates, rows: steps, cols: width, row_stride: width, col_stride: 1 },
    );

    let mut cells = vec![0.0; steps * hidden];
    let mut hs = vec![0.0; steps * hidden];
    for t in 0..steps {
        let (h_done, h_rest) = hs.split_at_mut(t * hidden);
        let h_prev: &[f64] = if t == 0 { &initial.h } else { &h_done[(t - 1) * hidden..] };
        let z = &mut gates[t * width..(t + 1) * width];
        for (r, zr) in z.iter_mut().enumerate() {
            *zr = (*zr + bias[r]) + dot(&w[r * row_len..r * row_len + hidden], h_prev);
        }
        let (c_done, c_rest) = cells.split_at_mut(t * hidden);
        let c_prev: &[f64] = if t == 0 { &initial.c } else { &c_done[(t - 1) * hidden..] };
        let c_now = &mut c_rest[..hidden];
        let h_now = &mut h_rest[..hidden];
        for j in 0..hidden {
            let f = sigmoid(z[j]);
            let i = sigmoid(z[hidden + j]);
            let g = z[2 * hidden + j].tanh();
            let o = sigmoid(z[3 * hidden + j]);
            z[j] = f;
            z[hidden + j] = i;
            z[2 * hidden + j] = g;
            z[3 * hidden + j] = o;
            let c = f * c_prev[j] + i * g;
            c_now[j] = c;
            h_now[j] = o * c.tanh();
        }
    }
    Ok(LayerCache {
        steps,
        input_size,
        hidden,
        inputs: sequence.to_vec(),
        initial: initial.clone(),
        gates,
        cells,
        hidden_states: hs,
    })
}

/// Runs the layer over a `[T, input]` sequence.
///
/// Returns every hidden state (`[T, hidden]`) when `return_sequences` is set,
/// otherwise only the final one, together with the forward cache.
pub fn lstm_layer_forward(
    params: &LstmLayerParams,
    sequence: &[f64],
    initial: &LstmState,
    return_sequences: bool,
) -> Result<(Vec<f64>, LayerCache), LstmError> {
    let cache = unroll(params, sequence, initial)?;
    let out = if return_sequences {
        cache.hidden_states.clone()
    } else {
        cache.last_hidden().to_vec()
    };
    Ok((out, cache))
}

/// Backpropagation through time for one layer.
///
/// `d_hidden` is the loss gradient with respect to every hidden output
/// (`[T, hidden]`; zeros where an output is unused). Parameter gradients are
/// accumulated into `grads`. Returns the gradient with respect to the layer
/// input when `want_input_grad` is set.
pub(crate) fn backward(
    params: &LstmLayerParams,
    cache: &LayerCache,
    d_hidden: &[f64],
    grads: &mut LstmLayerParams,
    want_input_grad: bool,
) -> Option<Vec<f64>> {
    let hidden = cache.hidden;
    let input_size = cache.input_size;
    let steps = cache.steps;
    let width = 4 * hidden;
    let row_len = params.row_len();
    let w = params.weights();
    debug_assert_eq!(d_hidden.len(), steps * hidden);

    // Pre-activation gradients for every step, [T, 4 * hidden].
    let mut dz = vec![0.0; steps * width];
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    for t in (0..steps).rev() {
        let f = cache.forget(t);
        let i = cache.input_gate(t);
        let g = cache.candidate(t);
        let o = cache.output_gate(t);
        let c = cache.cell(t);
        let c_prev = cache.prev_cell(t);
        let dzt = &mut dz[t * width..(t + 1) * width];
        for j in 0..hidden {
            let dh = d_hidden[t * hidden + j] + dh_next[j];
            let tc = c[j].tanh();
            let d_o = dh * tc;
            let dc = dh * o[j] * (1.0 - tc * tc) + dc_next[j];
            let d_f = dc * c_prev[j];
            let d_i = dc * g[j];
            let d_g = dc * i[j];
            dzt[j] = d_f * f[j] * (1.0 - f[j]);
            dzt[hidden + j] = d_i * i[j] * (1.0 - i[j]);
            dzt[2 * hidden + j] = d_g * (1.0 - g[j] * g[j]);
            dzt[3 * hidden + j] = d_o * o[j] * (1.0 - o[j]);
            dc_next[j] = dc * f[j];
        }
        dh_next.fill(0.0);
        for (r, &d) in dzt.iter().enumerate() {
            axpy(&mut dh_next, d, &w[r * row_len..r * row_len + hidden]);
        }
    }

    let dz_t = MatRef { data: &dz, rows: width, cols: steps, row_stride: 1, col_stride: width };
    // dW_x += dZ^T X
    gemm(
        1.0,
        dz_t,
        MatRef { data: &cache.inputs, rows: steps, cols: input_size, row_stride: input_size, col_stride: 1 },
        1.0,
        MatMut { data: &mut grads.weights_mut()[hidden..], rows: width, cols: input_size, row_stride: row_len, col_stride: 1 },
    );
    // dW_h += dZ^T H_prev, with H_prev = [h_0; h_1 .. h_{T-1}]
    let mut h_prev = Vec::with_capacity(steps * hidden);
    h_prev.extend_from_slice(&cache.initial.h);
    h_prev.extend_from_slice(&cache.hidden_states[..(steps - 1) * hidden]);
    gemm(
        1.0,
        dz_t,
        MatRef { data: &h_prev, rows: steps, cols: hidden, row_stride: hidden, col_stride: 1 },
        1.0,
        MatMut { data: grads.weights_mut(), rows: width, cols: hidden, row_stride: row_len, col_stride: 1 },
    );
    let db = grads.bias_mut();
    for t in 0..steps {
        for (b, d) in db.iter_mut().zip(&dz[t * width..(t + 1) * width]) {
            *b += d;
        }
    }

    want_input_grad.then(|| {
        let mut dx = vec![0.0; steps * input_size];
        gemm(
            1.0,
            MatRef { data: &dz, rows: steps, cols: width, row_stride: width, col_stride: 1 },
            MatRef { data: &w[hidden..], rows: width, cols: input_size, row_stride: row_len, col_stride: 1 },
            0.0,
            MatMut { data: &mut dx, rows: steps, cols: input_size, row_stride: input_size, col_stride: 1 },
        );
        dx
    })
}
