use super::linalg::{dot, sigmoid};
use super::{LstmError, LstmLayerParams};

/// Hidden and cell state of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Gate activations of a single step.
#[derive(Debug, Clone, PartialEq)]
pub struct GateRecord {
    pub forget: Vec<f64>,
    pub input: Vec<f64>,
    pub candidate: Vec<f64>,
    pub output: Vec<f64>,
}

/// One LSTM step:
///
/// ```text
/// f  = sigmoid(W_f [h_prev, x] + b_f)
/// i  = sigmoid(W_i [h_prev, x] + b_i)
/// c~ = tanh(W_c [h_prev, x] + b_c)
/// o  = sigmoid(W_o [h_prev, x] + b_o)
/// c  = f * c_prev + i * c~
/// h  = o * tanh(c)
/// ```
pub fn lstm_cell_forward(
    params: &LstmLayerParams,
    x: &[f64],
    prev: &LstmState,
) -> Result<(LstmState, GateRecord), LstmError> {
    let hidden = params.hidden();
    if x.len() != params.input_size() || prev.h.len() != hidden || prev.c.len() != hidden {
        return Err(LstmError::ShapeMismatch(format!(
            "cell expects x[{}], h[{hidden}], c[{hidden}]; got x[{}], h[{}], c[{}]",
            params.input_size(),
            x.len(),
            prev.h.len(),
            prev.c.len()
        )));
    }
    let row_len = params.row_len();
    let w = params.weights();
    let b = params.bias();
    let pre = |r: usize| {
        let row = &w[r * row_len..(r + 1) * row_len];
        (dot(&row[hidden..], x) + b[r]) + dot(&row[..hidden], &prev.h)
    };
    let mut gates = GateRecord {
        forget: Vec::with_capacity(hidden),
        input: Vec::with_capacity(hidden),
        candidate: Vec::with_capacity(hidden),
        output: Vec::with_capacity(hidden),
    };
    let mut next = LstmState::zeros(hidden);
    for j in 0..hidden {
        let f = sigmoid(pre(j));
        let i = sigmoid(pre(hidden + j));
        let g = pre(2 * hidden + j).tanh();
        let o = sigmoid(pre(3 * hidden + j));
        let c = f * prev.c[j] + i * g;
        next.c[j] = c;
        next.h[j] = o * c.tanh();
        gates.forget.push(f);
        gates.input.push(i);
        gates.candidate.push(g);
        gates.output.push(o);
    }
    Ok((next, gates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::Gate;

    #[test]
    fn zero_weights_zero_state() {
        let p = LstmLayerParams::zeros(1, 3);
        let (s, g) = lstm_cell_forward(&p, &[0.7], &LstmState::zeros(3)).unwrap();
        assert!(g.forget.iter().chain(&g.input).chain(&g.output).all(|&v| v == 0.5));
        assert!(g.candidate.iter().all(|&v| v == 0.0));
        assert!(s.c.iter().chain(&s.h).all(|&v| v == 0.0));
    }

    #[test]
    fn zero_weights_carry_cell() {
        // f = o = 0.5, c~ = 0: c = 0.5 * 2 = 1, h = 0.5 * tanh(1).
        let p = LstmLayerParams::zeros(1, 1);
        let prev = LstmState {
            h: vec![0.0],
            c: vec![2.0],
        };
        let (s, _) = lstm_cell_forward(&p, &[-3.0], &prev).unwrap();
        assert!((s.c[0] - 1.0).abs() < 1e-9);
        assert!((s.h[0] - 0.380_797_078_0).abs() < 1e-9);
        assert!((s.h[0] - 0.5 * 1.0f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn saturated_forget_retains() {
        let mut p = LstmLayerParams::zeros(1, 1);
        p.gate_bias_mut(Gate::Forget).fill(100.0);
        let prev = LstmState {
            h: vec![0.0],
            c: vec![3.0],
        };
        let (s, _) = lstm_cell_forward(&p, &[1.0], &prev).unwrap();
        assert!((s.c[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch() {
        let p = LstmLayerParams::zeros(2, 3);
        assert!(matches!(
            lstm_cell_forward(&p, &[1.0], &LstmState::zeros(3)),
            Err(LstmError::ShapeMismatch(_))
        ));
        assert!(matches!(
            lstm_cell_forward(&p, &[1.0, 2.0], &LstmState::zeros(2)),
            Err(LstmError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn hand_computed_gates() {
        // Single unit, single input; every weight and bias distinct.
        let wf = [0.1, 0.2];
        let wi = [-0.3, 0.4];
        let wc = [0.5, -0.6];
        let wo = [0.7, 0.8];
        let (bf, bi, bc, bo) = (0.05, -0.05, 0.1, -0.1);
        let p = LstmLayerParams::from_gates(1, 1, [&wf, &wi, &wc, &wo], [&[bf], &[bi], &[bc], &[bo]])
            .unwrap();
        let (h0, c0, x) = (0.25, -0.5, 1.5);
        let s = |v: f64| 1.0 / (1.0 + (-v).exp());
        let f = s(wf[0] * h0 + wf[1] * x + bf);
        let i = s(wi[0] * h0 + wi[1] * x + bi);
        let g = (wc[0] * h0 + wc[1] * x + bc).tanh();
        let o = s(wo[0] * h0 + wo[1] * x + bo);
        let c = f * c0 + i * g;
        let h = o * c.tanh();
        let (state, gates) = lstm_cell_forward(&p, &[x], &LstmState { h: vec![h0], c: vec![c0] }).unwrap();
        assert!((gates.forget[0] - f).abs() < 1e-14);
        assert!((gates.input[0] - i).abs() < 1e-14);
        assert!((gates.candidate[0] - g).abs() < 1e-14);
        assert!((gates.output[0] - o).abs() < 1e-14);
        assert!((state.c[0] - c).abs() < 1e-14);
        assert!((state.h[0] - h).abs() < 1e-14);
    }
}
