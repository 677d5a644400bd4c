use serde::{Deserialize, Serialize};

use super::TrainingError;
use crate::lstm::NetworkParams;

/// A parameter container Adam can walk block by block.
pub trait ParamSet: Clone {
    fn blocks(&self) -> Vec<&[f64]>;
    fn blocks_mut(&mut self) -> Vec<&mut [f64]>;
    fn zeros_like(&self) -> Self;
}

impl ParamSet for NetworkParams {
    fn blocks(&self) -> Vec<&[f64]> {
        NetworkParams::blocks(self)
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        NetworkParams::blocks_mut(self)
    }

    fn zeros_like(&self) -> Self {
        NetworkParams::zeros_like(self)
    }
}

impl ParamSet for Vec<f64> {
    fn blocks(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }

    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
}

fn same_layout<P: ParamSet>(a: &P, b: &P) -> bool {
    let (a, b) = (a.blocks(), b.blocks());
    a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.len() == y.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators and step counter for Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<P> {
    pub m: P,
    pub v: P,
    pub t: u64,
    pub hyper: AdamHyper,
}

impl<P: ParamSet> AdamState<P> {
    pub fn new(like: &P, hyper: AdamHyper) -> Self {
        Self {
            m: like.zeros_like(),
            v: like.zeros_like(),
            t: 0,
            hyper,
        }
    }
}

/// One bias-corrected Adam update:
///
/// ```text
/// t += 1
/// m = b1 m + (1 - b1) g
/// v = b2 v + (1 - b2) g^2
/// p -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// ```
pub fn adam_step<P: ParamSet>(
    state: &mut AdamState<P>,
    params: &mut P,
    grads: &P,
) -> Result<(), TrainingError> {
    if !same_layout(params, grads) || !same_layout(params, &state.m) {
        return Err(TrainingError::ShapeMismatch(
            "parameters, gradients and Adam moments differ in shape".into(),
        ));
    }
    let AdamHyper {
        lr,
        beta1,
        beta2,
        epsilon,
    } = state.hyper;
    state.t += 1;
    let step = i32::try_from(state.t).unwrap_or(i32::MAX);
    let correct1 = 1.0 - beta1.powi(step);
    let correct2 = 1.0 - beta2.powi(step);
    let m_blocks = state.m.blocks_mut();
    let v_blocks = state.v.blocks_mut();
    let blocks = params.blocks_mut().into_iter().zip(grads.blocks()).zip(m_blocks.into_iter().zip(v_blocks));
    for ((p, g), (m, v)) in blocks {
        for k in 0..p.len() {
            let gk = g[k];
            m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
            v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
            let m_hat = m[k] / correct1;
            let v_hat = v[k] / correct2;
            p[k] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_no_change() {
        let mut p = vec![1.0, -2.0, 3.0];
        let mut s = AdamState::new(&p, AdamHyper::default());
        adam_step(&mut s, &mut p, &vec![0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        let hyper = AdamHyper::default();
        for g in [1e-3, 0.5, -4.0, 123.0] {
            let mut p = vec![0.0];
            let mut s = AdamState::new(&p, hyper);
            adam_step(&mut s, &mut p, &vec![g]).unwrap();
            let expected = -hyper.lr * g / (g.abs() + hyper.epsilon);
            assert!((p[0] - expected).abs() < 1e-15);
            assert!((p[0].abs() - hyper.lr).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_gradient_trajectory() {
        // Hand-run scalar recurrence, g = 2 for three steps.
        let (lr, b1, b2, eps) = (1e-3, 0.9, 0.999, 1e-8);
        let mut m = 0.0f64;
        let mut v = 0.0f64;
        let mut theta = 0.5f64;
        let mut expected = Vec::new();
        for t in 1..=3 {
            m = b1 * m + (1.0 - b1) * 2.0;
            v = b2 * v + (1.0 - b2) * 4.0;
            let m_hat = m / (1.0 - b1.powi(t));
            let v_hat = v / (1.0 - b2.powi(t));
            theta -= lr * m_hat / (v_hat.sqrt() + eps);
            expected.push(theta);
        }
        let mut p = vec![0.5];
        let mut s = AdamState::new(&p, AdamHyper::default());
        for want in expected {
            adam_step(&mut s, &mut p, &vec![2.0]).unwrap();
            assert!((p[0] - want).abs() < 1e-15, "{} vs {want}", p[0]);
        }
        // With a constant gradient the bias-corrected step stays at lr.
        assert!((p[0] - (0.5 - 3.0 * lr)).abs() < 1e-9);
        assert_eq!(s.t, 3);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = vec![0.0, 1.0];
        let mut s = AdamState::new(&p, AdamHyper::default());
        assert!(matches!(
            adam_step(&mut s, &mut p, &vec![1.0]),
            Err(TrainingError::ShapeMismatch(_))
        ));
        assert_eq!(s.t, 0);
    }

    proptest! {
        #[test]
        fn first_update_bounded(g in prop::collection::vec(-1e3..1e3f64, 1..20)) {
            let hyper = AdamHyper::default();
            let mut p = vec![0.0; g.len()];
            let mut s = AdamState::new(&p, hyper);
            adam_step(&mut s, &mut p, &g).unwrap();
            for x in &p {
                prop_assert!(x.abs() <= hyper.lr * (1.0 + 1e-6));
            }
            prop_assert!(s.v.iter().all(|&v| v >= 0.0));
        }
    }
}
