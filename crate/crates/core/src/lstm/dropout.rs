use super::{LstmError, Mode};
use crate::rng::SeededRng;

/// Inverted dropout.
///
/// In training mode each element is zeroed independently with probability
/// `rate` and survivors are scaled by `1 / (1 - rate)`; the returned mask holds
/// the per-element multiplier (0 or the scale). Inference mode is the identity
/// and returns no mask.
pub fn dropout_apply(
    values: &[f64],
    rate: f64,
    mode: Mode,
    rng: &mut SeededRng,
) -> Result<(Vec<f64>, Option<Vec<f64>>), LstmError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(LstmError::BadRate(rate));
    }
    match mode {
        Mode::Inference => Ok((values.to_vec(), None)),
        Mode::Train => {
            let mask = dropout_mask(values.len(), rate, rng);
            let out = values.iter().zip(&mask).map(|(v, m)| v * m).collect();
            Ok((out, Some(mask)))
        }
    }
}

/// Multipliers for `len` elements. A zero rate keeps everything (multiplier
/// exactly 1.0) and consumes no randomness.
pub(crate) fn dropout_mask(len: usize, rate: f64, rng: &mut SeededRng) -> Vec<f64> {
    if rate == 0.0 {
        return vec![1.0; len];
    }
    let keep_scale = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.next_f64() < rate { 0.0 } else { keep_scale })
        .collect()
}
