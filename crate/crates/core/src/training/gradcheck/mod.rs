mod dd;

use std::collections::BTreeSet;

use self::dd::Dd;
use super::{mse_grad, PredictionSet, TrainingError};
use crate::lstm::{network_backward, network_forward, Mode, NetworkConfig, NetworkParams};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `max |a - f| / max(|a|, |f|, 1e-8)` over the probed parameters.
    pub max_relative_error: f64,
    /// Flat index of the worst parameter, if any was probed.
    pub worst_index: Option<usize>,
    pub probes: usize,
}

/// Batch MSE of the network at `params`, in double-double.
fn extended_loss(params: &NetworkParams, inputs: &[&[f64]], targets: &[f64]) -> Dd {
    let sum = inputs.iter().zip(targets).fold(Dd::from(0.0), |acc, (x, &y)| {
        let r = dd::predict(params, x) - Dd::from(y);
        acc + r * r
    });
    sum / Dd::from(targets.len() as f64)
}

/// Compares backpropagated gradients of the batch MSE against central
/// differences `(L(p + h) - L(p - h)) / 2h` for `probe_count` distinct
/// parameters picked with `seed` (all of them if `probe_count` covers the
/// whole network). Dropout is switched off for the comparison. The
/// perturbed losses are evaluated in double-double precision so that the
/// difference quotient is not dominated by f64 rounding.
pub fn finite_diff_gradcheck(
    params: &NetworkParams,
    config: &NetworkConfig,
    inputs: &[&[f64]],
    targets: &[f64],
    probe_count: usize,
    step: f64,
    seed: u64,
) -> Result<GradCheckReport, TrainingError> {
    let config = config.without_dropout();
    if probe_count == 0 {
        return Ok(GradCheckReport {
            max_relative_error: 0.0,
            worst_index: None,
            probes: 0,
        });
    }
    let fwd = network_forward(params, &config, inputs, Mode::Train, &mut SeededRng::new(0))?;
    let set = PredictionSet::new(targets.to_vec(), fwd.predictions)?;
    let analytic = network_backward(params, &config, &fwd.caches, &mse_grad(&set))?;

    let total = params.param_count();
    let probes: Vec<usize> = if probe_count >= total {
        (0..total).collect()
    } else {
        let mut rng = SeededRng::new(seed);
        let mut chosen = BTreeSet::new();
        while chosen.len() < probe_count {
            chosen.insert(rng.below(total as u64) as usize);
        }
        chosen.into_iter().collect()
    };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_index: None,
        probes: probes.len(),
    };
    let mut shifted = params.clone();
    for &idx in &probes {
        let original = params.get(idx).expect("probe index in range");
        let (up, down) = (original + step, original - step);
        *shifted.get_mut(idx).expect("probe index in range") = up;
        let plus = extended_loss(&shifted, inputs, targets);
        *shifted.get_mut(idx).expect("probe index in range") = down;
        let minus = extended_loss(&shifted, inputs, targets);
        *shifted.get_mut(idx).expect("probe index in range") = original;

        let quotient = (plus - minus) / (Dd::from(up) - Dd::from(down));
        let numeric = quotient.hi + quotient.lo;
        let a = analytic.get(idx).expect("probe index in range");
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        if report.worst_index.is_none() || rel > report.max_relative_error {
            report.max_relative_error = rel;
            report.worst_index = Some(idx);
        }
    }
    Ok(report)
}
