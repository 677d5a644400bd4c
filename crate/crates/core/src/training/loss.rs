use super::TrainingError;

/// Paired actual and predicted values.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    y: Vec<f64>,
    y_hat: Vec<f64>,
}

impl PredictionSet {
    pub fn new(y: Vec<f64>, y_hat: Vec<f64>) -> Result<Self, TrainingError> {
        if y.len() != y_hat.len() {
            return Err(TrainingError::LengthMismatch {
                actual: y.len(),
                predicted: y_hat.len(),
            });
        }
        if y.is_empty() {
            return Err(TrainingError::EmptySet);
        }
        Ok(Self { y, y_hat })
    }

    pub fn actual(&self) -> &[f64] {
        &self.y
    }

    pub fn predicted(&self) -> &[f64] {
        &self.y_hat
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    /// Always false; construction rejects empty sets.
    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// `y_i - y_hat_i`
    pub fn residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.y.iter().zip(&self.y_hat).map(|(a, p)| a - p)
    }
}

/// Mean squared error, `(1/n) * sum (y_i - y_hat_i)^2`.
pub fn mse_loss(p: &PredictionSet) -> f64 {
    p.residuals().map(|r| r * r).sum::<f64>() / p.len() as f64
}

/// Derivative of [`mse_loss`] with respect to each prediction:
/// `(2/n) * (y_hat_i - y_i)`.
pub fn mse_grad(p: &PredictionSet) -> Vec<f64> {
    let scale = 2.0 / p.len() as f64;
    p.y_hat.iter().zip(&p.y).map(|(yh, y)| scale * (yh - y)).collect()
}
