//! Double-double arithmetic (an unevaluated sum `hi + lo`, about 106
//! significant bits) and an inference forward pass in it. Finite
//! differences of an f64 forward pass are swamped by rounding once a
//! gradient drops below roughly 1e-8; evaluating the perturbed losses here
//! keeps the difference exact to far beyond what the comparison needs.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::lstm::NetworkParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};
const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let s = quick_two_sum(s1, s2 + t1);
        quick_two_sum(s.hi, s.lo + t2)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        quick_two_sum(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::from(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from(q2);
        let q3 = r.hi / b.hi;
        quick_two_sum(q1, q2) + Dd::from(q3)
    }
}

impl Dd {
    /// Multiplication by `2^k`, exact barring overflow.
    fn ldexp(self, k: i32) -> Dd {
        let s = 2f64.powi(k);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    /// `e^r - 1` for `|r| <= ln 2`: Taylor series on `r / 1024`, then ten
    /// doublings through `e^2x - 1 = u (u + 2)`.
    fn expm1_reduced(r: Dd) -> Dd {
        let x = r.ldexp(-10);
        let mut term = x;
        let mut sum = x;
        for n in 2..=12 {
            term = term * x / Dd::from(n as f64);
            sum = sum + term;
        }
        for _ in 0..10 {
            sum = sum * (sum + Dd::from(2.0));
        }
        sum
    }

    pub fn expm1(self) -> Dd {
        if self.hi.abs() <= LN2.hi {
            Self::expm1_reduced(self)
        } else {
            self.exp() - ONE
        }
    }

    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd::from(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::from(0.0);
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * Dd::from(k);
        (Self::expm1_reduced(r) + ONE).ldexp(k as i32)
    }

    pub fn tanh(self) -> Dd {
        if self.hi.abs() > 40.0 {
            return Dd::from(self.hi.signum());
        }
        let u = (self + self).expm1();
        u / (u + Dd::from(2.0))
    }

    pub fn sigmoid(self) -> Dd {
        if self.hi < -700.0 {
            return Dd::from(0.0);
        }
        ONE / (ONE + (-self).exp())
    }
}

fn dot(w: &[f64], v: &[Dd]) -> Dd {
    w.iter().zip(v).fold(Dd::from(0.0), |acc, (&a, &b)| acc + Dd::from(a) * b)
}

/// Inference prediction for one sequence, evaluated in double-double.
pub(crate) fn predict(params: &NetworkParams, sequence: &[f64]) -> Dd {
    let mut current: Vec<Dd> = sequence.iter().map(|&v| Dd::from(v)).collect();
    for lp in &params.layers {
        let (hidden, input) = (lp.hidden(), lp.input_size());
        let row_len = lp.row_len();
        let (w, b) = (lp.weights(), lp.bias());
        let steps = current.len() / input;
        let mut h = vec![Dd::from(0.0); hidden];
        let mut c = vec![Dd::from(0.0); hidden];
        let mut outputs = Vec::with_capacity(steps * hidden);
        for t in 0..steps {
            let x = &current[t * input..(t + 1) * input];
            let pre = |r: usize| {
                let row = &w[r * row_len..(r + 1) * row_len];
                dot(&row[hidden..], x) + Dd::from(b[r]) + dot(&row[..hidden], &h)
            };
            let mut next_h = vec![Dd::from(0.0); hidden];
            for j in 0..hidden {
                let f = pre(j).sigmoid();
                let i = pre(hidden + j).sigmoid();
                let g = pre(2 * hidden + j).tanh();
                let o = pre(3 * hidden + j).sigmoid();
                c[j] = f * c[j] + i * g;
                next_h[j] = o * c[j].tanh();
            }
            h = next_h;
            outputs.extend_from_slice(&h);
        }
        current = outputs;
    }
    let last = &current[current.len() - params.dense.w.len()..];
    dot(&params.dense.w, last) + Dd::from(params.dense.b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::{init_params, network_forward, Mode, NetworkConfig};
    use crate::rng::SeededRng;

    fn close(a: Dd, b: Dd, tol: f64) -> bool {
        let d = a - b;
        (d.hi + d.lo).abs() <= tol * b.hi.abs().max(1.0)
    }

    #[test]
    fn e_to_double_double_precision() {
        let e = Dd::from(1.0).exp();
        let reference = Dd {
            hi: std::f64::consts::E,
            lo: 1.445_646_891_729_250_2e-16,
        };
        assert!(close(e, reference, 1e-30), "{e:?}");
    }

    #[test]
    fn functional_identities() {
        let mut rng = SeededRng::new(5);
        for _ in 0..200 {
            let x = Dd::from(rng.uniform(-20.0, 20.0)) + Dd::from(rng.uniform(-1e-17, 1e-17));
            assert!(close(x.exp() * (-x).exp(), ONE, 1e-29));
            // tanh x = 2 sigmoid(2x) - 1
            assert!(close(x.tanh(), Dd::from(2.0) * (x + x).sigmoid() - ONE, 1e-29));
            let q = x / Dd::from(3.0);
            assert!(close(q * Dd::from(3.0), x, 1e-31));
        }
        let x = Dd::from(1e-10);
        // expm1(x) = x + x^2/2 + x^3/6 + ..., the remainder is below 1e-41.
        let series = x + x * x / Dd::from(2.0) + x * x * x / Dd::from(6.0);
        let d = x.expm1() - series;
        assert!((d.hi + d.lo).abs() < 1e-30 * x.hi, "{d:?}");
    }

    #[test]
    fn matches_f64_forward() {
        let config = NetworkConfig {
            layer_units: vec![3, 4],
            dropout_rates: vec![0.0, 0.0],
            input_features: 1,
            seed: 8,
        };
        let params = init_params(&config).unwrap();
        let seq: Vec<f64> = (0..7).map(|t| (t as f64 * 0.3).sin()).collect();
        let f64_out = network_forward(&params, &config, &[&seq], Mode::Inference, &mut SeededRng::new(0))
            .unwrap()
            .predictions[0];
        let dd = predict(&params, &seq);
        assert!((dd.hi - f64_out).abs() < 1e-14);
    }
}
