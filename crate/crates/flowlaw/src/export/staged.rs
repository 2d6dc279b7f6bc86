//! Staged evaluation of a two-hidden-layer sigmoid network: the forward
//! pass and the input Jacobian factored into shared sub-terms so each call
//! costs exactly m + n exponentials. This is the scheme the emitted
//! subroutine unrolls.

use crate::error::{Error, Result};
use crate::mlp::{rescale_outputs, Activation, MlpModel, RateRescale};

/// The intermediate vectors of one staged evaluation.
///
/// With y1 and y2 the hidden-layer summation vectors:
///
/// ```text
/// z_a = exp(-y1)                    (m exponentials)
/// z_b = 1 + z_a
/// z_c = exp(-y2), y2 via 1/z_b      (n exponentials)
/// z_d = w o z_c / (1 + z_c)^2
/// z_e = z_a / z_b^2                 (= sigmoid'(y1))
/// z_f = (W2^T z_d) o z_e
/// s   = sum_i w_i / (1 + z_c_i) + b
/// s'  = W1^T z_f
/// ```
#[derive(Debug, Clone)]
pub struct StagedEvaluation {
    pub z_a: Vec<f64>,
    pub z_b: Vec<f64>,
    pub z_c: Vec<f64>,
    pub z_d: Vec<f64>,
    pub z_e: Vec<f64>,
    pub z_f: Vec<f64>,
    /// Normalized network output.
    pub s: f64,
    /// Jacobian of s with respect to the normalized inputs.
    pub s_prime: [f64; 3],
}

pub(crate) fn require_two_layer_sigmoid(model: &MlpModel) -> Result<()> {
    model.validate()?;
    if model.hidden.len() != 2 || model.activation != Activation::Sigmoid {
        return Err(Error::structure(format!(
            "staged evaluation supports two-hidden-layer sigmoid models, got {}",
            model.name()
        )));
    }
    Ok(())
}

impl StagedEvaluation {
    /// Staged forward pass and Jacobian at a normalized input.
    pub fn compute(model: &MlpModel, x: &[f64; 3]) -> Result<Self> {
        require_two_layer_sigmoid(model)?;
        let l1 = &model.hidden[0];
        let l2 = &model.hidden[1];
        let m = l1.out_width();
        let n = l2.out_width();

        let mut z_a = vec![0.0; m];
        let mut z_b = vec![0.0; m];
        for i in 0..m {
            let mut y = l1.bias[i];
            for j in 0..3 {
                y += l1.weight(i, j) * x[j];
            }
            z_a[i] = (-y).exp();
            z_b[i] = 1.0 + z_a[i];
        }

        let mut z_c = vec![0.0; n];
        for i in 0..n {
            let mut y = l2.bias[i];
            for j in 0..m {
                y += l2.weight(i, j) / z_b[j];
            }
            z_c[i] = (-y).exp();
        }

        let mut z_d = vec![0.0; n];
        for i in 0..n {
            let denom = 1.0 + z_c[i];
            z_d[i] = model.out_weights[i] * z_c[i] / (denom * denom);
        }

        let mut z_e = vec![0.0; m];
        for i in 0..m {
            z_e[i] = z_a[i] / (z_b[i] * z_b[i]);
        }

        let mut z_f = vec![0.0; m];
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..n {
                acc += l2.weight(j, i) * z_d[j];
            }
            z_f[i] = acc * z_e[i];
        }

        let mut s = model.out_bias;
        for i in 0..n {
            s += model.out_weights[i] / (1.0 + z_c[i]);
        }

        let mut s_prime = [0.0; 3];
        for (k, sp) in s_prime.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..m {
                acc += l1.weight(j, k) * z_f[j];
            }
            *sp = acc;
        }

        Ok(StagedEvaluation {
            z_a,
            z_b,
            z_c,
            z_d,
            z_e,
            z_f,
            s,
            s_prime,
        })
    }

    /// How many exponential evaluations the staged pass performed: one per
    /// z_a component and one per z_c component.
    pub fn exp_count(&self) -> usize {
        self.z_a.len() + self.z_c.len()
    }
}

/// Flow stress and physical derivatives via the staged scheme. Identical
/// contract to `MlpModel::predict_physical`, restricted to two-hidden-layer
/// sigmoid models.
pub fn evaluate_staged(
    model: &MlpModel,
    eps_p: f64,
    rate: f64,
    temperature: f64,
) -> Result<(f64, f64, f64, f64)> {
    require_two_layer_sigmoid(model)?;
    let rate = rate.max(model.ranges.eps_dot_ref);
    let x = model.ranges.normalize_inputs(eps_p, rate, temperature)?;
    let staged = StagedEvaluation::compute(model, &x)?;
    Ok(rescale_outputs(
        &model.ranges,
        staged.s,
        &staged.s_prime,
        rate,
        RateRescale::ChainRule,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{DenseLayer, NormalizationRanges};
    use crate::rng::SeededRng;

    fn ranges() -> NormalizationRanges {
        NormalizationRanges {
            eps_p_min: 0.0,
            eps_p_max: 1.0,
            log_rate_min: 0.0,
            log_rate_max: 50_000f64.ln(),
            t_min: 20.0,
            t_max: 500.0,
            sigma_min: 579.18464291541482,
            sigma_max: 1556.7403579583772,
            eps_dot_ref: 1.0,
        }
    }

    fn model(seed: u64) -> MlpModel {
        let mut model =
            MlpModel::glorot(&[3, 15, 7, 1], Activation::Sigmoid, ranges(), seed).unwrap();
        let mut rng = SeededRng::new(seed.wrapping_add(1));
        for layer in &mut model.hidden {
            for b in &mut layer.bias {
                *b = rng.uniform_in(-0.8, 0.8);
            }
        }
        model.out_bias = rng.uniform_in(-0.5, 0.5);
        model
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
    }

    #[test]
    fn staged_matches_matrix_form() {
        let model = model(3);
        let mut rng = SeededRng::new(9);
        for _ in 0..2000 {
            let eps = rng.uniform_in(0.0, 1.0);
            let rate = rng.log_uniform_in(1.0, 50_000.0);
            let temp = rng.uniform_in(20.0, 500.0);
            let a = evaluate_staged(&model, eps, rate, temp).unwrap();
            let b = model.predict_physical(eps, rate, temp).unwrap();
            assert!(rel(a.0, b.0) <= 1e-12, "sigma {} vs {}", a.0, b.0);
            assert!(rel(a.1, b.1) <= 1e-12, "deps {} vs {}", a.1, b.1);
            assert!(rel(a.2, b.2) <= 1e-12, "drate {} vs {}", a.2, b.2);
            assert!(rel(a.3, b.3) <= 1e-12, "dT {} vs {}", a.3, b.3);
        }
    }

    #[test]
    fn zero_weights_give_sigma_min_and_zero_derivatives() {
        let m = MlpModel::new(
            vec![DenseLayer::zeros(4, 3), DenseLayer::zeros(2, 4)],
            Activation::Sigmoid,
            vec![0.0; 2],
            0.0,
            ranges(),
        )
        .unwrap();
        let (sigma, de, dr, dt) = evaluate_staged(&m, 0.4, 120.0, 210.0).unwrap();
        assert_eq!(sigma, ranges().sigma_min);
        assert_eq!((de, dr, dt), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exp_count_is_m_plus_n() {
        let model = model(4);
        let staged = StagedEvaluation::compute(&model, &[0.2, 0.4, 0.6]).unwrap();
        assert_eq!(staged.exp_count(), 15 + 7);
        assert_eq!(staged.z_a.len(), 15);
        assert_eq!(staged.z_c.len(), 7);
        assert_eq!(staged.z_f.len(), 15);
    }

    #[test]
    fn unsupported_architectures_rejected() {
        let one_layer =
            MlpModel::glorot(&[3, 6, 1], Activation::Sigmoid, ranges(), 2).unwrap();
        assert!(matches!(
            evaluate_staged(&one_layer, 0.1, 10.0, 100.0),
            Err(Error::Structure(_))
        ));
        let tanh = MlpModel::glorot(&[3, 6, 4, 1], Activation::Tanh, ranges(), 2).unwrap();
        assert!(matches!(
            evaluate_staged(&tanh, 0.1, 10.0, 100.0),
            Err(Error::Structure(_))
        ));
    }
}
