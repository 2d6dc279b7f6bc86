//! Full-batch ADAM training of the surrogate with hand-derived
//! backpropagation through the summation/activation stages.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mlp::{Activation, MlpModel};

/// Learning-rate profile over the run. `Constant` holds the configured rate;
/// `OneCycle` ramps linearly to `peak` over the warmup fraction and then
/// follows a cosine anneal down to `floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrSchedule {
    Constant,
    OneCycle {
        peak: f64,
        warmup_frac: f64,
        floor: f64,
    },
}

impl LrSchedule {
    pub fn one_cycle(peak: f64) -> Self {
        LrSchedule::OneCycle {
            peak,
            warmup_frac: 0.1,
            floor: 1e-5,
        }
    }

    fn rate_at(&self, base: f64, iteration: usize, total: usize) -> f64 {
        match *self {
            LrSchedule::Constant => base,
            LrSchedule::OneCycle {
                peak,
                warmup_frac,
                floor,
            } => {
                let warm = ((total as f64 * warmup_frac) as usize).max(1);
                if iteration <= warm {
                    floor + (peak - floor) * iteration as f64 / warm as f64
                } else {
                    let t = (iteration - warm) as f64 / (total - warm).max(1) as f64;
                    floor + 0.5 * (peak - floor) * (1.0 + (std::f64::consts::PI * t).cos())
                }
            }
        }
    }
}

/// Gradient batching mode. The grid is small enough that every iteration
/// consumes the whole dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchMode {
    #[default]
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Base learning rate; scaled by `schedule`.
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub seed: u64,
    pub batch: BatchMode,
    /// Record one loss sample every this many iterations (plus the final one).
    pub report_stride: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 10_000,
            learning_rate: 1e-3,
            schedule: LrSchedule::Constant,
            seed: 42,
            batch: BatchMode::Full,
            report_stride: 100,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::domain("iterations must be >= 1"));
        }
        // learning_rate = 0 is allowed: a zero step leaves the model
        // unchanged, which the tests rely on.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain("learning rate must be finite and >= 0"));
        }
        if self.report_stride == 0 {
            return Err(Error::domain("report stride must be >= 1"));
        }
        Ok(())
    }
}

/// One recorded point of the loss history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iteration: usize,
    pub erms: f64,
}

/// Root mean square error between two equal-length series.
pub fn loss_erms(pred: &[f64], reference: &[f64]) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(Error::domain(format!(
            "length mismatch: {} vs {}",
            pred.len(),
            reference.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::domain("E_RMS of an empty series"));
    }
    let mse = pred
        .iter()
        .zip(reference)
        .map(|(p, r)| (p - r) * (p - r))
        .sum::<f64>()
        / pred.len() as f64;
    Ok(mse.sqrt())
}

/// Flat view of all trainable scalars in a fixed order: per hidden layer the
/// weights then biases, then the output weights, then the output bias.
pub(crate) fn flatten_params(model: &MlpModel) -> Vec<f64> {
    let mut out = Vec::with_capacity(model.param_count());
    for layer in &model.hidden {
        out.extend_from_slice(&layer.weights);
        out.extend_from_slice(&layer.bias);
    }
    out.extend_from_slice(&model.out_weights);
    out.push(model.out_bias);
    out
}

pub(crate) fn unflatten_params(model: &mut MlpModel, flat: &[f64]) {
    let mut k = 0;
    for layer in &mut model.hidden {
        let nw = layer.weights.len();
        layer.weights.copy_from_slice(&flat[k..k + nw]);
        k += nw;
        let nb = layer.bias.len();
        layer.bias.copy_from_slice(&flat[k..k + nb]);
        k += nb;
    }
    let no = model.out_weights.len();
    model.out_weights.copy_from_slice(&flat[k..k + no]);
    k += no;
    model.out_bias = flat[k];
}

/// Normalized inputs and targets precomputed once per training run.
struct NormalizedBatch {
    x: Vec<[f64; 3]>,
    s: Vec<f64>,
}

fn normalize_batch(model: &MlpModel, data: &Dataset) -> Result<NormalizedBatch> {
    data.validate()?;
    let mut x = Vec::with_capacity(data.len());
    let mut s = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        x.push(model.ranges.normalize_inputs(
            data.eps_p[i],
            data.rate[i],
            data.temperature[i],
        )?);
        s.push(model.ranges.normalize_sigma(data.sigma[i]));
    }
    Ok(NormalizedBatch { x, s })
}

/// Mean squared error over the batch and its gradient with respect to every
/// parameter, in `flatten_params` order. This is the backpropagation pass
/// through the summation/activation split of the forward equations.
pub(crate) fn loss_and_gradient(
    model: &MlpModel,
    x: &[[f64; 3]],
    s_ref: &[f64],
) -> Result<(f64, Vec<f64>)> {
    model.validate()?;
    let depth = model.hidden.len();
    let n = x.len() as f64;
    let act = model.activation;

    let mut grad_hidden: Vec<(Vec<f64>, Vec<f64>)> = model
        .hidden
        .iter()
        .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
        .collect();
    let mut grad_out = vec![0.0; model.out_weights.len()];
    let mut grad_out_bias = 0.0;
    let mut mse = 0.0;

    // per-sample buffers
    let mut pre: Vec<Vec<f64>> = model.hidden.iter().map(|l| vec![0.0; l.out_width()]).collect();
    let mut post = pre.clone();
    let mut delta = pre.clone();

    for (xi, &si) in x.iter().zip(s_ref) {
        // forward, keeping y and y-hat per layer
        for k in 0..depth {
            let layer = &model.hidden[k];
            let (done, rest) = post.split_at_mut(k);
            let input: &[f64] = if k == 0 { xi } else { &done[k - 1] };
            let post_k = &mut rest[0];
            let pre_k = &mut pre[k];
            for i in 0..layer.out_width() {
                let row = &layer.weights[i * layer.in_width..(i + 1) * layer.in_width];
                let mut acc = layer.bias[i];
                for (w, xv) in row.iter().zip(input) {
                    acc += w * xv;
                }
                pre_k[i] = acc;
                post_k[i] = act.apply(acc);
            }
        }
        let mut out = model.out_bias;
        for (w, a) in model.out_weights.iter().zip(&post[depth - 1]) {
            out += w * a;
        }
        let err = out - si;
        mse += err * err / n;

        // backward
        let dl_ds = 2.0 * err / n;
        grad_out_bias += dl_ds;
        for (g, a) in grad_out.iter_mut().zip(&post[depth - 1]) {
            *g += dl_ds * a;
        }
        // delta at the last hidden layer
        for i in 0..model.hidden[depth - 1].out_width() {
            delta[depth - 1][i] = dl_ds * model.out_weights[i] * act.derivative(pre[depth - 1][i]);
        }
        for k in (0..depth).rev() {
            let layer = &model.hidden[k];
            let upstream: &[f64] = if k == 0 { xi } else { &post[k - 1] };
            let (gw, gb) = &mut grad_hidden[k];
            for i in 0..layer.out_width() {
                let d = delta[k][i];
                gb[i] += d;
                let row = &mut gw[i * layer.in_width..(i + 1) * layer.in_width];
                for (g, u) in row.iter_mut().zip(upstream) {
                    *g += d * u;
                }
            }
            if k > 0 {
                let prev_width = layer.in_width;
                for j in 0..prev_width {
                    let mut acc = 0.0;
                    for i in 0..layer.out_width() {
                        acc += layer.weight(i, j) * delta[k][i];
                    }
                    delta[k - 1][j] = acc * act.derivative(pre[k - 1][j]);
                }
            }
        }
    }

    let mut flat = Vec::with_capacity(model.param_count());
    for (gw, gb) in &grad_hidden {
        flat.extend_from_slice(gw);
        flat.extend_from_slice(gb);
    }
    flat.extend_from_slice(&grad_out);
    flat.push(grad_out_bias);
    Ok((mse, flat))
}

/// ADAM moment constants; the bias-corrected update is the textbook one.
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Train a copy of `model` on `data` and return it with the recorded loss
/// history (E_RMS of normalized stresses at `report_stride` intervals).
///
/// Bit-deterministic: the same (model, data, config) triple always yields the
/// same parameters. Training minimizes the mean squared error; E_RMS is its
/// square root.
pub fn train_adam(
    model: &MlpModel,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(MlpModel, Vec<LossRecord>)> {
    cfg.validate()?;
    let BatchMode::Full = cfg.batch;
    let batch = normalize_batch(model, data)?;
    let mut trained = model.clone();
    let mut theta = flatten_params(&trained);
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    let mut history = Vec::new();

    for it in 1..=cfg.iterations {
        let (mse, grad) = loss_and_gradient(&trained, &batch.x, &batch.s)?;
        if !mse.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                loss: mse,
            });
        }
        if it == 1 || it % cfg.report_stride == 0 || it == cfg.iterations {
            history.push(LossRecord {
                iteration: it,
                erms: mse.sqrt(),
            });
        }
        let lr = cfg.schedule.rate_at(cfg.learning_rate, it, cfg.iterations);
        let bc1 = 1.0 - BETA1.powi(it as i32);
        let bc2 = 1.0 - BETA2.powi(it as i32);
        for k in 0..theta.len() {
            m[k] = BETA1 * m[k] + (1.0 - BETA1) * grad[k];
            v[k] = BETA2 * v[k] + (1.0 - BETA2) * grad[k] * grad[k];
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            theta[k] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
        unflatten_params(&mut trained, &theta);
    }
    Ok((trained, history))
}

/// Loss history serialized as `iter,erms` CSV.
pub fn history_to_csv(history: &[LossRecord]) -> String {
    let mut out = String::from("iter,erms\n");
    for rec in history {
        out.push_str(&format!("{},{}\n", rec.iteration, rec.erms));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{test_set, training_grid, RateSampling};
    use crate::johnson_cook::JohnsonCookParams;
    use crate::mlp::NormalizationRanges;

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

    fn small_data(n: usize) -> Dataset {
        test_set(
            &JohnsonCookParams::steel_42crmo4(),
            n,
            5,
            RateSampling::LogUniform,
        )
    }

    #[test]
    fn erms_basics() {
        assert_eq!(loss_erms(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let shifted = loss_erms(&[1.1, 2.1, 3.1], &[1.0, 2.0, 3.0]).unwrap();
        assert!((shifted - 0.1).abs() < 1e-12);
        assert_eq!(loss_erms(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!(loss_erms(&[1.0], &[1.0, 2.0]).is_err());
        assert!(loss_erms(&[], &[]).is_err());
    }

    #[test]
    fn zero_learning_rate_leaves_model_unchanged() {
        let model = MlpModel::glorot(&[3, 4, 1], Activation::Sigmoid, ranges(), 9).unwrap();
        let cfg = TrainConfig {
            iterations: 1,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let (trained, _) = train_adam(&model, &small_data(20), &cfg).unwrap();
        assert_eq!(trained, model);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let model = MlpModel::glorot(&[3, 5, 3, 1], Activation::Tanh, ranges(), 2).unwrap();
        let cfg = TrainConfig {
            iterations: 50,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let data = small_data(40);
        let (a, ha) = train_adam(&model, &data, &cfg).unwrap();
        let (b, hb) = train_adam(&model, &data, &cfg).unwrap();
        assert_eq!(flatten_params(&a), flatten_params(&b));
        assert_eq!(ha, hb);
    }

    #[test]
    fn loss_drops_below_initial() {
        let grid = training_grid(&JohnsonCookParams::steel_42crmo4());
        let model = MlpModel::glorot(&[3, 6, 1], Activation::Sigmoid, ranges(), 4).unwrap();
        let cfg = TrainConfig {
            iterations: 300,
            learning_rate: 1e-2,
            report_stride: 50,
            ..TrainConfig::default()
        };
        let (_, history) = train_adam(&model, &grid, &cfg).unwrap();
        assert!(history.last().unwrap().erms < history.first().unwrap().erms);
    }

    fn fd_gradient(model: &MlpModel, x: &[[f64; 3]], s: &[f64]) -> Vec<f64> {
        let theta = flatten_params(model);
        let mut g = vec![0.0; theta.len()];
        let mut work = model.clone();
        for k in 0..theta.len() {
            let h = 1e-6 * theta[k].abs().max(1.0);
            let mut tp = theta.clone();
            tp[k] += h;
            unflatten_params(&mut work, &tp);
            let up = loss_and_gradient(&work, x, s).unwrap().0;
            tp[k] -= 2.0 * h;
            unflatten_params(&mut work, &tp);
            let dn = loss_and_gradient(&work, x, s).unwrap().0;
            g[k] = (up - dn) / (2.0 * h);
        }
        g
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let data = small_data(12);
        for activation in [Activation::Tanh, Activation::Sigmoid] {
            for widths in [vec![3, 2, 1], vec![3, 3, 2, 1]] {
                let model = MlpModel::glorot(&widths, activation, ranges(), 17).unwrap();
                let batch = normalize_batch(&model, &data).unwrap();
                let (_, analytic) = loss_and_gradient(&model, &batch.x, &batch.s).unwrap();
                let fd = fd_gradient(&model, &batch.x, &batch.s);
                for (k, (a, f)) in analytic.iter().zip(&fd).enumerate() {
                    let denom = f.abs().max(1e-8);
                    assert!(
                        (a - f).abs() / denom < 1e-5,
                        "{} {:?} param {k}: analytic {a}, fd {f}",
                        activation.name(),
                        widths
                    );
                }
            }
        }
    }

    #[test]
    fn history_csv_shape() {
        let history = vec![
            LossRecord {
                iteration: 1,
                erms: 0.5,
            },
            LossRecord {
                iteration: 100,
                erms: 0.25,
            },
        ];
        let csv = history_to_csv(&history);
        assert_eq!(csv, "iter,erms\n1,0.5\n100,0.25\n");
    }

    #[test]
    fn bad_config_rejected() {
        let model = MlpModel::glorot(&[3, 4, 1], Activation::Sigmoid, ranges(), 9).unwrap();
        let data = small_data(10);
        let cfg = TrainConfig {
            iterations: 0,
            ..TrainConfig::default()
        };
        assert!(train_adam(&model, &data, &cfg).is_err());
        let cfg = TrainConfig {
            learning_rate: f64::NAN,
            ..TrainConfig::default()
        };
        assert!(train_adam(&model, &data, &cfg).is_err());
    }
}
