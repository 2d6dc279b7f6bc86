//! The feed-forward surrogate: input normalization, forward pass, analytic
//! input Jacobian for one- and two-hidden-layer stacks with tanh or sigmoid
//! activations, and rescaling of the network output back to physical stress
//! and stress derivatives.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Activation applied element-wise after each hidden-layer summation. Both
/// hidden layers share one kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn name(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" | "sig" => Ok(Activation::Sigmoid),
            other => Err(Error::structure(format!("unknown activation `{other}`"))),
        }
    }

    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        match self {
            Activation::Tanh => y.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-y).exp()),
        }
    }

    /// Derivative with respect to the pre-activation value.
    #[inline]
    pub fn derivative(&self, y: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = y.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let e = (-y).exp();
                let d = 1.0 + e;
                e / (d * d)
            }
        }
    }
}

/// One dense layer: row-major weights of shape (out, in) plus a bias per
/// output neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// Flattened (rows = output neurons, cols = input width).
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub in_width: usize,
}

impl DenseLayer {
    pub fn zeros(out_width: usize, in_width: usize) -> Self {
        DenseLayer {
            weights: vec![0.0; out_width * in_width],
            bias: vec![0.0; out_width],
            in_width,
        }
    }

    pub fn out_width(&self) -> usize {
        self.bias.len()
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.in_width + col]
    }

    /// y = W x + b, appended into `out`.
    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), self.in_width);
        for i in 0..self.out_width() {
            let row = &self.weights[i * self.in_width..(i + 1) * self.in_width];
            let mut acc = self.bias[i];
            for (w, xv) in row.iter().zip(x) {
                acc += w * xv;
            }
            out.push(acc);
        }
    }

    fn validate(&self) -> Result<()> {
        if self.in_width == 0 || self.out_width() == 0 {
            return Err(Error::structure("layer widths must be >= 1"));
        }
        if self.weights.len() != self.out_width() * self.in_width {
            return Err(Error::structure(format!(
                "weight count {} does not match {}x{}",
                self.weights.len(),
                self.out_width(),
                self.in_width
            )));
        }
        if !self
            .weights
            .iter()
            .chain(self.bias.iter())
            .all(|v| v.is_finite())
        {
            return Err(Error::structure("layer parameters must be finite"));
        }
        Ok(())
    }
}

/// Min/max bounds that map the physical inputs and the stress onto [0, 1],
/// plus the reference strain rate used in the log preprocessing. These travel
/// with the trained weights; prediction and export are impossible without
/// them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationRanges {
    pub eps_p_min: f64,
    pub eps_p_max: f64,
    /// Bounds of ln(rate / eps_dot_ref), dimensionless.
    pub log_rate_min: f64,
    pub log_rate_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub eps_dot_ref: f64,
}

impl NormalizationRanges {
    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("eps_p", self.eps_p_min, self.eps_p_max),
            ("log_rate", self.log_rate_min, self.log_rate_max),
            ("T", self.t_min, self.t_max),
            ("sigma", self.sigma_min, self.sigma_max),
        ];
        for (name, lo, hi) in pairs {
            if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
                return Err(Error::domain(format!(
                    "normalization range for {name} must satisfy max > min, got [{lo}, {hi}]"
                )));
            }
        }
        if !(self.eps_dot_ref.is_finite() && self.eps_dot_ref > 0.0) {
            return Err(Error::domain("eps_dot_ref must be positive"));
        }
        Ok(())
    }

    /// Bounds derived from the entries of a dataset.
    pub fn from_dataset(data: &crate::dataset::Dataset, eps_dot_ref: f64) -> Result<Self> {
        if data.len() == 0 {
            return Err(Error::domain("cannot derive ranges from an empty dataset"));
        }
        let minmax = |col: &[f64]| {
            col.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                })
        };
        let (e_lo, e_hi) = minmax(&data.eps_p);
        let (t_lo, t_hi) = minmax(&data.temperature);
        let (s_lo, s_hi) = minmax(&data.sigma);
        let (r_lo, r_hi) = minmax(&data.rate);
        let r = NormalizationRanges {
            eps_p_min: e_lo,
            eps_p_max: e_hi,
            log_rate_min: (r_lo / eps_dot_ref).ln(),
            log_rate_max: (r_hi / eps_dot_ref).ln(),
            t_min: t_lo,
            t_max: t_hi,
            sigma_min: s_lo,
            sigma_max: s_hi,
            eps_dot_ref,
        };
        r.validate()?;
        Ok(r)
    }

    /// Physical inputs -> x in [0,1]^3 (extrapolation may exceed the box).
    /// Errors if rate <= 0, where the log preprocessing is undefined.
    pub fn normalize_inputs(&self, eps_p: f64, rate: f64, temperature: f64) -> Result<[f64; 3]> {
        if !(rate > 0.0) {
            return Err(Error::domain(format!(
                "strain rate must be positive for log preprocessing, got {rate}"
            )));
        }
        if !(eps_p.is_finite() && rate.is_finite() && temperature.is_finite()) {
            return Err(Error::domain("non-finite input to normalization"));
        }
        Ok([
            (eps_p - self.eps_p_min) / (self.eps_p_max - self.eps_p_min),
            ((rate / self.eps_dot_ref).ln() - self.log_rate_min)
                / (self.log_rate_max - self.log_rate_min),
            (temperature - self.t_min) / (self.t_max - self.t_min),
        ])
    }

    /// Normalized output s -> physical stress.
    pub fn denormalize_sigma(&self, s: f64) -> f64 {
        (self.sigma_max - self.sigma_min) * s + self.sigma_min
    }

    /// Physical stress -> normalized output s.
    pub fn normalize_sigma(&self, sigma: f64) -> f64 {
        (sigma - self.sigma_min) / (self.sigma_max - self.sigma_min)
    }
}

/// Which denominator converts the rate component of the network Jacobian to
/// d(sigma)/d(rate).
///
/// `ChainRule` is the exact derivative of the implemented forward map
/// (divide by the log-rate span and by the rate itself). `PaperLiteral`
/// divides by the linear rate span instead, which is dimensionally
/// inconsistent with the log preprocessing but kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateRescale {
    #[default]
    ChainRule,
    PaperLiteral,
}

/// The trained surrogate: one or two hidden layers, a linear output neuron,
/// and the normalization ranges it was trained with.
///
/// Evaluation is pure; the only interior mutability is a diagnostics counter
/// of queries that fell outside the [0,1] input box.
#[derive(Debug)]
pub struct MlpModel {
    pub hidden: Vec<DenseLayer>,
    pub activation: Activation,
    pub out_weights: Vec<f64>,
    pub out_bias: f64,
    pub ranges: NormalizationRanges,
    extrapolation_queries: AtomicU64,
}

impl Clone for MlpModel {
    fn clone(&self) -> Self {
        MlpModel {
            hidden: self.hidden.clone(),
            activation: self.activation,
            out_weights: self.out_weights.clone(),
            out_bias: self.out_bias,
            ranges: self.ranges,
            extrapolation_queries: AtomicU64::new(
                self.extrapolation_queries.load(Ordering::Relaxed),
            ),
        }
    }
}

impl PartialEq for MlpModel {
    fn eq(&self, other: &Self) -> bool {
        self.hidden == other.hidden
            && self.activation == other.activation
            && self.out_weights == other.out_weights
            && self.out_bias == other.out_bias
            && self.ranges == other.ranges
    }
}

/// Intermediate results of one forward pass: the summation vector y and the
/// activated vector for every hidden layer. Retained so the Jacobian can
/// reuse them instead of recomputing exponentials.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
    pub output: f64,
}

impl MlpModel {
    pub fn new(
        hidden: Vec<DenseLayer>,
        activation: Activation,
        out_weights: Vec<f64>,
        out_bias: f64,
        ranges: NormalizationRanges,
    ) -> Result<Self> {
        let model = MlpModel {
            hidden,
            activation,
            out_weights,
            out_bias,
            ranges,
            extrapolation_queries: AtomicU64::new(0),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.len() > 2 {
            return Err(Error::structure(format!(
                "supported depths are 1 or 2 hidden layers, got {}",
                self.hidden.len()
            )));
        }
        let mut width = 3;
        for (k, layer) in self.hidden.iter().enumerate() {
            layer.validate()?;
            if layer.in_width != width {
                return Err(Error::structure(format!(
                    "hidden layer {} expects input width {}, previous layer provides {}",
                    k + 1,
                    layer.in_width,
                    width
                )));
            }
            width = layer.out_width();
        }
        if self.out_weights.len() != width {
            return Err(Error::structure(format!(
                "output layer has {} weights for a last hidden width of {}",
                self.out_weights.len(),
                width
            )));
        }
        if !self.out_weights.iter().all(|v| v.is_finite()) || !self.out_bias.is_finite() {
            return Err(Error::structure("output parameters must be finite"));
        }
        self.ranges.validate()
    }

    /// Glorot-uniform initialization: weights in
    /// +-sqrt(6/(fan_in+fan_out)), biases 0. `widths` spells the full stack,
    /// e.g. `[3, 15, 7, 1]`.
    pub fn glorot(
        widths: &[usize],
        activation: Activation,
        ranges: NormalizationRanges,
        seed: u64,
    ) -> Result<Self> {
        if widths.len() < 3 || widths.len() > 4 {
            return Err(Error::structure(
                "architecture must be 3-h-1 or 3-m-n-1 (one or two hidden layers)",
            ));
        }
        if widths[0] != 3 || *widths.last().unwrap() != 1 {
            return Err(Error::structure("input width must be 3 and output width 1"));
        }
        let mut rng = SeededRng::new(seed);
        let mut draw = |fan_out: usize, fan_in: usize| {
            let lim = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..fan_out * fan_in)
                .map(|_| rng.uniform_in(-lim, lim))
                .collect::<Vec<_>>()
        };
        let mut hidden = Vec::new();
        for k in 1..widths.len() - 1 {
            hidden.push(DenseLayer {
                weights: draw(widths[k], widths[k - 1]),
                bias: vec![0.0; widths[k]],
                in_width: widths[k - 1],
            });
        }
        let last = widths[widths.len() - 2];
        let out_weights = draw(1, last);
        MlpModel::new(hidden, activation, out_weights, 0.0, ranges)
    }

    /// Architecture label in the `3-m-n-1-sig` style.
    pub fn name(&self) -> String {
        let mut parts = vec!["3".to_string()];
        for layer in &self.hidden {
            parts.push(layer.out_width().to_string());
        }
        parts.push("1".to_string());
        let act = match self.activation {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sig",
        };
        format!("{}-{}", parts.join("-"), act)
    }

    /// Widths of the full stack, e.g. `[3, 15, 7, 1]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![3];
        for layer in &self.hidden {
            w.push(layer.out_width());
        }
        w.push(1);
        w
    }

    /// Number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.hidden
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum::<usize>()
            + self.out_weights.len()
            + 1
    }

    /// How many queries so far fell outside the [0,1] input box.
    pub fn out_of_range_queries(&self) -> u64 {
        self.extrapolation_queries.load(Ordering::Relaxed)
    }

    fn note_extrapolation(&self, x: &[f64; 3]) {
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            self.extrapolation_queries.fetch_add(1, Ordering::Relaxed);
        }
    }

    fn check_input(&self, x: &[f64; 3]) -> Result<()> {
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::structure("non-finite network input"));
        }
        Ok(())
    }

    /// Forward pass retaining per-layer intermediates.
    pub fn forward_trace(&self, x: &[f64; 3]) -> Result<ForwardTrace> {
        self.check_input(x)?;
        self.validate()?;
        let mut pre = Vec::with_capacity(self.hidden.len());
        let mut post = Vec::with_capacity(self.hidden.len());
        let mut current: Vec<f64> = x.to_vec();
        for layer in &self.hidden {
            let mut y = Vec::with_capacity(layer.out_width());
            layer.affine(&current, &mut y);
            let a: Vec<f64> = y.iter().map(|&v| self.activation.apply(v)).collect();
            pre.push(y);
            current = a.clone();
            post.push(a);
        }
        let mut s = self.out_bias;
        for (w, a) in self.out_weights.iter().zip(&current) {
            s += w * a;
        }
        Ok(ForwardTrace {
            pre,
            post,
            output: s,
        })
    }

    /// Normalized network output s for a normalized input x.
    pub fn forward(&self, x: &[f64; 3]) -> Result<f64> {
        Ok(self.forward_trace(x)?.output)
    }

    /// Exact analytic Jacobian ds/dx, dispatched on (depth, activation) to
    /// the four closed forms. Any other depth is a structural error rather
    /// than a silent fallback.
    pub fn input_jacobian(&self, x: &[f64; 3]) -> Result<[f64; 3]> {
        let trace = self.forward_trace(x)?;
        self.input_jacobian_from_trace(&trace)
    }

    /// Jacobian reusing an existing forward trace.
    pub fn input_jacobian_from_trace(&self, trace: &ForwardTrace) -> Result<[f64; 3]> {
        match (self.hidden.len(), self.activation) {
            // s' = W1^T [ w o f'(y1) ]
            (1, Activation::Tanh) | (1, Activation::Sigmoid) => {
                let y1 = &trace.pre[0];
                let inner: Vec<f64> = self
                    .out_weights
                    .iter()
                    .zip(y1)
                    .map(|(w, &y)| w * self.activation.derivative(y))
                    .collect();
                Ok(self.back_through(&self.hidden[0], &inner))
            }
            // s' = W1^T [ (W2^T (w o f'(y2))) o f'(y1) ]
            (2, Activation::Tanh) | (2, Activation::Sigmoid) => {
                let y1 = &trace.pre[0];
                let y2 = &trace.pre[1];
                let outer: Vec<f64> = self
                    .out_weights
                    .iter()
                    .zip(y2)
                    .map(|(w, &y)| w * self.activation.derivative(y))
                    .collect();
                let l2 = &self.hidden[1];
                let mut inner = vec![0.0; l2.in_width];
                for i in 0..l2.out_width() {
                    for j in 0..l2.in_width {
                        inner[j] += l2.weight(i, j) * outer[i];
                    }
                }
                for (v, &y) in inner.iter_mut().zip(y1) {
                    *v *= self.activation.derivative(y);
                }
                Ok(self.back_through(&self.hidden[0], &inner))
            }
            (depth, _) => Err(Error::structure(format!(
                "no closed-form Jacobian for {depth} hidden layers"
            ))),
        }
    }

    /// W1^T v for the 3-wide first layer.
    fn back_through(&self, layer: &DenseLayer, v: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..layer.out_width() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += layer.weight(i, j) * v[i];
            }
        }
        out
    }

    /// The 4-evaluation forward-difference approximation of the Jacobian.
    /// Kept as a test oracle and for cost comparisons; the analytic form is
    /// what production paths use.
    pub fn finite_difference_jacobian(&self, x: &[f64; 3], delta: f64) -> Result<[f64; 3]> {
        if !(delta > 0.0) {
            return Err(Error::domain("finite-difference step must be positive"));
        }
        let base = self.forward(x)?;
        let mut out = [0.0; 3];
        for i in 0..3 {
            let mut xp = *x;
            xp[i] += delta;
            out[i] = (self.forward(&xp)? - base) / delta;
        }
        Ok(out)
    }

    /// Flow stress and its three physical derivatives at a physical point.
    /// The rate is clamped from below to the reference rate, mirroring the
    /// analytic law's policy; inputs beyond the training box extrapolate
    /// silently (counted, not clamped).
    pub fn predict_physical(
        &self,
        eps_p: f64,
        rate: f64,
        temperature: f64,
    ) -> Result<(f64, f64, f64, f64)> {
        self.predict_physical_opts(eps_p, rate, temperature, RateRescale::ChainRule)
    }

    pub fn predict_physical_opts(
        &self,
        eps_p: f64,
        rate: f64,
        temperature: f64,
        rescale: RateRescale,
    ) -> Result<(f64, f64, f64, f64)> {
        let rate = rate.max(self.ranges.eps_dot_ref);
        let x = self.ranges.normalize_inputs(eps_p, rate, temperature)?;
        self.note_extrapolation(&x);
        let trace = self.forward_trace(&x)?;
        let sp = self.input_jacobian_from_trace(&trace)?;
        Ok(rescale_outputs(
            &self.ranges,
            trace.output,
            &sp,
            rate,
            rescale,
        ))
    }
}

/// Shared final rescaling from the normalized pair (s, s') to physical
/// (sigma, d sigma / d eps_p, d sigma / d rate, d sigma / dT).
pub(crate) fn rescale_outputs(
    r: &NormalizationRanges,
    s: f64,
    sp: &[f64; 3],
    rate: f64,
    rescale: RateRescale,
) -> (f64, f64, f64, f64) {
    let span = r.sigma_max - r.sigma_min;
    let sigma = r.denormalize_sigma(s);
    let d_eps = sp[0] * span / (r.eps_p_max - r.eps_p_min);
    let d_rate = match rescale {
        RateRescale::ChainRule => sp[1] * span / ((r.log_rate_max - r.log_rate_min) * rate),
        RateRescale::PaperLiteral => {
            let rate_min = r.eps_dot_ref * r.log_rate_min.exp();
            let rate_max = r.eps_dot_ref * r.log_rate_max.exp();
            sp[1] / rate * span / (rate_max - rate_min)
        }
    };
    let d_temp = sp[2] * span / (r.t_max - r.t_min);
    (sigma, d_eps, d_rate, d_temp)
}
