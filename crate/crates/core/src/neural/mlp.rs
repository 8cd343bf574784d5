use crate::numkit::{standard_normal, Matrix, Rng};
use crate::{Error, PredictionMatrix, Result};

/// Logits beyond ±30 are clamped before any log-loss evaluation.
pub const LOGIT_CLAMP: f64 = 30.0;

/// Output non-linearity applied after the last affine layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Head {
    Linear,
    Sigmoid,
    Softmax,
}

impl Head {
    pub fn tag(self) -> &'static str {
        match self {
            Head::Linear => "linear",
            Head::Sigmoid => "sigmoid",
            Head::Softmax => "softmax",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Head> {
        match tag {
            "linear" => Some(Head::Linear),
            "sigmoid" => Some(Head::Sigmoid),
            "softmax" => Some(Head::Softmax),
            _ => None,
        }
    }
}

/// Affine layer `x ↦ x·W + b` with `W` stored `in × out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(input: usize, output: usize) -> Self {
        Layer { weights: Matrix::zeros(input, output), bias: vec![0.0; output] }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }
}

/// Weights of a feed-forward network: ReLU between layers, `head` at the end.
///
/// With no hidden layer and a softmax head this is the linear model
/// `ŷ = softmax(Wᵀx + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    layers: Vec<Layer>,
    head: Head,
}

impl MlpParams {
    pub fn new(layers: Vec<Layer>, head: Head) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::contract("network needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(Error::contract(format!(
                    "layer {i}: bias length {} for {} outputs",
                    l.bias.len(),
                    l.output_dim()
                )));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::contract(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(MlpParams { layers, head })
    }

    /// All-zero network with the given layer widths `[in, h1, ..., out]`.
    pub fn zeros(dims: &[usize], head: Head) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::contract("need at least input and output widths"));
        }
        let layers = dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        MlpParams::new(layers, head)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(Layer::output_dim).collect()
    }

    /// Layer widths `[in, h1, ..., out]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.layers.iter().map(Layer::output_dim)).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    /// Flat parameter view: per layer, weights (row-major) then bias.
    pub fn param(&self, mut i: usize) -> f64 {
        for l in &self.layers {
            let w = l.weights.as_slice().len();
            if i < w {
                return l.weights.as_slice()[i];
            }
            i -= w;
            if i < l.bias.len() {
                return l.bias[i];
            }
            i -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    pub fn set_param(&mut self, mut i: usize, value: f64) {
        for l in &mut self.layers {
            let w = l.weights.as_slice().len();
            if i < w {
                l.weights.as_mut_slice()[i] = value;
                return;
            }
            i -= w;
            if i < l.bias.len() {
                l.bias[i] = value;
                return;
            }
            i -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    /// Zeroes the final layer, so the network outputs `head(0)` everywhere.
    pub fn with_zeroed_output(mut self) -> Self {
        let last = self.layers.len() - 1;
        let l = &mut self.layers[last];
        *l = Layer::zeros(l.input_dim(), l.output_dim());
        self
    }

    /// Same shape, all zeros.
    pub fn zeros_like(&self) -> MlpParams {
        MlpParams::zeros(&self.dims(), self.head).expect("shape already validated")
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.dims() == other.dims()
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        self.layers.iter().map(|l| l.weights.as_slice().iter().map(|w| w * w).sum::<f64>()).sum()
    }
}

/// Architecture description used to initialise fresh networks.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpTemplate {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    pub head: Head,
}

impl MlpTemplate {
    /// Multinomial logistic regression `softmax(Wᵀx + b)`.
    pub fn linear_softmax(input: usize, classes: usize) -> Self {
        MlpTemplate { input, hidden: Vec::new(), output: classes, head: Head::Softmax }
    }

    /// Binary logistic regression `σ(wᵀx + b)`.
    pub fn logistic(input: usize) -> Self {
        MlpTemplate { input, hidden: Vec::new(), output: 1, head: Head::Sigmoid }
    }

    pub fn mlp(input: usize, hidden: &[usize], output: usize, head: Head) -> Self {
        MlpTemplate { input, hidden: hidden.to_vec(), output, head }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input];
        d.extend_from_slice(&self.hidden);
        d.push(self.output);
        d
    }

    /// Zero biases; weights `N(0, 2/fan_in)` feeding a ReLU and `N(0, 1/fan_in)`
    /// for the output layer.
    pub fn init(&self, rng: &mut Rng) -> Result<MlpParams> {
        let dims = self.dims();
        if dims.contains(&0) {
            return Err(Error::contract(format!("layer widths must be positive: {dims:?}")));
        }
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let gain = if i == last { 1.0 } else { 2.0 };
                let std = (gain / w[0] as f64).sqrt();
                Layer { weights: standard_normal(rng, w[0], w[1]).scale(std), bias: vec![0.0; w[1]] }
            })
            .collect();
        MlpParams::new(layers, self.head)
    }

    pub fn zeros(&self) -> Result<MlpParams> {
        MlpParams::zeros(&self.dims(), self.head)
    }
}

/// Activations kept for backpropagation.
pub(crate) struct ForwardPass {
    // acts[0] is the input; acts[i] the ReLU output feeding layer i
    acts: Vec<Matrix>,
    pub(crate) logits: Matrix,
}

fn affine(x: &Matrix, layer: &Layer) -> Matrix {
    let mut z = x.matmul(&layer.weights).expect("checked widths");
    for r in 0..z.rows() {
        for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
            *v += b;
        }
    }
    z
}

pub(crate) fn forward_pass(params: &MlpParams, x: &Matrix) -> Result<ForwardPass> {
    if x.cols() != params.input_dim() {
        return Err(Error::contract(format!("input has {} columns, network expects {}", x.cols(), params.input_dim())));
    }
    let n_layers = params.layers.len();
    let mut acts = Vec::with_capacity(n_layers);
    let mut cur = x.clone();
    for (i, layer) in params.layers.iter().enumerate() {
        let z = affine(&cur, layer);
        acts.push(cur);
        if i + 1 == n_layers {
            return Ok(ForwardPass { acts, logits: z });
        }
        cur = z.map(|v| v.max(0.0));
    }
    unreachable!("network has at least one layer")
}

/// Smallest `|pre-activation|` over every ReLU unit and row of `x`; infinite
/// for a network without hidden layers. Finite-difference checks are only
/// meaningful when this is well above the step times the weight scale.
pub fn relu_margin(params: &MlpParams, x: &Matrix) -> Result<f64> {
    let pass = forward_pass(params, x)?;
    let mut margin = f64::INFINITY;
    for (act, layer) in pass.acts.iter().zip(&params.layers).take(params.layers.len() - 1) {
        let z = affine(act, layer);
        margin = z.as_slice().iter().fold(margin, |m, v| m.min(v.abs()));
    }
    Ok(margin)
}

/// Backpropagates `d_logits` (gradient of the loss w.r.t. the final affine
/// output). Returns parameter gradients and, if asked, the input gradient.
pub(crate) fn backward_pass(
    params: &MlpParams,
    pass: &ForwardPass,
    d_logits: Matrix,
    want_input_grad: bool,
) -> (MlpParams, Option<Matrix>) {
    let mut grads = Vec::with_capacity(params.layers.len());
    let mut delta = d_logits;
    let mut d_input = None;
    for i in (0..params.layers.len()).rev() {
        let layer = &params.layers[i];
        let a = &pass.acts[i];
        let dw = a.matmul_tn(&delta).expect("checked widths");
        let mut db = vec![0.0; delta.cols()];
        for row in delta.iter_rows() {
            for (acc, v) in db.iter_mut().zip(row) {
                *acc += v;
            }
        }
        grads.push(Layer { weights: dw, bias: db });
        if i > 0 || want_input_grad {
            let mut prev = delta.matmul_nt(&layer.weights).expect("checked widths");
            if i > 0 {
                for (g, act) in prev.as_mut_slice().iter_mut().zip(a.as_slice()) {
                    if *act <= 0.0 {
                        *g = 0.0;
                    }
                }
                delta = prev;
            } else {
                d_input = Some(prev);
            }
        }
    }
    grads.reverse();
    (MlpParams { layers: grads, head: params.head }, d_input)
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        row.iter_mut().for_each(|v| *v /= total);
    }
    out
}

fn apply_head(head: Head, logits: Matrix) -> Matrix {
    match head {
        Head::Linear => logits,
        Head::Sigmoid => logits.map(sigmoid),
        Head::Softmax => softmax_rows(&logits),
    }
}

/// Network output per row: logits, sigmoid probabilities or softmax rows.
pub fn forward(params: &MlpParams, x: &Matrix) -> Result<Matrix> {
    Ok(apply_head(params.head, forward_pass(params, x)?.logits))
}

/// Class posteriors. A single sigmoid output `p` becomes the pair `(1 − p, p)`.
pub fn predict(params: &MlpParams, x: &Matrix) -> Result<PredictionMatrix> {
    let out = forward(params, x)?;
    match params.head {
        Head::Linear => Err(Error::contract("a linear head has no probabilistic reading")),
        Head::Softmax => Ok(PredictionMatrix::from_trusted(out)),
        Head::Sigmoid => {
            if out.cols() != 1 {
                return Err(Error::contract("sigmoid prediction needs a single output unit"));
            }
            let data = out.as_slice().iter().flat_map(|&p| [1.0 - p, p]).collect();
            Ok(PredictionMatrix::from_trusted(Matrix::from_raw(out.rows(), 2, data)))
        }
    }
}

/// Supported training losses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    /// Softmax cross-entropy against integer labels.
    SoftmaxCrossEntropy,
    /// Sigmoid cross-entropy against 0/1 labels or soft targets.
    BinaryCrossEntropy,
}

impl Loss {
    /// The loss matching a probabilistic head.
    pub fn for_head(head: Head) -> Result<Loss> {
        match head {
            Head::Softmax => Ok(Loss::SoftmaxCrossEntropy),
            Head::Sigmoid => Ok(Loss::BinaryCrossEntropy),
            Head::Linear => Err(Error::contract("no classification loss for a linear head")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Labels(&'a [usize]),
    /// Per-row target probabilities for a single sigmoid output.
    Probabilities(&'a [f64]),
}

impl Target<'_> {
    fn len(&self) -> usize {
        match self {
            Target::Labels(l) => l.len(),
            Target::Probabilities(p) => p.len(),
        }
    }
}

/// Mean sigmoid cross-entropy of single-column logits against a constant
/// target, and its gradient w.r.t. the logits.
pub(crate) fn bce_const(logits: &Matrix, target: f64) -> (f64, Matrix) {
    let n = logits.rows() as f64;
    let mut loss = 0.0;
    let grad = logits.map(|z| {
        let z = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
        loss += z.max(0.0) - target * z + (-z.abs()).exp().ln_1p();
        (sigmoid(z) - target) / n
    });
    (loss / n, grad)
}

/// Mean loss over rows and its gradient w.r.t. the logits.
pub(crate) fn logit_loss(loss: Loss, logits: &Matrix, target: Target<'_>) -> Result<(f64, Matrix)> {
    let n = logits.rows();
    if target.len() != n {
        return Err(Error::contract(format!("{} targets for {n} rows", target.len())));
    }
    if n == 0 {
        return Err(Error::contract("loss over an empty batch"));
    }
    let nf = n as f64;
    match (loss, target) {
        (Loss::SoftmaxCrossEntropy, Target::Labels(labels)) => {
            let c = logits.cols();
            if let Some(bad) = labels.iter().find(|&&l| l >= c) {
                return Err(Error::contract(format!("label {bad} out of range for {c} classes")));
            }
            let mut grad = softmax_rows(logits);
            let mut total = 0.0;
            for (r, &y) in labels.iter().enumerate() {
                let row = logits.row(r);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                total += lse - row[y];
                let g = grad.row_mut(r);
                g[y] -= 1.0;
                g.iter_mut().for_each(|v| *v /= nf);
            }
            Ok((total / nf, grad))
        }
        (Loss::BinaryCrossEntropy, target) => {
            if logits.cols() != 1 {
                return Err(Error::contract("binary cross-entropy needs a single logit column"));
            }
            let t: Vec<f64> = match target {
                Target::Labels(l) => {
                    if let Some(bad) = l.iter().find(|&&v| v > 1) {
                        return Err(Error::contract(format!("binary label {bad} out of range")));
                    }
                    l.iter().map(|&v| v as f64).collect()
                }
                Target::Probabilities(p) => {
                    if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                        return Err(Error::contract("binary targets must lie in [0, 1]"));
                    }
                    p.to_vec()
                }
            };
            let mut total = 0.0;
            let mut grad = Matrix::zeros(n, 1);
            for r in 0..n {
                let z = logits[(r, 0)].clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
                total += z.max(0.0) - t[r] * z + (-z.abs()).exp().ln_1p();
                grad[(r, 0)] = (sigmoid(z) - t[r]) / nf;
            }
            Ok((total / nf, grad))
        }
        (Loss::SoftmaxCrossEntropy, Target::Probabilities(_)) => {
            Err(Error::contract("softmax cross-entropy needs integer labels"))
        }
    }
}

fn check_head(params: &MlpParams, loss: Loss) -> Result<()> {
    match (loss, params.head) {
        (Loss::SoftmaxCrossEntropy, Head::Softmax) | (Loss::BinaryCrossEntropy, Head::Sigmoid) => Ok(()),
        _ => Err(Error::contract(format!("{loss:?} is incompatible with a {} head", params.head.tag()))),
    }
}

/// Mean loss over rows plus `l2·‖W‖²/2`, with exact gradients.
pub fn loss_and_grad(
    params: &MlpParams,
    x: &Matrix,
    target: Target<'_>,
    loss: Loss,
    l2: f64,
) -> Result<(f64, MlpParams)> {
    check_head(params, loss)?;
    let pass = forward_pass(params, x)?;
    let (value, d_logits) = logit_loss(loss, &pass.logits, target)?;
    let (mut grads, _) = backward_pass(params, &pass, d_logits, false);
    let mut total = value;
    if l2 > 0.0 {
        total += 0.5 * l2 * params.weight_norm_sq();
        for (g, p) in grads.layers.iter_mut().zip(&params.layers) {
            for (gv, pv) in g.weights.as_mut_slice().iter_mut().zip(p.weights.as_slice()) {
                *gv += l2 * pv;
            }
        }
    }
    Ok((total, grads))
}

/// Loss value only.
pub fn loss_value(params: &MlpParams, x: &Matrix, target: Target<'_>, loss: Loss, l2: f64) -> Result<f64> {
    check_head(params, loss)?;
    let logits = forward_pass(params, x)?.logits;
    let (value, _) = logit_loss(loss, &logits, target)?;
    Ok(value + 0.5 * l2 * params.weight_norm_sq())
}
