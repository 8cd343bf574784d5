use super::MlpParams;

/// First-order update rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam_default() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// `θ ← θ − lr · g`
pub fn sgd_step(params: &mut MlpParams, grads: &MlpParams, lr: f64) {
    assert!(params.same_shape(grads), "gradient shape mismatch");
    for (p, g) in params.layers_mut().iter_mut().zip(grads.layers()) {
        for (pv, gv) in p.weights.as_mut_slice().iter_mut().zip(g.weights.as_slice()) {
            *pv -= lr * gv;
        }
        for (pv, gv) in p.bias.iter_mut().zip(&g.bias) {
            *pv -= lr * gv;
        }
    }
}

/// Adam moment estimates for one parameter set.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: MlpParams,
    v: MlpParams,
    t: u64,
}

impl AdamState {
    pub fn new(shape: &MlpParams) -> Self {
        AdamState { m: shape.zeros_like(), v: shape.zeros_like(), t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_block(
    p: &mut [f64],
    g: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
    c1: f64,
    c2: f64,
) {
    for i in 0..p.len() {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Adam update with bias correction.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &MlpParams,
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    assert!(params.same_shape(grads) && params.same_shape(&state.m), "gradient shape mismatch");
    state.t += 1;
    let c1 = 1.0 - beta1.powi(state.t as i32);
    let c2 = 1.0 - beta2.powi(state.t as i32);
    let AdamState { m, v, .. } = state;
    for (((p, g), ml), vl) in
        params.layers_mut().iter_mut().zip(grads.layers()).zip(m.layers_mut().iter_mut()).zip(v.layers_mut().iter_mut())
    {
        adam_block(
            p.weights.as_mut_slice(),
            g.weights.as_slice(),
            ml.weights.as_mut_slice(),
            vl.weights.as_mut_slice(),
            lr,
            beta1,
            beta2,
            eps,
            c1,
            c2,
        );
        adam_block(&mut p.bias, &g.bias, &mut ml.bias, &mut vl.bias, lr, beta1, beta2, eps, c1, c2);
    }
}

/// An update rule together with its state.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    adam: Option<AdamState>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, shape: &MlpParams) -> Self {
        let adam = matches!(kind, OptimizerKind::Adam { .. }).then(|| AdamState::new(shape));
        Optimizer { kind, adam }
    }

    pub fn step(&mut self, params: &mut MlpParams, grads: &MlpParams, lr: f64) {
        match (self.kind, self.adam.as_mut()) {
            (OptimizerKind::Sgd, _) => sgd_step(params, grads, lr),
            (OptimizerKind::Adam { beta1, beta2, eps }, Some(state)) => {
                adam_step(params, grads, state, lr, beta1, beta2, eps)
            }
            (OptimizerKind::Adam { .. }, None) => unreachable!("adam state created with the optimizer"),
        }
    }
}
