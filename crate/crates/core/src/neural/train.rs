use super::mlp::{backward_pass, forward_pass, logit_loss, predict};
use super::{Loss, MlpParams, MlpTemplate, Optimizer, OptimizerKind, Target};
use crate::distributions::LabeledDataset;
use crate::numkit::{Matrix, Rng};
use crate::{Error, Result};

/// Hyperparameters of a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub optimizer: OptimizerKind,
    /// Coefficient of `‖W‖²/2` added to the loss.
    pub l2: f64,
    pub seed: u64,
    /// Fraction of `iterations` after which the learning rate drops ×0.1.
    pub decay_at: Option<f64>,
    /// Iterations per loss-trace entry.
    pub log_every: usize,
}

impl Default for TrainConfig {
    /// Classifier defaults: Adam(0.9, 0.999, 1e-8), lr 1e-3, batch 128,
    /// 5 000 iterations, no weight decay, ×0.1 decay at 80 %.
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 128,
            iterations: 5_000,
            optimizer: OptimizerKind::adam_default(),
            l2: 0.0,
            seed: 0,
            decay_at: Some(0.8),
            log_every: 100,
        }
    }
}

impl TrainConfig {
    /// GAN defaults: Adam(0.5, 0.999, 1e-8), lr 2e-4, batch 128, 20 000
    /// iterations, constant learning rate.
    pub fn gan_default() -> Self {
        TrainConfig {
            learning_rate: 2e-4,
            batch_size: 128,
            iterations: 20_000,
            optimizer: OptimizerKind::Adam { beta1: 0.5, beta2: 0.999, eps: 1e-8 },
            l2: 0.0,
            seed: 0,
            decay_at: None,
            log_every: 100,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::contract(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::contract("batch size must be >= 1"));
        }
        if self.iterations == 0 {
            return Err(Error::contract("iterations must be >= 1"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::contract("l2 penalty must be >= 0"));
        }
        if let OptimizerKind::Adam { beta1, beta2, eps } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || eps.is_nan() || eps <= 0.0 {
                return Err(Error::contract("adam needs 0 <= β1, β2 < 1 and ε > 0"));
            }
        }
        if let Some(f) = self.decay_at {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::contract("decay_at must be a fraction in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Learning rate in effect at zero-based iteration `it`.
    pub fn learning_rate_at(&self, it: usize) -> f64 {
        match self.decay_at {
            Some(f) if it as f64 >= f * self.iterations as f64 => self.learning_rate * 0.1,
            _ => self.learning_rate,
        }
    }
}

/// Outcome of [`train_classifier`].
#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    /// Full-dataset loss after the last update.
    pub final_loss: f64,
    pub train_accuracy: f64,
    /// Mean mini-batch loss per `log_every` iterations.
    pub loss_trace: Vec<f64>,
}

/// Endless stream of mini-batch indices: epochs of seeded permutations.
pub(crate) struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    batch: usize,
}

impl BatchSampler {
    pub(crate) fn new(n: usize, batch: usize, rng: &mut Rng) -> Self {
        BatchSampler { order: rng.permutation(n), pos: 0, batch: batch.min(n) }
    }

    pub(crate) fn next(&mut self, rng: &mut Rng) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.batch);
        while idx.len() < self.batch {
            if self.pos == self.order.len() {
                rng.shuffle(&mut self.order);
                self.pos = 0;
            }
            let take = (self.batch - idx.len()).min(self.order.len() - self.pos);
            idx.extend_from_slice(&self.order[self.pos..self.pos + take]);
            self.pos += take;
        }
        idx
    }
}

/// Fraction of rows whose predicted class equals the label.
pub fn accuracy(params: &MlpParams, data: &LabeledDataset) -> Result<f64> {
    let pred = predict(params, data.x())?.labels();
    let hits = pred.iter().zip(data.labels()).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / data.len().max(1) as f64)
}

/// Trains a fresh network of shape `arch` on `data` with mini-batch gradient
/// descent. Deterministic for a given `cfg.seed`.
pub fn train_classifier(
    data: &LabeledDataset,
    arch: &MlpTemplate,
    cfg: &TrainConfig,
) -> Result<(MlpParams, FitReport)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::contract("cannot train on an empty dataset"));
    }
    if arch.input != data.dim() {
        return Err(Error::contract(format!(
            "architecture input {} does not match data dimension {}",
            arch.input,
            data.dim()
        )));
    }
    let loss = Loss::for_head(arch.head)?;
    let classes = data.class_count();
    let ok = match loss {
        Loss::SoftmaxCrossEntropy => arch.output == classes,
        Loss::BinaryCrossEntropy => arch.output == 1 && classes <= 2,
    };
    if !ok {
        return Err(Error::contract(format!(
            "{} head with {} outputs cannot model {classes} classes",
            arch.head.tag(),
            arch.output
        )));
    }

    let mut rng = Rng::new(cfg.seed);
    let mut params = arch.init(&mut rng)?;
    let mut opt = Optimizer::new(cfg.optimizer, &params);
    let mut batches = BatchSampler::new(data.len(), cfg.batch_size, &mut rng);
    let log_every = cfg.log_every.max(1);
    let mut trace = Vec::with_capacity(cfg.iterations / log_every + 1);
    let mut window = 0.0;
    let mut window_len = 0;
    let full_batch = cfg.batch_size >= data.len();

    for it in 0..cfg.iterations {
        let (x, y): (Matrix, Vec<usize>) = if full_batch {
            (data.x().clone(), data.labels().to_vec())
        } else {
            let idx = batches.next(&mut rng);
            (data.x().select_rows(&idx), idx.iter().map(|&i| data.labels()[i]).collect())
        };
        let pass = forward_pass(&params, &x)?;
        let (mut value, d_logits) = logit_loss(loss, &pass.logits, Target::Labels(&y))?;
        if cfg.l2 > 0.0 {
            value += 0.5 * cfg.l2 * params.weight_norm_sq();
        }
        if !value.is_finite() {
            return Err(Error::numeric(format!("non-finite training loss at iteration {it}")));
        }
        let (mut grads, _) = backward_pass(&params, &pass, d_logits, false);
        if cfg.l2 > 0.0 {
            for (g, p) in grads.layers_mut().iter_mut().zip(params.layers()) {
                for (gv, pv) in g.weights.as_mut_slice().iter_mut().zip(p.weights.as_slice()) {
                    *gv += cfg.l2 * pv;
                }
            }
        }
        opt.step(&mut params, &grads, cfg.learning_rate_at(it));

        window += value;
        window_len += 1;
        if window_len == log_every || it + 1 == cfg.iterations {
            trace.push(window / window_len as f64);
            window = 0.0;
            window_len = 0;
        }
    }

    if !params.is_finite() {
        return Err(Error::numeric("training produced non-finite parameters"));
    }
    let final_loss = super::loss_value(&params, data.x(), Target::Labels(data.labels()), loss, cfg.l2)?;
    if !final_loss.is_finite() {
        return Err(Error::numeric("non-finite final training loss"));
    }
    let train_accuracy = accuracy(&params, data)?;
    Ok((params, FitReport { final_loss, train_accuracy, loss_trace: trace }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{bayes_posterior, sample_mixture, DataSource, GaussianSpec, MixtureSpec};
    use crate::neural::Head;

    fn blobs(seed: u64, n: usize, sep: f64) -> LabeledDataset {
        let a = GaussianSpec::spherical(vec![-sep, 0.0], 1.0).unwrap();
        let b = GaussianSpec::spherical(vec![sep, 0.0], 1.0).unwrap();
        sample_mixture(&MixtureSpec::uniform(vec![a, b]).unwrap(), n, &mut Rng::new(seed), true).unwrap()
    }

    #[test]
    fn separable_blobs_logistic_regression() {
        let data = blobs(1, 1000, 5.0);
        let cfg = TrainConfig::default().with_iterations(2000);
        let (_, report) = train_classifier(&data, &MlpTemplate::logistic(2), &cfg).unwrap();
        assert!(report.train_accuracy >= 0.99, "{report:?}");
        let (_, report) = train_classifier(&data, &MlpTemplate::linear_softmax(2, 2), &cfg).unwrap();
        assert!(report.train_accuracy >= 0.99, "{report:?}");
    }

    #[test]
    fn single_class_is_trivial() {
        let x = crate::numkit::standard_normal(&mut Rng::new(2), 64, 3);
        let data = LabeledDataset::new(x, vec![0; 64], 1, DataSource::TrueData).unwrap();
        let cfg = TrainConfig::default().with_iterations(200);
        let (_, report) = train_classifier(&data, &MlpTemplate::linear_softmax(3, 1), &cfg).unwrap();
        assert_eq!(report.train_accuracy, 1.0);
        assert!(report.final_loss < 1e-12);
    }

    #[test]
    fn five_class_mixture_agrees_with_bayes() {
        let spec = MixtureSpec::ring(5, 10.0, 1.0).unwrap();
        let train = sample_mixture(&spec, 5000, &mut Rng::new(3), true).unwrap();
        let test = sample_mixture(&spec, 5000, &mut Rng::new(4), true).unwrap();
        let cfg = TrainConfig::default();
        let (params, _) = train_classifier(&train, &MlpTemplate::linear_softmax(2, 5), &cfg).unwrap();
        let learned = predict(&params, test.x()).unwrap().labels();
        let bayes = bayes_posterior(&spec, test.x()).unwrap().labels();
        let agree = learned.iter().zip(&bayes).filter(|(a, b)| a == b).count() as f64 / 5000.0;
        assert!(agree >= 0.98, "{agree}");
    }

    #[test]
    fn training_is_seed_deterministic() {
        let data = blobs(5, 300, 1.0);
        let arch = MlpTemplate::mlp(2, &[8, 8], 2, Head::Softmax);
        let cfg = TrainConfig::default().with_iterations(300).with_seed(9);
        let (a, ra) = train_classifier(&data, &arch, &cfg).unwrap();
        let (b, rb) = train_classifier(&data, &arch, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        let (c, _) = train_classifier(&data, &arch, &cfg.clone().with_seed(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn xor_separates_linear_from_mlp() {
        // four blobs at (±2, ±2), label = XOR of the signs
        let mk = |seed: u64| {
            let comps = [(-2.0, -2.0), (2.0, 2.0), (-2.0, 2.0), (2.0, -2.0)]
                .iter()
                .map(|&(a, b)| GaussianSpec::spherical(vec![a, b], 0.25).unwrap())
                .collect();
            let ds = sample_mixture(&MixtureSpec::uniform(comps).unwrap(), 2000, &mut Rng::new(seed), true).unwrap();
            let (x, y, _, src) = ds.into_parts();
            let y = y.into_iter().map(|k| usize::from(k >= 2)).collect();
            LabeledDataset::new(x, y, 2, src).unwrap()
        };
        let (train, test) = (mk(6), mk(7));
        let cfg = TrainConfig { learning_rate: 1e-2, ..TrainConfig::default() }.with_iterations(2000);
        let (lin, _) = train_classifier(&train, &MlpTemplate::linear_softmax(2, 2), &cfg).unwrap();
        let (deep, _) = train_classifier(&train, &MlpTemplate::mlp(2, &[16, 16], 2, Head::Softmax), &cfg).unwrap();
        let lin_acc = accuracy(&lin, &test).unwrap();
        let deep_acc = accuracy(&deep, &test).unwrap();
        assert!(lin_acc <= 0.6, "linear {lin_acc}");
        assert!(deep_acc > 0.95, "mlp {deep_acc}");
    }

    #[test]
    fn architecture_mismatch_rejected() {
        let data = blobs(8, 100, 1.0);
        let cfg = TrainConfig::default().with_iterations(10);
        assert!(train_classifier(&data, &MlpTemplate::linear_softmax(3, 2), &cfg).is_err());
        assert!(train_classifier(&data, &MlpTemplate::linear_softmax(2, 3), &cfg).is_err());
        let bad = TrainConfig { learning_rate: 0.0, ..cfg };
        assert!(train_classifier(&data, &MlpTemplate::linear_softmax(2, 2), &bad).is_err());
    }

    #[test]
    fn learning_rate_decays_once() {
        let cfg = TrainConfig::default().with_iterations(100);
        assert_eq!(cfg.learning_rate_at(79), 1e-3);
        assert!((cfg.learning_rate_at(80) - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn batch_sampler_covers_each_epoch() {
        let mut rng = Rng::new(1);
        let mut s = BatchSampler::new(10, 4, &mut rng);
        let mut seen: Vec<usize> = (0..5).flat_map(|_| s.next(&mut rng)).collect();
        seen.truncate(20);
        let mut first = seen[..10].to_vec();
        first.sort_unstable();
        assert_eq!(first, (0..10).collect::<Vec<_>>());
    }
}
