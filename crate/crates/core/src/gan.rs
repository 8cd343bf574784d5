//! Vanilla GAN with fully connected generator and discriminator.
//!
//! Both networks use ReLU hidden layers followed by a final affine layer; the
//! discriminator adds a sigmoid. The discriminator ascends
//! `mean[log D(x) + log(1 − D(G(z)))]` and the generator uses the
//! non-saturating objective `max mean log D(G(z))`. Parameters are snapshotted
//! on a fixed schedule so that mode coverage can be tracked over training.

use log::warn;

use crate::distributions::{balanced_counts, DataSource, LabeledDataset, SampleSource};
use crate::error::StepExt;
use crate::neural::{
    backward_pass, bce_const, forward_pass, BatchSampler, Head, MlpParams, MlpTemplate, Optimizer, TrainConfig,
};
use crate::numkit::{standard_normal, Matrix, Rng};
use crate::{Error, Result};

/// GAN shape and schedule. The run length is `train.iterations`.
#[derive(Clone, Debug, PartialEq)]
pub struct GanConfig {
    pub latent_dim: usize,
    pub data_dim: usize,
    pub gen_hidden: Vec<usize>,
    pub disc_hidden: Vec<usize>,
    pub train: TrainConfig,
    pub checkpoint_every: usize,
    pub disc_steps: usize,
}

impl GanConfig {
    /// Defaults: `[128, 128]` hidden layers in both nets, Adam lr 2e-4 with
    /// β₁ = 0.5, batch 128, 20 000 iterations, one discriminator step per
    /// generator step, a checkpoint every 1 000 iterations.
    pub fn new(latent_dim: usize, data_dim: usize) -> Self {
        GanConfig {
            latent_dim,
            data_dim,
            gen_hidden: vec![128, 128],
            disc_hidden: vec![128, 128],
            train: TrainConfig::gan_default(),
            checkpoint_every: 1_000,
            disc_steps: 1,
        }
    }

    pub fn iterations(&self) -> usize {
        self.train.iterations
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.latent_dim == 0 || self.data_dim == 0 {
            return Err(Error::contract("latent and data dimensions must be >= 1"));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::contract("checkpoint_every must be >= 1"));
        }
        if self.disc_steps == 0 {
            return Err(Error::contract("disc_steps must be >= 1"));
        }
        if self.gen_hidden.iter().chain(&self.disc_hidden).any(|&h| h == 0) {
            return Err(Error::contract("hidden widths must be >= 1"));
        }
        Ok(())
    }

    pub fn generator_template(&self) -> MlpTemplate {
        MlpTemplate::mlp(self.latent_dim, &self.gen_hidden, self.data_dim, Head::Linear)
    }

    pub fn discriminator_template(&self) -> MlpTemplate {
        MlpTemplate::mlp(self.data_dim, &self.disc_hidden, 1, Head::Sigmoid)
    }

    /// Steps at which checkpoints are taken: every `checkpoint_every`
    /// iterations plus the final one.
    pub fn checkpoint_steps(&self) -> Vec<usize> {
        let total = self.iterations();
        let mut steps: Vec<usize> = (1..=total / self.checkpoint_every).map(|k| k * self.checkpoint_every).collect();
        if steps.last() != Some(&total) {
            steps.push(total);
        }
        steps
    }
}

/// Snapshot of both networks after `step` iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct GanCheckpoint {
    pub step: usize,
    pub generator: MlpParams,
    pub discriminator: MlpParams,
    /// Mean generator loss `−log D(G(z))` since the previous checkpoint.
    pub generator_loss: f64,
    /// Mean discriminator loss `−[log D(x) + log(1 − D(G(z)))]` since the
    /// previous checkpoint.
    pub discriminator_loss: f64,
}

impl GanCheckpoint {
    pub fn latent_dim(&self) -> usize {
        self.generator.input_dim()
    }

    pub fn data_dim(&self) -> usize {
        self.generator.output_dim()
    }
}

/// A configuration with its time-ordered checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct GanRun {
    config: GanConfig,
    checkpoints: Vec<GanCheckpoint>,
}

impl GanRun {
    pub fn new(config: GanConfig, checkpoints: Vec<GanCheckpoint>) -> Result<Self> {
        if checkpoints.is_empty() {
            return Err(Error::contract("a GAN run needs at least one checkpoint"));
        }
        if checkpoints.windows(2).any(|w| w[0].step >= w[1].step) {
            return Err(Error::contract("checkpoint steps must be strictly increasing"));
        }
        let gen_dims = config.generator_template().dims();
        let disc_dims = config.discriminator_template().dims();
        for c in &checkpoints {
            if c.generator.dims() != gen_dims || c.discriminator.dims() != disc_dims {
                return Err(Error::contract(format!(
                    "checkpoint at step {} does not match the configured architecture",
                    c.step
                )));
            }
        }
        Ok(GanRun { config, checkpoints })
    }

    pub fn config(&self) -> &GanConfig {
        &self.config
    }

    pub fn checkpoints(&self) -> &[GanCheckpoint] {
        &self.checkpoints
    }

    pub fn final_checkpoint(&self) -> &GanCheckpoint {
        self.checkpoints.last().expect("runs are non-empty")
    }
}

/// Mean discriminator loss on a real and a fake batch, with parameter
/// gradients.
pub fn discriminator_loss_and_grad(disc: &MlpParams, real: &Matrix, fake: &Matrix) -> Result<(f64, MlpParams)> {
    let both = Matrix::vstack(&[real, fake])?;
    let pass = forward_pass(disc, &both)?;
    let n_real = real.rows();
    let logits_real = pass.logits.select_rows(&(0..n_real).collect::<Vec<_>>());
    let logits_fake = pass.logits.select_rows(&(n_real..both.rows()).collect::<Vec<_>>());
    let (loss_real, g_real) = bce_const(&logits_real, 1.0);
    let (loss_fake, g_fake) = bce_const(&logits_fake, 0.0);
    let d_logits = Matrix::vstack(&[&g_real, &g_fake])?;
    let (grads, _) = backward_pass(disc, &pass, d_logits, false);
    Ok((loss_real + loss_fake, grads))
}

/// Non-saturating generator loss `−mean log D(G(z))` with generator gradients
/// (backpropagated through the fixed discriminator).
pub fn generator_loss_and_grad(gen: &MlpParams, disc: &MlpParams, z: &Matrix) -> Result<(f64, MlpParams)> {
    let g_pass = forward_pass(gen, z)?;
    let d_pass = forward_pass(disc, &g_pass.logits)?;
    let (loss, d_logits) = bce_const(&d_pass.logits, 1.0);
    let (_, d_fake) = backward_pass(disc, &d_pass, d_logits, true);
    let (grads, _) = backward_pass(gen, &g_pass, d_fake.expect("input gradient requested"), false);
    Ok((loss, grads))
}

/// Trains a vanilla GAN on the rows of `data`. Deterministic given `rng`.
pub fn train_vanilla_gan(data: &Matrix, cfg: &GanConfig, rng: &mut Rng) -> Result<GanRun> {
    cfg.validate()?;
    if data.rows() == 0 {
        return Err(Error::contract("cannot train a GAN on an empty dataset"));
    }
    if data.cols() != cfg.data_dim {
        return Err(Error::contract(format!(
            "data dimension {} does not match configured {}",
            data.cols(),
            cfg.data_dim
        )));
    }
    let tc = &cfg.train;
    let mut gen = cfg.generator_template().init(rng)?;
    let mut disc = cfg.discriminator_template().init(rng)?;
    let mut gen_opt = Optimizer::new(tc.optimizer, &gen);
    let mut disc_opt = Optimizer::new(tc.optimizer, &disc);
    let mut batches = BatchSampler::new(data.rows(), tc.batch_size, rng);
    let batch = tc.batch_size.min(data.rows());

    let schedule = cfg.checkpoint_steps();
    let mut next_ckpt = 0;
    let mut checkpoints = Vec::with_capacity(schedule.len());
    let (mut g_sum, mut d_sum, mut count) = (0.0, 0.0, 0usize);

    for it in 0..tc.iterations {
        let lr = tc.learning_rate_at(it);
        let mut d_loss = 0.0;
        for _ in 0..cfg.disc_steps {
            let real = data.select_rows(&batches.next(rng));
            let z = standard_normal(rng, batch, cfg.latent_dim);
            let fake = forward_pass(&gen, &z)?.logits;
            let (loss, grads) = discriminator_loss_and_grad(&disc, &real, &fake)?;
            disc_opt.step(&mut disc, &grads, lr);
            d_loss += loss;
        }
        d_loss /= cfg.disc_steps as f64;

        let z = standard_normal(rng, batch, cfg.latent_dim);
        let (g_loss, grads) = generator_loss_and_grad(&gen, &disc, &z)?;
        gen_opt.step(&mut gen, &grads, lr);

        if !(g_loss.is_finite() && d_loss.is_finite()) {
            return Err(Error::numeric(format!("non-finite GAN loss at iteration {}", it + 1)));
        }
        g_sum += g_loss;
        d_sum += d_loss;
        count += 1;

        let step = it + 1;
        if schedule.get(next_ckpt) == Some(&step) {
            if !(gen.is_finite() && disc.is_finite()) {
                return Err(Error::numeric(format!("non-finite GAN parameters at iteration {step}")));
            }
            let ckpt = GanCheckpoint {
                step,
                generator: gen.clone(),
                discriminator: disc.clone(),
                generator_loss: g_sum / count as f64,
                discriminator_loss: d_sum / count as f64,
            };
            warn_on_saturation(&ckpt, data, rng)?;
            checkpoints.push(ckpt);
            next_ckpt += 1;
            g_sum = 0.0;
            d_sum = 0.0;
            count = 0;
        }
    }
    GanRun::new(cfg.clone(), checkpoints)
}

fn warn_on_saturation(ckpt: &GanCheckpoint, data: &Matrix, rng: &mut Rng) -> Result<()> {
    let n = data.rows().min(256);
    // evaluation draws come from a child stream so the training stream is untouched
    let mut probe = rng.child(ckpt.step as u64);
    let idx: Vec<usize> = (0..n).map(|_| probe.below(data.rows())).collect();
    let real = crate::neural::forward(&ckpt.discriminator, &data.select_rows(&idx))?;
    let fake = crate::neural::forward(&ckpt.discriminator, &generate(ckpt, n, &mut probe)?)?;
    let mean = |m: &Matrix| m.as_slice().iter().sum::<f64>() / m.rows() as f64;
    let (dr, df) = (mean(&real), mean(&fake));
    if dr > 0.99 && df < 0.01 {
        warn!("step {}: discriminator saturated (D(real) = {dr:.4}, D(fake) = {df:.4})", ckpt.step);
    } else if dr < 0.01 || df > 0.99 {
        warn!("step {}: discriminator inverted (D(real) = {dr:.4}, D(fake) = {df:.4})", ckpt.step);
    }
    Ok(())
}

/// `n` generator samples `G(z)`, `z ~ N(0, I)`.
pub fn generate(checkpoint: &GanCheckpoint, n: usize, rng: &mut Rng) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::contract("generate needs n >= 1"));
    }
    let z = standard_normal(rng, n, checkpoint.latent_dim());
    Ok(forward_pass(&checkpoint.generator, &z)?.logits)
}

impl SampleSource for GanCheckpoint {
    fn dim(&self) -> usize {
        self.data_dim()
    }

    fn sample(&self, n: usize, rng: &mut Rng) -> Result<Matrix> {
        generate(self, n, rng)
    }
}

impl SampleSource for GanRun {
    fn dim(&self) -> usize {
        self.final_checkpoint().data_dim()
    }

    /// Samples from the final checkpoint.
    fn sample(&self, n: usize, rng: &mut Rng) -> Result<Matrix> {
        generate(self.final_checkpoint(), n, rng)
    }
}

/// Balanced synthetic dataset of `oversample · n` rows drawn from one source
/// per class. The label of a row is the index of the source that produced it.
pub fn generate_labeled_pair(
    sources: &[&dyn SampleSource],
    n: usize,
    oversample: usize,
    rng: &mut Rng,
) -> Result<LabeledDataset> {
    if sources.len() < 2 {
        return Err(Error::contract("need one source per class and at least two classes"));
    }
    if oversample == 0 {
        return Err(Error::contract("oversampling factor must be >= 1"));
    }
    let dim = sources[0].dim();
    if sources.iter().any(|s| s.dim() != dim) {
        return Err(Error::contract("class sources disagree on the data dimension"));
    }
    let total = n * oversample;
    let c = sources.len();
    if total < c {
        return Err(Error::contract(format!("cannot split {total} samples over {c} classes")));
    }
    let mut parts = Vec::with_capacity(c);
    let mut labels = Vec::with_capacity(total);
    for (k, (src, count)) in sources.iter().zip(balanced_counts(total, c)).enumerate() {
        let x = src.sample(count, rng).step(&format!("sampling class {k}"))?;
        if x.cols() != dim || x.rows() != count {
            return Err(Error::contract(format!("class {k} source returned a {}x{} sample", x.rows(), x.cols())));
        }
        parts.push(x);
        labels.extend(std::iter::repeat_n(k, count));
    }
    let stacked = Matrix::vstack(&parts.iter().collect::<Vec<_>>())?;
    let order = rng.permutation(total);
    let x = stacked.select_rows(&order);
    let y = order.iter().map(|&i| labels[i]).collect();
    LabeledDataset::new(x, y, c, DataSource::GanData)
}
