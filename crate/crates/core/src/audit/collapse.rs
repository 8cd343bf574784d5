use super::annotator::{Annotator, AnnotatorChoice};
use super::modes::{mode_histogram, ModeReport, TemporalModeSeries, DEFAULT_MISSING_THRESHOLD};
use crate::distributions::{LabeledDataset, SampleSource};
use crate::error::StepExt;
use crate::gan::{train_vanilla_gan, GanConfig, GanRun};
use crate::numkit::{derive_seed, Matrix, Rng};
use crate::{Error, PredictionMatrix, Result};

/// Largest allowed ratio between the biggest and smallest class.
const BALANCE_TOLERANCE: f64 = 1.05;

/// Settings of the mode-collapse protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeCollapseConfig {
    pub gan: GanConfig,
    pub annotator: AnnotatorChoice,
    /// Generated samples annotated per checkpoint.
    pub n_eval: usize,
    pub missing_threshold: f64,
    pub seed: u64,
}

impl ModeCollapseConfig {
    pub fn new(gan: GanConfig, annotator: AnnotatorChoice, seed: u64) -> Self {
        ModeCollapseConfig { gan, annotator, n_eval: 10_000, missing_threshold: DEFAULT_MISSING_THRESHOLD, seed }
    }
}

#[derive(Clone, Debug)]
pub struct ModeCollapseOutcome {
    pub run: GanRun,
    pub annotator: Annotator,
    /// Histogram at the final checkpoint.
    pub report: ModeReport,
    pub series: TemporalModeSeries,
    /// The samples behind `report`, and their annotations.
    pub final_samples: Matrix,
    pub final_predictions: PredictionMatrix,
}

/// Draws `n_eval` samples from `source`, annotates them and histograms the
/// predicted labels. Also the entry point for auditing a sampler that did not
/// come out of [`mode_collapse_experiment`].
pub fn mode_report_for_source(
    source: &dyn SampleSource,
    annotator: &Annotator,
    n_eval: usize,
    missing_threshold: f64,
    rng: &mut Rng,
) -> Result<(ModeReport, Matrix, PredictionMatrix)> {
    if n_eval == 0 {
        return Err(Error::contract("n_eval must be >= 1"));
    }
    let x = source.sample(n_eval, rng)?;
    let preds = annotator.annotate(&x)?;
    let report = mode_histogram(&preds.labels(), annotator.class_count(), missing_threshold)?;
    Ok((report, x, preds))
}

/// Trains an unconditional GAN on `data` (labels dropped), builds the
/// annotator from the same labeled data, and histograms annotated samples of
/// every checkpoint.
pub fn mode_collapse_experiment(data: &LabeledDataset, cfg: &ModeCollapseConfig) -> Result<ModeCollapseOutcome> {
    let counts = data.class_counts();
    let (lo, hi) = (*counts.iter().min().unwrap_or(&0), *counts.iter().max().unwrap_or(&0));
    if lo == 0 || hi as f64 / lo as f64 > BALANCE_TOLERANCE {
        return Err(Error::contract(format!("mode-collapse input must be balanced, class counts {counts:?}")));
    }
    if cfg.gan.data_dim != data.dim() {
        return Err(Error::contract(format!(
            "GAN data dimension {} does not match data dimension {}",
            cfg.gan.data_dim,
            data.dim()
        )));
    }

    let mut gan_rng = Rng::new(derive_seed(cfg.seed, 1));
    let run = train_vanilla_gan(data.x(), &cfg.gan, &mut gan_rng).step("training the GAN")?;
    let annotator = cfg.annotator.build(data).step("building the annotator")?;

    let eval = Rng::new(derive_seed(cfg.seed, 2));
    let mut series = TemporalModeSeries::new();
    let mut last = None;
    for (k, ckpt) in run.checkpoints().iter().enumerate() {
        let mut rng = eval.child(k as u64);
        let step = format!("annotating checkpoint {}", ckpt.step);
        let (report, x, preds) =
            mode_report_for_source(ckpt, &annotator, cfg.n_eval, cfg.missing_threshold, &mut rng).step(&step)?;
        series.push(ckpt.step, report.fractions.clone())?;
        last = Some((report, x, preds));
    }
    let (report, final_samples, final_predictions) = last.expect("a GAN run has at least one checkpoint");
    Ok(ModeCollapseOutcome { run, annotator, report, series, final_samples, final_predictions })
}
