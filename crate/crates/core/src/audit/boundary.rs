use std::fmt;

use super::annotator::{Annotator, AnnotatorChoice};
use super::sampling::{downsample, stratified_split};
use super::scores::{label_correctness, modified_inception_score, InceptionScore};
use crate::distributions::{LabeledDataset, SampleSource};
use crate::error::StepExt;
use crate::gan::{generate_labeled_pair, train_vanilla_gan, GanConfig, GanRun};
use crate::neural::{accuracy, train_classifier, Head, MlpParams, MlpTemplate, TrainConfig};
use crate::numkit::{derive_seed, Rng};
use crate::{Error, Result};

/// Where the training set of a report row came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSource {
    /// The full true training split.
    True,
    /// `↓_M` subset of the true training split.
    TrueDown(usize),
    /// `↑_L` synthetic set of `L · N` rows.
    Gan(usize),
}

impl RowSource {
    pub fn tag(self) -> String {
        match self {
            RowSource::True => "true".to_string(),
            RowSource::TrueDown(m) => format!("true_down_{m}"),
            RowSource::Gan(l) => format!("gan_up_{l}"),
        }
    }

    /// The sampling factor `M` or `L` (1 for the plain true row).
    pub fn factor(self) -> usize {
        match self {
            RowSource::True => 1,
            RowSource::TrueDown(m) | RowSource::Gan(m) => m,
        }
    }
}

impl fmt::Display for RowSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// One line of the boundary-distortion table.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryRow {
    pub source: RowSource,
    /// Number of training rows.
    pub size: usize,
    /// Agreement between the row's labels and the annotator on its training set.
    pub label_correctness: f64,
    /// Modified Inception Score of the annotator on the training set.
    pub inception: InceptionScore,
    pub train_accuracy: f64,
    /// Accuracy on the held-out true data.
    pub test_accuracy: f64,
    pub classifier: MlpParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryReport {
    pub rows: Vec<BoundaryRow>,
    /// Layer widths and head of the classifier trained for every row.
    pub classifier: String,
    /// Size `N` of the true training split.
    pub n: usize,
    pub holdout_size: usize,
}

impl BoundaryReport {
    pub fn row(&self, source: RowSource) -> Option<&BoundaryRow> {
        self.rows.iter().find(|r| r.source == source)
    }

    pub fn true_row(&self) -> &BoundaryRow {
        self.row(RowSource::True).expect("every report has a true row")
    }
}

/// What plays the role of the per-class GANs.
pub enum SyntheticSource<'a> {
    /// Train one GAN per class on that class's true training rows.
    TrainGans(GanConfig),
    /// Use the given per-class samplers directly, skipping training.
    Injected(Vec<&'a dyn SampleSource>),
}

/// Settings of the boundary-distortion protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryConfig {
    /// Shape of the classifier trained on every source.
    pub classifier: MlpTemplate,
    /// Training settings, seed included, shared by every row.
    pub train: TrainConfig,
    /// Down-sampling factors `M`, ascending.
    pub factors: Vec<usize>,
    /// Oversampling factor `L`.
    pub oversample: usize,
    pub holdout_fraction: f64,
    pub annotator: AnnotatorChoice,
    pub is_splits: usize,
    pub seed: u64,
    /// Train independent sub-runs on worker threads. Every sub-run has its
    /// own derived seed, so the report does not depend on this flag.
    pub parallel: bool,
}

impl BoundaryConfig {
    /// Linear softmax classifier, factors `{1, 4, 16, 64}`, `L = 10`, 20 %
    /// holdout, a one-hidden-layer annotator and 10 IS splits.
    pub fn new(dim: usize, seed: u64) -> Self {
        BoundaryConfig {
            classifier: MlpTemplate::linear_softmax(dim, 2),
            train: TrainConfig::default(),
            factors: vec![1, 4, 16, 64],
            oversample: 10,
            holdout_fraction: 0.2,
            annotator: AnnotatorChoice::Learned {
                arch: MlpTemplate::mlp(dim, &[32], 2, Head::Softmax),
                train: TrainConfig::default(),
            },
            is_splits: 10,
            seed,
            parallel: false,
        }
    }

    fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction <= 0.5) {
            return Err(Error::contract(format!("holdout fraction {} outside (0, 0.5]", self.holdout_fraction)));
        }
        check_factors(&self.factors)?;
        if self.oversample == 0 {
            return Err(Error::contract("oversampling factor must be >= 1"));
        }
        if self.is_splits == 0 {
            return Err(Error::contract("inception score needs at least one split"));
        }
        Ok(())
    }
}

fn check_factors(factors: &[usize]) -> Result<()> {
    if factors.contains(&0) {
        return Err(Error::contract("down-sampling factors must be >= 1"));
    }
    if factors.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::contract(format!("down-sampling factors {factors:?} are not ascending")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct BoundaryOutcome {
    pub report: BoundaryReport,
    pub holdout: LabeledDataset,
    /// One run per class; empty when the sources were injected.
    pub gans: Vec<GanRun>,
    pub annotator: Annotator,
}

// Runs `f(0..n)` in order, or on scoped threads when `parallel` is set.
fn run_all<T: Send>(n: usize, parallel: bool, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    if !parallel || n < 2 {
        return (0..n).map(&f).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..n)
            .map(|i| {
                s.spawn({
                    let f = &f;
                    move || f(i)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect()
    })
}

// ↓_M of `data`; M = 1 keeps the data as it is so that the entry reproduces
// the full-data classifier exactly.
fn downsampled(data: &LabeledDataset, m: usize, base: &Rng) -> Result<LabeledDataset> {
    if m == 1 {
        return Ok(data.clone());
    }
    downsample(data, m, &mut base.child(m as u64))
}

/// Test accuracy on `holdout` of one identically configured classifier per
/// `↓_M` subset of `data`.
pub fn downsampling_curve(
    data: &LabeledDataset,
    arch: &MlpTemplate,
    cfg: &TrainConfig,
    factors: &[usize],
    holdout: &LabeledDataset,
    rng: &Rng,
) -> Result<Vec<(usize, f64)>> {
    check_factors(factors)?;
    factors
        .iter()
        .map(|&m| {
            let subset = downsampled(data, m, rng)?;
            let (params, _) = train_classifier(&subset, arch, cfg).step(&format!("training on true_down_{m}"))?;
            Ok((m, accuracy(&params, holdout)?))
        })
        .collect()
}

/// Trains two class-conditional generators (or uses injected samplers),
/// builds default-labeled synthetic sets of size `N` and `L · N`, and
/// compares identical classifiers trained on them with classifiers trained on
/// the true data and its `↓_M` subsets. Test accuracy is always measured on
/// the same stratified holdout of the true data.
pub fn boundary_distortion_experiment(
    true_data: &LabeledDataset,
    synthetic: &SyntheticSource<'_>,
    cfg: &BoundaryConfig,
) -> Result<BoundaryOutcome> {
    cfg.validate()?;
    if true_data.class_count() != 2 {
        return Err(Error::contract(format!(
            "boundary distortion is defined for 2 classes, got {}",
            true_data.class_count()
        )));
    }
    let dim = true_data.dim();
    let (train, holdout) = stratified_split(true_data, cfg.holdout_fraction, &mut Rng::new(derive_seed(cfg.seed, 1)))
        .step("holdout split")?;
    let n = train.len();
    let annotator = cfg.annotator.build(&train).step("building the annotator")?;

    // Step 1: one generator per class.
    let gans = match synthetic {
        SyntheticSource::TrainGans(gan) => {
            if gan.data_dim != dim {
                return Err(Error::contract(format!(
                    "GAN data dimension {} does not match data dimension {dim}",
                    gan.data_dim
                )));
            }
            run_all(2, cfg.parallel, |k| {
                let x = train.class_samples(k);
                let mut rng = Rng::new(derive_seed(cfg.seed, 10 + k as u64));
                train_vanilla_gan(&x, gan, &mut rng).step(&format!("step 1: training the class-{k} GAN"))
            })?
        }
        SyntheticSource::Injected(sources) => {
            if sources.len() != 2 {
                return Err(Error::contract(format!("need 2 injected sources, got {}", sources.len())));
            }
            if sources.iter().any(|s| s.dim() != dim) {
                return Err(Error::contract("injected source dimension does not match the data"));
            }
            Vec::new()
        }
    };
    let sources: Vec<&dyn SampleSource> = match synthetic {
        SyntheticSource::TrainGans(_) => gans.iter().map(|g| g as &dyn SampleSource).collect(),
        SyntheticSource::Injected(s) => s.clone(),
    };

    // Step 2: default-labeled synthetic sets at ↑_1 and ↑_L.
    let mut up_factors = vec![1];
    if cfg.oversample > 1 {
        up_factors.push(cfg.oversample);
    }
    let mut sets: Vec<(RowSource, LabeledDataset)> = vec![(RowSource::True, train.clone())];
    let down = Rng::new(derive_seed(cfg.seed, 3));
    for &m in &cfg.factors {
        let subset = downsampled(&train, m, &down).step(&format!("down-sampling by {m}"))?;
        sets.push((RowSource::TrueDown(m), subset));
    }
    for &l in &up_factors {
        let mut rng = Rng::new(derive_seed(cfg.seed, 20 + l as u64));
        let syn = generate_labeled_pair(&sources, n, l, &mut rng).step(&format!("step 2: generating the ↑_{l} set"))?;
        sets.push((RowSource::Gan(l), syn));
    }

    // Steps 3-4: identical classifiers, evaluated on the true holdout.
    let rows = run_all(sets.len(), cfg.parallel, |i| {
        let (source, data) = &sets[i];
        let step = format!("step 3: training on {source}");
        let (params, fit) = train_classifier(data, &cfg.classifier, &cfg.train).step(&step)?;
        let preds = annotator.annotate(data.x()).step(&format!("annotating {source}"))?;
        let correctness = label_correctness(data.labels(), &preds.labels())?;
        let mut is_rng = Rng::new(derive_seed(cfg.seed, 40 + i as u64));
        let inception = modified_inception_score(&preds, cfg.is_splits.min(data.len()), &mut is_rng)?;
        Ok(BoundaryRow {
            source: *source,
            size: data.len(),
            label_correctness: correctness,
            inception,
            train_accuracy: fit.train_accuracy,
            test_accuracy: accuracy(&params, &holdout).step(&format!("step 4: testing {source}"))?,
            classifier: params,
        })
    })?;

    let dims = cfg.classifier.dims();
    let descriptor =
        format!("{} {}", dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("-"), cfg.classifier.head.tag());
    Ok(BoundaryOutcome {
        report: BoundaryReport { rows, classifier: descriptor, n, holdout_size: holdout.len() },
        holdout,
        gans,
        annotator,
    })
}

/// Disagreement between a classifier trained on true data and one trained on
/// synthetic data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySkew {
    /// Angle between the decision-boundary normals, in `[0, 90]` degrees.
    pub angle_degrees: f64,
    /// True-trained minus synthetic-trained accuracy on the true holdout.
    pub accuracy_gap: f64,
}

fn boundary_normal(params: &MlpParams) -> Result<Vec<f64>> {
    let [layer] = params.layers() else {
        return Err(Error::contract("boundary skew needs a linear classifier"));
    };
    let w = &layer.weights;
    let normal: Vec<f64> = match (params.head(), w.cols()) {
        (Head::Softmax, 2) => (0..w.rows()).map(|r| w[(r, 1)] - w[(r, 0)]).collect(),
        (Head::Sigmoid, 1) => w.column(0),
        (head, out) => {
            return Err(Error::contract(format!(
                "boundary skew needs a binary classifier, got {} head with {out} outputs",
                head.tag()
            )))
        }
    };
    if normal.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("decision-boundary normal has zero norm".into()));
    }
    Ok(normal)
}

pub fn boundary_skew(true_cls: &MlpParams, syn_cls: &MlpParams, true_holdout: &LabeledDataset) -> Result<BoundarySkew> {
    let a = boundary_normal(true_cls)?;
    let b = boundary_normal(syn_cls)?;
    if a.len() != b.len() {
        return Err(Error::contract(format!("classifier input dimensions differ: {} vs {}", a.len(), b.len())));
    }
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cos = (dot / (na * nb)).abs().min(1.0);
    Ok(BoundarySkew {
        angle_degrees: cos.acos().to_degrees(),
        accuracy_gap: accuracy(true_cls, true_holdout)? - accuracy(syn_cls, true_holdout)?,
    })
}
