//! End-to-end pipelines behind `run` and `demo`, and the files they write.

use std::path::{Path, PathBuf};
use std::time::Instant;

use covshift_core::audit::{
    boundary_distortion_experiment, boundary_skew, confidence_histogram, gaussian_fit_kl, label_correctness,
    mahalanobis_discrepancy, mean_discrepancy, mode_collapse_experiment, mode_histogram, modified_inception_score,
    moments, spectrum_report, Annotator, BoundaryConfig, BoundaryOutcome, InceptionScore, ModeCollapseConfig,
    ModeCollapseOutcome, ModeReport, RowSource, SpectrumReport, SyntheticSource,
};
use covshift_core::distributions::{
    distorted_gaussian, sample_gaussian, sample_mixture, GaussianSpec, LabeledDataset, SampleSource,
};
use covshift_core::gan::{generate, train_vanilla_gan, GanRun};
use covshift_core::neural::MlpParams;
use covshift_core::numkit::{derive_seed, Rng};
use covshift_core::PredictionMatrix;
use log::info;
use serde_json::json;

use crate::config::{DataSpec, ExperimentConfig, ExperimentKind};
use crate::error::{Result, ShellError};
use crate::io::{load_dataset, write_file, Cell, Loaded, Table};
use crate::plot::{bar_chart, line_chart, Series};

/// Draws the true data of a synthetic family, or loads it from file.
pub fn true_data(cfg: &ExperimentConfig) -> Result<Loaded> {
    let mut rng = Rng::new(cfg.data_seed());
    Ok(match &cfg.data {
        DataSpec::Spherical { dim, variance } => {
            Loaded::Unlabeled(sample_gaussian(&GaussianSpec::isotropic(*dim, *variance)?, cfg.n, &mut rng)?)
        }
        DataSpec::File(path) => load_dataset(path)?,
        _ => {
            let mix = cfg.data.mixture()?.expect("labeled family");
            Loaded::Labeled(sample_mixture(&mix, cfg.n, &mut rng, true)?)
        }
    })
}

fn labeled_true_data(cfg: &ExperimentConfig) -> Result<LabeledDataset> {
    match true_data(cfg)? {
        Loaded::Labeled(d) => Ok(d),
        Loaded::Unlabeled(_) => Err(ShellError::config(format!("{} needs labeled data", cfg.kind))),
    }
}

// A sampler for the true distribution of a synthetic family.
fn true_sampler(cfg: &ExperimentConfig) -> Result<Box<dyn SampleSource>> {
    Ok(match &cfg.data {
        DataSpec::Spherical { dim, variance } => Box::new(GaussianSpec::isotropic(*dim, *variance)?),
        DataSpec::File(_) => return Err(ShellError::config(format!("{} needs a synthetic data.family", cfg.kind))),
        _ => Box::new(cfg.data.mixture()?.expect("labeled family")),
    })
}

/// Spectrum, mean discrepancy and Gaussian-fit KL of a GAN trained on the
/// true data.
#[derive(Clone, Debug)]
pub struct SpectrumDemo {
    pub report: SpectrumReport,
    pub delta_mu: f64,
    pub delta_mu_per_dim: f64,
    pub mahalanobis: f64,
    /// `KL(true fit ‖ GAN fit)`.
    pub kl_gan: f64,
    /// `KL` between fits of two independent true samples of the same size.
    pub kl_true_baseline: f64,
    pub kl_regularized: bool,
    pub run: GanRun,
}

pub fn spectrum_demo(cfg: &ExperimentConfig) -> Result<SpectrumDemo> {
    let sampler = true_sampler(cfg)?;
    let train = true_data(cfg)?.x().clone();
    let mut gan = cfg.gan.clone();
    gan.data_dim = train.cols();
    info!("training a {}-D GAN for {} iterations", gan.data_dim, gan.iterations());
    let run = train_vanilla_gan(&train, &gan, &mut Rng::new(gan.train.seed))?;

    let eval = Rng::new(cfg.protocol_seed());
    let m = cfg.spectrum_samples;
    let t = sampler.sample(m, &mut eval.child(1))?;
    let g = generate(run.final_checkpoint(), m, &mut eval.child(2))?;
    let t2 = sampler.sample(m, &mut eval.child(3))?;
    let report = spectrum_report(&t, &g)?;
    let (mt, mg, mt2) = (moments(&t)?, moments(&g)?, moments(&t2)?);
    let delta_mu = mean_discrepancy(&mt, &mg)?;
    let kl = gaussian_fit_kl(&mt, &mg)?;
    let base = gaussian_fit_kl(&mt, &mt2)?;
    Ok(SpectrumDemo {
        report,
        delta_mu,
        delta_mu_per_dim: delta_mu / mt.dim() as f64,
        mahalanobis: mahalanobis_discrepancy(&mt, &mg)?,
        kl_gan: kl.kl,
        kl_true_baseline: base.kl,
        kl_regularized: kl.regularized || base.regularized,
        run,
    })
}

/// One seed of the boundary-skew illustration.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewTrial {
    pub seed: u64,
    pub angle_degrees: f64,
    pub accuracy_gap: f64,
    pub true_accuracy: f64,
    pub synthetic_accuracy: f64,
    pub true_classifier: MlpParams,
    pub synthetic_classifier: MlpParams,
}

/// Trains identical logistic models on true two-class data and on a
/// synthetic copy whose class-0 variance along `skew.axis` is scaled by
/// `skew.variance_factor`, then compares their boundaries on true holdout
/// data.
pub fn skew_trial(cfg: &ExperimentConfig, seed: u64) -> Result<SkewTrial> {
    let mix = match &cfg.data {
        DataSpec::TwoGaussians { .. } => cfg.data.mixture()?.expect("two classes"),
        _ => return Err(ShellError::config("boundary-skew-demo needs data.family = two-gaussians")),
    };
    let data = sample_mixture(&mix, cfg.n, &mut Rng::new(derive_seed(seed, 0)), true)?;
    let negative = distorted_gaussian(&mix.components()[0], cfg.skew_axis, cfg.skew_variance_factor)?;
    let sources: Vec<&dyn SampleSource> = vec![&negative, &mix.components()[1]];
    let mut train = cfg.classifier_train.clone();
    train.seed = derive_seed(seed, 2);
    let bc = BoundaryConfig {
        classifier: cfg.classifier_template(data.dim(), 2),
        train,
        factors: Vec::new(),
        oversample: 1,
        holdout_fraction: cfg.holdout,
        annotator: cfg.annotator_choice(data.dim(), 2)?,
        is_splits: cfg.splits,
        seed: derive_seed(seed, 1),
        parallel: cfg.parallel,
    };
    let out = boundary_distortion_experiment(&data, &SyntheticSource::Injected(sources), &bc)?;
    let t = out.report.true_row();
    let s = out.report.row(RowSource::Gan(1)).expect("synthetic row");
    let skew = boundary_skew(&t.classifier, &s.classifier, &out.holdout)?;
    Ok(SkewTrial {
        seed,
        angle_degrees: skew.angle_degrees,
        accuracy_gap: skew.accuracy_gap,
        true_accuracy: t.test_accuracy,
        synthetic_accuracy: s.test_accuracy,
        true_classifier: t.classifier.clone(),
        synthetic_classifier: s.classifier.clone(),
    })
}

#[derive(Clone, Debug)]
pub struct SkewDemo {
    pub trials: Vec<SkewTrial>,
    pub mean_angle: f64,
    pub positive_gaps: usize,
    pub angle_threshold: f64,
}

pub fn skew_demo(cfg: &ExperimentConfig) -> Result<SkewDemo> {
    let trials = (0..cfg.skew_seeds as u64)
        .map(|k| skew_trial(cfg, derive_seed(cfg.seed, 100 + k)))
        .collect::<Result<Vec<_>>>()?;
    let mean_angle = trials.iter().map(|t| t.angle_degrees).sum::<f64>() / trials.len().max(1) as f64;
    Ok(SkewDemo {
        positive_gaps: trials.iter().filter(|t| t.accuracy_gap > 0.0).count(),
        mean_angle,
        angle_threshold: cfg.skew_angle_threshold,
        trials,
    })
}

#[derive(Clone, Debug)]
pub struct ModeCollapseDemo {
    pub outcome: ModeCollapseOutcome,
    /// Share of final generated samples on which the configured annotator
    /// agrees with the Bayes posterior; absent for file data.
    pub bayes_agreement: Option<f64>,
}

pub fn mode_collapse(cfg: &ExperimentConfig) -> Result<ModeCollapseDemo> {
    let data = labeled_true_data(cfg)?;
    let mut gan = cfg.gan.clone();
    gan.data_dim = data.dim();
    let mc = ModeCollapseConfig {
        gan,
        annotator: cfg.annotator_choice(data.dim(), data.class_count())?,
        n_eval: cfg.n_eval,
        missing_threshold: cfg.missing_threshold,
        seed: cfg.protocol_seed(),
    };
    let outcome = mode_collapse_experiment(&data, &mc)?;
    let bayes_agreement = match cfg.data.mixture()? {
        Some(mix) => {
            let bayes = Annotator::Bayes(mix).annotate(&outcome.final_samples)?.labels();
            Some(label_correctness(&outcome.final_predictions.labels(), &bayes)?)
        }
        None => None,
    };
    Ok(ModeCollapseDemo { outcome, bayes_agreement })
}

pub fn boundary_config(cfg: &ExperimentConfig, dim: usize) -> Result<BoundaryConfig> {
    Ok(BoundaryConfig {
        classifier: cfg.classifier_template(dim, 2),
        train: cfg.classifier_train.clone(),
        factors: cfg.factors.clone(),
        oversample: cfg.oversample,
        holdout_fraction: cfg.holdout,
        annotator: cfg.annotator_choice(dim, 2)?,
        is_splits: cfg.splits,
        seed: cfg.protocol_seed(),
        parallel: cfg.parallel,
    })
}

pub fn boundary_distortion(cfg: &ExperimentConfig) -> Result<BoundaryOutcome> {
    let data = labeled_true_data(cfg)?;
    let mut gan = cfg.gan.clone();
    gan.data_dim = data.dim();
    Ok(boundary_distortion_experiment(&data, &SyntheticSource::TrainGans(gan), &boundary_config(cfg, data.dim())?)?)
}

/// Shift metrics between a true and a synthetic sample set read from files.
#[derive(Clone, Debug)]
pub struct ExternalAudit {
    pub spectrum: Option<SpectrumReport>,
    pub delta_mu: f64,
    pub delta_mu_per_dim: f64,
    pub mahalanobis: Option<f64>,
    pub kl: Option<f64>,
    /// Present when the true file is labeled.
    pub modes: Option<ModeReport>,
    pub predictions: Option<PredictionMatrix>,
    pub inception: Option<InceptionScore>,
    /// Present when both files are labeled.
    pub label_correctness: Option<f64>,
}

pub fn audit_external(cfg: &ExperimentConfig) -> Result<ExternalAudit> {
    let tp = cfg.true_path.as_deref().ok_or_else(|| ShellError::config("missing audit.true_path"))?;
    let sp = cfg.synthetic_path.as_deref().ok_or_else(|| ShellError::config("missing audit.synthetic_path"))?;
    let truth = load_dataset(tp)?;
    let syn = load_dataset(sp)?;
    audit_samples(cfg, &truth, &syn)
}

pub fn audit_samples(cfg: &ExperimentConfig, truth: &Loaded, syn: &Loaded) -> Result<ExternalAudit> {
    let (t, s) = (truth.x(), syn.x());
    if t.cols() != s.cols() {
        return Err(ShellError::Validation(format!(
            "true samples have dimension {}, synthetic {}",
            t.cols(),
            s.cols()
        )));
    }
    let d = t.cols();
    let spectrum = (t.rows() > d && s.rows() > d).then(|| spectrum_report(t, s)).transpose()?;
    let (mt, ms) = (moments(t)?, moments(s)?);
    let delta_mu = mean_discrepancy(&mt, &ms)?;
    // singular covariances make these undefined rather than fatal
    let mahalanobis = mahalanobis_discrepancy(&mt, &ms).ok();
    let kl = gaussian_fit_kl(&mt, &ms).ok().map(|k| k.kl);

    let mut audit = ExternalAudit {
        spectrum,
        delta_mu,
        delta_mu_per_dim: delta_mu / d as f64,
        mahalanobis,
        kl,
        modes: None,
        predictions: None,
        inception: None,
        label_correctness: None,
    };
    if let Loaded::Labeled(true_set) = truth {
        let annotator = cfg.annotator_choice(d, true_set.class_count())?.build(true_set)?;
        let preds = annotator.annotate(s)?;
        let labels = preds.labels();
        audit.modes = Some(mode_histogram(&labels, true_set.class_count(), cfg.missing_threshold)?);
        let splits = cfg.splits.min(preds.len());
        audit.inception = Some(modified_inception_score(&preds, splits, &mut Rng::new(cfg.protocol_seed()))?);
        if let Loaded::Labeled(syn_set) = syn {
            audit.label_correctness = Some(label_correctness(syn_set.labels(), &labels)?);
        }
        audit.predictions = Some(preds);
    }
    Ok(audit)
}

/// Files written by one run.
#[derive(Clone, Debug)]
pub struct ReportBundle {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub manifest: serde_json::Value,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        write_file(&self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.write(name, table.as_str())
    }
}

fn metrics_table(rows: &[(&str, Cell)]) -> Table {
    let mut t = Table::new(&["metric", "value"]);
    for (k, v) in rows {
        let v = match v {
            Cell::Num(x) => Cell::Num(*x),
            Cell::Int(x) => Cell::Int(*x),
            Cell::Text(s) => Cell::Text(s.clone()),
        };
        t.row(vec![(*k).into(), v]);
    }
    t
}

fn spectrum_table(r: &SpectrumReport) -> Table {
    let mut t = Table::new(&["index", "true", "synthetic"]);
    for (i, (a, b)) in r.true_eigenvalues.iter().zip(&r.synthetic_eigenvalues).enumerate() {
        t.row(vec![i.into(), (*a).into(), (*b).into()]);
    }
    t
}

fn spectrum_svg(r: &SpectrumReport, syn_name: &str) -> String {
    let pts = |v: &[f64]| v.iter().enumerate().map(|(i, &l)| (i as f64, l)).collect();
    line_chart(
        "Covariance spectrum",
        "eigenvalue index",
        "eigenvalue",
        &[Series::new("true", pts(&r.true_eigenvalues)), Series::new(syn_name, pts(&r.synthetic_eigenvalues))],
    )
}

fn losses_table(run: &GanRun) -> Table {
    let mut t = Table::new(&["step", "generator_loss", "discriminator_loss"]);
    for c in run.checkpoints() {
        t.row(vec![c.step.into(), c.generator_loss.into(), c.discriminator_loss.into()]);
    }
    t
}

fn confidence_outputs(out: &mut Outputs, preds: &PredictionMatrix, bins: usize) -> Result<()> {
    let hist = confidence_histogram(preds, bins)?;
    let lo = 1.0 / preds.class_count() as f64;
    let mut t = Table::new(&["bin_low", "bin_high", "count"]);
    let mut labels = Vec::new();
    for (b, &c) in hist.iter().enumerate() {
        let a = lo + (1.0 - lo) * b as f64 / bins as f64;
        let z = lo + (1.0 - lo) * (b + 1) as f64 / bins as f64;
        t.row(vec![a.into(), z.into(), c.into()]);
        labels.push(format!("{a:.2}"));
    }
    out.table("confidence.csv", &t)?;
    let counts: Vec<f64> = hist.iter().map(|&c| c as f64).collect();
    out.write("confidence.svg", &bar_chart("Annotator confidence", "samples", &labels, &[("count".into(), counts)]))
}

fn mode_bar(report: &ModeReport) -> String {
    let labels: Vec<String> = (0..report.class_count()).map(|c| c.to_string()).collect();
    bar_chart(
        "Mode distribution of generated samples",
        "fraction",
        &labels,
        &[("fraction".into(), report.fractions.clone())],
    )
}

fn mode_counts_table(report: &ModeReport) -> Table {
    let mut t = Table::new(&["class", "count", "fraction"]);
    for (c, (&n, &f)) in report.counts.iter().zip(&report.fractions).enumerate() {
        t.row(vec![c.into(), n.into(), f.into()]);
    }
    t
}

fn missing_list(report: &ModeReport) -> String {
    report.missing_modes.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ")
}

fn write_spectrum_demo(out: &mut Outputs, r: &SpectrumDemo) -> Result<()> {
    out.table("spectrum.csv", &spectrum_table(&r.report))?;
    out.write("spectrum.svg", &spectrum_svg(&r.report, "gan"))?;
    out.table("losses.csv", &losses_table(&r.run))?;
    let rep = &r.report;
    let t = metrics_table(&[
        ("true_decay_ratio", rep.true_decay_ratio.into()),
        ("gan_decay_ratio", rep.synthetic_decay_ratio.into()),
        ("gan_below_half_max", rep.synthetic_below_half_max.into()),
        ("delta_mu", r.delta_mu.into()),
        ("delta_mu_per_dim", r.delta_mu_per_dim.into()),
        ("mahalanobis", r.mahalanobis.into()),
        ("kl_true_vs_gan", r.kl_gan.into()),
        ("kl_true_vs_true", r.kl_true_baseline.into()),
        ("kl_regularized", usize::from(r.kl_regularized).into()),
    ]);
    out.table("metrics.csv", &t)
}

fn write_skew_demo(out: &mut Outputs, r: &SkewDemo) -> Result<()> {
    let mut t = Table::new(&["seed", "angle_degrees", "accuracy_gap", "true_test_accuracy", "synthetic_test_accuracy"]);
    for tr in &r.trials {
        t.row(vec![
            Cell::Int(tr.seed),
            tr.angle_degrees.into(),
            tr.accuracy_gap.into(),
            tr.true_accuracy.into(),
            tr.synthetic_accuracy.into(),
        ]);
    }
    out.table("skew.csv", &t)?;
    let s = metrics_table(&[
        ("mean_angle_degrees", r.mean_angle.into()),
        ("angle_threshold_degrees", r.angle_threshold.into()),
        ("positive_gap_seeds", r.positive_gaps.into()),
        ("seeds", r.trials.len().into()),
    ]);
    out.table("skew_summary.csv", &s)?;
    let labels: Vec<String> = (0..r.trials.len()).map(|k| k.to_string()).collect();
    let angles = r.trials.iter().map(|t| t.angle_degrees).collect();
    out.write("skew.svg", &bar_chart("Boundary-normal angle per seed", "degrees", &labels, &[("angle".into(), angles)]))
}

fn write_mode_collapse(out: &mut Outputs, r: &ModeCollapseDemo) -> Result<()> {
    let o = &r.outcome;
    let c = o.series.class_count();
    let mut cols = vec!["step".to_string()];
    cols.extend((0..c).map(|k| format!("f{k}")));
    let mut t = Table::with_columns(cols);
    for (step, f) in o.series.steps().iter().zip(o.series.fractions()) {
        let mut row: Vec<Cell> = vec![(*step).into()];
        row.extend(f.iter().map(|&v| Cell::Num(v)));
        t.row(row);
    }
    out.table("modes.csv", &t)?;
    let series: Vec<Series> = (0..c)
        .map(|k| {
            let pts = o.series.steps().iter().zip(o.series.fractions()).map(|(&s, f)| (s as f64, f[k])).collect();
            Series::new(format!("class {k}"), pts)
        })
        .collect();
    out.write("modes.svg", &line_chart("Mode fractions over training", "iteration", "fraction", &series))?;
    out.table("final_modes.csv", &mode_counts_table(&o.report))?;
    out.write("final_modes.svg", &mode_bar(&o.report))?;
    out.table("losses.csv", &losses_table(&o.run))?;
    let mut metrics = vec![
        ("tv_from_uniform", Cell::Num(o.report.tv_from_uniform)),
        ("missing_threshold", Cell::Num(o.report.missing_threshold)),
        ("missing_modes", Cell::Text(missing_list(&o.report))),
    ];
    if let Some(a) = r.bayes_agreement {
        metrics.push(("bayes_agreement", Cell::Num(a)));
    }
    out.table("mode_summary.csv", &metrics_table(&metrics))?;
    confidence_outputs(out, &o.final_predictions, 10)
}

fn write_boundary(out: &mut Outputs, r: &BoundaryOutcome) -> Result<()> {
    let mut t = Table::new(&[
        "source",
        "factor",
        "size",
        "label_correctness",
        "inception_mean",
        "inception_std",
        "train_accuracy",
        "test_accuracy",
    ]);
    for row in &r.report.rows {
        t.row(vec![
            row.source.tag().into(),
            row.source.factor().into(),
            row.size.into(),
            row.label_correctness.into(),
            row.inception.mean.into(),
            row.inception.std.into(),
            row.train_accuracy.into(),
            row.test_accuracy.into(),
        ]);
    }
    out.table("boundary.csv", &t)?;
    let curve: Vec<(f64, f64)> = r
        .report
        .rows
        .iter()
        .filter_map(|row| match row.source {
            RowSource::TrueDown(m) => Some((m as f64, row.test_accuracy)),
            _ => None,
        })
        .collect();
    if !curve.is_empty() {
        out.write(
            "downsampling.svg",
            &line_chart(
                "Test accuracy vs down-sampling factor",
                "M",
                "test accuracy",
                &[Series::new("true ↓M", curve)],
            ),
        )?;
    }
    let m = metrics_table(&[
        ("classifier", Cell::Text(r.report.classifier.clone())),
        ("n_train", r.report.n.into()),
        ("n_holdout", r.report.holdout_size.into()),
    ]);
    out.table("boundary_summary.csv", &m)
}

fn write_audit(out: &mut Outputs, a: &ExternalAudit, bins: usize) -> Result<()> {
    let mut metrics = vec![("delta_mu", Cell::Num(a.delta_mu)), ("delta_mu_per_dim", Cell::Num(a.delta_mu_per_dim))];
    if let Some(v) = a.mahalanobis {
        metrics.push(("mahalanobis", Cell::Num(v)));
    }
    if let Some(v) = a.kl {
        metrics.push(("kl_true_vs_synthetic", Cell::Num(v)));
    }
    if let Some(s) = &a.spectrum {
        metrics.push(("true_decay_ratio", Cell::Num(s.true_decay_ratio)));
        metrics.push(("synthetic_decay_ratio", Cell::Num(s.synthetic_decay_ratio)));
        metrics.push(("synthetic_below_half_max", Cell::Num(s.synthetic_below_half_max)));
    }
    if let Some(m) = &a.modes {
        metrics.push(("tv_from_uniform", Cell::Num(m.tv_from_uniform)));
        metrics.push(("missing_modes", Cell::Text(missing_list(m))));
    }
    if let Some(is) = &a.inception {
        metrics.push(("inception_mean", Cell::Num(is.mean)));
        metrics.push(("inception_std", Cell::Num(is.std)));
    }
    if let Some(c) = a.label_correctness {
        metrics.push(("label_correctness", Cell::Num(c)));
    }
    out.table("audit.csv", &metrics_table(&metrics))?;
    if let Some(s) = &a.spectrum {
        out.table("spectrum.csv", &spectrum_table(s))?;
        out.write("spectrum.svg", &spectrum_svg(s, "synthetic"))?;
    }
    if let Some(m) = &a.modes {
        out.table("modes.csv", &mode_counts_table(m))?;
        out.write("modes.svg", &mode_bar(m))?;
    }
    if let Some(p) = &a.predictions {
        confidence_outputs(out, p, bins)?;
    }
    Ok(())
}

fn execute(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    match cfg.kind {
        ExperimentKind::SpectrumDemo => write_spectrum_demo(out, &spectrum_demo(cfg)?),
        ExperimentKind::BoundarySkewDemo => write_skew_demo(out, &skew_demo(cfg)?),
        ExperimentKind::ModeCollapse => write_mode_collapse(out, &mode_collapse(cfg)?),
        ExperimentKind::BoundaryDistortion => write_boundary(out, &boundary_distortion(cfg)?),
        ExperimentKind::AuditExternal => write_audit(out, &audit_external(cfg)?, cfg.bins),
    }
}

/// Runs the configured pipeline and writes its tables, plots, the resolved
/// config (`config.txt`) and `manifest.json` into `cfg.out`. On failure the
/// files written so far stay in place and the manifest is marked `FAILED`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    cfg.check_inputs()?;
    let start = Instant::now();
    let mut out = Outputs { dir: cfg.out.clone(), files: Vec::new() };
    out.write("config.txt", &cfg.to_settings().to_text())?;
    info!("running {} into {}", cfg.kind, cfg.out.display());
    let result = execute(cfg, &mut out);
    let config: serde_json::Map<String, serde_json::Value> =
        cfg.to_settings().iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let manifest = json!({
        "tool": "covshift",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": cfg.kind.tag(),
        "status": if result.is_ok() { "ok" } else { "FAILED" },
        "error": result.as_ref().err().map(|e| e.to_string()),
        "seeds": {
            "seed": cfg.seed,
            "data": cfg.data_seed(),
            "protocol": cfg.protocol_seed(),
            "classifier": cfg.classifier_train.seed,
            "gan": cfg.gan.train.seed,
        },
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "files": out.files,
        "config": config,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&out.dir.join("manifest.json"), &(text + "\n"))?;
    result?;
    Ok(ReportBundle { dir: out.dir, files: out.files, manifest })
}

pub fn write_spectrum_files(dir: &Path, r: &SpectrumReport) -> Result<()> {
    write_file(&dir.join("spectrum.csv"), spectrum_table(r).as_str())?;
    write_file(&dir.join("spectrum.svg"), &spectrum_svg(r, "synthetic"))
}

pub fn write_confidence_files(dir: &Path, preds: &PredictionMatrix, bins: usize) -> Result<()> {
    let mut out = Outputs { dir: dir.to_path_buf(), files: Vec::new() };
    confidence_outputs(&mut out, preds, bins)
}

pub fn write_mode_files(dir: &Path, report: &ModeReport) -> Result<()> {
    write_file(&dir.join("modes.csv"), mode_counts_table(report).as_str())?;
    write_file(&dir.join("modes.svg"), &mode_bar(report))
}

pub fn write_losses(dir: &Path, run: &GanRun) -> Result<()> {
    write_file(&dir.join("losses.csv"), losses_table(run).as_str())
}

pub fn write_audit_files(dir: &Path, audit: &ExternalAudit, bins: usize) -> Result<Vec<String>> {
    let mut out = Outputs { dir: dir.to_path_buf(), files: Vec::new() };
    write_audit(&mut out, audit, bins)?;
    Ok(out.files)
}
