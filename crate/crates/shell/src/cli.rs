//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use covshift_core::audit::{
    mode_histogram, mode_report_for_source, modified_inception_score, Annotator, TemporalModeSeries,
};
use covshift_core::distributions::{DataSource, LabeledDataset};
use covshift_core::gan::{generate, train_vanilla_gan};
use covshift_core::neural::train_classifier;
use covshift_core::numkit::Rng;
use covshift_core::{Matrix, PredictionMatrix};
use log::info;

use crate::checkpoint::{is_checkpoint, load_gan, load_mlp, save_checkpoint, Checkpoint};
use crate::config::{ExperimentConfig, ExperimentKind, Settings};
use crate::error::{Result, ShellError};
use crate::experiments::{
    audit_samples, run_experiment, true_data, write_audit_files, write_confidence_files, write_losses, write_mode_files,
};
use crate::io::{load_dataset, save_dataset, save_matrix, write_file, Cell, Loaded, Table};
use crate::plot::{line_chart, Series};

#[derive(Debug, Parser)]
#[command(name = "covshift", version, about = "Measure covariate shift between true and generated samples")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed; every other seed is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run independent sub-trainings on worker threads.
    #[arg(long, global = true)]
    pub parallel: bool,
    /// Base config file; command flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set gan.iterations=500`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a dataset from a synthetic family.
    GenData {
        /// spherical, ring or two-gaussians
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        classes: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train a vanilla GAN on a dataset file and save every checkpoint.
    TrainGan {
        data: PathBuf,
        /// Train on the rows of this class only.
        #[arg(long)]
        class: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        latent_dim: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train a classifier on a labeled dataset file.
    TrainClassifier {
        data: PathBuf,
        /// Hidden widths, e.g. `32,32`; empty for a linear model.
        #[arg(long)]
        hidden: Option<String>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Class posteriors for a sample file or for samples drawn from a GAN
    /// checkpoint.
    Annotate {
        input: PathBuf,
        /// Classifier checkpoint; without it the Bayes posterior of the
        /// configured mixture is used.
        #[arg(long)]
        classifier: Option<PathBuf>,
        #[arg(long)]
        n_eval: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Mode histogram of a predictions file, or the per-checkpoint series of
    /// a GAN run.
    ModeReport {
        input: PathBuf,
        #[arg(long)]
        classifier: Option<PathBuf>,
        #[arg(long)]
        n_eval: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Boundary-distortion table for a labeled two-class dataset file.
    BoundaryReport {
        data: PathBuf,
        /// Comma-separated down-sampling factors.
        #[arg(long)]
        factors: Option<String>,
        #[arg(long)]
        oversample: Option<usize>,
    },
    /// Covariance spectra and moment discrepancies of two sample files.
    Spectrum { true_samples: PathBuf, synthetic: PathBuf },
    /// Modified Inception Score and confidence histogram of a predictions file.
    Score {
        predictions: PathBuf,
        #[arg(long)]
        splits: Option<usize>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Reproduce one of the Gaussian illustrations.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
    /// Run an experiment described by a config file.
    Run { config: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum Demo {
    /// Spectrum of a GAN trained on a 75-D spherical Gaussian.
    Fig1a,
    /// Boundary skew from a class with collapsed variance.
    Fig1b,
}

impl GlobalArgs {
    /// `kind` defaults, then `--config`, then `--set`, then flags.
    fn settings(&self, kind: ExperimentKind, flags: &[(&str, Option<String>)]) -> Result<Settings> {
        let mut s = Settings::default();
        s.set("kind", kind.tag());
        if let Some(path) = &self.config {
            s.overlay(&Settings::load(path)?);
        }
        self.apply(&mut s, flags)?;
        Ok(s)
    }

    fn apply(&self, s: &mut Settings, flags: &[(&str, Option<String>)]) -> Result<()> {
        for pair in &self.overrides {
            s.set_pair(pair)?;
        }
        if let Some(seed) = self.seed {
            s.set("seed", seed.to_string());
        }
        if let Some(out) = &self.out {
            s.set("out", out.display().to_string());
        }
        if self.parallel {
            s.set("parallel", "true");
        }
        for (k, v) in flags {
            if let Some(v) = v {
                s.set(k, v.clone());
            }
        }
        Ok(())
    }

    fn config(&self, kind: ExperimentKind, flags: &[(&str, Option<String>)]) -> Result<ExperimentConfig> {
        ExperimentConfig::from_settings(&self.settings(kind, flags)?)
    }
}

fn opt<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(T::to_string)
}

fn output_path(cfg: &ExperimentConfig, explicit: &Option<PathBuf>, name: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| cfg.out.join(name))
}

fn predictions_dataset(preds: &PredictionMatrix, source: DataSource) -> Result<LabeledDataset> {
    Ok(LabeledDataset::new(preds.probs().clone(), preds.labels(), preds.class_count(), source)?)
}

fn load_predictions(path: &Path) -> Result<PredictionMatrix> {
    let data = load_dataset(path)?;
    PredictionMatrix::new(data.x().clone())
        .map_err(|e| ShellError::Validation(format!("{} is not a predictions file: {e}", path.display())))
}

fn annotator_from(cfg: &ExperimentConfig, classifier: &Option<PathBuf>) -> Result<Annotator> {
    match classifier {
        Some(path) => Ok(Annotator::Learned(load_mlp(path)?)),
        None => {
            cfg.data.mixture()?.map(Annotator::Bayes).ok_or_else(|| {
                ShellError::config("no --classifier given and the configured data has no Bayes posterior")
            })
        }
    }
}

fn metrics(rows: Vec<(&str, Cell)>) -> Table {
    let mut t = Table::new(&["metric", "value"]);
    for (k, v) in rows {
        t.row(vec![k.into(), v]);
    }
    t
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::GenData { family, n, dim, classes, output } => {
            let cfg = g.config(
                ExperimentKind::ModeCollapse,
                &[
                    ("data.family", family.clone()),
                    ("data.n", opt(n)),
                    ("data.dim", opt(dim)),
                    ("data.classes", opt(classes)),
                ],
            )?;
            let path = output_path(&cfg, output, "data.csv");
            match true_data(&cfg)? {
                Loaded::Labeled(d) => save_dataset(&d, &path)?,
                Loaded::Unlabeled(x) => save_matrix(&x, &path)?,
            }
            info!("wrote {}", path.display());
        }
        Command::TrainGan { data, class, iterations, latent_dim, output } => {
            let cfg = g.config(
                ExperimentKind::ModeCollapse,
                &[("gan.iterations", opt(iterations)), ("gan.latent_dim", opt(latent_dim))],
            )?;
            let loaded = load_dataset(data)?;
            let x = match (class, &loaded) {
                (None, _) => loaded.x().clone(),
                (Some(k), Loaded::Labeled(d)) if *k < d.class_count() => d.class_samples(*k),
                (Some(k), _) => {
                    return Err(ShellError::Validation(format!("class {k} not present in {}", data.display())))
                }
            };
            let mut gan = cfg.gan.clone();
            gan.data_dim = x.cols();
            let run = train_vanilla_gan(&x, &gan, &mut Rng::new(gan.train.seed))?;
            let path = output_path(&cfg, output, "gan.ckpt");
            save_checkpoint(&Checkpoint::Gan(run.clone()), &path)?;
            write_losses(path.parent().unwrap_or(Path::new(".")), &run)?;
            info!("wrote {} ({} checkpoints)", path.display(), run.checkpoints().len());
        }
        Command::TrainClassifier { data, hidden, iterations, output } => {
            let cfg = g.config(
                ExperimentKind::BoundaryDistortion,
                &[("classifier.hidden", hidden.clone()), ("classifier.iterations", opt(iterations))],
            )?;
            let d = load_dataset(data)?.into_labeled(data)?;
            let arch = cfg.classifier_template(d.dim(), d.class_count());
            let (params, fit) = train_classifier(&d, &arch, &cfg.classifier_train)?;
            let path = output_path(&cfg, output, "classifier.ckpt");
            save_checkpoint(&Checkpoint::Mlp(params), &path)?;
            let dir = path.parent().unwrap_or(Path::new("."));
            metrics(vec![("final_loss", fit.final_loss.into()), ("train_accuracy", fit.train_accuracy.into())])
                .write(&dir.join("fit.csv"))?;
            info!("wrote {} (train accuracy {:.4})", path.display(), fit.train_accuracy);
        }
        Command::Annotate { input, classifier, n_eval, output } => {
            let cfg = g.config(ExperimentKind::ModeCollapse, &[("eval.n_eval", opt(n_eval))])?;
            let annotator = annotator_from(&cfg, classifier)?;
            let path = output_path(&cfg, output, "predictions.csv");
            let (x, source): (Matrix, DataSource) = if is_checkpoint(input) {
                let run = load_gan(input)?;
                let x = generate(run.final_checkpoint(), cfg.n_eval, &mut Rng::new(cfg.protocol_seed()))?;
                save_matrix(&x, &path.with_file_name("samples.csv"))?;
                (x, DataSource::GanData)
            } else {
                let loaded = load_dataset(input)?;
                let source = match &loaded {
                    Loaded::Labeled(d) => d.source(),
                    Loaded::Unlabeled(_) => DataSource::External,
                };
                (loaded.x().clone(), source)
            };
            let preds = annotator.annotate(&x)?;
            save_dataset(&predictions_dataset(&preds, source)?, &path)?;
            info!("wrote {}", path.display());
        }
        Command::ModeReport { input, classifier, n_eval, threshold } => {
            let cfg = g.config(
                ExperimentKind::ModeCollapse,
                &[("eval.n_eval", opt(n_eval)), ("eval.missing_threshold", opt(threshold))],
            )?;
            if is_checkpoint(input) {
                let run = load_gan(input)?;
                let annotator = annotator_from(&cfg, classifier)?;
                let eval = Rng::new(cfg.protocol_seed());
                let mut series = TemporalModeSeries::new();
                let mut last = None;
                for (k, ck) in run.checkpoints().iter().enumerate() {
                    let (report, _, _) = mode_report_for_source(
                        ck,
                        &annotator,
                        cfg.n_eval,
                        cfg.missing_threshold,
                        &mut eval.child(k as u64),
                    )?;
                    series.push(ck.step, report.fractions.clone())?;
                    last = Some(report);
                }
                let c = series.class_count();
                let mut cols = vec!["step".to_string()];
                cols.extend((0..c).map(|k| format!("f{k}")));
                let mut t = Table::with_columns(cols);
                for (s, f) in series.steps().iter().zip(series.fractions()) {
                    let mut row: Vec<Cell> = vec![(*s).into()];
                    row.extend(f.iter().map(|&v| Cell::Num(v)));
                    t.row(row);
                }
                t.write(&cfg.out.join("mode_series.csv"))?;
                let lines: Vec<Series> = (0..c)
                    .map(|k| {
                        let pts =
                            series.steps().iter().zip(series.fractions()).map(|(&s, f)| (s as f64, f[k])).collect();
                        Series::new(format!("class {k}"), pts)
                    })
                    .collect();
                write_file(
                    &cfg.out.join("mode_series.svg"),
                    &line_chart("Mode fractions over training", "iteration", "fraction", &lines),
                )?;
                let report = last.expect("at least one checkpoint");
                write_mode_files(&cfg.out, &report)?;
                print_modes(&report);
            } else {
                let preds = load_predictions(input)?;
                let report = mode_histogram(&preds.labels(), preds.class_count(), cfg.missing_threshold)?;
                write_mode_files(&cfg.out, &report)?;
                print_modes(&report);
            }
        }
        Command::BoundaryReport { data, factors, oversample } => {
            let cfg = g.config(
                ExperimentKind::BoundaryDistortion,
                &[
                    ("data.family", Some("file".into())),
                    ("data.path", Some(data.display().to_string())),
                    ("boundary.factors", factors.clone()),
                    ("boundary.oversample", opt(oversample)),
                    ("annotator.kind", Some("learned".into())),
                ],
            )?;
            let bundle = run_experiment(&cfg)?;
            info!("wrote {} files to {}", bundle.files.len(), bundle.dir.display());
        }
        Command::Spectrum { true_samples, synthetic } => {
            let cfg = g.config(ExperimentKind::AuditExternal, &[])?;
            let t = Loaded::Unlabeled(load_dataset(true_samples)?.x().clone());
            let s = Loaded::Unlabeled(load_dataset(synthetic)?.x().clone());
            let audit = audit_samples(&cfg, &t, &s)?;
            write_audit_files(&cfg.out, &audit, cfg.bins)?;
            if let Some(r) = &audit.spectrum {
                println!(
                    "decay ratio: true {:.4}, synthetic {:.4}; synthetic below half max {:.3}",
                    r.true_decay_ratio, r.synthetic_decay_ratio, r.synthetic_below_half_max
                );
            }
        }
        Command::Score { predictions, splits, bins } => {
            let cfg =
                g.config(ExperimentKind::AuditExternal, &[("eval.splits", opt(splits)), ("eval.bins", opt(bins))])?;
            let preds = load_predictions(predictions)?;
            let is = modified_inception_score(&preds, cfg.splits.min(preds.len()), &mut Rng::new(cfg.protocol_seed()))?;
            metrics(vec![("inception_mean", is.mean.into()), ("inception_std", is.std.into())])
                .write(&cfg.out.join("score.csv"))?;
            write_confidence_files(&cfg.out, &preds, cfg.bins)?;
            println!("modified inception score {:.4} ± {:.4}", is.mean, is.std);
        }
        Command::Demo { which } => {
            let kind = match which {
                Demo::Fig1a => ExperimentKind::SpectrumDemo,
                Demo::Fig1b => ExperimentKind::BoundarySkewDemo,
            };
            let cfg = g.config(kind, &[])?;
            let bundle = run_experiment(&cfg)?;
            info!("wrote {} files to {}", bundle.files.len(), bundle.dir.display());
        }
        Command::Run { config } => {
            let mut s = match &g.config {
                Some(base) => Settings::load(base)?,
                None => Settings::default(),
            };
            s.overlay(&Settings::load(config)?);
            g.apply(&mut s, &[])?;
            let cfg = ExperimentConfig::from_settings(&s)?;
            let bundle = run_experiment(&cfg)?;
            info!("wrote {} files to {}", bundle.files.len(), bundle.dir.display());
        }
    }
    Ok(())
}

fn print_modes(report: &covshift_core::audit::ModeReport) {
    let fr: Vec<String> = report.fractions.iter().map(|f| format!("{f:.4}")).collect();
    println!(
        "fractions [{}], TV from uniform {:.4}, missing {:?}",
        fr.join(", "),
        report.tv_from_uniform,
        report.missing_modes
    );
}
