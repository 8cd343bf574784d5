//! Experiment configuration.
//!
//! Files hold one `key = value` pair per line with dotted section names
//! (`gan.latent_dim = 200`); `#` starts a comment. Every experiment kind has
//! a complete set of defaults, so a config only lists what it changes. The
//! fully resolved settings are echoed next to the outputs in the same format
//! and can be fed back to `run` to repeat an experiment.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use covshift_core::audit::AnnotatorChoice;
use covshift_core::distributions::{GaussianSpec, MixtureSpec};
use covshift_core::gan::GanConfig;
use covshift_core::neural::{Head, MlpTemplate, OptimizerKind, TrainConfig};
use covshift_core::numkit::derive_seed;

use crate::error::{Result, ShellError};

/// Smallest boundary-normal angle, in degrees, expected from the skew-demo
/// construction. The analytic boundaries put the skew at about 18° (pooled
/// covariance discriminant) to 27° (population logistic fit); the threshold
/// sits well below both so that finite-sample noise does not trip it.
pub const SKEW_ANGLE_THRESHOLD_DEG: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    SpectrumDemo,
    BoundarySkewDemo,
    ModeCollapse,
    BoundaryDistortion,
    AuditExternal,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::SpectrumDemo,
        ExperimentKind::BoundarySkewDemo,
        ExperimentKind::ModeCollapse,
        ExperimentKind::BoundaryDistortion,
        ExperimentKind::AuditExternal,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ExperimentKind::SpectrumDemo => "spectrum-demo",
            ExperimentKind::BoundarySkewDemo => "boundary-skew-demo",
            ExperimentKind::ModeCollapse => "mode-collapse",
            ExperimentKind::BoundaryDistortion => "boundary-distortion",
            ExperimentKind::AuditExternal => "audit-external",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Ordered `key → value` settings.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn parse(text: &str, origin: &str) -> Result<Settings> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ShellError::config(format!("{origin}:{}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(ShellError::config(format!("{origin}:{}: empty key", i + 1)));
            }
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(ShellError::config(format!("{origin}:{}: `{k}` set twice", i + 1)));
            }
        }
        Ok(Settings(map))
    }

    pub fn load(path: &Path) -> Result<Settings> {
        let text = fs::read_to_string(path).map_err(|e| ShellError::io(path, e))?;
        Settings::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) =
            pair.split_once('=').ok_or_else(|| ShellError::config(format!("override `{pair}` is not `key=value`")))?;
        self.set(k.trim(), v.trim());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Later settings win.
    pub fn overlay(&mut self, other: &Settings) {
        for (k, v) in other.iter() {
            self.set(k, v);
        }
    }

    pub fn to_text(&self) -> String {
        self.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Where the true data of an experiment comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSpec {
    /// `N(0, variance · I)`, unlabeled.
    Spherical {
        dim: usize,
        variance: f64,
    },
    /// `classes` spherical components evenly spaced on a circle in 2-D.
    Ring {
        classes: usize,
        radius: f64,
        sigma: f64,
    },
    /// Two spherical classes with means `∓shift · (1, …, 1)`.
    TwoGaussians {
        dim: usize,
        shift: f64,
        sigma: f64,
    },
    File(PathBuf),
}

impl DataSpec {
    /// The generating mixture, for synthetic labeled families.
    pub fn mixture(&self) -> Result<Option<MixtureSpec>> {
        Ok(match self {
            DataSpec::Ring { classes, radius, sigma } => Some(MixtureSpec::ring(*classes, *radius, *sigma)?),
            DataSpec::TwoGaussians { dim, shift, sigma } => Some(MixtureSpec::uniform(vec![
                GaussianSpec::spherical(vec![-shift; *dim], sigma * sigma)?,
                GaussianSpec::spherical(vec![*shift; *dim], sigma * sigma)?,
            ])?),
            DataSpec::Spherical { .. } | DataSpec::File(_) => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnnotatorKind {
    Learned { hidden: Vec<usize>, train: TrainConfig },
    Bayes,
}

/// Typed view of a complete configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub out: PathBuf,
    pub parallel: bool,
    pub data: DataSpec,
    pub n: usize,
    /// `data_dim` is filled in once the data is known.
    pub gan: GanConfig,
    pub classifier_hidden: Vec<usize>,
    pub classifier_head: Head,
    pub classifier_train: TrainConfig,
    pub annotator: AnnotatorKind,
    pub n_eval: usize,
    pub splits: usize,
    pub missing_threshold: f64,
    pub bins: usize,
    pub spectrum_samples: usize,
    pub factors: Vec<usize>,
    pub oversample: usize,
    pub holdout: f64,
    pub skew_seeds: usize,
    pub skew_variance_factor: f64,
    pub skew_axis: usize,
    pub skew_angle_threshold: f64,
    pub true_path: Option<PathBuf>,
    pub synthetic_path: Option<PathBuf>,
}

const COMMON_DEFAULTS: &[(&str, &str)] = &[
    ("seed", "0"),
    ("out", "out"),
    ("parallel", "false"),
    ("data.family", "spherical"),
    ("data.n", "10000"),
    ("data.dim", "2"),
    ("data.variance", "1"),
    ("data.classes", "5"),
    ("data.radius", "10"),
    ("data.sigma", "1"),
    ("data.shift", "1"),
    ("data.path", ""),
    ("gan.latent_dim", "2"),
    ("gan.gen_hidden", "128,128"),
    ("gan.disc_hidden", "128,128"),
    ("gan.iterations", "20000"),
    ("gan.batch_size", "128"),
    ("gan.learning_rate", "0.0002"),
    ("gan.beta1", "0.5"),
    ("gan.beta2", "0.999"),
    ("gan.checkpoint_every", "1000"),
    ("gan.disc_steps", "1"),
    ("classifier.hidden", ""),
    ("classifier.head", "softmax"),
    ("classifier.iterations", "5000"),
    ("classifier.batch_size", "128"),
    ("classifier.learning_rate", "0.001"),
    ("classifier.l2", "0"),
    ("classifier.decay_at", "0.8"),
    ("annotator.kind", "learned"),
    ("annotator.hidden", "32"),
    ("annotator.iterations", "5000"),
    ("annotator.learning_rate", "0.001"),
    ("eval.n_eval", "10000"),
    ("eval.splits", "10"),
    ("eval.missing_threshold", "0.01"),
    ("eval.bins", "10"),
    ("spectrum.samples", "100000"),
    ("boundary.factors", "1,4,16,64"),
    ("boundary.oversample", "10"),
    ("boundary.holdout", "0.2"),
    ("skew.seeds", "10"),
    ("skew.variance_factor", "0.01"),
    ("skew.axis", "0"),
    ("skew.angle_threshold", "10"),
    ("audit.true_path", ""),
    ("audit.synthetic_path", ""),
];

fn kind_defaults(kind: ExperimentKind) -> &'static [(&'static str, &'static str)] {
    match kind {
        ExperimentKind::SpectrumDemo => {
            &[("data.family", "spherical"), ("data.dim", "75"), ("data.n", "100000"), ("gan.latent_dim", "200")]
        }
        ExperimentKind::BoundarySkewDemo => &[
            ("data.family", "two-gaussians"),
            ("data.dim", "2"),
            ("data.shift", "1"),
            ("data.n", "10000"),
            ("classifier.head", "sigmoid"),
            ("classifier.learning_rate", "0.05"),
            ("classifier.batch_size", "256"),
            ("classifier.iterations", "4000"),
            ("annotator.kind", "bayes"),
        ],
        ExperimentKind::ModeCollapse => &[
            ("data.family", "ring"),
            ("data.n", "10000"),
            ("gan.latent_dim", "8"),
            ("gan.iterations", "5000"),
            ("gan.learning_rate", "0.001"),
            ("gan.checkpoint_every", "500"),
        ],
        ExperimentKind::BoundaryDistortion => &[
            ("data.family", "two-gaussians"),
            ("data.dim", "10"),
            ("data.shift", "0.25"),
            ("data.n", "3200"),
            ("gan.latent_dim", "10"),
            ("gan.gen_hidden", "64,64"),
            ("gan.disc_hidden", "64,64"),
            ("gan.iterations", "3000"),
            ("gan.learning_rate", "0.0005"),
        ],
        ExperimentKind::AuditExternal => &[("data.family", "file")],
    }
}

/// Every recognised key with its default for `kind`.
pub fn default_settings(kind: ExperimentKind) -> Settings {
    let mut s = Settings::default();
    s.set("kind", kind.tag());
    for (k, v) in COMMON_DEFAULTS.iter().chain(kind_defaults(kind)) {
        s.set(k, *v);
    }
    s.set("skew.angle_threshold", SKEW_ANGLE_THRESHOLD_DEG.to_string());
    s
}

struct Reader<'a>(&'a Settings);

impl Reader<'_> {
    fn raw(&self, key: &str) -> &str {
        self.0.get(key).expect("defaults cover every key")
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key);
        v.parse().map_err(|_| ShellError::config(format!("`{key} = {v}` is not a valid value")))
    }

    fn list(&self, key: &str) -> Result<Vec<usize>> {
        let v = self.raw(key);
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| ShellError::config(format!("`{key} = {v}` is not a comma-separated list of integers")))
            })
            .collect()
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.raw(key);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }
}

impl ExperimentConfig {
    /// Resolves `user` settings on top of the defaults of the kind it names.
    pub fn from_settings(user: &Settings) -> Result<ExperimentConfig> {
        let tag = user.get("kind").ok_or_else(|| ShellError::config("missing `kind`"))?;
        let kind = ExperimentKind::from_tag(tag).ok_or_else(|| {
            let known: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.tag()).collect();
            ShellError::config(format!("unknown kind `{tag}` (expected one of {})", known.join(", ")))
        })?;
        let mut s = default_settings(kind);
        for (k, _) in user.iter() {
            if s.get(k).is_none() {
                return Err(ShellError::config(format!("unknown key `{k}`")));
            }
        }
        s.overlay(user);
        let r = Reader(&s);
        let seed: u64 = r.parse("seed")?;

        let data = match r.raw("data.family") {
            "spherical" => DataSpec::Spherical { dim: r.parse("data.dim")?, variance: r.parse("data.variance")? },
            "ring" => DataSpec::Ring {
                classes: r.parse("data.classes")?,
                radius: r.parse("data.radius")?,
                sigma: r.parse("data.sigma")?,
            },
            "two-gaussians" => DataSpec::TwoGaussians {
                dim: r.parse("data.dim")?,
                shift: r.parse("data.shift")?,
                sigma: r.parse("data.sigma")?,
            },
            "file" => DataSpec::File(r.path("data.path").unwrap_or_default()),
            other => return Err(ShellError::config(format!("unknown data.family `{other}`"))),
        };

        let mut gan = GanConfig::new(r.parse("gan.latent_dim")?, 0);
        gan.gen_hidden = r.list("gan.gen_hidden")?;
        gan.disc_hidden = r.list("gan.disc_hidden")?;
        gan.train.iterations = r.parse("gan.iterations")?;
        gan.train.batch_size = r.parse("gan.batch_size")?;
        gan.train.learning_rate = r.parse("gan.learning_rate")?;
        gan.train.optimizer =
            OptimizerKind::Adam { beta1: r.parse("gan.beta1")?, beta2: r.parse("gan.beta2")?, eps: 1e-8 };
        gan.train.seed = derive_seed(seed, 4);
        gan.checkpoint_every = r.parse("gan.checkpoint_every")?;
        gan.disc_steps = r.parse("gan.disc_steps")?;

        let decay = r.raw("classifier.decay_at");
        let classifier_train = TrainConfig {
            learning_rate: r.parse("classifier.learning_rate")?,
            batch_size: r.parse("classifier.batch_size")?,
            iterations: r.parse("classifier.iterations")?,
            l2: r.parse("classifier.l2")?,
            seed: derive_seed(seed, 2),
            decay_at: if decay == "none" { None } else { Some(r.parse("classifier.decay_at")?) },
            ..TrainConfig::default()
        };
        let classifier_head = match r.raw("classifier.head") {
            "softmax" => Head::Softmax,
            "sigmoid" => Head::Sigmoid,
            other => return Err(ShellError::config(format!("classifier.head `{other}` must be softmax or sigmoid"))),
        };
        let annotator = match r.raw("annotator.kind") {
            "bayes" => AnnotatorKind::Bayes,
            "learned" => AnnotatorKind::Learned {
                hidden: r.list("annotator.hidden")?,
                train: TrainConfig {
                    iterations: r.parse("annotator.iterations")?,
                    learning_rate: r.parse("annotator.learning_rate")?,
                    seed: derive_seed(seed, 3),
                    ..TrainConfig::default()
                },
            },
            other => return Err(ShellError::config(format!("annotator.kind `{other}` must be learned or bayes"))),
        };
        let parallel = match r.raw("parallel") {
            "true" => true,
            "false" => false,
            other => return Err(ShellError::config(format!("parallel `{other}` must be true or false"))),
        };

        let cfg = ExperimentConfig {
            kind,
            seed,
            out: PathBuf::from(r.raw("out")),
            parallel,
            data,
            n: r.parse("data.n")?,
            gan,
            classifier_hidden: r.list("classifier.hidden")?,
            classifier_head,
            classifier_train,
            annotator,
            n_eval: r.parse("eval.n_eval")?,
            splits: r.parse("eval.splits")?,
            missing_threshold: r.parse("eval.missing_threshold")?,
            bins: r.parse("eval.bins")?,
            spectrum_samples: r.parse("spectrum.samples")?,
            factors: r.list("boundary.factors")?,
            oversample: r.parse("boundary.oversample")?,
            holdout: r.parse("boundary.holdout")?,
            skew_seeds: r.parse("skew.seeds")?,
            skew_variance_factor: r.parse("skew.variance_factor")?,
            skew_axis: r.parse("skew.axis")?,
            skew_angle_threshold: r.parse("skew.angle_threshold")?,
            true_path: r.path("audit.true_path"),
            synthetic_path: r.path("audit.synthetic_path"),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn defaults(kind: ExperimentKind) -> ExperimentConfig {
        let mut s = Settings::default();
        s.set("kind", kind.tag());
        ExperimentConfig::from_settings(&s).expect("defaults are valid")
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ShellError::config(msg));
        if self.n < 2 {
            return bad(format!("data.n = {} is too small", self.n));
        }
        if self.n_eval == 0 || self.splits == 0 || self.bins == 0 {
            return bad("eval.n_eval, eval.splits and eval.bins must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.missing_threshold) {
            return bad(format!("eval.missing_threshold = {} outside [0, 1)", self.missing_threshold));
        }
        if self.skew_variance_factor <= 0.0 {
            return bad("skew.variance_factor must be positive".into());
        }
        match &self.data {
            DataSpec::Spherical { dim, variance } if *dim == 0 || *variance <= 0.0 => {
                return bad("spherical data needs dim >= 1 and positive variance".into())
            }
            DataSpec::TwoGaussians { dim, sigma, .. } if *dim == 0 || *sigma <= 0.0 => {
                return bad("two-gaussians data needs dim >= 1 and positive sigma".into())
            }
            _ => {}
        }
        Ok(())
    }

    /// Paths the experiment reads; all must exist before it starts.
    pub fn input_paths(&self) -> Vec<&Path> {
        let mut paths = Vec::new();
        if let DataSpec::File(p) = &self.data {
            if self.kind != ExperimentKind::AuditExternal {
                paths.push(p.as_path());
            }
        }
        if self.kind == ExperimentKind::AuditExternal {
            paths.extend(self.true_path.as_deref());
            paths.extend(self.synthetic_path.as_deref());
        }
        paths
    }

    pub fn check_inputs(&self) -> Result<()> {
        if self.kind == ExperimentKind::AuditExternal && (self.true_path.is_none() || self.synthetic_path.is_none()) {
            return Err(ShellError::config("audit-external needs audit.true_path and audit.synthetic_path"));
        }
        if matches!(&self.data, DataSpec::File(p) if p.as_os_str().is_empty())
            && self.kind != ExperimentKind::AuditExternal
        {
            return Err(ShellError::config("data.family = file needs data.path"));
        }
        for p in self.input_paths() {
            if !p.exists() {
                return Err(ShellError::config(format!("input {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// The fully resolved settings, including values left at their defaults.
    pub fn to_settings(&self) -> Settings {
        let mut s = default_settings(self.kind);
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        s.set("seed", self.seed.to_string());
        s.set("out", self.out.display().to_string());
        s.set("parallel", self.parallel.to_string());
        s.set("data.n", self.n.to_string());
        match &self.data {
            DataSpec::Spherical { dim, variance } => {
                s.set("data.family", "spherical");
                s.set("data.dim", dim.to_string());
                s.set("data.variance", variance.to_string());
            }
            DataSpec::Ring { classes, radius, sigma } => {
                s.set("data.family", "ring");
                s.set("data.classes", classes.to_string());
                s.set("data.radius", radius.to_string());
                s.set("data.sigma", sigma.to_string());
            }
            DataSpec::TwoGaussians { dim, shift, sigma } => {
                s.set("data.family", "two-gaussians");
                s.set("data.dim", dim.to_string());
                s.set("data.shift", shift.to_string());
                s.set("data.sigma", sigma.to_string());
            }
            DataSpec::File(p) => {
                s.set("data.family", "file");
                s.set("data.path", p.display().to_string());
            }
        }
        let g = &self.gan;
        s.set("gan.latent_dim", g.latent_dim.to_string());
        s.set("gan.gen_hidden", join(&g.gen_hidden));
        s.set("gan.disc_hidden", join(&g.disc_hidden));
        s.set("gan.iterations", g.train.iterations.to_string());
        s.set("gan.batch_size", g.train.batch_size.to_string());
        s.set("gan.learning_rate", g.train.learning_rate.to_string());
        if let OptimizerKind::Adam { beta1, beta2, .. } = g.train.optimizer {
            s.set("gan.beta1", beta1.to_string());
            s.set("gan.beta2", beta2.to_string());
        }
        s.set("gan.checkpoint_every", g.checkpoint_every.to_string());
        s.set("gan.disc_steps", g.disc_steps.to_string());
        let c = &self.classifier_train;
        s.set("classifier.hidden", join(&self.classifier_hidden));
        s.set("classifier.head", self.classifier_head.tag());
        s.set("classifier.iterations", c.iterations.to_string());
        s.set("classifier.batch_size", c.batch_size.to_string());
        s.set("classifier.learning_rate", c.learning_rate.to_string());
        s.set("classifier.l2", c.l2.to_string());
        s.set("classifier.decay_at", c.decay_at.map_or("none".to_string(), |d| d.to_string()));
        match &self.annotator {
            AnnotatorKind::Bayes => s.set("annotator.kind", "bayes"),
            AnnotatorKind::Learned { hidden, train } => {
                s.set("annotator.kind", "learned");
                s.set("annotator.hidden", join(hidden));
                s.set("annotator.iterations", train.iterations.to_string());
                s.set("annotator.learning_rate", train.learning_rate.to_string());
            }
        }
        s.set("eval.n_eval", self.n_eval.to_string());
        s.set("eval.splits", self.splits.to_string());
        s.set("eval.missing_threshold", self.missing_threshold.to_string());
        s.set("eval.bins", self.bins.to_string());
        s.set("spectrum.samples", self.spectrum_samples.to_string());
        s.set("boundary.factors", join(&self.factors));
        s.set("boundary.oversample", self.oversample.to_string());
        s.set("boundary.holdout", self.holdout.to_string());
        s.set("skew.seeds", self.skew_seeds.to_string());
        s.set("skew.variance_factor", self.skew_variance_factor.to_string());
        s.set("skew.axis", self.skew_axis.to_string());
        s.set("skew.angle_threshold", self.skew_angle_threshold.to_string());
        s.set("audit.true_path", self.true_path.as_ref().map_or(String::new(), |p| p.display().to_string()));
        s.set("audit.synthetic_path", self.synthetic_path.as_ref().map_or(String::new(), |p| p.display().to_string()));
        s
    }

    /// Classifier shape for `dim` inputs and `classes` classes.
    pub fn classifier_template(&self, dim: usize, classes: usize) -> MlpTemplate {
        let out = if self.classifier_head == Head::Sigmoid { 1 } else { classes };
        MlpTemplate::mlp(dim, &self.classifier_hidden, out, self.classifier_head)
    }

    pub fn annotator_choice(&self, dim: usize, classes: usize) -> Result<AnnotatorChoice> {
        Ok(match &self.annotator {
            AnnotatorKind::Learned { hidden, train } => AnnotatorChoice::Learned {
                arch: MlpTemplate::mlp(dim, hidden, classes, Head::Softmax),
                train: train.clone(),
            },
            AnnotatorKind::Bayes => {
                AnnotatorChoice::Bayes(self.data.mixture()?.ok_or_else(|| {
                    ShellError::config("annotator.kind = bayes needs a synthetic mixture data.family")
                })?)
            }
        })
    }

    /// Seed of the true-data draw.
    pub fn data_seed(&self) -> u64 {
        derive_seed(self.seed, 0)
    }

    /// Seed of the experiment protocol (splits, sampling, scoring).
    pub fn protocol_seed(&self) -> u64 {
        derive_seed(self.seed, 1)
    }
}
