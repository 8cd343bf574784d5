//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p covshift-shell --test acceptance -- 3 7`.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use covshift_core::audit::{
    boundary_distortion_experiment, gaussian_fit_kl, mean_discrepancy, mode_report_for_source,
    modified_inception_score, moments, Annotator, BoundaryConfig, MomentSummary, RowSource, SyntheticSource,
};
use covshift_core::distributions::{sample_mixture, GaussianSpec, MixtureSpec, SampleSource};
use covshift_core::gan::{discriminator_loss_and_grad, generator_loss_and_grad, train_vanilla_gan, GanConfig};
use covshift_core::neural::{
    finite_difference_check, forward, loss_and_grad, loss_value, relu_margin, Head, Loss, MlpParams, MlpTemplate,
    Target,
};
use covshift_core::numkit::{derive_seed, standard_normal, sym_eig, Rng};
use covshift_core::{Matrix, PredictionMatrix};
use covshift_shell::checkpoint::{decode, encode, load_checkpoint, save_checkpoint, Checkpoint};
use covshift_shell::config::{AnnotatorKind, ExperimentConfig, ExperimentKind};
use covshift_shell::experiments::{boundary_distortion, mode_collapse, skew_demo, spectrum_demo};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

/// Collects sub-checks; the criterion passes only if all of them do.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.failed.push(what.clone());
        }
        self.notes.push(what);
    }

    fn verdict(self) -> Verdict {
        if self.failed.is_empty() {
            Verdict::new(true, self.notes.join("; "))
        } else {
            Verdict::new(false, format!("failed: {}", self.failed.join("; ")))
        }
    }
}

fn seeded(kind: ExperimentKind, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(kind);
    cfg.seed = seed;
    cfg
}

fn spectrum_decay() -> Verdict {
    let mut ok_seeds = 0;
    let mut lines = Vec::new();
    let mut slowest: f64 = 0.0;
    let mut kl_ok = true;
    for seed in 1..=5 {
        let start = Instant::now();
        let demo = match spectrum_demo(&seeded(ExperimentKind::SpectrumDemo, seed)) {
            Ok(d) => d,
            Err(e) => return Verdict::new(false, format!("seed {seed}: {e}")),
        };
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let r = &demo.report;
        let ok = r.true_decay_ratio >= 0.8 && r.synthetic_decay_ratio <= 0.2 && r.synthetic_below_half_max >= 0.25;
        ok_seeds += ok as usize;
        kl_ok &= demo.kl_gan.is_finite() && demo.delta_mu.is_finite() && demo.kl_gan >= 10.0 * demo.kl_true_baseline;
        lines.push(format!(
            "seed {seed}: true {:.3} gan {:.4} below-half {:.2} kl {:.2} vs {:.4} dmu {:.3e}",
            r.true_decay_ratio,
            r.synthetic_decay_ratio,
            r.synthetic_below_half_max,
            demo.kl_gan,
            demo.kl_true_baseline,
            demo.delta_mu
        ));
    }
    for l in &lines {
        println!("    {l}");
    }
    let fast = slowest <= 900.0;
    Verdict::new(
        ok_seeds >= 4 && kl_ok && fast,
        format!("{ok_seeds}/5 seeds meet spectrum bounds, KL >= 10x baseline: {kl_ok}, slowest seed {slowest:.0}s"),
    )
}

fn boundary_skew_demo() -> Verdict {
    let start = Instant::now();
    let demo = match skew_demo(&seeded(ExperimentKind::BoundarySkewDemo, 1)) {
        Ok(d) => d,
        Err(e) => return Verdict::new(false, e.to_string()),
    };
    let secs = start.elapsed().as_secs_f64();
    for t in &demo.trials {
        println!("    angle {:.2} deg, gap {:+.4}", t.angle_degrees, t.accuracy_gap);
    }
    Verdict::new(
        demo.trials.len() == 10 && demo.positive_gaps >= 9 && demo.mean_angle > demo.angle_threshold && secs <= 60.0,
        format!(
            "{}/10 positive gaps, mean angle {:.2} deg (threshold {}), {secs:.1}s",
            demo.positive_gaps, demo.mean_angle, demo.angle_threshold
        ),
    )
}

fn mode_collapse_oracle() -> Verdict {
    let mix = MixtureSpec::ring(5, 10.0, 1.0).unwrap();
    let collapsed = mix.restricted_to(&[0, 1]).unwrap();
    let annotator = Annotator::Bayes(mix);
    let (r, _, _) = mode_report_for_source(&collapsed, &annotator, 10_000, 0.01, &mut Rng::new(7)).unwrap();
    let target = [0.5, 0.5, 0.0, 0.0, 0.0];
    let mut c = Checks::default();
    let worst = r.fractions.iter().zip(target).map(|(f, t)| (f - t).abs()).fold(0.0, f64::max);
    c.check(worst <= 0.02, format!("max fraction error {worst:.4}"));
    c.check((r.tv_from_uniform - 0.6).abs() <= 0.02, format!("TV {:.4}", r.tv_from_uniform));
    c.check(r.missing_modes == [2, 3, 4], format!("missing {:?}", r.missing_modes));
    c.verdict()
}

fn mode_collapse_end_to_end() -> Verdict {
    let cfg = seeded(ExperimentKind::ModeCollapse, 1);
    let mut c = Checks::default();
    c.check(matches!(cfg.annotator, AnnotatorKind::Learned { .. }), "learned annotator");
    let demo = match mode_collapse(&cfg) {
        Ok(d) => d,
        Err(e) => return Verdict::new(false, e.to_string()),
    };
    let out = &demo.outcome;
    let n_ck = out.run.checkpoints().len();
    c.check(
        out.series.len() == n_ck && n_ck > 1,
        format!("{} fraction vectors for {n_ck} checkpoints", out.series.len()),
    );
    let sums_ok = out.series.fractions().iter().all(|f| (f.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    c.check(sums_ok, "every vector sums to 1");
    c.check(out.series.fractions().last() == Some(&out.report.fractions), "final report matches last checkpoint");
    let agree = demo.bayes_agreement.unwrap_or(0.0);
    c.check(agree >= 0.95, format!("learned/Bayes agreement {agree:.4}"));
    c.verdict()
}

fn no_shift_null() -> Verdict {
    let mix = MixtureSpec::uniform(vec![
        GaussianSpec::spherical(vec![-1.0, -1.0], 1.0).unwrap(),
        GaussianSpec::spherical(vec![1.0, 1.0], 1.0).unwrap(),
    ])
    .unwrap();
    let mut worst: f64 = 0.0;
    for seed in 1..=5u64 {
        let data = sample_mixture(&mix, 20_000, &mut Rng::new(derive_seed(seed, 0)), true).unwrap();
        let sources: Vec<&dyn SampleSource> = vec![&mix.components()[0], &mix.components()[1]];
        let cfg = BoundaryConfig::new(2, derive_seed(seed, 1));
        let out = match boundary_distortion_experiment(&data, &SyntheticSource::Injected(sources), &cfg) {
            Ok(o) => o,
            Err(e) => return Verdict::new(false, format!("seed {seed}: {e}")),
        };
        let base = out.report.true_row().test_accuracy;
        let mut line = format!("seed {seed}:");
        for row in &out.report.rows {
            worst = worst.max((row.test_accuracy - base).abs());
            line.push_str(&format!(" {} {:.4}", row.source, row.test_accuracy));
        }
        println!("    {line}");
    }
    Verdict::new(worst <= 0.02, format!("largest test-accuracy deviation from the true row {worst:.4}"))
}

fn protocol_structure() -> Verdict {
    let mut c = Checks::default();
    let mut sums: BTreeMap<usize, f64> = BTreeMap::new();
    for seed in 1..=5 {
        let out = match boundary_distortion(&seeded(ExperimentKind::BoundaryDistortion, seed)) {
            Ok(o) => o,
            Err(e) => return Verdict::new(false, format!("seed {seed}: {e}")),
        };
        let tags: Vec<String> = out.report.rows.iter().map(|r| r.source.to_string()).collect();
        let expected = ["true", "true_down_1", "true_down_4", "true_down_16", "true_down_64", "gan_up_1", "gan_up_10"];
        if tags != expected {
            c.check(false, format!("seed {seed} rows {tags:?}"));
        }
        let n = out.report.true_row().size;
        let up10 = out.report.row(RowSource::Gan(10)).map(|r| r.size);
        if up10 != Some(10 * n) {
            c.check(false, format!("seed {seed}: up_10 size {up10:?}, N = {n}"));
        }
        for m in [1, 64] {
            if let Some(r) = out.report.row(RowSource::TrueDown(m)) {
                *sums.entry(m).or_default() += r.test_accuracy / 5.0;
            }
        }
    }
    c.check(true, "row set and sizes");
    let (a1, a64) = (sums.get(&1).copied().unwrap_or(f64::NAN), sums.get(&64).copied().unwrap_or(f64::NAN));
    c.check(a1 >= a64, format!("mean acc(M=1) {a1:.4} vs acc(M=64) {a64:.4}"));
    c.verdict()
}

fn preds(rows: &[Vec<f64>]) -> PredictionMatrix {
    PredictionMatrix::new(Matrix::from_rows(rows).unwrap()).unwrap()
}

fn inception_exactness() -> Verdict {
    let mut c = Checks::default();
    let s = modified_inception_score(&preds(&vec![vec![0.2, 0.5, 0.3]; 100]), 10, &mut Rng::new(1)).unwrap();
    c.check((s.mean - 1.0).abs() <= 1e-9, format!("collapsed {:.12}", s.mean));
    let one_hot: Vec<Vec<f64>> =
        (0..100).map(|i| (0..4).map(|k| if k == i % 4 { 1.0 } else { 0.0 }).collect()).collect();
    let s = modified_inception_score(&preds(&one_hot), 1, &mut Rng::new(2)).unwrap();
    c.check((s.mean - 4.0).abs() <= 1e-6, format!("one-hot {:.9}", s.mean));
    // marginal (0.5, 0.5); each row has KL 0.8 ln 1.6 + 0.2 ln 0.4 = 0.19274
    let s = modified_inception_score(&preds(&[vec![0.8, 0.2], vec![0.2, 0.8]]), 1, &mut Rng::new(3)).unwrap();
    c.check((s.mean - 1.2126).abs() <= 1e-3, format!("two-row {:.5}", s.mean));
    let mut rng = Rng::new(4);
    let mut in_range = true;
    for _ in 0..1000 {
        let classes = 2 + rng.below(7);
        let n = 1 + rng.below(60);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..classes).map(|_| rng.uniform().powi(3) + 1e-12).collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|v| v / total).collect()
            })
            .collect();
        let splits = 1 + rng.below(n.min(10));
        let s = modified_inception_score(&preds(&rows), splits, &mut rng).unwrap();
        in_range &= s.mean >= 1.0 - 1e-12 && s.mean <= classes as f64 + 1e-12;
    }
    c.check(in_range, "1000 random matrices within [1, C]");
    c.verdict()
}

fn labels(n: usize, c: usize) -> Vec<usize> {
    (0..n).map(|i| i % c).collect()
}

/// Draws closer than this to a ReLU kink are redrawn; a finite-difference
/// step there crosses the kink and measures nothing about the gradient.
const KINK_MARGIN: f64 = 1e-4;

fn classifier_gradcheck(arch: &MlpTemplate, loss: Loss, rng: &mut Rng) -> f64 {
    let (params, x) = loop {
        let params = arch.init(rng).unwrap();
        let x = standard_normal(rng, 12, arch.input);
        if relu_margin(&params, &x).unwrap() > KINK_MARGIN {
            break (params, x);
        }
    };
    let classes = if arch.output == 1 { 2 } else { arch.output };
    let y = labels(12, classes);
    let (_, g) = loss_and_grad(&params, &x, Target::Labels(&y), loss, 0.01).unwrap();
    finite_difference_check(&params, &g, 1e-5, |p| loss_value(p, &x, Target::Labels(&y), loss, 0.01))
        .unwrap()
        .max_relative_error
}

fn gan_gradchecks(cfg: &GanConfig, rng: &mut Rng) -> (f64, f64) {
    let (gen, disc, real, fake, z) = loop {
        let gen = cfg.generator_template().init(rng).unwrap();
        let disc = cfg.discriminator_template().init(rng).unwrap();
        let real = standard_normal(rng, 8, cfg.data_dim);
        let fake = standard_normal(rng, 8, cfg.data_dim);
        let z = standard_normal(rng, 8, cfg.latent_dim);
        let all = Matrix::vstack(&[&real, &fake, &forward(&gen, &z).unwrap()]).unwrap();
        if relu_margin(&gen, &z).unwrap().min(relu_margin(&disc, &all).unwrap()) > KINK_MARGIN {
            break (gen, disc, real, fake, z);
        }
    };
    let (_, gd) = discriminator_loss_and_grad(&disc, &real, &fake).unwrap();
    let d = finite_difference_check(&disc, &gd, 1e-5, |p| Ok(discriminator_loss_and_grad(p, &real, &fake)?.0))
        .unwrap()
        .max_relative_error;
    let (_, gg) = generator_loss_and_grad(&gen, &disc, &z).unwrap();
    let g = finite_difference_check(&gen, &gg, 1e-5, |p| Ok(generator_loss_and_grad(p, &disc, &z)?.0))
        .unwrap()
        .max_relative_error;
    (d, g)
}

fn numeric_kernels() -> Verdict {
    let mut c = Checks::default();
    let mut rng = Rng::new(8);
    let classifiers = [
        ("linear softmax", MlpTemplate::linear_softmax(5, 3), Loss::SoftmaxCrossEntropy),
        ("logistic", MlpTemplate::logistic(5), Loss::BinaryCrossEntropy),
        ("mlp softmax", MlpTemplate::mlp(5, &[32], 4, Head::Softmax), Loss::SoftmaxCrossEntropy),
        ("deep mlp softmax", MlpTemplate::mlp(5, &[64, 64], 2, Head::Softmax), Loss::SoftmaxCrossEntropy),
        ("mlp sigmoid", MlpTemplate::mlp(5, &[16, 8], 1, Head::Sigmoid), Loss::BinaryCrossEntropy),
    ];
    for (name, arch, loss) in &classifiers {
        let worst = (0..5).map(|_| classifier_gradcheck(arch, *loss, &mut rng)).fold(0.0, f64::max);
        c.check(worst < 1e-4, format!("{name} gradcheck {worst:.1e}"));
    }
    let mut gan = GanConfig::new(8, 3);
    gan.gen_hidden = vec![32, 32];
    gan.disc_hidden = vec![32, 32];
    for (label, cfg) in [("default GAN", GanConfig::new(8, 3)), ("small GAN", gan)] {
        let (mut wd, mut wg): (f64, f64) = (0.0, 0.0);
        for _ in 0..5 {
            let (d, g) = gan_gradchecks(&cfg, &mut rng);
            wd = wd.max(d);
            wg = wg.max(g);
        }
        c.check(wd < 1e-4, format!("{label} discriminator gradcheck {wd:.1e}"));
        c.check(wg < 1e-4, format!("{label} generator-through-discriminator gradcheck {wg:.1e}"));
    }

    let mut recon: f64 = 0.0;
    for n in [2, 5, 20, 75] {
        let b = standard_normal(&mut rng, n, n);
        let mut a = b.matmul_tn(&b).unwrap();
        a.symmetrize();
        let e = sym_eig(&a).unwrap();
        recon = recon.max(e.reconstruct().max_abs_diff(&a) / a.frobenius_norm().max(1.0));
    }
    c.check(recon < 1e-8, format!("sym_eig reconstruction {recon:.1e}"));

    let m = |mean: Vec<f64>, cov: Matrix| MomentSummary { mean, covariance: cov, count: 100 };
    let kl1 = gaussian_fit_kl(&m(vec![0.0], Matrix::identity(1)), &m(vec![1.0], Matrix::identity(1))).unwrap().kl;
    let kl2 = gaussian_fit_kl(&m(vec![0.0], Matrix::from_diag(&[2.0])), &m(vec![0.0], Matrix::identity(1))).unwrap().kl;
    c.check((kl1 - 0.5).abs() <= 1e-6, format!("KL {kl1:.8}"));
    c.check((kl2 - 0.15343).abs() <= 1e-5, format!("KL {kl2:.8}"));
    c.check((kl2 - 0.5 * (1.0 + 0.5f64.ln())).abs() <= 1e-6, "KL matches closed form");

    let same =
        mean_discrepancy(&m(vec![1.0, 2.0], Matrix::identity(2)), &m(vec![1.0, 2.0], Matrix::identity(2))).unwrap();
    let sq =
        mean_discrepancy(&m(vec![3.0, 4.0], Matrix::identity(2)), &m(vec![0.0, 0.0], Matrix::identity(2))).unwrap();
    let quad =
        mean_discrepancy(&m(vec![1.0, 2.0], Matrix::from_diag(&[2.0, 0.5])), &m(vec![0.0, 0.0], Matrix::identity(2)))
            .unwrap();
    c.check(
        same == 0.0 && (sq - 25.0).abs() < 1e-12 && (quad - 4.0).abs() < 1e-12,
        format!("delta_mu {same}, {sq}, {quad}"),
    );

    let pts = Matrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 2.0], vec![0.0, -2.0]]).unwrap();
    let mom = moments(&pts).unwrap();
    let want = Matrix::from_diag(&[2.0 / 3.0, 8.0 / 3.0]);
    c.check(
        mom.mean == [0.0, 0.0] && mom.covariance == want,
        format!("4-point covariance {:?}", mom.covariance.as_slice()),
    );
    c.verdict()
}

fn run_cli(config: &Path, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_covshift"))
        .arg("--out")
        .arg(out)
        .arg("run")
        .arg(config)
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("covshift run exited with {status}"))
    }
}

/// Every file of `dir` except the manifest (wall time) and the config echo
/// (which records the output directory itself).
fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().is_some_and(|n| n != "manifest.json" && n != "config.txt"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn bits(p: &MlpParams) -> Vec<u64> {
    (0..p.num_params()).map(|i| p.param(i).to_bits()).collect()
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = Checks::default();
    let configs = [
        (
            "mode-collapse",
            "kind = mode-collapse\nseed = 5\ndata.n = 2000\ngan.iterations = 400\ngan.checkpoint_every = 100\neval.n_eval = 2000\n",
        ),
        (
            "boundary-distortion",
            "kind = boundary-distortion\nseed = 6\ndata.n = 800\ngan.iterations = 300\nclassifier.iterations = 300\n",
        ),
    ];
    for (name, text) in configs {
        let cfg = tmp.path().join(format!("{name}.conf"));
        std::fs::write(&cfg, text).unwrap();
        let (a, b) = (tmp.path().join(format!("{name}-a")), tmp.path().join(format!("{name}-b")));
        if let Err(e) = run_cli(&cfg, &a).and_then(|_| run_cli(&cfg, &b)) {
            return Verdict::new(false, format!("{name}: {e}"));
        }
        let (oa, ob) = (outputs(&a), outputs(&b));
        let csvs = oa.keys().filter(|k| k.ends_with(".csv")).count();
        c.check(csvs > 0 && oa == ob, format!("{name}: {csvs} CSV files identical"));
    }

    let data = standard_normal(&mut Rng::new(9), 200, 2);
    let mut gan = GanConfig::new(4, 2);
    gan.gen_hidden = vec![16];
    gan.disc_hidden = vec![16];
    gan.train.iterations = 200;
    gan.checkpoint_every = 100;
    let run = train_vanilla_gan(&data, &gan, &mut Rng::new(10)).unwrap();
    let path = tmp.path().join("gan.ckpt");
    let ck = Checkpoint::Gan(run.clone());
    save_checkpoint(&ck, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    let lossless =
        match &back {
            Checkpoint::Gan(r) => r.checkpoints().iter().zip(run.checkpoints()).all(|(x, y)| {
                bits(&x.generator) == bits(&y.generator) && bits(&x.discriminator) == bits(&y.discriminator)
            }),
            Checkpoint::Mlp(_) => false,
        };
    c.check(lossless && back == ck && encode(&back) == std::fs::read(&path).unwrap(), "GAN checkpoint round-trip");
    let mlp = MlpTemplate::mlp(3, &[8], 2, Head::Softmax).init(&mut Rng::new(11)).unwrap();
    let bytes = encode(&Checkpoint::Mlp(mlp.clone()));
    let ok = matches!(decode(&bytes, Path::new("mem")), Ok(Checkpoint::Mlp(p)) if bits(&p) == bits(&mlp));
    c.check(ok, "MLP checkpoint round-trip");
    c.verdict()
}

fn main() {
    type Criterion = (usize, &'static str, fn() -> Verdict);
    let criteria: [Criterion; 9] = [
        (1, "spectrum decay of a GAN on a spherical Gaussian", spectrum_decay),
        (2, "boundary skew from a collapsed-variance class", boundary_skew_demo),
        (3, "mode-collapse oracle", mode_collapse_oracle),
        (4, "mode-collapse experiment end to end", mode_collapse_end_to_end),
        (5, "boundary distortion under no shift", no_shift_null),
        (6, "boundary-distortion protocol structure", protocol_structure),
        (7, "modified inception score exactness", inception_exactness),
        (8, "numeric kernel oracles", numeric_kernels),
        (9, "determinism and checkpoint round-trip", determinism),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (id, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = f();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} [{status}] {name}: {} ({:.1}s)", v.detail, start.elapsed().as_secs_f64());
        failures += !v.pass as usize;
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
