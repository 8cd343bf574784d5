use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use covshift_core::distributions::{DataSource, LabeledDataset};
use covshift_core::Matrix;
use covshift_shell::io::{load_dataset, parse_dataset, save_dataset, Loaded};
use proptest::prelude::*;
use tempfile::TempDir;

fn covshift(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covshift")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = covshift(dir, args);
    assert!(out.status.success(), "covshift {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    covshift(dir, args).status.code().expect("exit code")
}

fn ring_file(tmp: &TempDir) -> PathBuf {
    ok(tmp.path(), &["--seed", "3", "gen-data", "--family", "ring", "--n", "1500", "--classes", "4", "-o", "ring.csv"]);
    tmp.path().join("ring.csv")
}

#[test]
fn gen_data_is_seeded() {
    let tmp = TempDir::new().unwrap();
    let a = ring_file(&tmp);
    let first = fs::read(&a).unwrap();
    ring_file(&tmp);
    assert_eq!(first, fs::read(&a).unwrap());
    let Loaded::Labeled(d) = load_dataset(&a).unwrap() else {
        panic!("ring data is labeled");
    };
    assert_eq!((d.len(), d.dim(), d.class_count()), (1500, 2, 4));
    assert_eq!(d.source(), DataSource::TrueData);
    assert_eq!(d.class_counts(), vec![375; 4]);
}

#[test]
fn classifier_annotate_score_and_modes() {
    let tmp = TempDir::new().unwrap();
    ring_file(&tmp);
    let dir = tmp.path();
    ok(dir, &["--out", "cls", "train-classifier", "ring.csv", "--hidden", "16", "--iterations", "600"]);
    assert!(dir.join("cls/classifier.ckpt").exists());
    ok(dir, &["--out", "ann", "annotate", "ring.csv", "--classifier", "cls/classifier.ckpt"]);
    let preds = load_dataset(&dir.join("ann/predictions.csv")).unwrap();
    assert_eq!(preds.x().cols(), 4);
    assert_eq!(preds.x().rows(), 1500);

    let score = ok(dir, &["--out", "sc", "score", "ann/predictions.csv", "--splits", "5"]);
    assert!(score.contains("modified inception score"));
    let table = fs::read_to_string(dir.join("sc/score.csv")).unwrap();
    let mean: f64 = table.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((1.0..=4.0).contains(&mean), "{mean}");
    assert!(dir.join("sc/confidence.svg").exists());

    let modes = ok(dir, &["--out", "md", "mode-report", "ann/predictions.csv"]);
    assert!(modes.contains("fractions"), "{modes}");
    assert!(dir.join("md/modes.csv").exists() || dir.join("md/final_modes.csv").exists());
}

#[test]
fn gan_checkpoint_feeds_annotate_and_mode_report() {
    let tmp = TempDir::new().unwrap();
    ring_file(&tmp);
    let dir = tmp.path();
    ok(
        dir,
        &[
            "--out",
            "gan",
            "--set",
            "gan.checkpoint_every=100",
            "--set",
            "gan.gen_hidden=16",
            "--set",
            "gan.disc_hidden=16",
            "train-gan",
            "ring.csv",
            "--iterations",
            "300",
        ],
    );
    assert!(dir.join("gan/losses.csv").exists());
    // Bayes annotator of the same ring as gen-data produced
    let ring = ["--set", "data.classes=4"];
    let mut args = vec!["--out", "mr"];
    args.extend(ring);
    args.extend(["mode-report", "gan/gan.ckpt", "--n-eval", "500"]);
    ok(dir, &args);
    let series = fs::read_to_string(dir.join("mr/mode_series.csv")).unwrap();
    assert_eq!(series.lines().count(), 4, "{series}");
    assert!(series.starts_with("step,f0,f1,f2,f3"));

    let mut args = vec!["--out", "an"];
    args.extend(ring);
    args.extend(["annotate", "gan/gan.ckpt", "--n-eval", "200"]);
    ok(dir, &args);
    let Loaded::Labeled(p) = load_dataset(&dir.join("an/predictions.csv")).unwrap() else {
        panic!("predictions carry labels");
    };
    assert_eq!(p.source(), DataSource::GanData);
    assert_eq!(p.len(), 200);
}

#[test]
fn spectrum_of_two_files() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(dir, &["--seed", "1", "gen-data", "--family", "spherical", "--dim", "3", "--n", "400", "-o", "a.csv"]);
    ok(dir, &["--seed", "2", "gen-data", "--family", "spherical", "--dim", "3", "--n", "400", "-o", "b.csv"]);
    let out = ok(dir, &["--out", "sp", "spectrum", "a.csv", "b.csv"]);
    assert!(out.contains("decay ratio"));
    let csv = fs::read_to_string(dir.join("sp/spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn run_writes_manifest_and_config() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("exp.conf"),
        "# tiny boundary run\nkind = boundary-distortion\nseed = 11\ndata.n = 400\ndata.dim = 2\n\
         gan.iterations = 100\nclassifier.iterations = 100\nboundary.factors = 1,4\nboundary.oversample = 2\n",
    )
    .unwrap();
    ok(dir, &["--out", "r", "run", "exp.conf"]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("r/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["kind"], "boundary-distortion");
    assert_eq!(manifest["seeds"]["seed"], 11);
    assert_eq!(manifest["config"]["boundary.oversample"], "2");
    let table = fs::read_to_string(dir.join("r/boundary.csv")).unwrap();
    let tags: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(tags, ["true", "true_down_1", "true_down_4", "gan_up_1", "gan_up_2"]);

    // the echoed config re-runs to the same tables
    ok(dir, &["--out", "r2", "run", "r/config.txt"]);
    for f in ["boundary.csv", "boundary_summary.csv"] {
        assert_eq!(fs::read(dir.join("r").join(f)).unwrap(), fs::read(dir.join("r2").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("bad_key.conf"), "kind = mode-collapse\nno.such.key = 1\n").unwrap();
    assert_eq!(code(dir, &["run", "bad_key.conf"]), 2);
    fs::write(dir.join("bad_value.conf"), "kind = mode-collapse\ngan.iterations = many\n").unwrap();
    assert_eq!(code(dir, &["run", "bad_value.conf"]), 2);
    assert_eq!(code(dir, &["--set", "nonsense", "demo", "fig1b"]), 2);
    assert_eq!(code(dir, &["run", "missing.conf"]), 4);
    fs::write(dir.join("ragged.csv"), "d=2\n1,2\n3\n").unwrap();
    assert_eq!(code(dir, &["--out", "x", "score", "ragged.csv"]), 4);
    fs::write(dir.join("not_a_ckpt"), "d=1\n0.5\n").unwrap();
    assert_eq!(code(dir, &["annotate", "ragged.csv", "--classifier", "not_a_ckpt"]), 4);
    assert_eq!(code(dir, &["--help"]), 0);
}

#[test]
fn unlabeled_file_cannot_train_a_classifier() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(dir, &["gen-data", "--family", "spherical", "--dim", "2", "--n", "50", "-o", "u.csv"]);
    assert_eq!(code(dir, &["train-classifier", "u.csv"]), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dataset_files_round_trip_bit_exactly(
        rows in proptest::collection::vec(
            (proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 0usize..3),
            1..40,
        )
    ) {
        let x = Matrix::from_vec(rows.len(), 1, rows.iter().map(|r| r.0).collect()).unwrap();
        let y = rows.iter().map(|r| r.1).collect();
        let d = LabeledDataset::new(x, y, 3, DataSource::GanData).unwrap();
        let tmp = TempDir::new().unwrap();
        let path = tmp.path().join("d.csv");
        save_dataset(&d, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        prop_assert_eq!(&parse_dataset(&text, &path).unwrap(), &back);
        let Loaded::Labeled(b) = back else { panic!("labeled") };
        let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(b.x()), bits(d.x()));
        prop_assert_eq!(b.labels(), d.labels());
        prop_assert_eq!(b.source(), DataSource::GanData);
    }
}
