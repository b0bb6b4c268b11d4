mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use qfilter::cli::BENCH_HEADER;
use qfilter::train::METRICS_HEADER;
use qfilter::{Architecture, Checkpoint, HybridModel};

fn qfilter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfilter"))
        .args(args)
        .env_remove("QFILTER_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn train(dir: &Path, tag: &str, extra: &[&str]) -> (String, std::path::PathBuf) {
    let [ti, tl, vi, vl] = mnist_paths();
    let metrics = dir.join(format!("{tag}.csv"));
    let ckpt = dir.join(format!("{tag}.ckpt"));
    let mut args = vec![
        "train".to_string(),
        format!("--train-images={}", ti.display()),
        format!("--train-labels={}", tl.display()),
        format!("--test-images={}", vi.display()),
        format!("--test-labels={}", vl.display()),
        format!("--metrics-out={}", metrics.display()),
        format!("--checkpoint-out={}", ckpt.display()),
        "--train-count=10".into(),
        "--test-count=10".into(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&qfilter(&argv));
    (std::fs::read_to_string(metrics).unwrap(), ckpt)
}

fn without_timing(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect()
}

#[test]
fn zero_epochs_writes_header_and_initial_model() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, ckpt) = train(dir.path(), "zero", &["--epochs=0", "--seed=5"]);
    assert_eq!(csv, format!("{METRICS_HEADER}\n"));
    let ck = Checkpoint::load(ckpt).unwrap();
    let expected = HybridModel::init(Architecture::mnist_default(), 5).unwrap();
    assert_eq!(ck.model, expected);
    assert_eq!(ck.init_seed, 5);
}

#[test]
fn repeated_runs_match_and_eval_reproduces_train_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let (a, ckpt) = train(dir.path(), "a", &["--epochs=2", "--seed=1", "--subset-seed=2"]);
    let (b, _) = train(dir.path(), "b", &["--epochs=2", "--seed=1", "--subset-seed=2", "--workers=3"]);
    assert_eq!(a.lines().count(), 3);
    assert_eq!(without_timing(&a), without_timing(&b));

    let last: Vec<&str> = a.lines().last().unwrap().split(',').collect();
    let train_acc: f64 = last[2].parse().unwrap();
    let [ti, tl, ..] = mnist_paths();
    let report = ok(&qfilter(&[
        "eval",
        &format!("--checkpoint={}", ckpt.display()),
        &format!("--images={}", ti.display()),
        &format!("--labels={}", tl.display()),
        "--count=10",
    ]));
    let acc: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("accuracy "))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(acc, train_acc);
    assert!(report.contains("confusion"));
}

#[test]
fn untrained_model_is_near_chance() {
    let dir = tempfile::tempdir().unwrap();
    let (_, ckpt) = train(dir.path(), "init", &["--epochs=0"]);
    let [.., vi, vl] = mnist_paths();
    let report = ok(&qfilter(&[
        "eval",
        &format!("--checkpoint={}", ckpt.display()),
        &format!("--images={}", vi.display()),
        &format!("--labels={}", vl.display()),
    ]));
    let acc: f64 = report.lines().find_map(|l| l.strip_prefix("accuracy ")).unwrap().parse().unwrap();
    assert!((0.0..=0.3).contains(&acc), "{acc}");
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let [ti, tl, vi, vl] = mnist_paths();
    let conf = dir.path().join("run.conf");
    std::fs::write(
        &conf,
        format!(
            "train_images = {}\ntrain_labels = {}\ntest_images = {}\ntest_labels = {}\nfilter_kind = classical\nepochs = 3\n",
            ti.display(),
            tl.display(),
            vi.display(),
            vl.display()
        ),
    )
    .unwrap();
    let metrics = dir.path().join("m.csv");
    let ckpt = dir.path().join("m.ckpt");
    ok(&qfilter(&[
        "train",
        &format!("--config={}", conf.display()),
        "--epochs=1",
        "--train-count=10",
        "--test-count=10",
        &format!("--metrics-out={}", metrics.display()),
        &format!("--checkpoint-out={}", ckpt.display()),
    ]));
    assert_eq!(std::fs::read_to_string(metrics).unwrap().lines().count(), 2);
    assert_eq!(Checkpoint::load(ckpt).unwrap().model.arch.kind, qfilter::FilterKind::Classical);
}

#[test]
fn corrupt_checkpoint_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("bad.ckpt");
    std::fs::write(&ckpt, "qfilter-checkpoint 1\nfilter_kind quantum\n").unwrap();
    let [.., vi, vl] = mnist_paths();
    let out = qfilter(&[
        "eval",
        &format!("--checkpoint={}", ckpt.display()),
        &format!("--images={}", vi.display()),
        &format!("--labels={}", vl.display()),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn bench_output_is_csv() {
    let out = ok(&qfilter(&[
        "bench", "--sizes=2", "--estimators=overlap,hadamard", "--workers=1,2", "--count=1", "-m", "1",
    ]));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some(BENCH_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r.len(), 6);
        assert_eq!(r[0], "2");
        assert!(r[5].parse::<f64>().unwrap() > 0.0);
    }
    assert_eq!(rows[0][1], "4");
    assert_eq!(rows[2][1], "5");
}

#[test]
fn opcount_prints_the_count() {
    assert_eq!(ok(&qfilter(&["opcount", "28", "2", "4", "50", "30"])).trim(), "1176000");
    assert_eq!(ok(&qfilter(&["opcount", "28", "4", "4", "50", "30"])).trim(), "294000");
    assert!(!qfilter(&["opcount", "28", "0", "4", "50", "30"]).status.success());
}

#[test]
fn missing_dataset_paths_are_reported() {
    let out = qfilter(&["train", "--epochs=0"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("train_images"));
}
