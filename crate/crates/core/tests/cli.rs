use std::path::Path;
use std::process::{Command, Output};

use pumc_core::cli::{load_model, read_report, read_report_jsonl, sidecar_path};
use pumc_core::data::read_binary_matrix;
use pumc_core::loss::recovery_error;

fn pumc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pumc")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_fit_eval() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.txt");
    let out = dir.path().join("fit");
    assert!(pumc(&["synth", "--m", "60", "--k", "3", "--seed", "5", "--out", s(&truth)]).status.success());
    let fit = pumc(&["fit", "--input", s(&truth), "--delta", "0.5", "--reg", "lsp:1.0", "--seed", "2", "--out", s(&out)]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    for f in ["model.json", "trace.csv", "observed.txt", "heldout.txt", "fit.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let report = dir.path().join("report.json");
    let eval = pumc(&[
        "eval",
        "--model",
        s(&out.join("model.json")),
        "--truth",
        s(&truth),
        "--heldout",
        s(&out.join("heldout.txt")),
        "--out",
        s(&report),
    ]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let mse = v["mse"].as_f64().unwrap();
    assert!(mse.is_finite() && mse > 0.0 && mse < 1.0, "mse {mse}");
}

#[test]
fn fully_observed_fit_has_degenerate_test_mask() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("a.txt");
    let out = dir.path().join("fit");
    assert!(pumc(&["synth", "--m", "20", "--k", "2", "--seed", "1", "--out", s(&truth)]).status.success());
    let fit = pumc(&[
        "fit", "--input", s(&truth), "--delta", "1", "--lambda", "0", "--omega", "0.5", "--max-iter", "2000", "--out",
        s(&out),
    ]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    let model = load_model(out.join("model.json")).unwrap();
    let a = read_binary_matrix(&truth).unwrap();
    assert!(recovery_error(&model, &a).unwrap() < 1e-6);

    let eval = pumc(&[
        "eval",
        "--model",
        s(&out.join("model.json")),
        "--truth",
        s(&truth),
        "--heldout",
        s(&out.join("heldout.txt")),
    ]);
    assert_eq!(eval.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&eval.stderr).contains("degenerate test mask"));
}

fn write_config(dir: &Path, name: &str, extra: &str) -> std::path::PathBuf {
    let path = dir.join(format!("{name}.conf"));
    let text = format!(
        "# small grid\nm = 40\nk = 3\ndeltas = 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9\nreps = 10\nmax_iter = 30\nseed = 11\nout = {name}.csv\n{extra}"
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn bench_grid_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let first = write_config(dir.path(), "one", "");
    let second = write_config(dir.path(), "two", "trace = false\n");
    for cfg in [&first, &second] {
        let run = pumc(&["bench", "--config", s(cfg)]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let a = read_report(dir.path().join("one.csv")).unwrap();
    assert_eq!(a.len(), 70);
    assert_eq!(read_report_jsonl(sidecar_path(&dir.path().join("one.csv"))).unwrap(), a);
    assert!(dir.path().join("one_trace.csv").exists());
    assert!(!dir.path().join("two_trace.csv").exists());

    let b = read_report(dir.path().join("two.csv")).unwrap();
    let key = |r: &pumc_core::cli::MetricsRecord| (r.delta.to_bits(), r.rep, r.mse.to_bits(), r.final_rank, r.iterations);
    assert_eq!(a.iter().map(key).collect::<Vec<_>>(), b.iter().map(key).collect::<Vec<_>>());
}

#[test]
fn bench_on_ratings_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for u in 1..=30 {
        for i in 1..=25 {
            if (u * 7 + i * 3) % 4 != 0 {
                text += &format!("{u}\t{i}\t{}\t881250949\n", 1 + (u + i) % 5);
            }
        }
    }
    std::fs::write(dir.path().join("u.data"), text).unwrap();
    std::fs::write(
        dir.path().join("ml.conf"),
        "source = ratings:u.data\nreg = lsp:1.0\ndeltas = 0.5, 0.9\nreps = 2\nmax_iter = 30\nout = ml.csv\n",
    )
    .unwrap();
    let run = pumc(&["bench", "--config", s(&dir.path().join("ml.conf"))]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let recs = read_report(dir.path().join("ml.csv")).unwrap();
    assert_eq!(recs.len(), 4);
    assert!(recs.iter().all(|r| (r.m, r.n) == (30, 25)));
}

#[test]
fn exit_codes() {
    assert_eq!(pumc(&["--help"]).status.code(), Some(0));
    assert_eq!(pumc(&["--version"]).status.code(), Some(0));
    assert_eq!(pumc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(pumc(&["synth", "--m", "ten", "--out", "x"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "reps = 0\n").unwrap();
    let run = pumc(&["bench", "--config", s(&bad)]);
    assert_eq!(run.status.code(), Some(2));
    assert!(!run.stderr.is_empty());
    let missing = pumc(&["fit", "--input", s(&dir.path().join("nope.txt")), "--out", s(dir.path())]);
    assert_eq!(missing.status.code(), Some(2));
}
