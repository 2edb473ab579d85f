use std::path::Path;
use std::process::{Command, Output};

fn efem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efem"))
        .current_dir(dir)
        .env_remove("EFEM_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Failures print exactly one `class: message` line.
fn assert_error(out: &Output, class: &str) {
    let err = stderr(out);
    assert_eq!(out.status.code(), Some(1), "{err}");
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with(&format!("{class}: ")), "{err}");
}

#[test]
fn fuzzy_score_writes_scores_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let out = efem(dir.path(), &["fuzzy-score", "--out", "o"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let listed = String::from_utf8(out.stdout).unwrap();
    assert_eq!(listed.lines().count(), 2);
    let weights = std::fs::read_to_string(dir.path().join("o/loss_weights.csv")).unwrap();
    assert!(weights.contains("shape"), "{weights}");
    let scores = std::fs::read_to_string(dir.path().join("o/fuzzy_scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 11);
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "seed = 5\nscenario.steps = 60\n").unwrap();
    let a = efem(dir.path(), &["generate", "--config", "run.conf", "--out", "a"]);
    let b = efem(dir.path(), &["generate", "--config", "run.conf", "--out", "b"]);
    assert!(a.status.success() && b.status.success(), "{}", stderr(&a));
    let files = String::from_utf8(a.stdout).unwrap();
    assert!(files.lines().count() >= 20, "{files}");
    for line in files.lines() {
        let twin = Path::new("b").join(Path::new(line).strip_prefix("a").unwrap());
        let x = std::fs::read(dir.path().join(line)).unwrap();
        let y = std::fs::read(dir.path().join(&twin)).unwrap();
        assert_eq!(x, y, "{line}");
    }
}

#[test]
fn malformed_config_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.conf"), "seed = x\n").unwrap();
    assert_error(&efem(dir.path(), &["generate", "--config", "bad.conf"]), "parse");
}

#[test]
fn missing_checkpoint_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_error(&efem(dir.path(), &["evaluate", "--checkpoint", "nope.ckpt", "--out", "o"]), "io");
}

#[test]
fn empty_opinion_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("op.csv"), "metric,e1\n").unwrap();
    assert_error(&efem(dir.path(), &["fuzzy-score", "--opinions", "op.csv", "--out", "o"]), "config");
}

#[test]
fn zero_threads_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_efem"))
        .current_dir(dir.path())
        .env("EFEM_THREADS", "0")
        .args(["fuzzy-score", "--out", "o"])
        .output()
        .unwrap();
    assert_error(&out, "config");
}

#[test]
fn bad_arguments_exit_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["bogus"][..], &["train", "--epochs", "3"], &[]] {
        let out = efem(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = stderr(&out);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("usage: "), "{err}");
    }
}

#[test]
fn unknown_model_is_rejected_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let out = efem(dir.path(), &["train", "--model", "Transformer", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("o").exists());
}
