use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn accentlab(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_accentlab"));
    cmd.args(args).env_remove("ACCENTLAB_SEED").env("RUST_LOG", "warn");
    if let Some(s) = env_seed {
        cmd.env("ACCENTLAB_SEED", s);
    }
    cmd.output().unwrap()
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("config.json");
    fs::write(
        &p,
        r#"{"seed": 11, "synth": {"speakers_per_accent": 3, "utterances_per_speaker": 4, "d_lid": 4, "d_sid": 4, "d_aid": 4, "feat_dim": 6}}"#,
    )
    .unwrap();
    p.to_string_lossy().into_owned()
}

fn resolved_seed(out: &Path) -> u64 {
    let text = fs::read_to_string(out.join("config.resolved.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["seed"].as_u64().unwrap()
}

#[test]
fn help_exits_zero() {
    assert_eq!(accentlab(&["--help"], None).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(accentlab(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(accentlab(&["train-aid", "--out", out], None).status.code(), Some(1));
    let missing = dir.path().join("nope.jsonl");
    let r = accentlab(&["score-asr", "--out", out, "--manifest", missing.to_str().unwrap()], None);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(accentlab(&["synth", "--out", out], Some("abc")).status.code(), Some(1));
}

#[test]
fn score_asr_needs_model_or_hypotheses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let corpus = dir.path().join("c");
    assert!(accentlab(&["synth", "--config", &cfg, "--out", corpus.to_str().unwrap()], None).status.success());
    let manifest = corpus.join("manifest.jsonl");
    let out = dir.path().join("s");
    let r = accentlab(
        &["score-asr", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(r.status.code(), Some(1), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn seed_flag_beats_env_beats_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |name: &str, flag: Option<&str>, env: Option<&str>| {
        let out = dir.path().join(name);
        let mut args = vec!["synth", "--config", &cfg, "--out", out.to_str().unwrap()];
        if let Some(f) = flag {
            args.extend(["--seed", f]);
        }
        assert!(accentlab(&args, env).status.success());
        resolved_seed(&out)
    };
    assert_eq!(run("a", None, None), 11);
    assert_eq!(run("b", None, Some("5")), 5);
    assert_eq!(run("c", Some("3"), Some("5")), 3);
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("c");
    let o = out.to_str().unwrap();
    assert!(accentlab(&["synth", "--config", &cfg, "--out", o], None).status.success());
    let first = fs::read(out.join("manifest.jsonl")).unwrap();
    fs::remove_dir_all(&out).unwrap();
    assert!(accentlab(&["synth", "--config", &cfg, "--out", o], None).status.success());
    assert_eq!(first, fs::read(out.join("manifest.jsonl")).unwrap());
}
