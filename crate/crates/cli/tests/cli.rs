use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lpgkit::encoder::FeatureMatrix;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn lpgkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpgkit")).args(args).env_remove("LPGKIT_SEED").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = lpgkit(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = lpgkit(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small planted fixture written by the `synth` command.
fn small_fixture(dir: &Path, n: usize) -> PathBuf {
    let spec = dir.join("spec.json");
    fs::write(&spec, format!("{{\"n\": {n}, \"p_intra\": 0.05, \"p_inter\": 0.005}}")).unwrap();
    let out = dir.join("fx");
    ok(&["synth", "--spec", s(&spec), "--out", s(&out), "--seed", "4"]);
    out.join("graph.jsonl")
}

fn value(stdout: &str, key: &str) -> f64 {
    let line = stdout.lines().find(|l| l.starts_with(&format!("{key}="))).unwrap_or_else(|| panic!("{key} in {stdout}"));
    line[key.len() + 1..].parse().unwrap()
}

#[test]
fn stats() {
    let out = ok(&["stats", "--input", s(&fixture("citations-mini.jsonl"))]);
    assert!(out.contains("n_labels=3\n"), "{out}");
    assert!(out.contains("n_vertices=9\n"));
    let out = ok(&["stats", "--input", s(&fixture("empty.jsonl"))]);
    assert!(out.starts_with("n_vertices=0\nn_edges=0\nn_labels=0\n"), "{out}");
    let err = fails(&["stats", "--input", "/nonexistent/graph.jsonl"]);
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn encode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.lpgf");
    let golden = fixture("golden-3.jsonl");
    let stdout = ok(&["encode", "--input", s(&golden), "--out", s(&out), "--int-categorical"]);
    assert_eq!(stdout.trim(), "rows=3 cols=5");
    let m = FeatureMatrix::load(&out).unwrap();
    assert_eq!(m.cols, 5);
    assert_eq!(m.row(1), &[0.0, 1.0, 0.0, 1.0, 0.0]);
    assert!(dir.path().join("x.lpgf.schema.json").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("x.lpgf.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "encode");
    assert_eq!(manifest["config"]["int-categorical"], true);

    ok(&["encode", "--input", s(&golden), "--out", s(&out), "--include", ""]);
    assert_eq!(FeatureMatrix::load(&out).unwrap().cols, 0);
    ok(&["encode", "--input", s(&golden), "--out", s(&out), "--include", "B,year"]);
    assert_eq!(FeatureMatrix::load(&out).unwrap().cols, 2);

    let err = fails(&["encode", "--input", s(&golden), "--out", s(&out), "--include", "nope"]);
    assert!(err.contains("nope"), "{err}");
    ok(&["encode", "--input", s(&fixture("citations-mini.jsonl")), "--entity", "edge", "--out", s(&out)]);
    assert_eq!(FeatureMatrix::load(&out).unwrap().rows(), 11);
}

#[test]
fn train_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let graph = small_fixture(dir.path(), 200);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let args = ["train", "--input", s(&graph), "--target", "L0,L1,L2,L3", "--model", "gat", "--epochs", "3"];
        let stdout = ok(&[&args[..], &["--seed", "9", "--out-dir", s(&out)]].concat());
        (out, stdout)
    };
    let (a, out_a) = run("a");
    let (b, out_b) = run("b");
    assert_eq!(out_a, out_b);
    for file in ["model.lpgm", "report.csv", "summary.json", "schema.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    assert_eq!(fs::read_to_string(a.join("report.csv")).unwrap().lines().count(), 4);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["epochs"], 3);
    assert!(manifest["inputs"][s(&graph)].as_str().unwrap().len() == 64);

    // replaying the manifest as a config reproduces the outputs
    let c = dir.path().join("c");
    ok(&["train", "--input", s(&graph), "--config", s(&a.join("manifest.json")), "--out-dir", s(&c)]);
    assert_eq!(fs::read(a.join("report.csv")).unwrap(), fs::read(c.join("report.csv")).unwrap());
    assert_eq!(fs::read(a.join("model.lpgm")).unwrap(), fs::read(c.join("model.lpgm")).unwrap());
}

#[test]
fn train_errors() {
    let dir = tempfile::tempdir().unwrap();
    let graph = small_fixture(dir.path(), 60);
    let out = dir.path().join("t");
    let err = fails(&["train", "--input", s(&graph), "--target", "L0,L1", "--epochs", "0", "--out-dir", s(&out)]);
    assert!(err.contains("epochs"), "{err}");
    let err = fails(&["train", "--input", s(&graph), "--target", "missing", "--out-dir", s(&out)]);
    assert!(err.contains("missing"), "{err}");
    fails(&["train", "--input", s(&graph), "--target", "L0", "--model", "mlp", "--out-dir", s(&out)]);
}

#[test]
fn planted_fixture_reaches_ceiling() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    ok(&["synth", "--out", s(&fx)]);
    let cert: serde_json::Value = serde_json::from_str(&fs::read_to_string(fx.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["property_bayes_accuracy"], 0.925);
    let out = ok(&[
        "train",
        "--input",
        s(&fx.join("graph.jsonl")),
        "--targets",
        s(&fx.join("targets.csv")),
        "--model",
        "gcn",
        "--out-dir",
        s(&dir.path().join("run")),
    ]);
    assert!(value(&out, "test_accuracy") >= 0.85, "{out}");
}

#[test]
fn complete_and_regression() {
    let dir = tempfile::tempdir().unwrap();
    let graph = small_fixture(dir.path(), 200);
    let preds = dir.path().join("p.csv");
    let out = ok(&[
        "complete", "--input", s(&graph), "--kind", "label", "--target", "L0,L1,L2,L3", "--epochs", "2", "--out", s(&preds),
    ]);
    let rows = value(&out, "rows") as usize;
    let text = fs::read_to_string(&preds).unwrap();
    assert_eq!(text.lines().next().unwrap(), "vertex_id,split,target,prediction");
    assert_eq!(text.lines().count(), rows + 1);
    assert!(text.lines().skip(1).any(|l| l.contains(",test,")));
    let err = fails(&["complete", "--input", s(&graph), "--kind", "property", "--target", "absent", "--out", s(&preds)]);
    assert!(err.contains("absent"), "{err}");

    let out = ok(&[
        "complete", "--input", s(&graph), "--kind", "property", "--target", "noise_num0", "--epochs", "2", "--out", s(&preds),
    ]);
    assert!(value(&out, "masked_mae").is_finite());
    assert_eq!(value(&out, "rows") as usize, 200);
}

#[test]
fn ablate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let graph = small_fixture(dir.path(), 120);
    let out = dir.path().join("abl");
    let stdout = ok(&[
        "ablate", "--input", s(&graph), "--target", "L0,L1,L2,L3", "--epochs", "1", "--batch-size", "2", "--repeats", "2",
        "--pairs", "--out-dir", s(&out),
    ]);
    let csv = fs::read_to_string(out.join("ablation.csv")).unwrap();
    assert_eq!(stdout, csv);
    assert!(csv.starts_with("feature,mean,std,delta\nnone,"));
    // none, 4 keys, 6 pairs; the labels are the target
    assert_eq!(csv.lines().count(), 1 + 1 + 4 + 6, "{csv}");
    let svg = fs::read_to_string(out.join("heatmap.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));

    let single = dir.path().join("single");
    ok(&[
        "ablate", "--input", s(&graph), "--target", "L0,L1,L2,L3", "--epochs", "1", "--batch-size", "2", "--repeats", "1",
        "--out-dir", s(&single),
    ]);
    assert_eq!(fs::read_to_string(single.join("ablation.csv")).unwrap().lines().count(), 1 + 1 + 4);
}

#[test]
fn config_precedence_and_seed_env() {
    let dir = tempfile::tempdir().unwrap();
    let graph = small_fixture(dir.path(), 80);
    let config = dir.path().join("cfg.json");
    fs::write(&config, r#"{"epochs": 2, "model": "gin"}"#).unwrap();
    let run = |name: &str, extra: &[&str], seed_env: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_lpgkit"));
        cmd.args(["train", "--input", s(&graph), "--target", "L0,L1,L2,L3", "--config", s(&config), "--out-dir", s(&out)]);
        cmd.args(extra).env_remove("LPGKIT_SEED");
        if let Some(v) = seed_env {
            cmd.env("LPGKIT_SEED", v);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        (out, manifest)
    };
    let (_, m) = run("file", &[], None);
    assert_eq!((m["config"]["epochs"].as_u64(), m["config"]["model"].as_str()), (Some(2), Some("gin")));
    assert_eq!(m["seed"], 0);
    let (_, m) = run("flag", &["--epochs", "3"], None);
    assert_eq!(m["config"]["epochs"], 3);
    let (env_dir, m) = run("env", &[], Some("7"));
    assert_eq!(m["seed"], 7);
    let (flag_dir, _) = run("seedflag", &["--seed", "7"], Some("3"));
    assert_eq!(fs::read(env_dir.join("report.csv")).unwrap(), fs::read(flag_dir.join("report.csv")).unwrap());

    fs::write(&config, r#"{"epochs": 2, "bogus": 1}"#).unwrap();
    let err = fails(&["train", "--input", s(&graph), "--target", "L0", "--config", s(&config)]);
    assert!(err.contains("bogus"), "{err}");
}
