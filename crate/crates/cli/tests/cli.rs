use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vesselseg::raster::{save_gray, save_mask};
use vesselseg::synthetic::{generate, SyntheticConfig};

fn vesselseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vesselseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Writes two synthetic images and a manifest training on `a`, testing on `b`.
fn toy_dataset(dir: &Path) -> String {
    for (id, seed) in [("a", 11), ("b", 12)] {
        let s = generate(&SyntheticConfig::with_size(64, 64), seed).unwrap();
        save_gray(&s.image, dir.join(format!("{id}.png"))).unwrap();
        save_mask(&s.ground_truth, dir.join(format!("{id}_gt.png"))).unwrap();
    }
    let manifest = dir.join("toy.manifest");
    fs::write(
        &manifest,
        "[dataset]\nname = toy\ntrain = a\ntest = b\n\n[entry a]\nimage = a.png\ngt = a_gt.png\n\n[entry b]\nimage = b.png\ngt = b_gt.png\n",
    )
    .unwrap();
    manifest.to_str().unwrap().to_string()
}

#[test]
fn run_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = toy_dataset(dir.path());
    let mut summaries = Vec::new();
    for run in ["r1", "r2"] {
        let out_dir = dir.path().join(run);
        let out = vesselseg(&["run", "--manifest", &manifest, "--out-dir", out_dir.to_str().unwrap(), "--trees", "5"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        for f in ["b_mask.png", "b_scores.elsc", "b_roc.csv", "model.elrf"] {
            assert!(out_dir.join(f).exists(), "missing {f}");
        }
        summaries.push(fs::read(out_dir.join("summary.csv")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
    let text = String::from_utf8(summaries[0].clone()).unwrap();
    assert!(text.starts_with("image_id,tp_rate,tn_rate,accuracy,auc,f1,mcc\nb,"));
}

#[test]
fn train_seeds_segment_evaluate_chain() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = toy_dataset(dir.path());
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    let out = vesselseg(&["train", "--manifest", &manifest, "--model-out", &p("m.elrf"), "--trees", "4", "--sample-cap", "2000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = vesselseg(&["seeds", "--image", &p("b.png"), "--out", &p("seeds.txt")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let seeds = fs::read_to_string(p("seeds.txt")).unwrap();

    let out = vesselseg(&[
        "segment", "--image", &p("b.png"), "--model", &p("m.elrf"), "--out-mask", &p("pred.png"),
        "--out-scores", &p("pred.elsc"), "--seed-list", seeds.trim(), "--conn-mode", "exponential",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = vesselseg(&["evaluate", "--pred", &p("pred.png"), "--gt", &p("b_gt.png"), "--scores", &p("pred.elsc"), "--out", &p("eval.csv")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(p("eval.csv")).unwrap();
    assert_eq!(report.lines().count(), 2);
    assert!(!report.lines().nth(1).unwrap().contains("undefined"));
    assert!(dir.path().join("eval.roc.csv").exists());

    let out = vesselseg(&["rank-features", "--model", &p("m.elrf"), "--manifest", &manifest, "--out", &p("rank.csv"), "--sample-cap", "500"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(p("rank.csv")).unwrap().lines().count(), 10);
}

#[test]
fn extract_features_text_has_header() {
    let dir = tempfile::tempdir().unwrap();
    toy_dataset(dir.path());
    let img = dir.path().join("a.png");
    let csv = dir.path().join("a.csv");
    let out = vesselseg(&["extract-features", "--image", img.to_str().unwrap(), "--out", csv.to_str().unwrap(), "--text"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 64 * 64);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 37);
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = toy_dataset(dir.path());
    let missing = dir.path().join("nope.manifest");
    let out_dir = dir.path().join("out");

    // unreadable input is an I/O error
    let out = vesselseg(&["run", "--manifest", missing.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    // overlapping split is a validation error
    let bad = dir.path().join("bad.manifest");
    fs::write(&bad, fs::read_to_string(&manifest).unwrap().replace("test = b", "test = a")).unwrap();
    let out = vesselseg(&["run", "--manifest", bad.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 1);

    // unknown flag value and seeds outside the image are validation errors
    let out = vesselseg(&["run", "--manifest", &manifest, "--out-dir", "x", "--conn-mode", "linear"]);
    assert_eq!(code(&out), 1);
    let img = dir.path().join("a.png");
    let out = vesselseg(&[
        "segment", "--image", img.to_str().unwrap(), "--model", "unused", "--out-mask", "unused.png", "--seed-list", "99,99",
    ]);
    assert_eq!(code(&out), 1);

    let out = vesselseg(&["--help"]);
    assert_eq!(code(&out), 0);
}
