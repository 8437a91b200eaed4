use std::fs;
use std::path::PathBuf;

use vesselseg::error::Error;
use vesselseg::filters::Polarity;
use vesselseg::forest::ForestParams;
use vesselseg::harness::{
    load_manifest, run_pipeline, write_manifest, DatasetManifest, ManifestEntry, Modality,
    PipelineConfig, REPORT_HEADER,
};
use vesselseg::raster::{save_gray, save_mask};
use vesselseg::synthetic::{dataset, SyntheticConfig};

fn manifest_with(dir: &std::path::Path, n_test: usize) -> DatasetManifest {
    let images = dataset(&SyntheticConfig::with_size(40, 36), n_test + 1, 5).unwrap();
    let mut entries = Vec::new();
    for (i, s) in images.iter().enumerate() {
        let id = format!("{:02}", i + 1);
        save_gray(&s.image, dir.join(format!("{id}.pgm"))).unwrap();
        save_mask(&s.ground_truth, dir.join(format!("{id}_gt.png"))).unwrap();
        entries.push(ManifestEntry {
            id: id.clone(),
            image: PathBuf::from(format!("{id}.pgm")),
            gt: PathBuf::from(format!("{id}_gt.png")),
            fov: None,
        });
    }
    let ids: Vec<String> = entries.iter().map(|e| e.id.clone()).collect();
    DatasetManifest {
        name: "toy".into(),
        modality: Modality::Fundus,
        polarity: Polarity::DarkOnBright,
        entries,
        train: ids[n_test..].to_vec(),
        test: ids[..n_test].to_vec(),
        base_dir: dir.to_path_buf(),
    }
}

fn small() -> PipelineConfig {
    PipelineConfig {
        forest: ForestParams {
            n_trees: 5,
            ..ForestParams::default()
        },
        ..PipelineConfig::default()
    }
}

#[test]
fn one_train_twenty_test_gives_twenty_reports() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest_with(dir.path(), 20);
    let out = dir.path().join("out");
    let (_, summary) = run_pipeline(&m, &small(), &out).unwrap();
    assert_eq!(summary.reports.len(), 20);
    let text = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], REPORT_HEADER);
    assert_eq!(lines.len(), 22);
    assert!(lines[21].starts_with("mean,"));
    let mean_acc = summary.reports.iter().map(|r| r.metrics.accuracy).sum::<f64>() / 20.0;
    assert!((summary.mean.accuracy - mean_acc).abs() < 1e-12);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest_with(dir.path(), 2);
    let read = |sub: &str| {
        let out = dir.path().join(sub);
        run_pipeline(&m, &small(), &out).unwrap();
        ["summary.csv", "01_scores.elsc", "01_mask.png", "model.elrf"].map(|f| fs::read(out.join(f)).unwrap())
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn failures_name_the_image() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest_with(dir.path(), 1);
    fs::write(dir.path().join("01.pgm"), b"P5 garbage").unwrap();
    let err = run_pipeline(&m, &small(), dir.path().join("out")).unwrap_err();
    match err {
        Error::InImage { id, .. } => assert_eq!(id, "01"),
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn empty_test_list_is_rejected_at_load() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manifest_with(dir.path(), 1);
    m.test.clear();
    let path = dir.path().join("m.manifest");
    write_manifest(&m, &path).unwrap();
    assert!(matches!(load_manifest(&path), Err(Error::MalformedManifest(_))));
}
