//! Evaluation: confusion counts, rates, ROC/AUC, dataset manifests and
//! whole-dataset runs.

mod manifest;
mod metrics;
mod pipeline;
mod report;

pub use manifest::{load_manifest, write_manifest, DatasetManifest, ManifestEntry, Modality};
pub use metrics::{
    confusion, evaluate, metrics, roc_auc, roc_from_samples, ConfusionMatrix, MetricReport, Roc,
};
pub use pipeline::{
    evaluate_manifest, load_entry, run_pipeline, samples_for, segment_image, train_on_manifest,
    LoadedEntry, PipelineConfig, PipelineSummary,
};
pub use report::{
    mean_metrics, report_csv, roc_csv, write_report, write_roc, ImageReport, REPORT_HEADER,
    UNDEFINED,
};
