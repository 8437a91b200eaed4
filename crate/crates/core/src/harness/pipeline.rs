//! Whole-dataset runs: train on the manifest's training ids, segment and
//! score every test id, write per-image artifacts and a summary table.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::manifest::{DatasetManifest, ManifestEntry};
use super::metrics::evaluate;
use super::report::{write_report, write_roc, ImageReport, mean_metrics};
use super::MetricReport;
use crate::connectivity::ConnectivityConfig;
use crate::error::{Error, Result};
use crate::features::{build_stack, samples_from_stack, FilterBank, LabeledSample, Sampling};
use crate::filters::{FrangiConfig, Polarity};
use crate::forest::{save_model, train, ForestModel, ForestParams};
use crate::growseg::{save_scores, seed_frangi_config, segment, select_seeds, SeedSet, Segmentation};
use crate::raster::{load_image, load_mask, save_mask, BinaryMask, GrayImage};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub forest: ForestParams,
    pub connectivity: ConnectivityConfig,
    /// A pixel is vessel when its forest probability exceeds this.
    pub threshold: f64,
    pub sampling: Sampling,
    /// Vesselness settings for seed selection; `None` picks the default for
    /// the manifest's polarity.
    pub seeding: Option<FrangiConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            forest: ForestParams::default(),
            connectivity: ConnectivityConfig::default(),
            threshold: 0.5,
            sampling: Sampling::All,
            seeding: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.forest.validate()?;
        self.connectivity.validate()?;
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "decision threshold {} outside [0, 1)",
                self.threshold
            )));
        }
        if let Some(s) = &self.seeding {
            s.validate()?;
        }
        Ok(())
    }

    fn seeding_for(&self, polarity: Polarity) -> FrangiConfig {
        self.seeding.unwrap_or_else(|| seed_frangi_config(polarity))
    }
}

/// One manifest entry read from disk.
#[derive(Debug, Clone)]
pub struct LoadedEntry {
    pub image: GrayImage,
    pub gt: BinaryMask,
    pub fov: Option<BinaryMask>,
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

pub fn load_entry(manifest: &DatasetManifest, entry: &ManifestEntry) -> Result<LoadedEntry> {
    let load = || -> Result<LoadedEntry> {
        let image = load_image(manifest.resolve(&entry.image), manifest.modality.channel_policy())?;
        let gt = load_mask(manifest.resolve(&entry.gt))?;
        check_dims(image.dims(), gt.dims())?;
        let fov = match &entry.fov {
            Some(p) => {
                let f = load_mask(manifest.resolve(p))?;
                check_dims(image.dims(), f.dims())?;
                Some(f)
            }
            None => None,
        };
        Ok(LoadedEntry { image, gt, fov })
    };
    load().map_err(|e| e.in_image(&entry.id))
}

fn entries<'a>(manifest: &'a DatasetManifest, ids: &[String]) -> Result<Vec<&'a ManifestEntry>> {
    ids.iter()
        .map(|id| {
            manifest
                .entry(id)
                .ok_or_else(|| Error::MalformedManifest(format!("id '{id}' has no entry")))
        })
        .collect()
}

/// Training samples of the given ids, concatenated in list order.
/// Connectivity features come from each image's ground truth.
pub fn samples_for(
    manifest: &DatasetManifest,
    ids: &[String],
    cfg: &PipelineConfig,
) -> Result<Vec<LabeledSample>> {
    let bank = FilterBank::new(manifest.polarity);
    let per_image = entries(manifest, ids)?
        .par_iter()
        .map(|e| {
            let loaded = load_entry(manifest, e)?;
            let run = || {
                let stack = build_stack::<f64>(&loaded.image, &bank)?;
                samples_from_stack(&stack, &loaded.gt, loaded.fov.as_ref(), &cfg.connectivity, cfg.sampling)
            };
            run().map_err(|err| err.in_image(&e.id))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_image.concat())
}

pub fn train_on_manifest(manifest: &DatasetManifest, cfg: &PipelineConfig) -> Result<ForestModel> {
    cfg.validate()?;
    if manifest.train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    train(&samples_for(manifest, &manifest.train, cfg)?, &cfg.forest)
}

/// Segments one image from automatic seeds, or from `seeds` when given.
pub fn segment_image(
    image: &GrayImage,
    fov: Option<&BinaryMask>,
    model: &ForestModel,
    polarity: Polarity,
    cfg: &PipelineConfig,
    seeds: Option<SeedSet>,
) -> Result<(Segmentation, SeedSet)> {
    let seeds = match seeds {
        Some(s) => s,
        None => select_seeds(image, &cfg.seeding_for(polarity), fov)?,
    };
    let stack = build_stack::<f64>(image, &FilterBank::new(polarity))?;
    let seg = segment(&stack, model, &seeds, &cfg.connectivity, cfg.threshold)?;
    Ok((seg, seeds))
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub reports: Vec<ImageReport>,
    /// Unweighted mean over test images.
    pub mean: MetricReport,
}

/// Segments and evaluates every test id with an existing model, writing
/// `<id>_mask.png`, `<id>_scores.elsc`, `<id>_roc.csv` and `summary.csv`
/// into `out_dir`.
pub fn evaluate_manifest(
    manifest: &DatasetManifest,
    model: &ForestModel,
    cfg: &PipelineConfig,
    out_dir: impl AsRef<Path>,
) -> Result<PipelineSummary> {
    cfg.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::write(out_dir, e))?;
    let reports = entries(manifest, &manifest.test)?
        .par_iter()
        .map(|e| {
            let loaded = load_entry(manifest, e)?;
            let run = || -> Result<ImageReport> {
                let fov = loaded.fov.as_ref();
                let (seg, _) = segment_image(&loaded.image, fov, model, manifest.polarity, cfg, None)?;
                let metrics = evaluate(&seg.mask, &loaded.gt, fov, Some(&seg.scores))?;
                save_mask(&seg.mask, out_dir.join(format!("{}_mask.png", e.id)))?;
                save_scores(&seg.scores, out_dir.join(format!("{}_scores.elsc", e.id)))?;
                write_roc(&metrics.roc, out_dir.join(format!("{}_roc.csv", e.id)))?;
                Ok(ImageReport {
                    id: e.id.clone(),
                    metrics,
                })
            };
            run().map_err(|err| err.in_image(&e.id))
        })
        .collect::<Result<Vec<_>>>()?;
    write_report(&reports, out_dir.join("summary.csv"))?;
    let mean = mean_metrics(&reports).ok_or(Error::EmptyEvalSet)?;
    Ok(PipelineSummary { reports, mean })
}

/// Trains on the training ids, saves `model.elrf` and evaluates the test ids.
pub fn run_pipeline(
    manifest: &DatasetManifest,
    cfg: &PipelineConfig,
    out_dir: impl AsRef<Path>,
) -> Result<(ForestModel, PipelineSummary)> {
    let out_dir = out_dir.as_ref();
    let model = train_on_manifest(manifest, cfg)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::write(out_dir, e))?;
    save_model(&model, out_dir.join("model.elrf"))?;
    let summary = evaluate_manifest(manifest, &model, cfg, out_dir)?;
    Ok((model, summary))
}
