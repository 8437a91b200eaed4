//! Batch command line front end for `vesselseg`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vesselseg::connectivity::{ConnectivityConfig, ProbabilityMode};
use vesselseg::features::{build_stack, write_stack, write_stack_text, FilterBank, Sampling};
use vesselseg::filters::Polarity;
use vesselseg::forest::{default_groups, load_model, permutation_importance, save_model, ForestParams};
use vesselseg::growseg::{load_scores, save_scores, seed_frangi_config, select_seeds, SeedSet};
use vesselseg::harness::{
    evaluate, load_manifest, run_pipeline, samples_for, segment_image, train_on_manifest,
    write_report, write_roc, ImageReport, PipelineConfig,
};
use vesselseg::raster::{load_image, load_mask, save_mask, BinaryMask, ChannelPolicy};
use vesselseg::{Error, ErrorClass, Result};

#[derive(Parser)]
#[command(name = "vesselseg", version, about = "Retinal vessel segmentation by classifier-driven region growing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the grey-level feature stack of one image.
    ExtractFeatures {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write CSV text instead of the binary cache.
        #[arg(long)]
        text: bool,
        #[arg(long, default_value_t = Polarity::DarkOnBright)]
        polarity: Polarity,
    },
    /// Train a forest on the training ids of a manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        conn: ConnArgs,
    },
    /// Select seed points from the largest vesselness component.
    Seeds {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        fov: Option<PathBuf>,
        /// Seed mask image, or a `r,c;r,c` list when the extension is `.txt`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = Polarity::DarkOnBright)]
        polarity: Polarity,
    },
    /// Segment one image with a trained forest.
    Segment {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out_mask: PathBuf,
        #[arg(long)]
        out_scores: Option<PathBuf>,
        /// Manual seeds `r,c;r,c`, bypassing automatic selection.
        #[arg(long)]
        seed_list: Option<String>,
        #[arg(long)]
        fov: Option<PathBuf>,
        #[arg(long, default_value_t = Polarity::DarkOnBright)]
        polarity: Polarity,
        #[command(flatten)]
        conn: ConnArgs,
    },
    /// Score a predicted mask against ground truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        fov: Option<PathBuf>,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train, segment and evaluate a whole manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        conn: ConnArgs,
    },
    /// Rank feature groups by permutation importance on the test ids.
    RankFeatures {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Samples drawn per test image.
        #[arg(long, default_value_t = 20_000)]
        sample_cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        conn: ConnArgs,
    },
}

#[derive(Args)]
struct ForestArgs {
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Maximum tree depth; unlimited when absent.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 6)]
    mtry: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training pixels drawn per image; all in-FOV pixels when absent.
    #[arg(long)]
    sample_cap: Option<usize>,
}

impl ForestArgs {
    fn params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            max_depth: self.depth,
            mtry: self.mtry,
            seed: self.seed,
            ..ForestParams::default()
        }
    }

    fn sampling(&self) -> Sampling {
        match self.sample_cap {
            Some(n) => Sampling::Cap { n, seed: self.seed },
            None => Sampling::All,
        }
    }
}

#[derive(Args)]
struct ConnArgs {
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value = "fraction", value_parser = ["exponential", "fraction"])]
    conn_mode: String,
}

impl ConnArgs {
    fn connectivity(&self) -> Result<ConnectivityConfig> {
        Ok(ConnectivityConfig {
            mode: self.conn_mode.parse::<ProbabilityMode>()?,
            ..ConnectivityConfig::default()
        })
    }
}

fn pipeline_config(forest: Option<&ForestArgs>, conn: &ConnArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig {
        connectivity: conn.connectivity()?,
        threshold: conn.threshold,
        ..PipelineConfig::default()
    };
    if let Some(f) = forest {
        cfg.forest = f.params();
        cfg.sampling = f.sampling();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn channel_policy(polarity: Polarity) -> ChannelPolicy {
    match polarity {
        Polarity::DarkOnBright => ChannelPolicy::GreenOfRgb,
        Polarity::BrightOnDark => ChannelPolicy::Luminance,
    }
}

fn optional_mask(path: Option<&Path>) -> Result<Option<BinaryMask>> {
    path.map(load_mask).transpose()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::WriteFailure {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::ExtractFeatures {
            image,
            out,
            text,
            polarity,
        } => {
            let img = load_image(&image, channel_policy(polarity))?;
            let stack = build_stack::<f64>(&img, &FilterBank::new(polarity))?;
            if text {
                write_stack_text(&stack, &out)?;
            } else {
                write_stack(&stack, &out)?;
            }
            println!("wrote {} planes of {}x{} to {}", stack.planes().len(), stack.width(), stack.height(), out.display());
        }
        Command::Train {
            manifest,
            model_out,
            forest,
            conn,
        } => {
            let manifest = load_manifest(&manifest)?;
            let model = train_on_manifest(&manifest, &pipeline_config(Some(&forest), &conn)?)?;
            save_model(&model, &model_out)?;
            println!("trained {} trees on {} image(s), model at {}", model.trees().len(), manifest.train.len(), model_out.display());
        }
        Command::Seeds {
            image,
            fov,
            out,
            polarity,
        } => {
            let img = load_image(&image, channel_policy(polarity))?;
            let fov = optional_mask(fov.as_deref())?;
            let seeds = select_seeds(&img, &seed_frangi_config(polarity), fov.as_ref())?;
            if out.extension().is_some_and(|e| e == "txt") {
                let list: Vec<String> = seeds.pixels().iter().map(|(r, c)| format!("{r},{c}")).collect();
                write_text(&out, &(list.join(";") + "\n"))?;
            } else {
                save_mask(&BinaryMask::from_pixels(img.width(), img.height(), seeds.pixels())?, &out)?;
            }
            println!("{} seeds written to {}", seeds.len(), out.display());
        }
        Command::Segment {
            image,
            model,
            out_mask,
            out_scores,
            seed_list,
            fov,
            polarity,
            conn,
        } => {
            let img = load_image(&image, channel_policy(polarity))?;
            let seeds = seed_list.map(|s| SeedSet::parse(&s, img.dims())).transpose()?;
            let model = load_model(&model)?;
            let fov = optional_mask(fov.as_deref())?;
            let cfg = pipeline_config(None, &conn)?;
            let (seg, seeds) = segment_image(&img, fov.as_ref(), &model, polarity, &cfg, seeds)?;
            save_mask(&seg.mask, &out_mask)?;
            if let Some(p) = out_scores {
                save_scores(&seg.scores, p)?;
            }
            println!("{} vessel pixels grown from {} seeds", seg.mask.count(), seeds.len());
        }
        Command::Evaluate {
            pred,
            gt,
            fov,
            scores,
            out,
        } => {
            let pred_mask = load_mask(&pred)?;
            let gt = load_mask(&gt)?;
            let fov = optional_mask(fov.as_deref())?;
            let scores = scores.map(load_scores).transpose()?;
            let metrics = evaluate(&pred_mask, &gt, fov.as_ref(), scores.as_ref())?;
            if scores.is_some() {
                write_roc(&metrics.roc, out.with_extension("roc.csv"))?;
            }
            let id = pred.file_stem().map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned());
            println!("accuracy {:.6}", metrics.accuracy);
            write_report(&[ImageReport { id, metrics }], &out)?;
        }
        Command::Run {
            manifest,
            out_dir,
            forest,
            conn,
        } => {
            let manifest = load_manifest(&manifest)?;
            let (_, summary) = run_pipeline(&manifest, &pipeline_config(Some(&forest), &conn)?, &out_dir)?;
            let mean = summary.mean;
            println!(
                "{} test images, mean accuracy {:.6}, mean AUC {}",
                summary.reports.len(),
                mean.accuracy,
                mean.auc.map_or_else(|| "undefined".into(), |a| format!("{a:.6}"))
            );
        }
        Command::RankFeatures {
            model,
            manifest,
            out,
            sample_cap,
            seed,
            conn,
        } => {
            let model = load_model(&model)?;
            let manifest = load_manifest(&manifest)?;
            let cfg = PipelineConfig {
                sampling: Sampling::Cap { n: sample_cap, seed },
                ..pipeline_config(None, &conn)?
            };
            let samples = samples_for(&manifest, &manifest.test, &cfg)?;
            let ranked = permutation_importance(&model, &samples, &default_groups(), seed)?;
            let mut text = String::from("rank,group,importance\n");
            for (i, g) in ranked.iter().enumerate() {
                text += &format!("{},{},{:.6}\n", i + 1, g.name, g.importance);
            }
            write_text(&out, &text)?;
            println!("top group: {}", ranked[0].name);
        }
    }
    Ok(())
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Validation => 1,
        ErrorClass::Io => 2,
        ErrorClass::Internal => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
