use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use onhscan::forest::ClassWeight;
use onhscan::phantom::Preset;
use onhscan::{Diagnosis, ForestParams};

#[derive(Debug, Parser)]
#[command(
    name = "onhscan",
    version,
    about = "OCT optic nerve head volumetry and classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Only print errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic phantom volumes.
    #[command(subcommand)]
    Phantom(PhantomCmd),
    /// Attenuation compensation of an intensity volume.
    Compensate(CompensateArgs),
    /// Append the Drusen and Swelling scores of one label volume to a CSV.
    Score(ScoreArgs),
    /// Train a random forest on a scores table.
    Train(TrainArgs),
    /// Predict classes for a scores table.
    Predict(PredictArgs),
    /// Segmentation overlap and classifier evaluation.
    #[command(subcommand)]
    Evaluate(EvaluateCmd),
    /// Three-cluster simulation with cross-validation and a 50/50 holdout.
    Repro(ReproArgs),
    /// Score and classify many label volumes in one run.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Subcommand)]
pub enum PhantomCmd {
    /// Write a label volume and its `.analytic` sidecar.
    Gen(PhantomGenArgs),
}

#[derive(Debug, Args)]
pub struct PhantomGenArgs {
    #[arg(long, required_unless_present = "spec", value_parser = parse_preset)]
    pub preset: Option<Preset>,
    /// TOML phantom spec; overrides `--preset`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Also write the forward-model intensity volume as `<out>_intensity`.
    #[arg(long)]
    pub render: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompensateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub contrast_exp: f64,
    #[arg(long, default_value_t = 12.0)]
    pub threshold_exp: f64,
    /// Keep raw compensated values instead of mapping each B-scan to [0, 1].
    #[arg(long)]
    pub no_rescale: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub eye_id: String,
    #[arg(long)]
    pub subject_id: String,
    #[arg(long, value_parser = parse_class)]
    pub true_class: Option<Diagnosis>,
    /// Relabel drusen islands smaller than N voxels before scoring.
    #[arg(long)]
    pub min_island: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightArg {
    None,
    Balanced,
}

#[derive(Debug, Args)]
pub struct ForestArgs {
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    /// Features drawn per split.
    #[arg(long, default_value_t = 1)]
    pub mtry: usize,
    #[arg(long, default_value_t = 1)]
    pub min_leaf: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub no_bootstrap: bool,
    #[arg(long, value_enum, default_value_t = WeightArg::None)]
    pub class_weight: WeightArg,
}

impl ForestArgs {
    pub fn params(&self, seed: u64) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            mtry: self.mtry,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            bootstrap: !self.no_bootstrap,
            seed,
            class_weight: match self.class_weight {
                WeightArg::None => ClassWeight::Uniform,
                WeightArg::Balanced => ClassWeight::Balanced,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[command(flatten)]
    pub forest: ForestArgs,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum EvaluateCmd {
    /// Per-class Dice and Jaccard between two label volumes.
    Dice {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Subject-grouped k-fold cross-validation.
    Cv {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// One subject-grouped train/test split.
    Holdout {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        train_fraction: f64,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Draw every class from the pooled distribution (null check, never gated).
    #[arg(long)]
    pub classes_collapsed: bool,
    /// Also write the simulated cohort as a scores table.
    #[arg(long)]
    pub cohort_out: Option<PathBuf>,
    #[command(flatten)]
    pub forest: ForestArgs,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Label volume stems; the file name becomes the eye and subject id.
    #[arg(long, num_args = 0..)]
    pub labels: Vec<PathBuf>,
    /// Model for predictions; without it only scores are written.
    #[arg(long, requires = "preds_out")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub min_island: Option<usize>,
    #[arg(long)]
    pub scores_out: PathBuf,
    #[arg(long)]
    pub preds_out: Option<PathBuf>,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: onhscan::Error| e.to_string())
}

fn parse_class(s: &str) -> Result<Diagnosis, String> {
    s.parse().map_err(|e: onhscan::Error| e.to_string())
}
