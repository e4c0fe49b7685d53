mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "fruitnet", version, about = "Fruit image classification pipeline")]
struct Cli {
    /// Project config file (TOML). Flags override its values.
    #[arg(long, global = true, env = "FRUITS_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Whiten the background of every image under a directory and resize.
    ExtractBackground(ExtractArgs),
    /// Pack the train and test image trees into record shards.
    BuildRecords(BuildArgs),
    /// Train a network on the training shards.
    Train(TrainArgs),
    /// Evaluate a checkpoint on the test (or train) shards.
    Test(TestArgs),
    /// Classify a single image.
    Predict(PredictArgs),
    /// Write a small labelled synthetic corpus.
    GenSynthetic(SynthArgs),
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[arg(long)]
    pub input_dir: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
    /// RGB distance below which a neighbour joins the background.
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
    /// Output images are `size` x `size`.
    #[arg(long, default_value_t = 100)]
    pub size: usize,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long = "train_directory")]
    pub train_directory: Option<PathBuf>,
    #[arg(long = "validation_directory")]
    pub validation_directory: Option<PathBuf>,
    #[arg(long = "output_directory")]
    pub output_directory: Option<PathBuf>,
    #[arg(long = "labels_file")]
    pub labels_file: Option<PathBuf>,
    #[arg(long = "train_shards", default_value_t = 2)]
    pub train_shards: usize,
    #[arg(long = "test_shards", default_value_t = 2)]
    pub test_shards: usize,
    #[arg(long = "num_threads", default_value_t = 1)]
    pub num_threads: usize,
    /// Stored image size.
    #[arg(long, default_value_t = 100)]
    pub size: usize,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// gray, rgb, hsv, hsv_gray or hsv_gray_aug. Defaults to hsv_gray_aug,
    /// or to the checkpoint's scenario with --resume.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Row 1..10 of the network configuration table.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=10))]
    pub config_nr: Option<u8>,
    #[arg(long, default_value_t = 75_000)]
    pub iterations: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for the checkpoint and metrics. Defaults to the
    /// project's models directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Continue from the checkpoint in the output directory.
    #[arg(long)]
    pub resume: bool,
    #[arg(long, default_value_t = 50)]
    pub display_interval: u64,
    #[arg(long, default_value_t = 60)]
    pub batch_size: usize,
    /// Directory holding the training shards. Defaults to the data directory.
    #[arg(long)]
    pub shards: Option<PathBuf>,
    #[arg(long = "labels_file")]
    pub labels_file: Option<PathBuf>,
    /// Local response normalization after each pool.
    #[arg(long)]
    pub lrn: bool,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    /// Defaults to `model.ckpt` in the models directory.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Evaluate on the training shards instead of the test shards.
    #[arg(long)]
    pub use_train: bool,
    #[arg(long)]
    pub shards: Option<PathBuf>,
    /// Where to write the JSON report. Defaults next to the checkpoint.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 60)]
    pub batch_size: usize,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long = "image_path")]
    pub image_path: PathBuf,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Corpus root; receives `Training/`, `Test/` and `labels.txt`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 20)]
    pub train_per_class: usize,
    #[arg(long, default_value_t = 10)]
    pub test_per_class: usize,
    #[arg(long, default_value_t = 100)]
    pub size: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Leave an uneven off-white backdrop for extract-background to remove.
    #[arg(long)]
    pub raw_background: bool,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let project = config::ProjectConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::ExtractBackground(a) => commands::extract_background(&a),
        Command::BuildRecords(a) => commands::build_records(&project, &a),
        Command::Train(a) => commands::train(&project, &a),
        Command::Test(a) => commands::test(&project, &a),
        Command::Predict(a) => commands::predict(&project, &a),
        Command::GenSynthetic(a) => commands::gen_synthetic(&project, &a),
    }
}
