use std::path::PathBuf;

use clap::{Parser, Subcommand};
use leafquant::cli::{cmd_analyze, cmd_synth, AnalyzeOptions};

#[derive(Parser)]
#[command(
    name = "leafquant",
    version,
    about = "Quantify diseased leaf area in UAV crop images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze <input_dir>/<region>/*.{png,jpg} and write per-image and per-region reports
    Analyze {
        input_dir: PathBuf,
        /// JSON file with optional "segmentation" and "calibration" sections
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write green/defect mask PNGs under <out>/masks/<region>/
        #[arg(long)]
        dump_masks: bool,
        /// Override segmentation.quality_min
        #[arg(long)]
        min_quality: Option<f64>,
    },
    /// Generate synthetic scenes with ground truth
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Analyze {
            input_dir,
            config,
            out,
            dump_masks,
            min_quality,
        } => cmd_analyze(&AnalyzeOptions {
            input_dir,
            config_path: config,
            out_dir: out,
            dump_masks,
            min_quality,
        }),
        Command::Synth { out, count, seed } => cmd_synth(&out, count, seed),
    };
    std::process::exit(code);
}
