mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "avmark", version, about = "Audio-visual watermark fusion toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
pub struct Overrides {
    /// Benchmark seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of videos to generate.
    #[arg(long)]
    pub videos: Option<usize>,
    /// Frames per generated video.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Validation/test split seed.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Share of videos used to fit calibration.
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// Fit calibration on the evaluated videos themselves.
    #[arg(long)]
    pub oracle_calibration: bool,
    /// Gate threshold on the mean visual score.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Use cross-correlation instead of labels to pick offsets.
    #[arg(long)]
    pub cross_correlation: bool,
    /// Run per-video work on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark: one score file per video plus a dataset manifest.
    Simulate {
        /// Run manifest (TOML); defaults apply when omitted.
        manifest: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run one pipeline variant over a dataset and write per-frame and per-video outputs.
    Fuse {
        manifest: Option<PathBuf>,
        /// Dataset directory or manifest written by `simulate`.
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// full, naive, visual_only, audio_only, offset_only, offset_gate.
        #[arg(long, default_value = "full")]
        variant: String,
        /// Preset name (jpeg-q23, h264-crf23, h264-crf28, mp3-32k) or stretch:A, compress:S, offset:D.
        /// Repeatable; replaces the manifest's conditions.
        #[arg(long = "distortion", short)]
        distortions: Vec<String>,
        /// Label for the condition given by --distortion.
        #[arg(long)]
        condition: Option<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score `*.frames.csv` files (with their `*.videos.csv` siblings) into a report.
    Evaluate {
        #[arg(required = true, value_name = "FRAMES")]
        runs: Vec<PathBuf>,
        #[arg(long, short)]
        manifest: Option<PathBuf>,
        /// Report file.
        #[arg(long, short, default_value = "report.csv")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a scripted table experiment and check its qualitative pattern.
    Reproduce {
        manifest: Option<PathBuf>,
        /// T1, T2, T3a, T3b, T4a or all.
        #[arg(long, default_value = "all")]
        table: String,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Attribute each video to a manipulation type from channel survival patterns.
    Attribute {
        manifest: Option<PathBuf>,
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long = "distortion", short)]
        distortions: Vec<String>,
        /// Fail (exit 1) when accuracy against known kinds falls below this.
        #[arg(long)]
        min_accuracy: Option<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Failure classes mapped to exit codes.
pub enum Outcome {
    Pass,
    AssertionFailed,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { manifest, out, overrides } => commands::simulate(manifest.as_deref(), out, &overrides),
        Command::Fuse {
            manifest,
            input,
            out,
            variant,
            distortions,
            condition,
            overrides,
        } => commands::fuse(
            manifest.as_deref(),
            &input,
            out,
            &variant,
            &distortions,
            condition,
            &overrides,
        ),
        Command::Evaluate {
            runs,
            manifest,
            out,
            overrides,
        } => commands::evaluate(&runs, manifest.as_deref(), &out, &overrides),
        Command::Reproduce {
            manifest,
            table,
            out,
            overrides,
        } => commands::reproduce(manifest.as_deref(), &table, out, &overrides),
        Command::Attribute {
            manifest,
            input,
            out,
            distortions,
            min_accuracy,
            overrides,
        } => commands::attribute(manifest.as_deref(), &input, out, &distortions, min_accuracy, &overrides),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::AssertionFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
