mod commands;
mod error;
mod manifest;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::settings::ModelFlags;
use rost_core::explore::Policy;
use rost_core::world::Family;

#[derive(Parser)]
#[command(name = "rost", version, about = "Realtime topic modeling and curiosity-driven exploration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Output directory
    #[arg(long, short)]
    pub out: PathBuf,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Settings file (TOML); flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic word map and its ground truth
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_family)]
        family: Option<Family>,
        #[arg(long)]
        width: Option<u32>,
        #[arg(long)]
        height: Option<u32>,
        #[arg(long)]
        terrains: Option<usize>,
    },
    /// Walk a word map with an exploration policy while learning topics
    Explore {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        /// random | coverage | wordppx | topicppx
        #[arg(long)]
        policy: Option<Policy>,
        #[arg(long)]
        steps: Option<u32>,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Realtime inference over a time-ordered word stream
    Stream {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Compare exploration policies by mutual information
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Restrict to these policies (repeatable)
        #[arg(long)]
        policy: Vec<Policy>,
        #[arg(long)]
        restarts: Option<u32>,
        /// Run cases on all cores
        #[arg(long)]
        parallel: bool,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Label a word map with a frozen model checkpoint
    Label {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<u32>,
    },
    /// Train a patch codebook and turn a PGM image into a word map
    Tokenize {
        #[command(flatten)]
        common: Common,
        /// Training image (repeatable); defaults to the tokenized image
        #[arg(long)]
        train: Vec<PathBuf>,
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long)]
        codebook_size: Option<usize>,
        #[arg(long)]
        patch: Option<u32>,
        #[arg(long)]
        cell_width: Option<u32>,
        #[arg(long)]
        stride: Option<u32>,
    },
    /// Repeat a recorded run from its manifest
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn parse_family(s: &str) -> Result<Family, String> {
    match s {
        "uniform" => Ok(Family::Uniform),
        "bands" => Ok(Family::Bands),
        "voronoi" => Ok(Family::Voronoi),
        "rare-trail" => Ok(Family::RareTrail),
        _ => Err(format!("unknown family `{s}` (uniform|bands|voronoi|rare-trail)")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { common, family, width, height, terrains } => {
            commands::generate(&common, family, width, height, terrains)
        }
        Command::Explore { common, map, ground_truth, policy, steps, model } => {
            commands::explore(&common, map, ground_truth, policy, steps, &model)
        }
        Command::Stream { common, input, model } => commands::stream(&common, input, &model),
        Command::Evaluate { common, policy, restarts, parallel, model } => {
            commands::evaluate(&common, policy, restarts, parallel, &model)
        }
        Command::Label { common, map, checkpoint, ground_truth, iterations } => {
            commands::label(&common, map, checkpoint, ground_truth, iterations)
        }
        Command::Tokenize { common, train, image, codebook_size, patch, cell_width, stride } => {
            commands::tokenize(&common, train, image, codebook_size, patch, cell_width, stride)
        }
        Command::Replay { manifest, out } => commands::replay(&manifest, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rost: {e}");
            e.exit_code()
        }
    }
}
