//! Resolved per-command settings. Each can be read from a TOML file given
//! with `--config`; command-line flags override file values.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use rost_core::explore::Policy;
use rost_core::model::{Budget, ModelParams, RefinementConfig, DEFAULT_FOLD_IN_ITERATIONS};
use rost_core::world::SyntheticSpec;
use rost_core::NeighborhoodConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    /// Refinement time per step in milliseconds; ignored when `draws` is set.
    pub budget_ms: u64,
    /// Fixed number of refinement draws per step.
    pub draws: Option<u32>,
    pub gamma: f64,
    pub spatial_radius: u32,
    pub temporal_depth: u32,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            topics: 64,
            alpha: 0.1,
            beta: 0.1,
            eta: 0.5,
            budget_ms: 200,
            draws: None,
            gamma: 1.0,
            spatial_radius: 1,
            temporal_depth: 1,
        }
    }
}

impl ModelSettings {
    pub fn params(&self, vocab: usize) -> CliResult<ModelParams> {
        Ok(ModelParams::new(self.topics, vocab, self.alpha, self.beta)?)
    }

    pub fn budget(&self) -> Budget {
        match self.draws {
            Some(n) => Budget::Draws(n),
            None => Budget::millis(self.budget_ms),
        }
    }

    pub fn refinement(&self) -> RefinementConfig {
        RefinementConfig { eta: self.eta, budget: self.budget(), iterations: 0 }
    }

    pub fn neighborhood(&self) -> NeighborhoodConfig {
        NeighborhoodConfig { spatial_radius: self.spatial_radius, temporal_depth: self.temporal_depth }
    }

    pub fn check_gamma(&self) -> CliResult<()> {
        if self.gamma > 0.0 && self.gamma <= 1.0 {
            Ok(())
        } else {
            Err(CliError::Config(format!("gamma must lie in (0, 1], got {}", self.gamma)))
        }
    }

    pub fn apply(&mut self, f: &ModelFlags) {
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = f.$field { self.$field = v; })* };
        }
        take!(topics, alpha, beta, eta, budget_ms, gamma);
        if let Some(r) = f.radius {
            self.spatial_radius = r;
        }
        if f.draws.is_some() {
            self.draws = f.draws;
        } else if f.budget_ms.is_some() {
            self.draws = None;
        }
    }
}

/// Model flags shared by the inference commands.
#[derive(Args, Clone, Debug, Default)]
pub struct ModelFlags {
    /// Number of topics K [default: 64]
    #[arg(long)]
    pub topics: Option<usize>,
    /// Dirichlet topic prior [default: 0.1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Dirichlet word prior [default: 0.1]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Refinement bias toward the newest timestep [default: 0.5]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Refinement time per step in milliseconds [default: 200]
    #[arg(long)]
    pub budget_ms: Option<u64>,
    /// Fixed refinement draws per step instead of a time budget
    #[arg(long)]
    pub draws: Option<u32>,
    /// Curiosity decay per revisit, in (0, 1] [default: 1, off]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Spatial neighborhood radius in cells [default: 1]
    #[arg(long)]
    pub radius: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSettings {
    pub spec: SyntheticSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExploreSettings {
    pub map: PathBuf,
    pub ground_truth: Option<PathBuf>,
    pub policy: Policy,
    pub steps: u32,
    /// Start cell `[x, y]`; drawn from the seed when absent.
    pub start: Option<[u32; 2]>,
    pub recompute_path_topics: bool,
    pub fold_in_iterations: u32,
    /// Pixels per cell side in the label image.
    pub scale: u32,
    pub model: ModelSettings,
}

impl Default for ExploreSettings {
    fn default() -> Self {
        ExploreSettings {
            map: PathBuf::new(),
            ground_truth: None,
            policy: Policy::TopicPerplexity,
            steps: 320,
            start: None,
            recompute_path_topics: false,
            fold_in_iterations: DEFAULT_FOLD_IN_ITERATIONS,
            scale: 4,
            model: ModelSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamSettings {
    pub input: PathBuf,
    pub model: ModelSettings,
}

impl Default for StreamSettings {
    fn default() -> Self {
        StreamSettings { input: PathBuf::new(), model: ModelSettings::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelSettings {
    pub map: PathBuf,
    pub checkpoint: PathBuf,
    pub ground_truth: Option<PathBuf>,
    pub iterations: u32,
    pub scale: u32,
}

impl Default for LabelSettings {
    fn default() -> Self {
        LabelSettings {
            map: PathBuf::new(),
            checkpoint: PathBuf::new(),
            ground_truth: None,
            iterations: DEFAULT_FOLD_IN_ITERATIONS,
            scale: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizeSettings {
    /// Images the codebook is trained on.
    pub train: Vec<PathBuf>,
    /// Image to tokenize.
    pub image: PathBuf,
    pub codebook_size: usize,
    pub patch: u32,
    pub cell_width: u32,
    pub stride: u32,
}

impl Default for TokenizeSettings {
    fn default() -> Self {
        TokenizeSettings {
            train: Vec::new(),
            image: PathBuf::new(),
            codebook_size: 1000,
            patch: 5,
            cell_width: 16,
            stride: 1,
        }
    }
}
