//! Curiosity-driven exploration over a static word map.
//!
//! Each step the robot observes its cell, folds the words into the topic
//! model, refines under the step's budget, then picks one of the four
//! spatially adjacent cells with probability proportional to a weight. Every
//! weight except the random walk's is divided by a repulsive potential
//! `sum_j n_j / d^2(g, c_j)` over previously visited cells.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{moves, CellKey, NeighborhoodConfig};
use crate::model::{ModelParams, RefinementConfig, TopicModel};
use crate::perplexity::{decayed, topic_perplexity, word_perplexity, PathTopicHistory};
use crate::seed::{Rng, RngSeed};
use crate::world::WordMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Policy {
    #[serde(rename = "random")]
    RandomWalk,
    #[serde(rename = "coverage")]
    StochasticCoverage,
    #[serde(rename = "wordppx")]
    WordPerplexity,
    #[serde(rename = "topicppx")]
    TopicPerplexity,
}

impl Policy {
    pub const ALL: [Policy; 4] =
        [Policy::RandomWalk, Policy::StochasticCoverage, Policy::WordPerplexity, Policy::TopicPerplexity];

    pub fn name(self) -> &'static str {
        match self {
            Policy::RandomWalk => "random",
            Policy::StochasticCoverage => "coverage",
            Policy::WordPerplexity => "wordppx",
            Policy::TopicPerplexity => "topicppx",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown policy `{s}` (random|coverage|wordppx|topicppx)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExplorationState {
    pub current: CellKey,
    pub visit_counts: BTreeMap<CellKey, u32>,
    pub path: Vec<CellKey>,
    pub path_topics: PathTopicHistory,
}

impl ExplorationState {
    pub fn start(cell: CellKey, topics: usize) -> Self {
        ExplorationState {
            current: cell,
            visit_counts: BTreeMap::from([(cell, 1)]),
            path: vec![cell],
            path_topics: PathTopicHistory::new(topics),
        }
    }

    pub fn visits(&self, c: &CellKey) -> u32 {
        self.visit_counts.get(c).copied().unwrap_or(0)
    }

    fn arrive(&mut self, c: CellKey) {
        self.current = c;
        self.path.push(c);
        *self.visit_counts.entry(c).or_insert(0) += 1;
    }
}

/// `sum_j n_j / d^2(g, c_j)` with `d^2` clamped below at 1.
pub fn repulsive_potential(g: CellKey, state: &ExplorationState) -> f64 {
    state.visit_counts.iter().map(|(c, &n)| n as f64 / g.dist2(c).max(1.0)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoringOptions {
    /// Curiosity decay per visit of the candidate; 1 disables it.
    pub gamma: f64,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        ScoringOptions { gamma: 1.0 }
    }
}

/// Unnormalized step weight of every candidate.
pub fn step_weights(
    policy: Policy,
    candidates: &[CellKey],
    state: &ExplorationState,
    model: &TopicModel,
    world: &WordMap,
    opts: &ScoringOptions,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let mut weights = Vec::with_capacity(candidates.len());
    for &g in candidates {
        let w = match policy {
            Policy::RandomWalk => 1.0,
            _ => {
                let score = match policy {
                    Policy::WordPerplexity => word_perplexity(world.observe(g)?, model, &state.path_topics),
                    Policy::TopicPerplexity => topic_perplexity(world.observe(g)?, model, g, &state.path_topics, rng),
                    _ => 1.0,
                };
                let score = decayed(score, opts.gamma, state.visits(&g));
                let potential = repulsive_potential(g, state);
                if potential > 0.0 {
                    score / potential
                } else {
                    score
                }
            }
        };
        weights.push(w);
    }
    if !weights.iter().any(|&w| w > 0.0 && w.is_finite()) || weights.iter().any(|w| !w.is_finite()) {
        warn!("degenerate step weights {weights:?}; falling back to uniform");
        weights.iter_mut().for_each(|w| *w = 1.0);
    }
    Ok(weights)
}

/// Index sampled proportionally to `weights`.
pub fn sample_weighted(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub from: CellKey,
    pub chosen: CellKey,
    pub chosen_weight: f64,
    pub candidates: Vec<(CellKey, f64)>,
}

/// Moves the robot one cell. The leaving cell's committed labels are folded
/// into the path topic history first (unless the caller recomputes it).
pub fn next_step(
    policy: Policy,
    state: &mut ExplorationState,
    model: &TopicModel,
    world: &WordMap,
    opts: &ScoringOptions,
    freeze_history: bool,
    rng: &mut Rng,
) -> Result<StepRecord> {
    let from = state.current;
    let candidates = moves(from, world.bounds());
    if candidates.is_empty() {
        return Err(Error::NoCandidates(from));
    }
    let weights = step_weights(policy, &candidates, state, model, world, opts, rng)?;
    let i = sample_weighted(&weights, rng);
    if freeze_history {
        if let Some(counts) = model.cell_topic_counts(&from) {
            state.path_topics.add_counts(counts);
        }
    }
    state.arrive(candidates[i]);
    Ok(StepRecord {
        from,
        chosen: candidates[i],
        chosen_weight: weights[i],
        candidates: candidates.into_iter().zip(weights).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig {
    pub policy: Policy,
    pub steps: u32,
    pub params: ModelParams,
    pub neighborhood: NeighborhoodConfig,
    pub refine: RefinementConfig,
    pub scoring: ScoringOptions,
    /// Rebuild the path topic history from current labels every step instead
    /// of freezing each cell's labels when the robot leaves it.
    pub recompute_path_topics: bool,
    /// Starting cell; drawn uniformly when absent.
    pub start: Option<CellKey>,
}

impl ExploreConfig {
    pub fn new(policy: Policy, steps: u32, params: ModelParams) -> Self {
        ExploreConfig {
            policy,
            steps,
            params,
            neighborhood: NeighborhoodConfig::default(),
            refine: RefinementConfig::default(),
            scoring: ScoringOptions::default(),
            recompute_path_topics: false,
            start: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExplorationRun {
    pub path: Vec<CellKey>,
    /// One record per move; `steps - 1` of them.
    pub moves: Vec<StepRecord>,
    pub model: TopicModel,
    /// Refinement draws performed at each step. Feeding it back as a replay
    /// schedule reproduces the run exactly.
    pub schedule: Vec<u32>,
    /// Refinement targets per step, for diagnostics.
    pub refine_targets: Vec<Vec<u32>>,
}

/// Walks `cfg.steps` cells of `world`. When `replay` is given, step `i` runs
/// exactly `replay[i]` refinement draws instead of consulting the budget.
pub fn run_exploration(
    world: &WordMap,
    cfg: &ExploreConfig,
    seed: RngSeed,
    replay: Option<&[u32]>,
) -> Result<ExplorationRun> {
    cfg.params.validate()?;
    cfg.refine.validate()?;
    if cfg.params.vocab < world.vocab().size() {
        return Err(Error::Config(format!(
            "model vocabulary {} is smaller than the map's {}",
            cfg.params.vocab,
            world.vocab().size()
        )));
    }
    if let Some(s) = replay {
        if s.len() != cfg.steps as usize {
            return Err(Error::Config(format!("replay schedule has {} entries for {} steps", s.len(), cfg.steps)));
        }
    }
    let bounds = world.bounds();
    let mut model = TopicModel::new(cfg.params, bounds.with_duration(1), cfg.neighborhood)?;
    let mut rng = seed.rng();
    let mut run = ExplorationRun {
        path: Vec::new(),
        moves: Vec::new(),
        model: model.clone(),
        schedule: Vec::new(),
        refine_targets: Vec::new(),
    };
    if cfg.steps == 0 {
        return Ok(run);
    }
    let start = match cfg.start {
        Some(c) if bounds.contains(&c) => c.flatten(),
        Some(c) => return Err(Error::OutOfBounds(c)),
        None => CellKey::spatial(rng.random_range(0..bounds.width), rng.random_range(0..bounds.height)),
    };
    let mut state = ExplorationState::start(start, cfg.params.topics);

    for step in 1..=cfg.steps {
        let here = state.current;
        if state.visits(&here) == 1 {
            model.add_observation(here, world.observe(here)?, &mut rng)?;
        }
        let now = model.push_timestep(vec![here]);
        let report = match replay {
            Some(s) => model.refine_draws(now, cfg.refine.eta, s[step as usize - 1], &mut rng),
            None => model.realtime_refine(now, &cfg.refine, &mut rng),
        };
        run.schedule.push(report.draws);
        run.refine_targets.push(report.targets);

        if step == cfg.steps {
            break;
        }
        if cfg.recompute_path_topics {
            state.path_topics.clear();
            for c in &state.path[..state.path.len() - 1] {
                if let Some(counts) = model.cell_topic_counts(c) {
                    state.path_topics.add_counts(counts);
                }
            }
            if let Some(counts) = model.cell_topic_counts(&here) {
                state.path_topics.add_counts(counts);
            }
        }
        let rec = next_step(cfg.policy, &mut state, &model, world, &cfg.scoring, !cfg.recompute_path_topics, &mut rng)?;
        run.moves.push(rec);
    }
    run.path = state.path;
    run.model = model;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridBounds;
    use crate::model::Budget;
    use crate::vocab::Vocabulary;

    fn blank_world(w: u32, h: u32) -> WordMap {
        WordMap::new(GridBounds::new(w, h), Vocabulary::new(4).unwrap(), vec![Vec::new(); (w * h) as usize]).unwrap()
    }

    fn cfg(policy: Policy, steps: u32) -> ExploreConfig {
        let mut c = ExploreConfig::new(policy, steps, ModelParams::new(4, 4, 0.1, 0.1).unwrap());
        c.refine.budget = Budget::Draws(2);
        c
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("brownian".parse::<Policy>().is_err());
    }

    #[test]
    fn potential_arithmetic() {
        let mut s = ExplorationState::start(CellKey::spatial(5, 5), 2);
        assert_eq!(repulsive_potential(CellKey::spatial(6, 5), &s), 1.0);
        assert_eq!(repulsive_potential(CellKey::spatial(5, 5), &s), 1.0);
        s.arrive(CellKey::spatial(5, 4));
        // Distances 1 and 2 from (5, 6): 1/1 + 1/4.
        assert_eq!(repulsive_potential(CellKey::spatial(5, 6), &s), 1.25);
        let empty = ExplorationState {
            current: CellKey::spatial(0, 0),
            visit_counts: BTreeMap::new(),
            path: vec![],
            path_topics: PathTopicHistory::new(2),
        };
        assert_eq!(repulsive_potential(CellKey::spatial(1, 1), &empty), 0.0);
    }

    #[test]
    fn coverage_prefers_forward() {
        let world = blank_world(10, 10);
        let m =
            TopicModel::new(ModelParams::new(2, 4, 0.1, 0.1).unwrap(), world.bounds(), NeighborhoodConfig::default())
                .unwrap();
        let mut s = ExplorationState::start(CellKey::spatial(4, 5), 2);
        s.arrive(CellKey::spatial(5, 5));
        let cands = [CellKey::spatial(6, 5), CellKey::spatial(4, 5)];
        let w = step_weights(
            Policy::StochasticCoverage,
            &cands,
            &s,
            &m,
            &world,
            &ScoringOptions::default(),
            &mut RngSeed(0).rng(),
        )
        .unwrap();
        assert!(w[0] > w[1]);
        let coverage_weight = 1.0 / (1.0 / 4.0 + 1.0);
        assert!((w[0] - coverage_weight).abs() < 1e-12);
        let rw =
            step_weights(Policy::RandomWalk, &cands, &s, &m, &world, &ScoringOptions::default(), &mut RngSeed(0).rng())
                .unwrap();
        assert_eq!(rw, vec![1.0, 1.0]);
    }

    #[test]
    fn weighted_sampling_frequency() {
        let mut rng = RngSeed(12).rng();
        let n = 100_000;
        let hits = (0..n).filter(|_| sample_weighted(&[3.0, 1.0], &mut rng) == 0).count();
        let p = hits as f64 / n as f64;
        // sd of the frequency is sqrt(0.75 * 0.25 / n) ~ 0.0014.
        assert!((p - 0.75).abs() < 0.007, "{p}");
        assert_eq!(sample_weighted(&[2.0], &mut rng), 0);
        let a: Vec<usize> = (0..50)
            .map({
                let mut r = RngSeed(3).rng();
                move |_| sample_weighted(&[1.0, 2.0, 5.0], &mut r)
            })
            .collect();
        let b: Vec<usize> = (0..50)
            .map({
                let mut r = RngSeed(3).rng();
                move |_| sample_weighted(&[10.0, 20.0, 50.0], &mut r)
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn single_cell_world_cannot_move() {
        let world = blank_world(1, 1);
        let err = run_exploration(&world, &cfg(Policy::RandomWalk, 2), RngSeed(0), None).unwrap_err();
        assert!(matches!(err, Error::NoCandidates(_)));
        let run = run_exploration(&world, &cfg(Policy::RandomWalk, 1), RngSeed(0), None).unwrap();
        assert_eq!(run.path.len(), 1);
    }

    #[test]
    fn two_cell_world_has_one_candidate() {
        let world = blank_world(2, 1);
        let run = run_exploration(&world, &cfg(Policy::RandomWalk, 5), RngSeed(3), None).unwrap();
        for w in run.path.windows(2) {
            assert_ne!(w[0], w[1]);
        }
    }

    #[test]
    fn zero_steps_is_empty() {
        let world = blank_world(4, 4);
        let run = run_exploration(&world, &cfg(Policy::TopicPerplexity, 0), RngSeed(0), None).unwrap();
        assert!(run.path.is_empty());
        assert_eq!(run.model.total_words(), 0);
    }

    #[test]
    fn degenerate_weights_fall_back_to_uniform() {
        let world = blank_world(4, 4);
        let m =
            TopicModel::new(ModelParams::new(2, 4, 0.1, 0.1).unwrap(), world.bounds(), NeighborhoodConfig::default())
                .unwrap();
        let s = ExplorationState::start(CellKey::spatial(1, 1), 2);
        let opts = ScoringOptions { gamma: 0.0 };
        let cands = [CellKey::spatial(1, 1), CellKey::spatial(1, 1)];
        let w = step_weights(Policy::StochasticCoverage, &cands, &s, &m, &world, &opts, &mut RngSeed(0).rng()).unwrap();
        assert_eq!(w, vec![1.0, 1.0]);
    }
}
