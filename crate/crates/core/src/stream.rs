//! Realtime inference over a time-ordered stream of word documents.
//!
//! Each timestep's documents are scored against the topics seen so far,
//! then added to the model, which is refined under the step's budget. The
//! scores are the per-cell curiosity a robot would report while observing.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::grid::NeighborhoodConfig;
use crate::labeling::majority;
use crate::model::{ModelParams, RefinementConfig, TopicModel};
use crate::perplexity::{decayed, topic_perplexity, word_perplexity, PathTopicHistory};
use crate::seed::RngSeed;
use crate::world::WordStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamConfig {
    pub params: ModelParams,
    pub neighborhood: NeighborhoodConfig,
    pub refine: RefinementConfig,
    /// Curiosity decay per earlier timestep in which the same spatial cell
    /// was the most curious one.
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamRow {
    pub t: u32,
    pub x: u32,
    pub y: u32,
    /// Majority topic of the document after its timestep's refinement.
    pub label: Option<u32>,
    pub word_perplexity: f64,
    pub topic_perplexity: f64,
    pub curiosity: f64,
}

#[derive(Clone, Debug)]
pub struct StreamRun {
    pub rows: Vec<StreamRow>,
    pub model: TopicModel,
    /// Refinement draws per timestep.
    pub schedule: Vec<u32>,
    /// Number of refinement draws by age: 0 is the newest timestep.
    pub refine_ages: BTreeMap<u32, u64>,
}

pub fn run_stream(stream: &WordStream, cfg: &StreamConfig, seed: RngSeed, replay: Option<&[u32]>) -> Result<StreamRun> {
    cfg.params.validate()?;
    cfg.refine.validate()?;
    if !(cfg.gamma > 0.0 && cfg.gamma <= 1.0) {
        return Err(Error::Config(format!("gamma must lie in (0, 1], got {}", cfg.gamma)));
    }
    let steps = stream.timesteps();
    if let Some(s) = replay {
        if s.len() != steps.len() {
            return Err(Error::Config(format!(
                "replay schedule has {} entries for {} timesteps",
                s.len(),
                steps.len()
            )));
        }
    }
    let mut model = TopicModel::new(cfg.params, stream.bounds, cfg.neighborhood)?;
    let mut rng = seed.rng();
    let mut history = PathTopicHistory::new(cfg.params.topics);
    let mut most_curious: HashMap<(u32, u32), u32> = HashMap::new();
    let mut run =
        StreamRun { rows: Vec::new(), model: model.clone(), schedule: Vec::new(), refine_ages: BTreeMap::new() };

    for (i, (t, docs)) in steps.into_iter().enumerate() {
        let first_row = run.rows.len();
        for (c, words) in docs {
            let wp = word_perplexity(words, &model, &history);
            let tp = topic_perplexity(words, &model, *c, &history, &mut rng);
            let seen = most_curious.get(&(c.x, c.y)).copied().unwrap_or(0);
            run.rows.push(StreamRow {
                t,
                x: c.x,
                y: c.y,
                label: None,
                word_perplexity: wp,
                topic_perplexity: tp,
                curiosity: decayed(tp, cfg.gamma, seen),
            });
        }
        let top = run.rows[first_row..].iter().enumerate().fold(0, |best, (j, r)| {
            if r.curiosity > run.rows[first_row + best].curiosity {
                j
            } else {
                best
            }
        });
        let r = &run.rows[first_row + top];
        *most_curious.entry((r.x, r.y)).or_default() += 1;

        for (c, words) in docs {
            model.add_observation(*c, words, &mut rng)?;
        }
        let now = model.push_timestep(docs.iter().map(|d| d.0).collect());
        let report = match replay {
            Some(s) => model.refine_draws(now, cfg.refine.eta, s[i], &mut rng),
            None => model.realtime_refine(now, &cfg.refine, &mut rng),
        };
        run.schedule.push(report.draws);
        for target in report.targets {
            *run.refine_ages.entry(now - target).or_default() += 1;
        }
        for (row, (c, _)) in run.rows[first_row..].iter_mut().zip(docs) {
            if let Some(counts) = model.cell_topic_counts(c) {
                row.label = majority(counts);
                history.add_counts(counts);
            }
        }
    }
    run.model = model;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CellKey, GridBounds};
    use crate::model::Budget;
    use crate::vocab::Vocabulary;

    fn cfg(draws: u32) -> StreamConfig {
        StreamConfig {
            params: ModelParams::new(4, 8, 0.1, 0.1).unwrap(),
            neighborhood: NeighborhoodConfig::default(),
            refine: RefinementConfig { eta: 0.5, budget: Budget::Draws(draws), iterations: 0 },
            gamma: 1.0,
        }
    }

    fn stream(docs: Vec<(CellKey, Vec<u32>)>) -> WordStream {
        WordStream { bounds: GridBounds::new(4, 4), vocab: Vocabulary::new(8).unwrap(), documents: docs }
    }

    #[test]
    fn single_document_gives_one_row() {
        let s = stream(vec![(CellKey::new(1, 1, 0), vec![0, 1, 2])]);
        let run = run_stream(&s, &cfg(3), RngSeed(0), None).unwrap();
        assert_eq!(run.rows.len(), 1);
        // Nothing seen yet: uniform phi and uniform history.
        assert!((run.rows[0].word_perplexity - 8.0).abs() < 1e-12);
        assert!((run.rows[0].topic_perplexity - 4.0).abs() < 1e-12);
        assert!(run.rows[0].label.is_some());
        assert_eq!(run.refine_ages, BTreeMap::from([(0, 3)]));
    }

    #[test]
    fn repeated_top_cell_decays() {
        let docs = (0..3).map(|t| (CellKey::new(2, 2, t), vec![5, 6, 7])).collect();
        let mut c = cfg(2);
        c.gamma = 0.7;
        let run = run_stream(&stream(docs), &c, RngSeed(1), None).unwrap();
        for (i, r) in run.rows.iter().enumerate() {
            assert!((r.curiosity - r.topic_perplexity * 0.7f64.powi(i as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn replay_is_exact_and_checked() {
        let docs = (0..6).map(|t| (CellKey::new(t % 4, 1, t), vec![t % 8, (t + 3) % 8])).collect();
        let s = stream(docs);
        let a = run_stream(&s, &cfg(4), RngSeed(2), None).unwrap();
        let b = run_stream(&s, &cfg(4), RngSeed(2), Some(&a.schedule)).unwrap();
        assert_eq!(a.rows, b.rows);
        assert!(run_stream(&s, &cfg(4), RngSeed(2), Some(&[1])).is_err());
    }
}
