//! Perplexity of a candidate cell's words, in word space and in topic space,
//! relative to the topics seen along the path so far.

use serde::{Deserialize, Serialize};

use crate::grid::CellKey;
use crate::model::{draw_cumulative as draw, TopicModel};
use crate::seed::Rng;

/// Topic-label counts of every word observed along the path.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathTopicHistory {
    counts: Vec<u64>,
}

impl PathTopicHistory {
    pub fn new(topics: usize) -> Self {
        PathTopicHistory { counts: vec![0; topics] }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        PathTopicHistory { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Adds one cell's per-topic counts.
    pub fn add_counts(&mut self, counts: &[u32]) {
        for (c, &n) in self.counts.iter_mut().zip(counts) {
            *c += n as u64;
        }
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
    }
}

/// `P(k | path)`, smoothed: `(h_k + alpha) / (sum h + K alpha)`.
pub fn path_topic_distribution(history: &PathTopicHistory, alpha: f64) -> Vec<f64> {
    let k = history.counts.len();
    let denom = history.total() as f64 + k as f64 * alpha;
    history.counts.iter().map(|&h| (h as f64 + alpha) / denom).collect()
}

/// Inverse geometric mean of `sum_k P(w | k) P(k | path)` over `words`.
/// An empty cell scores 1.
pub fn word_perplexity(words: &[u32], model: &TopicModel, path: &PathTopicHistory) -> f64 {
    if words.is_empty() {
        return 1.0;
    }
    let mix = path_topic_distribution(path, model.params().alpha);
    let log_sum: f64 = words
        .iter()
        .map(|&w| {
            let p: f64 = mix.iter().enumerate().map(|(k, &pk)| model.word_prob(k, w) * pk).sum();
            p.ln()
        })
        .sum();
    (-log_sum / words.len() as f64).exp()
}

/// Samples a provisional label for each word from the Gibbs conditional at
/// cell `c` (committed counts, model untouched), then returns the inverse
/// geometric mean of `P(z | path)`. An empty cell scores 1.
pub fn topic_perplexity(words: &[u32], model: &TopicModel, c: CellKey, path: &PathTopicHistory, rng: &mut Rng) -> f64 {
    if words.is_empty() {
        return 1.0;
    }
    let k = model.topics();
    let alpha = model.params().alpha;
    let path_dist = path_topic_distribution(path, alpha);
    let mut context = vec![0.0; k];
    model.context_counts(c, &mut context);
    let mut cumulative = vec![0.0; k];
    let mut log_sum = 0.0;
    for &w in words {
        let mut acc = 0.0;
        for (t, cum) in cumulative.iter_mut().enumerate() {
            acc += model.word_prob(t, w) * (context[t] + alpha);
            *cum = acc;
        }
        let z = draw(&cumulative, rng);
        log_sum += path_dist[z].ln();
    }
    (-log_sum / words.len() as f64).exp()
}

/// Curiosity score attenuated by revisits: `score * gamma^visits`.
pub fn decayed(score: f64, gamma: f64, visits: u32) -> f64 {
    if gamma == 1.0 {
        score
    } else {
        score * gamma.powi(visits as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridBounds, NeighborhoodConfig};
    use crate::model::ModelParams;
    use crate::seed::RngSeed;
    use approx::assert_relative_eq;

    fn model(k: usize, v: usize, alpha: f64, beta: f64) -> TopicModel {
        TopicModel::new(
            ModelParams::new(k, v, alpha, beta).unwrap(),
            GridBounds::new(8, 8),
            NeighborhoodConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn path_distribution_arithmetic() {
        let p = path_topic_distribution(&PathTopicHistory::new(4), 0.1);
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let p = path_topic_distribution(&PathTopicHistory::from_counts(vec![10, 0]), 0.1);
        assert_relative_eq!(p[0], 10.1 / 10.2, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.1 / 10.2, epsilon = 1e-15);
        let q = path_topic_distribution(&PathTopicHistory::from_counts(vec![100, 0]), 1.0);
        assert_relative_eq!(q[0], p[0], epsilon = 1e-15);
    }

    #[test]
    fn uniform_topics_give_vocab_size() {
        let m = model(3, 17, 0.1, 0.1);
        let path = PathTopicHistory::from_counts(vec![4, 1, 0]);
        assert_relative_eq!(word_perplexity(&[0, 5, 16, 16], &m, &path), 17.0, epsilon = 1e-12);
    }

    #[test]
    fn certain_words_give_one() {
        // One topic, one word in the vocabulary: every mixture probability is 1.
        let m = model(1, 1, 0.1, 0.1);
        assert_relative_eq!(word_perplexity(&[0, 0, 0], &m, &PathTopicHistory::new(1)), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn half_probability_word_gives_two() {
        // beta tiny so phi_0 = (0.9, 0.1), phi_1 = (0.1, 0.9) up to 1e-9.
        let mut m = model(2, 2, 0.1, 1e-9);
        m.add_labeled(CellKey::spatial(0, 0), &[0; 9], &[0; 9]).unwrap();
        m.add_labeled(CellKey::spatial(0, 0), &[1], &[0]).unwrap();
        m.add_labeled(CellKey::spatial(5, 5), &[1; 9], &[1; 9]).unwrap();
        m.add_labeled(CellKey::spatial(5, 5), &[0], &[1]).unwrap();
        let even = PathTopicHistory::from_counts(vec![7, 7]);
        assert_relative_eq!(word_perplexity(&[0], &m, &even), 2.0, epsilon = 1e-8);
        assert_relative_eq!(word_perplexity(&[1, 0], &m, &even), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn empty_cells_are_neutral() {
        let m = model(3, 5, 0.1, 0.1);
        let h = PathTopicHistory::new(3);
        assert_eq!(word_perplexity(&[], &m, &h), 1.0);
        assert_eq!(topic_perplexity(&[], &m, CellKey::spatial(0, 0), &h, &mut RngSeed(0).rng()), 1.0);
    }

    #[test]
    fn uniform_history_gives_topic_count() {
        let mut m = model(4, 6, 0.1, 0.1);
        m.add_observation(CellKey::spatial(1, 1), &[0, 1, 2, 3, 4, 5], &mut RngSeed(1).rng()).unwrap();
        let h = PathTopicHistory::from_counts(vec![5, 5, 5, 5]);
        let mut rng = RngSeed(2).rng();
        for _ in 0..10 {
            let p = topic_perplexity(&[0, 3, 5], &m, CellKey::spatial(1, 2), &h, &mut rng);
            assert_relative_eq!(p, 4.0, epsilon = 1e-12);
        }
    }

    /// A model whose single word is owned by topic `owner` so firmly that the
    /// provisional label is (numerically) always `owner`.
    fn owned(k: usize, owner: u32, alpha: f64) -> TopicModel {
        let mut m = model(k, 2, alpha, 1e-12);
        m.add_labeled(CellKey::spatial(0, 0), &[0; 50], &[owner; 50]).unwrap();
        for t in 0..k as u32 {
            if t != owner {
                m.add_labeled(CellKey::spatial(7, 7), &[1], &[t]).unwrap();
            }
        }
        m
    }

    #[test]
    fn concentrated_history_and_labels() {
        let m = owned(2, 0, 0.1);
        let h = PathTopicHistory::from_counts(vec![20, 0]);
        let p = topic_perplexity(&[0, 0, 0], &m, CellKey::spatial(0, 0), &h, &mut RngSeed(3).rng());
        assert_relative_eq!(p, 20.2 / 20.1, epsilon = 1e-9);
    }

    #[test]
    fn rare_topic_cell() {
        // History (99, 1), alpha 0.1, all provisional labels on topic 2.
        let m = owned(2, 1, 0.1);
        let h = PathTopicHistory::from_counts(vec![99, 1]);
        let p = topic_perplexity(&[0, 0, 0, 0], &m, CellKey::spatial(0, 0), &h, &mut RngSeed(3).rng());
        assert_relative_eq!(p, 100.2 / 1.1, epsilon = 1e-9);
        assert!((p - 91.1).abs() < 0.05);
    }

    #[test]
    fn model_is_untouched() {
        let mut m = model(3, 4, 0.1, 0.1);
        m.add_observation(CellKey::spatial(2, 2), &[0, 1, 2], &mut RngSeed(1).rng()).unwrap();
        let before = m.clone();
        let h = PathTopicHistory::from_counts(vec![1, 2, 3]);
        topic_perplexity(&[0, 1, 3], &m, CellKey::spatial(2, 3), &h, &mut RngSeed(5).rng());
        word_perplexity(&[0, 1, 3], &m, &h);
        assert_eq!(m, before);
    }

    #[test]
    fn decay_multiplier() {
        assert_eq!(decayed(5.0, 1.0, 9), 5.0);
        assert_relative_eq!(decayed(5.0, 0.7, 2), 5.0 * 0.49, epsilon = 1e-15);
        assert_eq!(decayed(5.0, 0.7, 0), 5.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn scores_are_at_least_one_and_order_free(
                words in prop::collection::vec(0u32..6, 1..12),
                hist in prop::collection::vec(0u64..30, 3),
                seed in 0u64..500,
            ) {
                let mut m = model(3, 6, 0.1, 0.1);
                m.add_observation(CellKey::spatial(3, 3), &[0, 1, 2, 3, 4, 5, 5, 1], &mut RngSeed(seed).rng()).unwrap();
                m.batch_refine(3, &mut RngSeed(seed + 1).rng());
                let h = PathTopicHistory::from_counts(hist);
                let wp = word_perplexity(&words, &m, &h);
                let mut rev = words.clone();
                rev.reverse();
                prop_assert!(wp >= 1.0);
                prop_assert!((wp - word_perplexity(&rev, &m, &h)).abs() <= 1e-9 * wp);
                let tp = topic_perplexity(&words, &m, CellKey::spatial(3, 4), &h, &mut RngSeed(seed).rng());
                prop_assert!(tp >= 1.0);
            }
        }
    }
}
