//! Collapsed spatiotemporal topic model.
//!
//! The model stores only sufficient statistics: topic-word counts, per-topic
//! totals, per-cell topic counts and the per-word labels. The topic mixture of
//! a cell and the word distribution of a topic are derived views over those
//! counts. A cell's context is the sum of its own topic counts and those of
//! its neighbors, so with an empty neighborhood each cell behaves like an LDA
//! document.

mod checkpoint;
mod fold_in;
mod sampler;

use std::collections::HashMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{neighbors, CellKey, GridBounds, NeighborhoodConfig};
use crate::labeling::{majority, Labeling};
use crate::seed::Rng;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use fold_in::{fold_in_label, DEFAULT_FOLD_IN_ITERATIONS};
pub use sampler::{pick_refinement_time, Budget, RefineReport, RefinementConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub topics: usize,
    pub vocab: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(topics: usize, vocab: usize, alpha: f64, beta: f64) -> Result<Self> {
        let p = ModelParams { topics, vocab, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics == 0 || self.topics > u32::MAX as usize {
            return Err(Error::Config(format!("topic count must be positive, got {}", self.topics)));
        }
        if self.vocab == 0 {
            return Err(Error::Config("vocabulary size must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) || !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!(
                "alpha and beta must be positive and finite, got {} and {}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Cell {
    pub key: CellKey,
    pub words: Vec<u32>,
    pub labels: Vec<u32>,
    pub counts: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct TopicModel {
    params: ModelParams,
    bounds: GridBounds,
    neighborhood: NeighborhoodConfig,
    /// `n_k^v`, laid out word-major: `topic_word[v * K + k]`.
    topic_word: Vec<u32>,
    topic_totals: Vec<u64>,
    /// `1 / (n_k + V * beta)`, kept in step with `topic_totals`.
    inv_denom: Vec<f64>,
    cells: Vec<Cell>,
    index: HashMap<CellKey, usize>,
    /// Cells observed at each timestep; entry `T - 1` holds `M_T`.
    timesteps: Vec<Vec<CellKey>>,
}

impl PartialEq for TopicModel {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.bounds == other.bounds
            && self.neighborhood == other.neighborhood
            && self.topic_word == other.topic_word
            && self.topic_totals == other.topic_totals
            && self.cells == other.cells
            && self.timesteps == other.timesteps
    }
}

impl TopicModel {
    pub fn new(params: ModelParams, bounds: GridBounds, neighborhood: NeighborhoodConfig) -> Result<Self> {
        params.validate()?;
        let k = params.topics;
        let vbeta = params.vocab as f64 * params.beta;
        Ok(TopicModel {
            params,
            bounds,
            neighborhood,
            topic_word: vec![0; params.vocab * k],
            topic_totals: vec![0; k],
            inv_denom: vec![1.0 / vbeta; k],
            cells: Vec::new(),
            index: HashMap::new(),
            timesteps: Vec::new(),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn topics(&self) -> usize {
        self.params.topics
    }

    pub fn vocab(&self) -> usize {
        self.params.vocab
    }

    pub fn bounds(&self) -> GridBounds {
        self.bounds
    }

    pub fn neighborhood(&self) -> NeighborhoodConfig {
        self.neighborhood
    }

    pub fn topic_word_count(&self, topic: usize, word: u32) -> u32 {
        self.topic_word[word as usize * self.params.topics + topic]
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    pub fn total_words(&self) -> u64 {
        self.topic_totals.iter().sum()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn contains_cell(&self, c: &CellKey) -> bool {
        self.index.contains_key(c)
    }

    /// Cell keys in insertion order.
    pub fn cell_keys(&self) -> impl Iterator<Item = CellKey> + '_ {
        self.cells.iter().map(|c| c.key)
    }

    pub fn cell_topic_counts(&self, c: &CellKey) -> Option<&[u32]> {
        self.cell(c).map(|cell| cell.counts.as_slice())
    }

    pub fn cell_words(&self, c: &CellKey) -> Option<&[u32]> {
        self.cell(c).map(|cell| cell.words.as_slice())
    }

    pub fn cell_labels(&self, c: &CellKey) -> Option<&[u32]> {
        self.cell(c).map(|cell| cell.labels.as_slice())
    }

    pub(crate) fn cell(&self, c: &CellKey) -> Option<&Cell> {
        self.index.get(c).map(|&i| &self.cells[i])
    }

    /// Number of timesteps recorded so far, i.e. the current `T`.
    pub fn timestep(&self) -> u32 {
        self.timesteps.len() as u32
    }

    /// Cells observed at timestep `t` (1-based).
    pub fn cells_at(&self, t: u32) -> &[CellKey] {
        t.checked_sub(1).and_then(|i| self.timesteps.get(i as usize)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Opens timestep `T + 1` whose refinement set is `cells`, returning the
    /// new `T`.
    pub fn push_timestep(&mut self, cells: Vec<CellKey>) -> u32 {
        self.timesteps.push(cells);
        self.timesteps.len() as u32
    }

    /// Appends `words` to cell `c`, each with a uniformly drawn initial label.
    pub fn add_observation(&mut self, c: CellKey, words: &[u32], rng: &mut Rng) -> Result<()> {
        let k = self.params.topics as u32;
        self.check_words(c, words)?;
        let labels: Vec<u32> = words.iter().map(|_| rng.random_range(0..k)).collect();
        self.insert_labeled(c, words, &labels);
        Ok(())
    }

    /// Appends words with explicit labels.
    pub fn add_labeled(&mut self, c: CellKey, words: &[u32], labels: &[u32]) -> Result<()> {
        if words.len() != labels.len() {
            return Err(Error::Config(format!("{} words but {} labels for cell {c}", words.len(), labels.len())));
        }
        self.check_words(c, words)?;
        if let Some(&z) = labels.iter().find(|&&z| z as usize >= self.params.topics) {
            return Err(Error::Config(format!("label {z} outside {} topics", self.params.topics)));
        }
        self.insert_labeled(c, words, labels);
        Ok(())
    }

    fn check_words(&self, c: CellKey, words: &[u32]) -> Result<()> {
        if !self.bounds.contains(&c) {
            return Err(Error::OutOfBounds(c));
        }
        if let Some(&w) = words.iter().find(|&&w| w as usize >= self.params.vocab) {
            return Err(Error::Vocabulary { word: w, vocab: self.params.vocab });
        }
        Ok(())
    }

    fn insert_labeled(&mut self, c: CellKey, words: &[u32], labels: &[u32]) {
        if words.is_empty() {
            return;
        }
        let k = self.params.topics;
        let idx = match self.index.get(&c) {
            Some(&i) => i,
            None => {
                self.cells.push(Cell { key: c, words: Vec::new(), labels: Vec::new(), counts: vec![0; k] });
                self.index.insert(c, self.cells.len() - 1);
                self.cells.len() - 1
            }
        };
        for (&w, &z) in words.iter().zip(labels) {
            let cell = &mut self.cells[idx];
            cell.words.push(w);
            cell.labels.push(z);
            cell.counts[z as usize] += 1;
            self.topic_word[w as usize * k + z as usize] += 1;
            self.adjust_total(z as usize, 1);
        }
    }

    #[inline]
    fn adjust_total(&mut self, topic: usize, delta: i64) {
        let t = &mut self.topic_totals[topic];
        *t = (*t as i64 + delta) as u64;
        self.inv_denom[topic] = 1.0 / (*t as f64 + self.params.vocab as f64 * self.params.beta);
    }

    /// Existing cells in `G(c)`: `c` itself followed by its neighbors.
    pub(crate) fn context_cells(&self, c: CellKey) -> Vec<usize> {
        std::iter::once(c)
            .chain(neighbors(c, self.neighborhood, self.bounds))
            .filter_map(|n| self.index.get(&n).copied())
            .collect()
    }

    /// `n_G^k` summed over `G(c)`, written into `out`.
    pub fn context_counts(&self, c: CellKey, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for i in self.context_cells(c) {
            for (o, &n) in out.iter_mut().zip(&self.cells[i].counts) {
                *o += n as f64;
            }
        }
    }

    /// Topic mixture around cell `c`: `(sum of G(c) counts) + alpha`, normalized.
    pub fn theta(&self, c: CellKey) -> Vec<f64> {
        let mut v = vec![0.0; self.params.topics];
        self.context_counts(c, &mut v);
        v.iter_mut().for_each(|x| *x += self.params.alpha);
        normalize(&mut v);
        v
    }

    /// Word distribution of topic `k`: `(n_k^v + beta) / (n_k + V beta)`.
    pub fn phi(&self, topic: usize) -> Vec<f64> {
        let inv = self.inv_denom[topic];
        (0..self.params.vocab)
            .map(|v| (self.topic_word[v * self.params.topics + topic] as f64 + self.params.beta) * inv)
            .collect()
    }

    /// `P(w | k)` for a single word.
    #[inline]
    pub fn word_prob(&self, topic: usize, word: u32) -> f64 {
        (self.topic_word[word as usize * self.params.topics + topic] as f64 + self.params.beta) * self.inv_denom[topic]
    }

    /// Posterior over the label of word `word` placed in cell `c`.
    /// `exclude` names the word's current label, which is removed from every
    /// count before evaluation; pass `None` for a word not in the model.
    pub fn gibbs_conditional(&self, word: u32, c: CellKey, exclude: Option<u32>) -> Vec<f64> {
        let k = self.params.topics;
        let mut context = vec![0.0; k];
        self.context_counts(c, &mut context);
        let row = &self.topic_word[word as usize * k..(word as usize + 1) * k];
        let mut word_counts: Vec<f64> = row.iter().map(|&n| n as f64).collect();
        let mut totals: Vec<f64> = self.topic_totals.iter().map(|&n| n as f64).collect();
        if let Some(z) = exclude {
            let z = z as usize;
            word_counts[z] -= 1.0;
            totals[z] -= 1.0;
            context[z] -= 1.0;
        }
        collapsed_conditional(&word_counts, &totals, &context, &self.params)
    }

    /// Majority label of every stored spatial cell. Cells at later timesteps
    /// fold onto their spatial position.
    pub fn majority_labels(&self) -> Labeling {
        let k = self.params.topics;
        let mut acc = vec![0u64; self.bounds.cell_count() * k];
        for cell in &self.cells {
            let base = self.bounds.index(&cell.key) * k;
            for (a, &n) in acc[base..base + k].iter_mut().zip(&cell.counts) {
                *a += n as u64;
            }
        }
        let labels = acc.chunks(k).map(majority).collect();
        Labeling::from_labels(GridBounds::new(self.bounds.width, self.bounds.height), labels, k)
    }

    /// Checks every count invariant; used by tests and checkpoint loading.
    pub fn check_consistency(&self) -> Result<()> {
        let k = self.params.topics;
        let mut tw = vec![0u32; self.topic_word.len()];
        let mut totals = vec![0u64; k];
        for cell in &self.cells {
            let mut counts = vec![0u32; k];
            for (&w, &z) in cell.words.iter().zip(&cell.labels) {
                counts[z as usize] += 1;
                tw[w as usize * k + z as usize] += 1;
                totals[z as usize] += 1;
            }
            if counts != cell.counts {
                return Err(Error::Config(format!("cell {} topic counts disagree with its labels", cell.key)));
            }
        }
        if tw != self.topic_word {
            return Err(Error::Config("topic-word counts disagree with labels".into()));
        }
        if totals != self.topic_totals {
            return Err(Error::Config("topic totals disagree with labels".into()));
        }
        Ok(())
    }
}

/// Normalized Gibbs conditional from raw counts. `word_counts[k]` is
/// `n_k^w`, `totals[k]` is `sum_v n_k^v` and `context[k]` is `n_G^k`, all
/// with the resampled word already excluded.
pub fn collapsed_conditional(word_counts: &[f64], totals: &[f64], context: &[f64], params: &ModelParams) -> Vec<f64> {
    let vbeta = params.vocab as f64 * params.beta;
    let ctx_total: f64 = context.iter().map(|n| n + params.alpha).sum();
    let mut p: Vec<f64> = word_counts
        .iter()
        .zip(totals)
        .zip(context)
        .map(|((&nw, &nk), &ng)| (nw + params.beta) / (nk + vbeta) * ((ng + params.alpha) / ctx_total))
        .collect();
    normalize(&mut p);
    p
}

pub(crate) fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

/// Index drawn from unnormalized cumulative weights.
#[inline]
pub(crate) fn draw_cumulative(cumulative: &[f64], rng: &mut Rng) -> usize {
    let total = *cumulative.last().expect("non-empty weights");
    let u = rng.random::<f64>() * total;
    // Linear scan: K is small and the weights are rebuilt per draw anyway.
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}
