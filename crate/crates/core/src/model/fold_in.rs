use rand::Rng as _;

use super::{draw_cumulative, TopicModel};
use crate::error::{Error, Result};
use crate::grid::neighbors;
use crate::labeling::{majority, Labeling};
use crate::seed::Rng;
use crate::world::WordMap;

pub const DEFAULT_FOLD_IN_ITERATIONS: u32 = 50;

/// Labels every cell of `map` with a frozen topic-word model. Only the query
/// map's cell-topic counts are sampled; `frozen` is never modified. Each
/// non-empty cell gets the majority label of its words after the final sweep.
pub fn fold_in_label(map: &WordMap, frozen: &TopicModel, iterations: u32, rng: &mut Rng) -> Result<Labeling> {
    let k = frozen.topics();
    let alpha = frozen.params().alpha;
    if map.vocab().size() > frozen.vocab() {
        if let Some(w) = map.cells().iter().flatten().copied().find(|&w| w as usize >= frozen.vocab()) {
            return Err(Error::Vocabulary { word: w, vocab: frozen.vocab() });
        }
    }

    // P(w | k) for every word id that occurs in the map.
    let vocab = frozen.vocab();
    let mut phi = vec![0.0; vocab * k];
    let mut seen = vec![false; vocab];
    for &w in map.cells().iter().flatten() {
        if !seen[w as usize] {
            seen[w as usize] = true;
            for t in 0..k {
                phi[w as usize * k + t] = frozen.word_prob(t, w);
            }
        }
    }

    let bounds = map.bounds();
    let static_bounds = bounds.with_duration(1);
    let hood: Vec<Vec<usize>> = bounds
        .cells()
        .map(|c| neighbors(c, frozen.neighborhood(), static_bounds).iter().map(|n| bounds.index(n)).collect())
        .collect();

    let cells = map.cells();
    let mut labels: Vec<Vec<u32>> =
        cells.iter().map(|words| words.iter().map(|_| rng.random_range(0..k as u32)).collect()).collect();
    let mut counts = vec![0u32; cells.len() * k];
    for (i, ls) in labels.iter().enumerate() {
        for &z in ls {
            counts[i * k + z as usize] += 1;
        }
    }

    let mut context = vec![0.0; k];
    let mut cumulative = vec![0.0; k];
    for _ in 0..iterations {
        for (i, words) in cells.iter().enumerate() {
            if words.is_empty() {
                continue;
            }
            for (t, ctx) in context.iter_mut().enumerate() {
                *ctx = counts[i * k + t] as f64 + hood[i].iter().map(|&j| counts[j * k + t] as f64).sum::<f64>();
            }
            for (j, &w) in words.iter().enumerate() {
                let old = labels[i][j] as usize;
                counts[i * k + old] -= 1;
                context[old] -= 1.0;
                let row = &phi[w as usize * k..(w as usize + 1) * k];
                let mut acc = 0.0;
                for t in 0..k {
                    acc += row[t] * (context[t] + alpha);
                    cumulative[t] = acc;
                }
                let new = draw_cumulative(&cumulative, rng);
                labels[i][j] = new as u32;
                counts[i * k + new] += 1;
                context[new] += 1.0;
            }
        }
    }

    let out = (0..cells.len()).map(|i| majority(&counts[i * k..(i + 1) * k])).collect();
    Ok(Labeling::from_labels(bounds, out, k))
}
