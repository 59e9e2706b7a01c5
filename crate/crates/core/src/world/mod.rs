//! Word maps: the static worlds the robot explores.

mod codebook;
mod io;
mod synth;

use crate::error::{Error, Result};
use crate::grid::{CellKey, GridBounds};
use crate::labeling::Labeling;
use crate::vocab::Vocabulary;

pub use codebook::{read_pgm, tokenize_image, train_codebook, write_pgm, Codebook, GrayImage};
pub use io::{
    load_ground_truth, load_word_map, load_word_stream, parse_word_map, write_ground_truth, write_word_map,
    write_word_stream, Document, WordStream,
};
pub use synth::{generate_synthetic_map, Family, Layout, SyntheticSpec, TerrainSpec};

/// Grid of cells, each holding the words observed there.
#[derive(Clone, Debug, PartialEq)]
pub struct WordMap {
    bounds: GridBounds,
    vocab: Vocabulary,
    cells: Vec<Vec<u32>>,
    ground_truth: Option<Vec<Option<u32>>>,
}

impl WordMap {
    pub fn new(bounds: GridBounds, vocab: Vocabulary, cells: Vec<Vec<u32>>) -> Result<Self> {
        if bounds.width == 0 || bounds.height == 0 {
            return Err(Error::Config("map must have at least one cell".into()));
        }
        if cells.len() != bounds.cell_count() {
            return Err(Error::Config(format!(
                "{} cell entries for a {}x{} grid",
                cells.len(),
                bounds.width,
                bounds.height
            )));
        }
        for &w in cells.iter().flatten() {
            vocab.check(w)?;
        }
        Ok(WordMap { bounds: GridBounds::new(bounds.width, bounds.height), vocab, cells, ground_truth: None })
    }

    /// Attaches per-cell ground truth; every non-empty cell must be labeled.
    pub fn with_ground_truth(mut self, labels: Vec<Option<u32>>) -> Result<Self> {
        if labels.len() != self.cells.len() {
            return Err(Error::Config("ground truth does not match the grid".into()));
        }
        if let Some(i) = (0..labels.len()).find(|&i| labels[i].is_none() && !self.cells[i].is_empty()) {
            return Err(Error::Config(format!("ground truth misses non-empty cell {}", self.bounds.key_at(i))));
        }
        self.ground_truth = Some(labels);
        Ok(self)
    }

    pub fn bounds(&self) -> GridBounds {
        self.bounds
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Words per cell in row-major order.
    pub fn cells(&self) -> &[Vec<u32>] {
        &self.cells
    }

    pub fn ground_truth(&self) -> Option<&[Option<u32>]> {
        self.ground_truth.as_deref()
    }

    pub fn ground_truth_labeling(&self) -> Option<Labeling> {
        let gt = self.ground_truth.as_ref()?;
        let alphabet = gt.iter().flatten().max().map_or(0, |&m| m as usize + 1);
        Some(Labeling::from_labels(self.bounds, gt.clone(), alphabet))
    }

    pub fn total_words(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    /// Words in cell `c`; the time coordinate is ignored.
    pub fn observe(&self, c: CellKey) -> Result<&[u32]> {
        if c.x >= self.bounds.width || c.y >= self.bounds.height {
            return Err(Error::OutOfBounds(c));
        }
        Ok(&self.cells[self.bounds.index(&c)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observe_is_repeatable() {
        let b = GridBounds::new(2, 2);
        let map = WordMap::new(b, Vocabulary::new(3).unwrap(), vec![vec![0, 2], vec![], vec![1], vec![2]]).unwrap();
        assert_eq!(map.observe(CellKey::spatial(0, 0)).unwrap(), &[0, 2]);
        assert_eq!(map.observe(CellKey::spatial(0, 0)).unwrap(), &[0, 2]);
        assert!(map.observe(CellKey::spatial(1, 0)).unwrap().is_empty());
        assert!(matches!(map.observe(CellKey::spatial(2, 0)), Err(Error::OutOfBounds(_))));
        assert_eq!(map.total_words(), 4);
    }

    #[test]
    fn validation() {
        let b = GridBounds::new(1, 2);
        assert!(WordMap::new(b, Vocabulary::new(3).unwrap(), vec![vec![3], vec![]]).is_err());
        assert!(WordMap::new(b, Vocabulary::new(3).unwrap(), vec![vec![1]]).is_err());
        let map = WordMap::new(b, Vocabulary::new(3).unwrap(), vec![vec![1], vec![]]).unwrap();
        assert!(map.clone().with_ground_truth(vec![None, Some(1)]).is_err());
        assert!(map.with_ground_truth(vec![Some(0), None]).is_ok());
    }
}
