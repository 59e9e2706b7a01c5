use serde::{Deserialize, Serialize};

use crate::grid::{CellKey, GridBounds};

/// Per-cell label over a spatial grid; `None` marks an unlabeled (empty) cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    pub bounds: GridBounds,
    pub labels: Vec<Option<u32>>,
    /// Size of the label alphabet, e.g. the topic count.
    pub alphabet: usize,
}

impl Labeling {
    pub fn unlabeled(bounds: GridBounds, alphabet: usize) -> Self {
        Labeling { bounds, labels: vec![None; bounds.cell_count()], alphabet }
    }

    pub fn from_labels(bounds: GridBounds, labels: Vec<Option<u32>>, alphabet: usize) -> Self {
        assert_eq!(labels.len(), bounds.cell_count(), "labeling size must match the grid");
        Labeling { bounds, labels, alphabet }
    }

    pub fn get(&self, c: &CellKey) -> Option<u32> {
        self.labels[self.bounds.index(c)]
    }

    pub fn set(&mut self, c: &CellKey, label: Option<u32>) {
        let i = self.bounds.index(c);
        self.labels[i] = label;
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }
}

/// Most frequent label, ties broken toward the lowest index. `None` when
/// `counts` is all zero.
pub fn majority<T: Copy + Ord + Default>(counts: &[T]) -> Option<u32> {
    let mut best: Option<(usize, T)> = None;
    for (k, &n) in counts.iter().enumerate() {
        if n > T::default() && best.is_none_or(|(_, b)| n > b) {
            best = Some((k, n));
        }
    }
    best.map(|(k, _)| k as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_breaks_ties_low() {
        assert_eq!(majority(&[0u32, 3, 3, 1]), Some(1));
        assert_eq!(majority(&[2u32]), Some(0));
        assert_eq!(majority(&[0u32, 0]), None);
        assert_eq!(majority::<u32>(&[]), None);
    }
}
