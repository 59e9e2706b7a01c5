use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Word-id space `[0, size)` with optional named sub-ranges, e.g. feature
/// words followed by texture words.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    size: usize,
    ranges: Vec<(String, Range<u32>)>,
}

impl Vocabulary {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || size > u32::MAX as usize {
            return Err(Error::Config(format!("vocabulary size must be in 1..2^32, got {size}")));
        }
        Ok(Vocabulary { size, ranges: Vec::new() })
    }

    pub fn with_range(mut self, name: impl Into<String>, range: Range<u32>) -> Result<Self> {
        let name = name.into();
        if range.start >= range.end || range.end as usize > self.size {
            return Err(Error::Config(format!(
                "sub-range {name} {}..{} does not fit vocabulary of size {}",
                range.start, range.end, self.size
            )));
        }
        self.ranges.push((name, range));
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ranges(&self) -> &[(String, Range<u32>)] {
        &self.ranges
    }

    pub fn range(&self, name: &str) -> Option<Range<u32>> {
        self.ranges.iter().find(|(n, _)| n == name).map(|(_, r)| r.clone())
    }

    pub fn check(&self, word: u32) -> Result<()> {
        if (word as usize) < self.size {
            Ok(())
        } else {
            Err(Error::Vocabulary { word, vocab: self.size })
        }
    }
}
