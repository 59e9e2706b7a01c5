use std::path::PathBuf;

use thiserror::Error;

use crate::grid::CellKey;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("word id {word} is outside the vocabulary of size {vocab}")]
    Vocabulary { word: u32, vocab: usize },

    #[error("cell {0} is outside the grid")]
    OutOfBounds(CellKey),

    #[error("point ({x}, {y}) lies outside the {width}x{height} map extent")]
    PointOutOfExtent { x: f64, y: f64, width: f64, height: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("no movement candidates from cell {0}")]
    NoCandidates(CellKey),

    #[error("labelings share no labeled cells")]
    EmptyIntersection,

    #[error("labelings are defined on different grids ({0}x{1} vs {2}x{3})")]
    GridMismatch(u32, u32, u32, u32),

    #[error("codebook training needs {needed} distinct patches, found {found}")]
    TooFewPatches { needed: usize, found: usize },

    #[error("image {width}x{height} is smaller than one {cell_width}px cell")]
    ImageTooSmall { width: u32, height: u32, cell_width: u32 },

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, msg: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
