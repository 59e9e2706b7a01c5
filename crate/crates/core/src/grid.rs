//! Spacetime cell decomposition and neighbor topology.
//!
//! Cells are half-open squares `[k*w, (k+1)*w)` in pixel space, stamped with
//! an integer timestep. In static-map mode every cell sits at `t = 0`, so the
//! temporal half of a neighborhood never resolves to an existing cell.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub x: u32,
    pub y: u32,
    pub t: u32,
}

impl CellKey {
    pub const fn new(x: u32, y: u32, t: u32) -> Self {
        CellKey { x, y, t }
    }

    pub const fn spatial(x: u32, y: u32) -> Self {
        CellKey { x, y, t: 0 }
    }

    /// Squared Euclidean distance in cell units, ignoring time.
    pub fn dist2(&self, other: &CellKey) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        dx * dx + dy * dy
    }

    /// Same spatial position at timestep zero.
    pub fn flatten(&self) -> CellKey {
        CellKey::spatial(self.x, self.y)
    }
}

/// Time-major, then row-major.
impl Ord for CellKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.t, self.y, self.x).cmp(&(other.t, other.y, other.x))
    }
}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.t)
    }
}

/// Grid dimensions in cells. `duration` bounds the time axis; `None` leaves
/// the future open, which is the streaming case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridBounds {
    pub width: u32,
    pub height: u32,
    pub duration: Option<u32>,
}

impl GridBounds {
    pub const fn new(width: u32, height: u32) -> Self {
        GridBounds { width, height, duration: None }
    }

    pub fn with_duration(mut self, duration: u32) -> Self {
        self.duration = Some(duration);
        self
    }

    pub fn contains(&self, c: &CellKey) -> bool {
        c.x < self.width && c.y < self.height && self.duration.is_none_or(|d| c.t < d)
    }

    pub fn cell_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Row-major index of the spatial position of `c`.
    pub fn index(&self, c: &CellKey) -> usize {
        c.y as usize * self.width as usize + c.x as usize
    }

    pub fn key_at(&self, index: usize) -> CellKey {
        let w = self.width as usize;
        CellKey::spatial((index % w) as u32, (index / w) as u32)
    }

    /// All spatial cells at `t = 0` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellKey> + '_ {
        (0..self.cell_count()).map(move |i| self.key_at(i))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodConfig {
    pub spatial_radius: u32,
    pub temporal_depth: u32,
}

impl Default for NeighborhoodConfig {
    fn default() -> Self {
        NeighborhoodConfig { spatial_radius: 1, temporal_depth: 1 }
    }
}

impl NeighborhoodConfig {
    pub const NONE: NeighborhoodConfig = NeighborhoodConfig { spatial_radius: 0, temporal_depth: 0 };
}

/// Cells within Manhattan distance `spatial_radius` at the same timestep,
/// followed by the same position up to `temporal_depth` steps back and
/// forward. `c` itself is excluded. Spatial neighbors come in row-major order,
/// temporal ones by ascending time.
pub fn neighbors(c: CellKey, cfg: NeighborhoodConfig, bounds: GridBounds) -> Vec<CellKey> {
    let mut out = Vec::new();
    let r = cfg.spatial_radius as i64;
    for dy in -r..=r {
        let rem = r - dy.abs();
        for dx in -rem..=rem {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (x, y) = (c.x as i64 + dx, c.y as i64 + dy);
            if x < 0 || y < 0 {
                continue;
            }
            let n = CellKey::new(x as u32, y as u32, c.t);
            if bounds.contains(&n) {
                out.push(n);
            }
        }
    }
    let d = cfg.temporal_depth as i64;
    for dt in -d..=d {
        if dt == 0 {
            continue;
        }
        let t = c.t as i64 + dt;
        if t < 0 {
            continue;
        }
        let n = CellKey::new(c.x, c.y, t as u32);
        if bounds.contains(&n) {
            out.push(n);
        }
    }
    out
}

/// The four spatially adjacent cells a robot can step into.
pub fn moves(c: CellKey, bounds: GridBounds) -> Vec<CellKey> {
    neighbors(c, NeighborhoodConfig { spatial_radius: 1, temporal_depth: 0 }, bounds)
}

/// Cell containing a continuous pixel position on a `extent.0 x extent.1` map.
pub fn cell_of(point: (f64, f64), cell_width: f64, t: u32, extent: (f64, f64)) -> Result<CellKey> {
    if !(cell_width > 0.0) {
        return Err(Error::Config(format!("cell width must be positive, got {cell_width}")));
    }
    let (x, y) = point;
    if !(x >= 0.0 && y >= 0.0 && x < extent.0 && y < extent.1) {
        return Err(Error::PointOutOfExtent { x, y, width: extent.0, height: extent.1 });
    }
    Ok(CellKey::new((x / cell_width).floor() as u32, (y / cell_width).floor() as u32, t))
}

/// Number of cells along one axis; a partial trailing cell counts.
pub fn cells_along(pixels: u32, cell_width: u32) -> u32 {
    pixels.div_ceil(cell_width)
}
