//! Synthetic terrain maps with known ground truth.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use super::WordMap;
use crate::error::{Error, Result};
use crate::grid::{CellKey, GridBounds};
use crate::seed::RngSeed;
use crate::vocab::Vocabulary;

/// Terrain id for every cell of a grid, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub bounds: GridBounds,
    pub terrain: Vec<u32>,
}

/// Fully resolved generator input: one word distribution per terrain and the
/// spatial layout.
#[derive(Clone, Debug, PartialEq)]
pub struct TerrainSpec {
    pub vocab: usize,
    pub distributions: Vec<Vec<f64>>,
    pub layout: Layout,
    /// Mean words per cell; counts are Poisson.
    pub words_per_cell: f64,
}

impl TerrainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.distributions.is_empty() {
            return Err(Error::Config("at least one terrain is required".into()));
        }
        for (i, d) in self.distributions.iter().enumerate() {
            let s: f64 = d.iter().sum();
            if d.len() != self.vocab || d.iter().any(|&p| !(p >= 0.0)) || (s - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("terrain {i} is not a distribution over {} words", self.vocab)));
            }
        }
        if self.layout.terrain.len() != self.layout.bounds.cell_count() {
            return Err(Error::Config("layout does not cover the grid".into()));
        }
        if let Some(&t) = self.layout.terrain.iter().find(|&&t| t as usize >= self.distributions.len()) {
            return Err(Error::Config(format!("layout references unknown terrain {t}")));
        }
        if !(self.words_per_cell >= 0.0 && self.words_per_cell.is_finite()) {
            return Err(Error::Config("words_per_cell must be a nonnegative number".into()));
        }
        Ok(())
    }

    /// Fraction of cells assigned to each terrain.
    pub fn coverage(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.distributions.len()];
        for &t in &self.layout.terrain {
            c[t as usize] += 1.0;
        }
        let n = self.layout.terrain.len() as f64;
        c.iter_mut().for_each(|x| *x /= n);
        c
    }
}

/// Draws each cell's words i.i.d. from its terrain; ground truth is the
/// terrain id.
pub fn generate_synthetic_map(spec: &TerrainSpec, seed: RngSeed) -> Result<WordMap> {
    spec.validate()?;
    let mut rng = seed.rng();
    let samplers: Vec<WeightedIndex<f64>> = spec
        .distributions
        .iter()
        .map(|d| WeightedIndex::new(d).map_err(|e| Error::Config(format!("bad terrain distribution: {e}"))))
        .collect::<Result<_>>()?;
    let poisson = (spec.words_per_cell > 0.0)
        .then(|| Poisson::new(spec.words_per_cell).map_err(|e| Error::Config(e.to_string())))
        .transpose()?;
    let cells = spec
        .layout
        .terrain
        .iter()
        .map(|&t| {
            let n = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as usize);
            (0..n).map(|_| samplers[t as usize].sample(&mut rng) as u32).collect()
        })
        .collect();
    let labels = spec.layout.terrain.iter().map(|&t| Some(t)).collect();
    WordMap::new(spec.layout.bounds, Vocabulary::new(spec.vocab)?, cells)?.with_ground_truth(labels)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// A single terrain everywhere.
    Uniform,
    /// Equal-width vertical bands.
    Bands,
    /// Nearest-seed regions, seeds dealt round-robin to terrains.
    Voronoi,
    /// Voronoi background of all but the last terrain, crossed by a thin
    /// meandering trail of the last terrain.
    RareTrail,
}

/// Parametric description of a synthetic map family, resolved into a
/// [`TerrainSpec`] by a seed. This is what generator config files hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub family: Family,
    pub width: u32,
    pub height: u32,
    pub terrains: usize,
    pub vocab: usize,
    pub words_per_cell: f64,
    /// Distinct words in each terrain's private support.
    pub support: usize,
    /// Probability mass each terrain spends on a pool shared by all terrains.
    pub shared_mass: f64,
    /// Size of the shared pool.
    pub shared_words: usize,
    /// Zipf exponent of the first terrain's support; later terrains get
    /// flatter distributions.
    pub zipf: f64,
    pub regions_per_terrain: usize,
    pub trail_width: u32,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            family: Family::RareTrail,
            width: 64,
            height: 64,
            terrains: 4,
            vocab: 256,
            words_per_cell: 24.0,
            support: 48,
            shared_mass: 0.2,
            shared_words: 64,
            zipf: 1.0,
            regions_per_terrain: 2,
            trail_width: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("grid dimensions must be positive".into()));
        }
        if self.terrains == 0 {
            return Err(Error::Config("need at least one terrain".into()));
        }
        if self.family == Family::RareTrail && self.terrains < 2 {
            return Err(Error::Config("rare-trail needs a background terrain and a trail terrain".into()));
        }
        if self.support == 0 {
            return Err(Error::Config("support must be positive".into()));
        }
        let shared = if self.shared_mass > 0.0 { self.shared_words } else { 0 };
        if self.terrains * self.support + shared > self.vocab {
            return Err(Error::Config(format!(
                "{} terrains x {} words + {} shared words exceed vocabulary {}",
                self.terrains, self.support, shared, self.vocab
            )));
        }
        if !(0.0..1.0).contains(&self.shared_mass) {
            return Err(Error::Config("shared_mass must lie in [0, 1)".into()));
        }
        if self.shared_mass > 0.0 && self.shared_words == 0 {
            return Err(Error::Config("shared_mass needs a nonempty shared pool".into()));
        }
        if !(self.words_per_cell >= 0.0) || !(self.zipf >= 0.0) {
            return Err(Error::Config("words_per_cell and zipf must be nonnegative".into()));
        }
        if self.family == Family::RareTrail && (self.trail_width == 0 || self.trail_width > self.height) {
            return Err(Error::Config("trail width must be in 1..=height".into()));
        }
        if matches!(self.family, Family::Voronoi | Family::RareTrail) && self.regions_per_terrain == 0 {
            return Err(Error::Config("regions_per_terrain must be positive".into()));
        }
        Ok(())
    }

    pub fn bounds(&self) -> GridBounds {
        GridBounds::new(self.width, self.height)
    }

    /// Resolves distributions and layout. Word supports are disjoint blocks
    /// `[i*support, (i+1)*support)`; the shared pool sits right after them.
    pub fn build(&self, seed: RngSeed) -> Result<TerrainSpec> {
        self.validate()?;
        let mut rng = seed.derive(0x7e77a1).rng();
        let pool_start = self.terrains * self.support;
        let distributions = (0..self.terrains)
            .map(|i| {
                let mut d = vec![0.0; self.vocab];
                // Flatter (more complex) distributions for later terrains.
                let exponent = self.zipf / (1.0 + i as f64);
                let weights: Vec<f64> = (0..self.support).map(|j| 1.0 / (j as f64 + 1.0).powf(exponent)).collect();
                let total: f64 = weights.iter().sum();
                for (j, w) in weights.iter().enumerate() {
                    d[i * self.support + j] = (1.0 - self.shared_mass) * w / total;
                }
                if self.shared_mass > 0.0 {
                    for p in &mut d[pool_start..pool_start + self.shared_words] {
                        *p += self.shared_mass / self.shared_words as f64;
                    }
                }
                d
            })
            .collect();

        let bounds = self.bounds();
        let terrain = match self.family {
            Family::Uniform => vec![0; bounds.cell_count()],
            Family::Bands => {
                bounds.cells().map(|c| ((c.x as u64 * self.terrains as u64) / self.width as u64) as u32).collect()
            }
            Family::Voronoi => voronoi(bounds, self.terrains, self.regions_per_terrain, &mut rng),
            Family::RareTrail => {
                let mut t = voronoi(bounds, self.terrains - 1, self.regions_per_terrain, &mut rng);
                let trail = (self.terrains - 1) as u32;
                for c in trail_cells(bounds, self.trail_width, &mut rng) {
                    t[bounds.index(&c)] = trail;
                }
                t
            }
        };
        let spec = TerrainSpec {
            vocab: self.vocab,
            distributions,
            layout: Layout { bounds, terrain },
            words_per_cell: self.words_per_cell,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds the terrain spec and samples the map from one seed.
    pub fn generate(&self, seed: RngSeed) -> Result<WordMap> {
        let spec = self.build(seed)?;
        generate_synthetic_map(&spec, seed.derive(0x3a9))
    }
}

fn voronoi(bounds: GridBounds, terrains: usize, per_terrain: usize, rng: &mut crate::seed::Rng) -> Vec<u32> {
    let seeds: Vec<(f64, f64, u32)> = (0..terrains * per_terrain)
        .map(|i| {
            (
                rng.random_range(0.0..bounds.width as f64),
                rng.random_range(0.0..bounds.height as f64),
                (i % terrains) as u32,
            )
        })
        .collect();
    bounds
        .cells()
        .map(|c| {
            let (px, py) = (c.x as f64 + 0.5, c.y as f64 + 0.5);
            seeds
                .iter()
                .map(|&(sx, sy, t)| ((sx - px).powi(2) + (sy - py).powi(2), t))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map_or(0, |(_, t)| t)
        })
        .collect()
}

/// Meandering left-to-right band `width` cells tall; one vertical jog of at
/// most one cell per column.
fn trail_cells(bounds: GridBounds, width: u32, rng: &mut crate::seed::Rng) -> Vec<CellKey> {
    let max_top = (bounds.height - width) as i64;
    let mut top = rng.random_range(0..=max_top);
    let mut out = Vec::new();
    for x in 0..bounds.width {
        for dy in 0..width {
            out.push(CellKey::spatial(x, (top as u32) + dy));
        }
        let step: i64 = rng.random_range(-1..=1);
        top = (top + step).clamp(0, max_top);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_family_has_one_label() {
        let s = SyntheticSpec { family: Family::Uniform, width: 8, height: 8, terrains: 1, ..Default::default() };
        let map = s.generate(RngSeed(3)).unwrap();
        assert!(map.ground_truth().unwrap().iter().all(|&l| l == Some(0)));
    }

    #[test]
    fn disjoint_supports_are_separable() {
        let s = SyntheticSpec {
            family: Family::Voronoi,
            width: 16,
            height: 16,
            terrains: 3,
            shared_mass: 0.0,
            ..Default::default()
        };
        let map = s.generate(RngSeed(11)).unwrap();
        let gt = map.ground_truth().unwrap();
        for (words, label) in map.cells().iter().zip(gt) {
            // Classify by the support block of the most common word.
            let guess = words.iter().map(|&w| w as usize / s.support).max();
            if let Some(g) = guess {
                assert!(words.iter().all(|&w| w as usize / s.support == g));
                assert_eq!(Some(g as u32), *label);
            }
        }
    }

    #[test]
    fn default_rare_trail_is_sparse() {
        let s = SyntheticSpec::default();
        for seed in 0..10 {
            let spec = s.build(RngSeed(seed)).unwrap();
            let cov = spec.coverage();
            assert_eq!(cov.len(), 4);
            assert!(cov[3] <= 0.05 && cov[3] > 0.0, "trail coverage {}", cov[3]);
        }
    }

    #[test]
    fn trail_word_frequency_tracks_coverage() {
        // With disjoint supports the share of trail words matches the share of
        // trail cells up to Poisson noise.
        let s = SyntheticSpec { shared_mass: 0.0, ..Default::default() };
        let mut ratios = Vec::new();
        for seed in 0..10 {
            let spec = s.build(RngSeed(seed)).unwrap();
            let map = generate_synthetic_map(&spec, RngSeed(seed + 100)).unwrap();
            let trail_words = map.cells().iter().flatten().filter(|&&w| w as usize / s.support == 3).count();
            let frac = trail_words as f64 / map.total_words() as f64;
            let cov = spec.coverage()[3];
            // Binomial-ish sd of the fraction is well under 0.005 here.
            assert!((frac - cov).abs() < 0.005, "seed {seed}: {frac} vs {cov}");
            ratios.push(frac / cov);
        }
        let mean: f64 = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((mean - 1.0).abs() < 0.05);
    }

    #[test]
    fn total_words_near_rate() {
        let s = SyntheticSpec { width: 32, height: 32, words_per_cell: 10.0, ..Default::default() };
        let map = s.generate(RngSeed(5)).unwrap();
        let n = map.total_words() as f64;
        let expect = 1024.0 * 10.0;
        assert!((n - expect).abs() < 4.0 * expect.sqrt());
    }

    #[test]
    fn same_seed_same_map() {
        let s = SyntheticSpec::default();
        assert_eq!(s.generate(RngSeed(9)).unwrap(), s.generate(RngSeed(9)).unwrap());
        assert_ne!(s.generate(RngSeed(9)).unwrap(), s.generate(RngSeed(10)).unwrap());
    }

    #[test]
    fn invalid_specs() {
        assert!(SyntheticSpec { terrains: 10, support: 48, ..Default::default() }.validate().is_err());
        assert!(SyntheticSpec { terrains: 1, ..Default::default() }.validate().is_err());
        assert!(SyntheticSpec { shared_mass: 1.0, ..Default::default() }.validate().is_err());
    }
}
