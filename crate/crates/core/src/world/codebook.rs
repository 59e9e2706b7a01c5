//! Texture words from grayscale images: k-means over square patches, then
//! nearest-centroid quantization of every sampled pixel.

use std::collections::HashSet;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat};
use rand::seq::index::sample;
use rand::Rng as _;

use super::WordMap;
use crate::error::{Error, Result};
use crate::grid::{cells_along, GridBounds};
use crate::seed::{Rng, RngSeed};
use crate::vocab::Vocabulary;

pub use image::GrayImage;

/// Patches drawn per training run at most.
const MAX_TRAINING_PATCHES: usize = 20_000;
const KMEANS_ITERATIONS: usize = 25;

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub patch: u32,
    pub centroids: Vec<Vec<f32>>,
    /// Mean squared quantization error after each assignment pass.
    pub error_history: Vec<f64>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    /// Index of the closest centroid; ties go to the lower index.
    pub fn quantize(&self, patch: &[f32]) -> u32 {
        nearest(&self.centroids, patch).0 as u32
    }
}

fn dist2(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) as f64).powi(2)).sum()
}

fn nearest(centroids: &[Vec<f32>], p: &[f32]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(c, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn patch_at(img: &GrayImage, x: u32, y: u32, size: u32) -> Vec<f32> {
    let mut v = Vec::with_capacity((size * size) as usize);
    for dy in 0..size {
        for dx in 0..size {
            v.push(img.get_pixel(x + dx, y + dy).0[0] as f32 / 255.0);
        }
    }
    v
}

/// Seeded k-means (k-means++ initialization, fixed iteration count) over
/// patches sampled from `images`.
pub fn train_codebook(images: &[GrayImage], k: usize, patch: u32, seed: RngSeed) -> Result<Codebook> {
    if k == 0 || patch == 0 {
        return Err(Error::Config("codebook size and patch size must be positive".into()));
    }
    let mut rng = seed.rng();
    let mut patches = Vec::new();
    for img in images {
        if img.width() < patch || img.height() < patch {
            continue;
        }
        for y in 0..=img.height() - patch {
            for x in 0..=img.width() - patch {
                patches.push((img, x, y));
            }
        }
    }
    let chosen: Vec<Vec<f32>> = if patches.len() > MAX_TRAINING_PATCHES {
        let mut idx = sample(&mut rng, patches.len(), MAX_TRAINING_PATCHES).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| patches[i]).map(|(img, x, y)| patch_at(img, x, y, patch)).collect()
    } else {
        patches.iter().map(|&(img, x, y)| patch_at(img, x, y, patch)).collect()
    };
    let distinct: HashSet<Vec<u32>> = chosen.iter().map(|p| p.iter().map(|v| v.to_bits()).collect()).collect();
    if distinct.len() < k {
        return Err(Error::TooFewPatches { needed: k, found: distinct.len() });
    }

    let mut centroids = plus_plus_init(&chosen, k, &mut rng);
    let dim = (patch * patch) as usize;
    let mut error_history = Vec::with_capacity(KMEANS_ITERATIONS);
    let mut assign = vec![0usize; chosen.len()];
    for _ in 0..KMEANS_ITERATIONS {
        let mut err = 0.0;
        for (a, p) in assign.iter_mut().zip(&chosen) {
            let (i, d) = nearest(&centroids, p);
            *a = i;
            err += d;
        }
        error_history.push(err / chosen.len() as f64);
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assign.iter().zip(&chosen) {
            counts[a] += 1;
            for (s, &v) in sums[a].iter_mut().zip(p) {
                *s += v as f64;
            }
        }
        for (c, (s, &n)) in centroids.iter_mut().zip(sums.iter().zip(&counts)) {
            // An emptied cluster keeps its centroid.
            if n > 0 {
                *c = s.iter().map(|v| (v / n as f64) as f32).collect();
            }
        }
    }
    Ok(Codebook { patch, centroids, error_history })
}

fn plus_plus_init(points: &[Vec<f32>], k: usize, rng: &mut Rng) -> Vec<Vec<f32>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            d2.iter()
                .position(|&d| {
                    acc += d;
                    u < acc
                })
                .unwrap_or(points.len() - 1)
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Quantizes patches centered on every `stride`-th valid pixel (raster order)
/// and files each word under the cell containing the patch center.
pub fn tokenize_image(img: &GrayImage, codebook: &Codebook, cell_width: u32, stride: u32) -> Result<WordMap> {
    if cell_width == 0 || stride == 0 {
        return Err(Error::Config("cell width and stride must be positive".into()));
    }
    let (w, h) = img.dimensions();
    if w < cell_width || h < cell_width || w < codebook.patch || h < codebook.patch {
        return Err(Error::ImageTooSmall { width: w, height: h, cell_width });
    }
    let bounds = GridBounds::new(cells_along(w, cell_width), cells_along(h, cell_width));
    let mut cells = vec![Vec::new(); bounds.cell_count()];
    let half = codebook.patch / 2;
    let mut raster = 0u64;
    for y in 0..=h - codebook.patch {
        for x in 0..=w - codebook.patch {
            raster += 1;
            if !(raster - 1).is_multiple_of(stride as u64) {
                continue;
            }
            let word = codebook.quantize(&patch_at(img, x, y, codebook.patch));
            let (cx, cy) = ((x + half) / cell_width, (y + half) / cell_width);
            cells[(cy * bounds.width + cx) as usize].push(word);
        }
    }
    WordMap::new(bounds, Vocabulary::new(codebook.len())?.with_range("texton", 0..codebook.len() as u32)?, cells)
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(image::load_from_memory_with_format(&bytes, ImageFormat::Pnm)?.to_luma8())
}

/// Binary (P5) graymap.
pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    PnmEncoder::new(&mut buf).with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary)).write_image(
        img.as_raw(),
        img.width(),
        img.height(),
        ExtendedColorType::L8,
    )?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
