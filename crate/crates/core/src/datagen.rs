//! Synthetic ground truths and texture mosaics for training and testing.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::components::label_components;
use crate::error::{Error, Result};
use crate::grid::{Grid, Plane, SegmentationMap};
use crate::smooth::gaussian_blur;

pub const DEFAULT_MASK_SIGMA: f64 = 10.0;
pub const MAX_MASK_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpec {
    pub width: usize,
    pub height: usize,
    pub target_region_count: usize,
    pub sigma: f64,
    pub rng_seed: u64,
}

impl MaskSpec {
    pub fn new(width: usize, height: usize, target_region_count: usize, rng_seed: u64) -> Self {
        Self {
            width,
            height,
            target_region_count,
            sigma: DEFAULT_MASK_SIGMA,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("mask must be non-empty"));
        }
        if self.target_region_count < 2 {
            return Err(Error::invalid("a mask needs at least 2 regions"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("mask sigma must be positive"));
        }
        Ok(())
    }
}

/// An accepted random mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedMask {
    /// One class per connected region, numbered in raster order.
    pub regions: SegmentationMap,
    /// Binary phase (0 below the median, 1 above) of each region. Adjacent
    /// regions always have different phases.
    pub phases: Vec<u32>,
    pub attempts: usize,
}

pub fn gen_grayscale_mask(spec: &MaskSpec) -> Result<SegmentationMap> {
    gen_grayscale_mask_detailed(spec).map(|m| m.regions)
}

/// One rejection-sampling draw: smoothed Gaussian noise split at its median
/// into phases 0 and 1. Each attempt uses its own random stream.
pub fn median_phase_map(spec: &MaskSpec, attempt: u64) -> Result<Grid<u32>> {
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    rng.set_stream(attempt);
    let noise: Vec<f64> = (0..w * h).map(|_| rng.sample(StandardNormal)).collect();
    let (lo, hi) = noise
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };
    let scaled = Plane::from_vec(w, h, noise.iter().map(|v| (v - lo) / span).collect())?;
    let smooth = gaussian_blur(&scaled, spec.sigma);

    let mut sorted = smooth.as_slice().to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[(sorted.len() - 1) / 2];
    Ok(smooth.map(|&v| u32::from(v > median)))
}

/// Smoothed Gaussian noise thresholded at its median, resampled until the two
/// phases together form exactly `target_region_count` 4-connected regions.
pub fn gen_grayscale_mask_detailed(spec: &MaskSpec) -> Result<GeneratedMask> {
    spec.validate()?;
    for attempt in 0..MAX_MASK_ATTEMPTS {
        let phase = median_phase_map(spec, attempt as u64)?;
        let comps = label_components(&phase);
        if comps.count() == spec.target_region_count {
            let classes = comps.count() as u32;
            return Ok(GeneratedMask {
                regions: SegmentationMap::new(comps.ids, classes)?,
                phases: comps.classes,
                attempts: attempt + 1,
            });
        }
    }
    Err(Error::GenerationFailed {
        attempts: MAX_MASK_ATTEMPTS,
    })
}

/// Nearest-seed partition with seeds on distinct pixel centres, so every cell
/// owns at least its seed pixel. Cells get random classes, each class used at
/// least once.
pub fn gen_voronoi_mask(
    width: usize,
    height: usize,
    n_cells: usize,
    n_classes: usize,
    rng_seed: u64,
) -> Result<SegmentationMap> {
    if n_classes == 0 || n_cells < n_classes {
        return Err(Error::invalid(format!(
            "need n_cells >= n_classes >= 1, got {n_cells} cells and {n_classes} classes"
        )));
    }
    if n_cells > width * height {
        return Err(Error::invalid("more Voronoi cells than pixels"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let seeds: Vec<(f64, f64)> = rand::seq::index::sample(&mut rng, width * height, n_cells)
        .into_iter()
        .map(|p| ((p % width) as f64, (p / width) as f64))
        .collect();

    let mut cell_class: Vec<u32> = (0..n_cells)
        .map(|i| {
            if i < n_classes {
                i as u32
            } else {
                rng.random_range(0..n_classes as u32)
            }
        })
        .collect();
    cell_class.shuffle(&mut rng);

    let labels = Grid::from_fn(width, height, |x, y| {
        let (px, py) = (x as f64, y as f64);
        let mut best = (f64::INFINITY, 0);
        for (i, &(sx, sy)) in seeds.iter().enumerate() {
            let d = (px - sx).powi(2) + (py - sy).powi(2);
            if d < best.0 {
                best = (d, i);
            }
        }
        cell_class[best.1]
    });
    SegmentationMap::new(labels, n_classes as u32)
}

/// Fills each class of `mask` with the texture of the same index, sampled at
/// the same coordinates and tiled when the texture is smaller than the mask.
pub fn compose_mosaic<T: Clone>(mask: &SegmentationMap, textures: &[Grid<T>]) -> Result<Grid<T>> {
    if textures.len() < mask.classes() as usize {
        return Err(Error::invalid(format!(
            "{} textures for {} classes",
            textures.len(),
            mask.classes()
        )));
    }
    if textures.iter().any(Grid::is_empty) {
        return Err(Error::invalid("empty texture"));
    }
    Ok(Grid::from_fn(mask.width(), mask.height(), |x, y| {
        let t = &textures[mask.get(x, y) as usize];
        t.get(x % t.width(), y % t.height()).clone()
    }))
}
