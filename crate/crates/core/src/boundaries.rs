//! Merging per-texture boundary sets into one partition shared by a whole
//! texture dictionary.
//!
//! The merge runs in five steps: detect a boundary set per spectrum, record
//! the position of the largest value on each of its supports, take the union
//! of all sets, collapse supports that hold none of the recorded maxima, and
//! finally collapse supports narrower than a threshold. Collapsing replaces
//! the two delimiters of a support by their midpoint; a delimiter that is an
//! axis end never moves, so the interior one is dropped instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{self, Axis, BoundarySet, ScaleSpaceConfig, Spectrum1D};

/// Duplicate boundaries closer than this collapse in a union.
pub const UNION_TOLERANCE: f64 = 1e-9;

/// Position of the largest spectrum value on each support of a boundary set.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximaSet {
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    /// Supports narrower than this (in axis units) are collapsed.
    pub min_width: f64,
}

impl MergeConfig {
    pub const RADIAL_DEFAULT: f64 = 0.2;
    pub const ANGULAR_DEFAULT: f64 = 0.07;

    pub fn radial() -> Self {
        Self {
            min_width: Self::RADIAL_DEFAULT,
        }
    }

    pub fn angular() -> Self {
        Self {
            min_width: Self::ANGULAR_DEFAULT,
        }
    }

    pub fn validate(&self, domain_max: f64) -> Result<()> {
        if !(self.min_width > 0.0 && self.min_width < domain_max) {
            return Err(Error::invalid(format!(
                "merge threshold {} must lie in (0, {domain_max})",
                self.min_width
            )));
        }
        Ok(())
    }
}

/// Argmax of the spectrum on every support of `bs`, ties toward the lower
/// position. A periodic spectrum also offers its first sample at `domain_max`.
pub fn local_maxima(spectrum: &Spectrum1D, bs: &BoundarySet) -> Result<MaximaSet> {
    if spectrum.axis() != bs.axis() || spectrum.domain_max() != bs.domain_max() {
        return Err(Error::invalid(
            "boundary set and spectrum describe different axes",
        ));
    }
    let rotated;
    let spectrum = if bs.origin() != 0.0 {
        rotated = spectrum.rotated(bs.origin());
        &rotated
    } else {
        spectrum
    };
    let samples = spectrum.samples();
    let mut candidates: Vec<(f64, f64)> = samples
        .iter()
        .enumerate()
        .map(|(i, &v)| (spectrum.position(i), v))
        .collect();
    if spectrum.axis().is_periodic() {
        candidates.push((spectrum.domain_max(), samples[0]));
    }

    let positions = bs
        .supports()
        .map(|(lo, hi)| {
            let mut best: Option<(f64, f64)> = None;
            for &(p, v) in &candidates {
                if p < lo || p > hi {
                    continue;
                }
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((p, v));
                }
            }
            best.map_or(0.5 * (lo + hi), |(p, _)| p)
        })
        .collect();
    Ok(MaximaSet { positions })
}

/// Sorted union; values within [`UNION_TOLERANCE`] of the previous kept value
/// are dropped.
pub fn union_boundaries(sets: &[BoundarySet]) -> Result<BoundarySet> {
    let first = sets
        .first()
        .ok_or_else(|| Error::invalid("union of an empty list of boundary sets"))?;
    if sets.iter().any(|s| {
        s.axis() != first.axis()
            || s.domain_max() != first.domain_max()
            || s.origin() != first.origin()
    }) {
        return Err(Error::invalid(
            "boundary sets must share axis, domain and origin",
        ));
    }
    let mut all: Vec<f64> = sets
        .iter()
        .flat_map(|s| s.boundaries().iter().copied())
        .collect();
    all.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(all.len());
    for b in all {
        if merged.last().is_none_or(|&last| b - last > UNION_TOLERANCE) {
            merged.push(b);
        }
    }
    // snap the ends so tolerance collapse never moves them
    merged[0] = 0.0;
    let dm = first.domain_max();
    if dm - *merged.last().unwrap() <= UNION_TOLERANCE {
        *merged.last_mut().unwrap() = dm;
    }
    Ok(BoundarySet::from_sorted_unchecked(
        merged,
        first.axis(),
        dm,
        first.origin(),
    ))
}

/// Collapses support `n` by the midpoint rule. Returns false when the set is
/// already `{0, domain_max}`.
fn collapse_support(b: &mut Vec<f64>, n: usize) -> bool {
    let last = b.len() - 1;
    match (n == 0, n + 1 == last) {
        (true, true) => false,
        (true, false) => {
            b.remove(1);
            true
        }
        (false, true) => {
            b.remove(n);
            true
        }
        (false, false) => {
            b[n] = 0.5 * (b[n] + b[n + 1]);
            b.remove(n + 1);
            true
        }
    }
}

/// Collapses, lowest first, every support that contains none of the given
/// maxima. The maxima stay fixed throughout.
pub fn prune_unsupported(bs: &BoundarySet, maxima: &[MaximaSet]) -> BoundarySet {
    let lambdas: Vec<f64> = maxima
        .iter()
        .flat_map(|m| m.positions.iter().copied())
        .collect();
    let mut b = bs.boundaries().to_vec();
    loop {
        let empty = b
            .windows(2)
            .position(|s| !lambdas.iter().any(|&l| l >= s[0] && l <= s[1]));
        match empty {
            Some(n) if collapse_support(&mut b, n) => {}
            _ => break,
        }
    }
    BoundarySet::from_sorted_unchecked(b, bs.axis(), bs.domain_max(), bs.origin())
}

/// Collapses, narrowest first (ties to the lowest), every support narrower
/// than `cfg.min_width`.
pub fn prune_narrow(bs: &BoundarySet, cfg: &MergeConfig) -> BoundarySet {
    let mut b = bs.boundaries().to_vec();
    loop {
        let mut narrowest: Option<(usize, f64)> = None;
        for (n, s) in b.windows(2).enumerate() {
            let width = s[1] - s[0];
            if width < cfg.min_width && narrowest.is_none_or(|(_, w)| width < w) {
                narrowest = Some((n, width));
            }
        }
        match narrowest {
            Some((n, _)) if collapse_support(&mut b, n) => {}
            _ => break,
        }
    }
    BoundarySet::from_sorted_unchecked(b, bs.axis(), bs.domain_max(), bs.origin())
}

/// Union followed by both pruning passes, for boundary sets and maxima that
/// are already known.
pub fn merge_detected(
    sets: &[BoundarySet],
    maxima: &[MaximaSet],
    cfg: &MergeConfig,
) -> Result<BoundarySet> {
    let union = union_boundaries(sets)?;
    cfg.validate(union.domain_max())?;
    let supported = prune_unsupported(&union, maxima);
    Ok(prune_narrow(&supported, cfg))
}

/// Full merge for a dictionary of spectra sharing one axis.
///
/// On the angular axis every set is first rotated so that the lowest detected
/// boundary over all spectra becomes the origin; the merge then runs on the
/// linear axis and the result keeps that origin.
pub fn merge_boundary_sets(
    spectra: &[Spectrum1D],
    cfg: &MergeConfig,
    sscfg: &ScaleSpaceConfig,
) -> Result<BoundarySet> {
    let first = spectra
        .first()
        .ok_or_else(|| Error::invalid("no spectra to merge"))?;
    let axis = first.axis();
    let dm = first.domain_max();
    if spectra
        .iter()
        .any(|s| s.axis() != axis || s.domain_max() != dm)
    {
        return Err(Error::invalid("spectra must share one axis"));
    }
    cfg.validate(dm)?;

    match axis {
        Axis::Radial => {
            let sets = spectra
                .iter()
                .map(|s| spectral::detect_boundaries(s, sscfg))
                .collect::<Result<Vec<_>>>()?;
            let maxima = spectra
                .iter()
                .zip(&sets)
                .map(|(s, b)| local_maxima(s, b))
                .collect::<Result<Vec<_>>>()?;
            merge_detected(&sets, &maxima, cfg)
        }
        Axis::Angular => {
            let minima = spectra
                .iter()
                .map(|s| spectral::detect_minima_positions(s, sscfg))
                .collect::<Result<Vec<_>>>()?;
            let origin = minima
                .iter()
                .flatten()
                .copied()
                .min_by(f64::total_cmp)
                .unwrap_or(0.0);

            let mut sets = Vec::with_capacity(spectra.len());
            let mut maxima = Vec::with_capacity(spectra.len());
            for (spectrum, positions) in spectra.iter().zip(&minima) {
                let rotated = spectrum.rotated(origin);
                let n = spectrum.len();
                let shift = (origin / spectrum.spacing()).round() as isize;
                let mut b: Vec<f64> = positions
                    .iter()
                    .map(|&p| {
                        let idx = (p / spectrum.spacing()).round() as isize;
                        rotated.position((idx - shift).rem_euclid(n as isize) as usize)
                    })
                    .filter(|&p| p > 0.0)
                    .collect();
                b.sort_by(f64::total_cmp);
                b.insert(0, 0.0);
                b.push(dm);
                let set = BoundarySet::from_sorted_unchecked(b, axis, dm, 0.0);
                maxima.push(local_maxima(&rotated, &set)?);
                sets.push(set);
            }
            let merged = merge_detected(&sets, &maxima, cfg)?;
            let origin = if merged.support_count() == 1 {
                0.0
            } else {
                origin
            };
            BoundarySet::with_origin(merged.boundaries().to_vec(), axis, dm, origin)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn set(b: &[f64]) -> BoundarySet {
        BoundarySet::new(b.to_vec(), Axis::Radial, PI).unwrap()
    }

    fn maxima(p: &[f64]) -> MaximaSet {
        MaximaSet {
            positions: p.to_vec(),
        }
    }

    /// 315 samples over [0, pi] so that 0.5, 1.3 and 2.0 fall near sample positions.
    fn spectrum_with_peaks(peaks: &[f64]) -> Spectrum1D {
        let n = 315;
        let s = (0..n)
            .map(|i| {
                let x = i as f64 * PI / (n - 1) as f64;
                peaks
                    .iter()
                    .map(|&p| (-(x - p).powi(2) / 0.01).exp())
                    .sum::<f64>()
            })
            .collect();
        Spectrum1D::new(s, Axis::Radial, PI).unwrap()
    }

    fn nearest_position(s: &Spectrum1D, p: f64) -> f64 {
        s.position((p / s.spacing()).round() as usize)
    }

    #[test]
    fn local_maxima_single_support() {
        let s = spectrum_with_peaks(&[1.3]);
        let m = local_maxima(&s, &set(&[0.0, PI])).unwrap();
        assert_eq!(m.positions, vec![nearest_position(&s, 1.3)]);
    }

    #[test]
    fn local_maxima_two_supports() {
        let s = spectrum_with_peaks(&[0.5, 2.0]);
        let m = local_maxima(&s, &set(&[0.0, 1.0, PI])).unwrap();
        // exhaustive scan of each support
        let scan = |lo: f64, hi: f64| {
            let mut best = (f64::NAN, f64::NEG_INFINITY);
            for (i, &v) in s.samples().iter().enumerate() {
                let p = s.position(i);
                if p >= lo && p <= hi && v > best.1 {
                    best = (p, v);
                }
            }
            best.0
        };
        assert_eq!(m.positions, vec![scan(0.0, 1.0), scan(1.0, PI)]);
        assert!((m.positions[0] - 0.5).abs() < 0.01);
        assert!((m.positions[1] - 2.0).abs() < 0.01);
    }

    #[test]
    fn local_maxima_tie_goes_low() {
        let s = Spectrum1D::new(vec![1.0; 16], Axis::Radial, PI).unwrap();
        let m = local_maxima(&s, &set(&[0.0, PI])).unwrap();
        assert_eq!(m.positions, vec![0.0]);
    }

    #[test]
    fn union_examples() {
        let u = union_boundaries(&[set(&[0.0, 1.0, PI]), set(&[0.0, 2.0, PI])]).unwrap();
        assert_eq!(u.boundaries(), &[0.0, 1.0, 2.0, PI]);
        let a = set(&[0.0, 1.0, 2.5, PI]);
        assert_eq!(union_boundaries(&[a.clone(), a.clone()]).unwrap(), a);
        let u = union_boundaries(&[set(&[0.0, 1.0, PI]), set(&[0.0, 1.0 + 1e-12, PI])]).unwrap();
        assert_eq!(u.boundaries(), &[0.0, 1.0, PI]);
        assert!(union_boundaries(&[]).is_err());
    }

    #[test]
    fn prune_unsupported_midpoint() {
        let out = prune_unsupported(&set(&[0.0, 1.0, 2.0, PI]), &[maxima(&[0.4, 2.5])]);
        assert_eq!(out.boundaries(), &[0.0, 1.5, PI]);
    }

    #[test]
    fn prune_unsupported_noop_and_endpoint() {
        let s = set(&[0.0, 1.0, 2.0, PI]);
        assert_eq!(prune_unsupported(&s, &[maxima(&[0.5, 1.5, 3.0])]), s);
        let out = prune_unsupported(&set(&[0.0, 0.3, PI]), &[maxima(&[1.0])]);
        assert_eq!(out.boundaries(), &[0.0, PI]);
    }

    #[test]
    fn prune_narrow_examples() {
        let cfg = MergeConfig { min_width: 0.2 };
        assert_eq!(
            prune_narrow(&set(&[0.0, 0.1, PI]), &cfg).boundaries(),
            &[0.0, PI]
        );
        assert_eq!(
            prune_narrow(&set(&[0.0, 1.0, 1.1, PI]), &cfg).boundaries(),
            &[0.0, 1.05, PI]
        );
        let wide = set(&[0.0, 1.0, 2.0, PI]);
        assert_eq!(prune_narrow(&wide, &cfg), wide);
    }

    #[test]
    fn merge_rejects_bad_config_and_empty_input() {
        let s = spectrum_with_peaks(&[1.0]);
        let ss = ScaleSpaceConfig::default();
        assert!(merge_boundary_sets(&[], &MergeConfig::radial(), &ss).is_err());
        assert!(merge_boundary_sets(
            std::slice::from_ref(&s),
            &MergeConfig { min_width: 0.0 },
            &ss
        )
        .is_err());
        assert!(merge_boundary_sets(&[s], &MergeConfig { min_width: 4.0 }, &ss).is_err());
    }
}
