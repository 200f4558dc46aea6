//! Pseudo-polar spectra of an image and scale-space boundary detection on them.
//!
//! Frequencies are measured in the normalized convention where the radial
//! axis spans `[0, pi]` and the angular axis spans the half-plane
//! `theta in [-pi/2, pi/2)`, stored shifted as `t = theta + pi/2 in [0, pi)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Plane;
use crate::smooth::{convolve1d, gaussian_kernel, Border};

/// Number of angular bins over the half-plane.
pub const ANGULAR_BINS: usize = 360;

pub const MIN_SPECTRUM_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Radial,
    Angular,
}

impl Axis {
    /// The angular axis wraps around: `t = 0` and `t = pi` are the same direction.
    pub fn is_periodic(self) -> bool {
        matches!(self, Axis::Angular)
    }
}

/// Non-negative 1D magnitude profile sampled uniformly over `[0, domain_max]`.
///
/// Radial samples include both endpoints; angular samples cover `[0, domain_max)`
/// because the last bin wraps onto the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum1D {
    samples: Vec<f64>,
    axis: Axis,
    domain_max: f64,
}

impl Spectrum1D {
    pub fn new(samples: Vec<f64>, axis: Axis, domain_max: f64) -> Result<Self> {
        if samples.len() < MIN_SPECTRUM_LEN {
            return Err(Error::invalid(format!(
                "spectrum needs at least {MIN_SPECTRUM_LEN} samples, got {}",
                samples.len()
            )));
        }
        if !(domain_max.is_finite() && domain_max > 0.0) {
            return Err(Error::invalid("domain_max must be positive"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectrum"));
        }
        if samples.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("spectrum samples must be non-negative"));
        }
        Ok(Self {
            samples,
            axis,
            domain_max,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distance between consecutive samples in axis units.
    pub fn spacing(&self) -> f64 {
        match self.axis {
            Axis::Radial => self.domain_max / (self.samples.len() - 1) as f64,
            Axis::Angular => self.domain_max / self.samples.len() as f64,
        }
    }

    pub fn position(&self, index: usize) -> f64 {
        index as f64 * self.spacing()
    }

    /// Circularly shifts an angular spectrum so that axis position `origin`
    /// becomes the new zero (rounded to the nearest sample).
    pub fn rotated(&self, origin: f64) -> Self {
        let n = self.samples.len();
        let shift = ((origin / self.spacing()).round() as isize).rem_euclid(n as isize) as usize;
        let samples = (0..n).map(|i| self.samples[(i + shift) % n]).collect();
        Self {
            samples,
            axis: self.axis,
            domain_max: self.domain_max,
        }
    }
}

/// Radial and angular magnitude profiles of the 2D spectrum of `image`.
///
/// Each Cartesian FFT sample votes into its nearest radial bin and nearest
/// angular bin; bins hold the mean magnitude of their votes. Samples beyond
/// the inscribed Nyquist circle are ignored radially, DC is ignored angularly.
/// Bins that receive no vote are filled by linear interpolation from their
/// neighbours.
pub fn polar_spectra(image: &Plane) -> Result<(Spectrum1D, Spectrum1D)> {
    let (w, h) = image.dims();
    if w < 8 || h < 8 {
        return Err(Error::invalid(format!(
            "image must be at least 8x8 for spectral analysis, got {w}x{h}"
        )));
    }
    if image.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("image"));
    }
    let spectrum = fft::forward_real(image.as_slice(), w, h);
    let nyquist = (w.min(h) as f64) / 2.0;
    let radial_bins = w.min(h) / 2;

    let mut radial_sum = vec![0.0; radial_bins];
    let mut radial_count = vec![0usize; radial_bins];
    let mut angular_sum = vec![0.0; ANGULAR_BINS];
    let mut angular_count = vec![0usize; ANGULAR_BINS];

    for ky in 0..h {
        for kx in 0..w {
            let mag = spectrum[ky * w + kx].norm();
            let (fx, fy) = fft::grid_frequency(kx, ky, w, h);
            let radius = PI * fx.hypot(fy) / nyquist;
            if radius <= PI {
                let bin = (radius / PI * (radial_bins - 1) as f64).round() as usize;
                radial_sum[bin] += mag;
                radial_count[bin] += 1;
            }
            if kx != 0 || ky != 0 {
                let t = (fy.atan2(fx) + PI / 2.0).rem_euclid(PI);
                let bin = (t / PI * ANGULAR_BINS as f64).round() as usize % ANGULAR_BINS;
                angular_sum[bin] += mag;
                angular_count[bin] += 1;
            }
        }
    }

    let radial = fill_empty_bins(&radial_sum, &radial_count, false);
    let angular = fill_empty_bins(&angular_sum, &angular_count, true);
    Ok((
        Spectrum1D::new(radial, Axis::Radial, PI)?,
        Spectrum1D::new(angular, Axis::Angular, PI)?,
    ))
}

fn fill_empty_bins(sum: &[f64], count: &[usize], periodic: bool) -> Vec<f64> {
    let n = sum.len();
    let filled: Vec<usize> = (0..n).filter(|&i| count[i] > 0).collect();
    let mut out = vec![0.0; n];
    if filled.is_empty() {
        return out;
    }
    for &i in &filled {
        out[i] = sum[i] / count[i] as f64;
    }
    for i in 0..n {
        if count[i] > 0 {
            continue;
        }
        // nearest filled bins on each side
        let next = filled.iter().copied().find(|&j| j > i);
        let prev = filled.iter().rev().copied().find(|&j| j < i);
        let (lo, hi) = match (prev, next, periodic) {
            (Some(p), Some(q), _) => (p as isize, q as isize),
            (None, Some(q), true) => (*filled.last().unwrap() as isize - n as isize, q as isize),
            (Some(p), None, true) => (p as isize, filled[0] as isize + n as isize),
            (None, Some(q), false) => (q as isize, q as isize),
            (Some(p), None, false) => (p as isize, p as isize),
            (None, None, _) => unreachable!(),
        };
        let vlo = out[lo.rem_euclid(n as isize) as usize];
        let vhi = out[hi.rem_euclid(n as isize) as usize];
        out[i] = if hi == lo {
            vlo
        } else {
            let a = (i as isize - lo) as f64 / (hi - lo) as f64;
            vlo + a * (vhi - vlo)
        };
    }
    out
}

/// How the persistence threshold separating meaningful minima is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdRule {
    /// Otsu's two-class split of the lifetime histogram.
    Otsu,
    /// Keep minima living strictly longer than this many steps.
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpaceConfig {
    /// Variance added by each smoothing iteration (kernel std is `sqrt(step)`).
    pub step: f64,
    pub max_scale_steps: usize,
    pub threshold: ThresholdRule,
}

impl Default for ScaleSpaceConfig {
    fn default() -> Self {
        Self {
            step: 0.5,
            max_scale_steps: 2000,
            threshold: ThresholdRule::Otsu,
        }
    }
}

impl ScaleSpaceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::invalid("scale-space step must be positive"));
        }
        if self.max_scale_steps < 2 {
            return Err(Error::invalid("max_scale_steps must be at least 2"));
        }
        Ok(())
    }
}

/// Ordered partition boundaries of one axis.
///
/// Always starts at 0 and ends at `domain_max`. On the angular axis the
/// values are relative to `origin`: boundary `b` sits at axis position
/// `(origin + b) mod domain_max`, which lets a partition whose sectors
/// straddle the wrap-around be stored as a plain increasing list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBoundarySet")]
pub struct BoundarySet {
    boundaries: Vec<f64>,
    axis: Axis,
    domain_max: f64,
    #[serde(default)]
    origin: f64,
}

#[derive(Deserialize)]
struct RawBoundarySet {
    boundaries: Vec<f64>,
    axis: Axis,
    domain_max: f64,
    #[serde(default)]
    origin: f64,
}

impl TryFrom<RawBoundarySet> for BoundarySet {
    type Error = Error;

    fn try_from(r: RawBoundarySet) -> Result<Self> {
        Self::with_origin(r.boundaries, r.axis, r.domain_max, r.origin)
    }
}

impl BoundarySet {
    pub fn new(boundaries: Vec<f64>, axis: Axis, domain_max: f64) -> Result<Self> {
        Self::with_origin(boundaries, axis, domain_max, 0.0)
    }

    pub fn with_origin(
        boundaries: Vec<f64>,
        axis: Axis,
        domain_max: f64,
        origin: f64,
    ) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::invalid("a boundary set needs at least 2 elements"));
        }
        if boundaries.iter().any(|b| !b.is_finite()) || !origin.is_finite() {
            return Err(Error::NonFinite("boundary set"));
        }
        if boundaries[0] != 0.0 || *boundaries.last().unwrap() != domain_max {
            return Err(Error::invalid(format!(
                "boundary set must start at 0 and end at {domain_max}"
            )));
        }
        if boundaries.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::invalid("boundaries must be strictly increasing"));
        }
        if origin != 0.0 && !axis.is_periodic() {
            return Err(Error::invalid("only the angular axis can have an origin"));
        }
        Ok(Self {
            boundaries,
            axis,
            domain_max,
            origin,
        })
    }

    /// `{0, domain_max}`: a single support.
    pub fn trivial(axis: Axis, domain_max: f64) -> Self {
        Self {
            boundaries: vec![0.0, domain_max],
            axis,
            domain_max,
            origin: 0.0,
        }
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Number of supports between consecutive boundaries.
    pub fn support_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn supports(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.boundaries.windows(2).map(|p| (p[0], p[1]))
    }

    pub fn interior(&self) -> &[f64] {
        &self.boundaries[1..self.boundaries.len() - 1]
    }

    pub(crate) fn from_sorted_unchecked(
        boundaries: Vec<f64>,
        axis: Axis,
        domain_max: f64,
        origin: f64,
    ) -> Self {
        debug_assert!(boundaries.len() >= 2);
        Self {
            boundaries,
            axis,
            domain_max,
            origin,
        }
    }
}

/// One minimum followed through the scale space.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimumTrack {
    /// Sample index of each successive position, starting at scale 0.
    pub path: Vec<usize>,
}

impl MinimumTrack {
    pub fn birth(&self) -> usize {
        self.path[0]
    }

    /// Number of smoothing steps the minimum survived.
    pub fn lifetime(&self) -> usize {
        self.path.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceTrace {
    pub tracks: Vec<MinimumTrack>,
    /// Lifetimes strictly above this value are meaningful.
    pub threshold: usize,
}

impl PersistenceTrace {
    pub fn kept(&self) -> impl Iterator<Item = &MinimumTrack> {
        self.tracks
            .iter()
            .filter(move |t| t.lifetime() > self.threshold)
    }
}

const MAX_TRACK_JUMP: usize = 2;

/// Positions of strict local minima. A flat run counts once, at its centre,
/// when both neighbours are strictly larger. Non-periodic signals never
/// report their end samples.
pub(crate) fn local_minima(signal: &[f64], periodic: bool) -> Vec<usize> {
    let n = signal.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    if periodic {
        // start scanning just after a strict change so runs never straddle index 0
        let Some(start) = (0..n).find(|&i| signal[i] != signal[(i + n - 1) % n]) else {
            return out;
        };
        let mut i = 0;
        while i < n {
            let a = (start + i) % n;
            let mut len = 1;
            while len < n && signal[(a + len) % n] == signal[a] {
                len += 1;
            }
            let before = signal[(a + n - 1) % n];
            let after = signal[(a + len) % n];
            if before > signal[a] && after > signal[a] {
                out.push((a + (len - 1) / 2) % n);
            }
            i += len;
        }
        out.sort_unstable();
    } else {
        let mut a = 1;
        while a < n - 1 {
            let mut b = a;
            while b + 1 < n && signal[b + 1] == signal[a] {
                b += 1;
            }
            if b < n - 1 && signal[a - 1] > signal[a] && signal[b + 1] > signal[a] {
                out.push((a + b) / 2);
            }
            a = b + 1;
        }
    }
    out
}

fn index_distance(a: usize, b: usize, n: usize, periodic: bool) -> usize {
    let d = a.abs_diff(b);
    if periodic {
        d.min(n - d)
    } else {
        d
    }
}

/// Follows every minimum of the unsmoothed spectrum through repeated
/// Gaussian smoothing and records how long each survives.
pub fn persistence_trace(
    spectrum: &Spectrum1D,
    cfg: &ScaleSpaceConfig,
) -> Result<PersistenceTrace> {
    cfg.validate()?;
    let periodic = spectrum.axis().is_periodic();
    let border = if periodic {
        Border::Periodic
    } else {
        Border::Mirror
    };
    let n = spectrum.len();
    let kernel = gaussian_kernel(cfg.step.sqrt());

    let mut tracks: Vec<MinimumTrack> = local_minima(spectrum.samples(), periodic)
        .into_iter()
        .map(|i| MinimumTrack { path: vec![i] })
        .collect();
    let mut alive: Vec<usize> = (0..tracks.len()).collect();
    let mut signal = spectrum.samples().to_vec();

    for _ in 0..cfg.max_scale_steps {
        if alive.is_empty() {
            break;
        }
        signal = convolve1d(&signal, &kernel, border);
        let minima = local_minima(&signal, periodic);

        let mut candidates = Vec::new();
        for (slot, &t) in alive.iter().enumerate() {
            let cur = *tracks[t].path.last().unwrap();
            for (mi, &m) in minima.iter().enumerate() {
                let d = index_distance(cur, m, n, periodic);
                if d <= MAX_TRACK_JUMP {
                    candidates.push((d, slot, mi));
                }
            }
        }
        candidates.sort_unstable();
        let mut track_taken = vec![false; alive.len()];
        let mut min_taken = vec![false; minima.len()];
        for (_, slot, mi) in candidates {
            if track_taken[slot] || min_taken[mi] {
                continue;
            }
            track_taken[slot] = true;
            min_taken[mi] = true;
            tracks[alive[slot]].path.push(minima[mi]);
        }
        alive = alive
            .iter()
            .zip(&track_taken)
            .filter(|(_, &taken)| taken)
            .map(|(&t, _)| t)
            .collect();
    }

    let lifetimes: Vec<usize> = tracks.iter().map(MinimumTrack::lifetime).collect();
    let threshold = match cfg.threshold {
        ThresholdRule::Fixed(k) => k,
        ThresholdRule::Otsu => otsu_threshold(&lifetimes),
    };
    Ok(PersistenceTrace { tracks, threshold })
}

/// Otsu split of integer lifetimes: values `<= threshold` form the
/// non-meaningful class. With fewer than two distinct values everything is kept.
pub(crate) fn otsu_threshold(values: &[usize]) -> usize {
    let Some(&min) = values.iter().min() else {
        return 0;
    };
    let max = *values.iter().max().unwrap();
    if min == max {
        return min.saturating_sub(1);
    }
    let mut hist = vec![0usize; max + 1];
    for &v in values {
        hist[v] += 1;
    }
    let total = values.len() as f64;
    let total_sum: f64 = values.iter().map(|&v| v as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_t) = (-1.0, min);
    for t in min..max {
        w0 += hist[t] as f64;
        sum0 += (t * hist[t]) as f64;
        if hist[t] == 0 && t != min {
            continue;
        }
        let w1 = total - w0;
        let mu0 = sum0 / w0;
        let mu1 = (total_sum - sum0) / w1;
        let between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if between > best {
            best = between;
            best_t = t;
        }
    }
    best_t
}

/// Boundaries at the persistent minima of `spectrum`, plus both axis ends.
pub fn detect_boundaries(spectrum: &Spectrum1D, cfg: &ScaleSpaceConfig) -> Result<BoundarySet> {
    let positions = detect_minima_positions(spectrum, cfg)?;
    let dm = spectrum.domain_max();
    let mut b = Vec::with_capacity(positions.len() + 2);
    b.push(0.0);
    b.extend(positions.into_iter().filter(|&p| p > 0.0 && p < dm));
    b.push(dm);
    Ok(BoundarySet::from_sorted_unchecked(
        b,
        spectrum.axis(),
        dm,
        0.0,
    ))
}

/// Sorted axis positions of the persistent minima, including a minimum at
/// position 0 if the angular spectrum has one there.
pub(crate) fn detect_minima_positions(
    spectrum: &Spectrum1D,
    cfg: &ScaleSpaceConfig,
) -> Result<Vec<f64>> {
    let trace = persistence_trace(spectrum, cfg)?;
    let mut idx: Vec<usize> = trace.kept().map(MinimumTrack::birth).collect();
    idx.sort_unstable();
    idx.dedup();
    Ok(idx.into_iter().map(|i| spectrum.position(i)).collect())
}
