//! Empirical curvelet filter bank: one radially symmetric lowpass filter plus
//! polar wedges formed by radial rings times angular sectors.
//!
//! All filters are real, non-negative Fourier-domain masks. Their squares sum
//! to one at every frequency sample, so the bank is a tight frame and the same
//! filters reconstruct the image.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Plane;
use crate::spectral::{Axis, BoundarySet};

/// Transition width ratio used when the scale set gives no constraint.
pub const DEFAULT_GAMMA: f64 = 0.05;
const GAMMA_SAFETY: f64 = 0.9;
const DELTA_THETA_SAFETY: f64 = 0.45;

/// `x^4 (35 - 84x + 70x^2 - 20x^3)` on `[0, 1]`, clamped to 0 and 1 outside.
pub fn beta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x)
    }
}

/// Shape of the transition between neighbouring filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    /// The degree-7 polynomial [`beta`].
    #[default]
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankConfig {
    pub gamma: f64,
    pub delta_theta: f64,
    #[serde(default)]
    pub transition: Transition,
}

/// Radii at which the radial transitions happen: the interior scale
/// boundaries, or `pi` alone when there are none.
fn transition_radii(scales: &BoundarySet) -> Vec<f64> {
    let interior = scales.interior();
    if interior.is_empty() {
        vec![scales.domain_max()]
    } else {
        interior.to_vec()
    }
}

/// Smallest `(b - a) / (b + a)` over consecutive transition radii. With a
/// single interior radius the outer axis end stands in for the next one.
fn min_scale_ratio(scales: &BoundarySet) -> Option<f64> {
    let radii = transition_radii(scales);
    let ratio = |a: f64, b: f64| (b - a) / (b + a);
    match radii.as_slice() {
        [single] if *single < scales.domain_max() => Some(ratio(*single, scales.domain_max())),
        [_] => None,
        many => many
            .windows(2)
            .map(|p| ratio(p[0], p[1]))
            .min_by(f64::total_cmp),
    }
}

fn min_sector_width(angles: &BoundarySet) -> f64 {
    angles
        .supports()
        .map(|(a, b)| b - a)
        .min_by(f64::total_cmp)
        .expect("a boundary set has at least one support")
}

/// Picks `gamma` and `delta_theta` strictly inside the ranges for which only
/// consecutive filters overlap.
pub fn auto_gamma(scales: &BoundarySet, angles: &BoundarySet) -> Result<BankConfig> {
    let gamma = match min_scale_ratio(scales) {
        Some(r) => (GAMMA_SAFETY * r).min(1.0 - f64::EPSILON),
        None => DEFAULT_GAMMA,
    };
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::Numerical(format!(
            "scale boundaries give a non-positive transition ratio ({gamma})"
        )));
    }
    let delta_theta = DELTA_THETA_SAFETY * min_sector_width(angles);
    if delta_theta.is_nan() || delta_theta <= 0.0 {
        return Err(Error::Numerical("angular sectors have zero width".into()));
    }
    Ok(BankConfig {
        gamma,
        delta_theta,
        transition: Transition::Polynomial,
    })
}

impl BankConfig {
    pub fn validate(&self, scales: &BoundarySet, angles: &BoundarySet) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!(
                "gamma {} outside (0, 1)",
                self.gamma
            )));
        }
        if let Some(r) = min_scale_ratio(scales) {
            if self.gamma >= r {
                return Err(Error::invalid(format!(
                    "gamma {} lets non-consecutive rings overlap (must be < {r})",
                    self.gamma
                )));
            }
        }
        let w = min_sector_width(angles);
        if !(self.delta_theta > 0.0 && 2.0 * self.delta_theta < w) {
            return Err(Error::invalid(format!(
                "delta_theta {} must be positive and below half the narrowest sector ({w})",
                self.delta_theta
            )));
        }
        Ok(())
    }
}

#[inline]
fn falling(x: f64, edge: f64, half_width: f64) -> f64 {
    (FRAC_PI_2 * beta((x - edge + half_width) / (2.0 * half_width))).cos()
}

#[inline]
fn rising(x: f64, edge: f64, half_width: f64) -> f64 {
    (FRAC_PI_2 * beta((x - edge + half_width) / (2.0 * half_width))).sin()
}

/// Lowpass value at normalized radius `omega` for cutoff `omega1`.
pub fn lowpass_profile(omega: f64, omega1: f64, gamma: f64) -> f64 {
    let w = omega.abs();
    if w <= (1.0 - gamma) * omega1 {
        1.0
    } else if w <= (1.0 + gamma) * omega1 {
        falling(w, omega1, gamma * omega1)
    } else {
        0.0
    }
}

/// Ring between `inner` and `outer`; `outer == None` is the last ring, which
/// stays at 1 all the way to the spectrum corners.
pub fn ring_profile(omega: f64, inner: f64, outer: Option<f64>, gamma: f64) -> f64 {
    let w = omega.abs();
    match outer {
        Some(outer) => {
            if w >= (1.0 + gamma) * inner && w <= (1.0 - gamma) * outer {
                1.0
            } else if w >= (1.0 - gamma) * outer && w <= (1.0 + gamma) * outer {
                falling(w, outer, gamma * outer)
            } else if w >= (1.0 - gamma) * inner && w <= (1.0 + gamma) * inner {
                rising(w, inner, gamma * inner)
            } else {
                0.0
            }
        }
        None => {
            if w >= (1.0 + gamma) * inner {
                1.0
            } else if w >= (1.0 - gamma) * inner {
                rising(w, inner, gamma * inner)
            } else {
                0.0
            }
        }
    }
}

fn sector_raw(t: f64, lo: f64, hi: f64, dt: f64) -> f64 {
    if t >= lo + dt && t <= hi - dt {
        1.0
    } else if t >= hi - dt && t <= hi + dt {
        falling(t, hi, dt)
    } else if t >= lo - dt && t <= lo + dt {
        rising(t, lo, dt)
    } else {
        0.0
    }
}

/// Sector window at angular position `t` (relative to the set's origin) for
/// the sector `[lo, hi]` on an axis of period `period`. Contributions from
/// neighbouring periods are combined in quadrature, which makes a single
/// full-period sector identically 1.
pub fn sector_profile(t: f64, lo: f64, hi: f64, dt: f64, period: f64) -> f64 {
    [-period, 0.0, period]
        .iter()
        .map(|s| sector_raw(t + s, lo, hi, dt).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Normalized polar coordinates of every sample of a `width x height` FFT grid.
#[derive(Debug, Clone, Copy)]
pub struct FrequencyGrid {
    pub width: usize,
    pub height: usize,
}

impl FrequencyGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    fn nyquist(&self) -> f64 {
        self.width.min(self.height) as f64 / 2.0
    }

    /// Radius in `[0, pi]` on the inscribed circle, larger in the corners.
    pub fn radius(&self, kx: usize, ky: usize) -> f64 {
        let (fx, fy) = fft::grid_frequency(kx, ky, self.width, self.height);
        PI * fx.hypot(fy) / self.nyquist()
    }

    /// Direction folded onto the half-plane and shifted to `[0, pi)`.
    pub fn angle(&self, kx: usize, ky: usize) -> f64 {
        let (mut fx, mut fy) = fft::grid_frequency(kx, ky, self.width, self.height);
        // fold onto one half-plane so antipodes share the exact same angle
        if fy < 0.0 || (fy == 0.0 && fx < 0.0) {
            (fx, fy) = (-fx, -fy);
        }
        (fy.atan2(fx) + FRAC_PI_2).rem_euclid(PI)
    }

    fn map(&self, f: impl FnMut(usize, usize) -> f64) -> Plane {
        Plane::from_fn(self.width, self.height, f)
    }
}

fn check_axes(scales: &BoundarySet, angles: &BoundarySet) -> Result<()> {
    if scales.axis() != Axis::Radial || angles.axis() != Axis::Angular {
        return Err(Error::invalid(
            "expected a radial scale set and an angular sector set",
        ));
    }
    Ok(())
}

pub fn build_lowpass(scales: &BoundarySet, cfg: &BankConfig, width: usize, height: usize) -> Plane {
    let omega1 = transition_radii(scales)[0];
    let grid = FrequencyGrid::new(width, height);
    grid.map(|x, y| lowpass_profile(grid.radius(x, y), omega1, cfg.gamma))
}

/// Radial window of ring `n`, counted from 1.
pub fn build_radial_window(
    n: usize,
    scales: &BoundarySet,
    cfg: &BankConfig,
    width: usize,
    height: usize,
) -> Result<Plane> {
    let radii = transition_radii(scales);
    if n == 0 || n > radii.len() {
        return Err(Error::invalid(format!(
            "ring index {n} outside 1..={}",
            radii.len()
        )));
    }
    let inner = radii[n - 1];
    let outer = radii.get(n).copied();
    let grid = FrequencyGrid::new(width, height);
    Ok(grid.map(|x, y| ring_profile(grid.radius(x, y), inner, outer, cfg.gamma)))
}

/// Angular window of sector `m`, counted from 0, mirrored onto the antipodal
/// half-plane.
pub fn build_angular_window(
    m: usize,
    angles: &BoundarySet,
    cfg: &BankConfig,
    width: usize,
    height: usize,
) -> Result<Plane> {
    if m >= angles.support_count() {
        return Err(Error::invalid(format!(
            "sector index {m} outside 0..{}",
            angles.support_count()
        )));
    }
    let b = angles.boundaries();
    let (lo, hi) = (b[m], b[m + 1]);
    let period = angles.domain_max();
    let origin = angles.origin();
    let grid = FrequencyGrid::new(width, height);
    Ok(grid.map(|x, y| {
        let t = (grid.angle(x, y) - origin).rem_euclid(period);
        sector_profile(t, lo, hi, cfg.delta_theta, period)
    }))
}

/// The complete filter bank on one pixel grid.
#[derive(Debug, Clone)]
pub struct CurveletBank {
    width: usize,
    height: usize,
    scales: BoundarySet,
    angles: BoundarySet,
    config: BankConfig,
    /// Lowpass first, then wedges ordered ring-major.
    filters: Vec<Plane>,
}

pub fn build_bank(
    scales: &BoundarySet,
    angles: &BoundarySet,
    cfg: &BankConfig,
    width: usize,
    height: usize,
) -> Result<CurveletBank> {
    check_axes(scales, angles)?;
    cfg.validate(scales, angles)?;
    if width == 0 || height == 0 {
        return Err(Error::invalid("bank grid must be non-empty"));
    }
    let rings = transition_radii(scales).len();
    let sectors = angles.support_count();
    let sector_windows = (0..sectors)
        .map(|m| build_angular_window(m, angles, cfg, width, height))
        .collect::<Result<Vec<_>>>()?;

    let mut filters = Vec::with_capacity(1 + rings * sectors);
    filters.push(build_lowpass(scales, cfg, width, height));
    for n in 1..=rings {
        let ring = build_radial_window(n, scales, cfg, width, height)?;
        for sector in &sector_windows {
            let data = ring
                .as_slice()
                .iter()
                .zip(sector.as_slice())
                .map(|(r, s)| r * s)
                .collect();
            filters.push(Plane::from_vec(width, height, data)?);
        }
    }
    Ok(CurveletBank {
        width,
        height,
        scales: scales.clone(),
        angles: angles.clone(),
        config: *cfg,
        filters,
    })
}

impl CurveletBank {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn scales(&self) -> &BoundarySet {
        &self.scales
    }

    pub fn angles(&self) -> &BoundarySet {
        &self.angles
    }

    pub fn config(&self) -> &BankConfig {
        &self.config
    }

    /// Number of radial rings (excluding the lowpass disc).
    pub fn ring_count(&self) -> usize {
        (self.filters.len() - 1) / self.sector_count()
    }

    pub fn sector_count(&self) -> usize {
        self.angles.support_count()
    }

    /// Total number of filters K, lowpass included.
    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn filters(&self) -> &[Plane] {
        &self.filters
    }

    pub fn lowpass(&self) -> &Plane {
        &self.filters[0]
    }

    /// Wedge for ring `n` (from 1) and sector `m` (from 0).
    pub fn wedge(&self, n: usize, m: usize) -> &Plane {
        assert!(n >= 1 && n <= self.ring_count() && m < self.sector_count());
        &self.filters[1 + (n - 1) * self.sector_count() + m]
    }

    /// Largest `|1 - sum_k filter_k^2|` over the grid.
    pub fn partition_residual(&self) -> f64 {
        (0..self.width * self.height)
            .map(|i| {
                let s: f64 = self.filters.iter().map(|f| f.as_slice()[i].powi(2)).sum();
                (1.0 - s).abs()
            })
            .fold(0.0, f64::max)
    }
}
