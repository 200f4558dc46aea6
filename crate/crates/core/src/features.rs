//! Texture descriptors: windowed local energy of the curvelet coefficients,
//! zero-centred and ZCA-whitened.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bank::{auto_gamma, build_bank, CurveletBank};
use crate::boundaries::{merge_boundary_sets, MergeConfig};
use crate::error::{Error, Result};
use crate::grid::{Plane, RgbImage};
use crate::smooth::mirror_index;
use crate::spectral::{polar_spectra, ScaleSpaceConfig};
use crate::transform::{forward, CoefficientStack};

/// Eigenvalues at or below this fraction of the largest one are treated as
/// exact zeros when whitening without regularization.
const EIGEN_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Side of the square energy window; odd.
    pub window: usize,
    pub drop_lowpass: bool,
    pub zca_epsilon: f64,
}

impl FeatureConfig {
    pub const DEFAULT_EPSILON: f64 = 1e-9;

    /// Pixelwise energies without the lowpass plane.
    pub fn grayscale() -> Self {
        Self {
            window: 1,
            drop_lowpass: true,
            zca_epsilon: Self::DEFAULT_EPSILON,
        }
    }

    /// Like [`grayscale`](Self::grayscale) but keeping the lowpass plane.
    pub fn color() -> Self {
        Self {
            drop_lowpass: false,
            ..Self::grayscale()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "energy window must be odd and positive, got {}",
                self.window
            )));
        }
        if !(self.zca_epsilon >= 0.0 && self.zca_epsilon.is_finite()) {
            return Err(Error::invalid("zca_epsilon must be finite and >= 0"));
        }
        Ok(())
    }
}

/// `Np x K` feature matrix, one row per pixel in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    width: usize,
    height: usize,
    k: usize,
    data: Vec<f64>,
}

impl FeatureTensor {
    pub fn new(width: usize, height: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * k {
            return Err(Error::dims(width * height * k, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature tensor"));
        }
        Ok(Self {
            width,
            height,
            k,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Feature count per pixel.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Pixel count.
    pub fn rows(&self) -> usize {
        self.width * self.height
    }

    pub fn row(&self, pixel: usize) -> &[f64] {
        &self.data[pixel * self.k..(pixel + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Column `k` as an image.
    pub fn plane(&self, k: usize) -> Plane {
        let data = self.data.iter().skip(k).step_by(self.k).copied().collect();
        Plane::from_vec(self.width, self.height, data).expect("consistent tensor")
    }
}

/// Sum of squared values over a `window x window` neighbourhood, mirrored at
/// the borders.
fn box_energy(plane: &Plane, window: usize) -> Vec<f64> {
    let (w, h) = plane.dims();
    let r = (window / 2) as isize;
    let squared: Vec<f64> = plane.as_slice().iter().map(|v| v * v).collect();
    if window == 1 {
        return squared;
    }
    let window_sums = |line: &[f64], out: &mut [f64]| {
        let n = line.len();
        let mut prefix = Vec::with_capacity(n + window);
        prefix.push(0.0);
        let mut acc = 0.0;
        for i in -r..(n as isize + r) {
            acc += line[mirror_index(i, n)];
            prefix.push(acc);
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = prefix[i + window] - prefix[i];
        }
    };
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        window_sums(&squared[y * w..(y + 1) * w], &mut rows[y * w..(y + 1) * w]);
    }
    let mut out = vec![0.0; w * h];
    let mut column = vec![0.0; h];
    let mut summed = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            column[y] = rows[y * w + x];
        }
        window_sums(&column, &mut summed);
        for y in 0..h {
            out[y * w + x] = summed[y];
        }
    }
    out
}

pub fn local_energy(stack: &CoefficientStack, cfg: &FeatureConfig) -> Result<FeatureTensor> {
    cfg.validate()?;
    let skip = usize::from(cfg.drop_lowpass);
    let planes = &stack.planes()[skip.min(stack.len())..];
    if planes.is_empty() {
        return Err(Error::invalid(
            "no coefficient planes left after dropping the lowpass",
        ));
    }
    let (w, h) = stack.dims();
    let k = planes.len();
    let mut data = vec![0.0; w * h * k];
    for (j, plane) in planes.iter().enumerate() {
        for (p, e) in box_energy(plane, cfg.window).into_iter().enumerate() {
            data[p * k + j] = e;
        }
    }
    FeatureTensor::new(w, h, k, data)
}

/// Zero-centring plus symmetric whitening `P (D + eps I)^(-1/2) P^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhiteningTransform {
    pub mean: Vec<f64>,
    /// Row-major `K x K`.
    pub matrix: Vec<f64>,
}

impl WhiteningTransform {
    pub fn k(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 || self.matrix.len() != k * k {
            return Err(Error::invalid(format!(
                "whitening matrix has {} entries for {k} features",
                self.matrix.len()
            )));
        }
        if self.mean.iter().chain(&self.matrix).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("whitening transform"));
        }
        Ok(())
    }
}

pub fn fit_zca(x: &FeatureTensor, epsilon: f64) -> Result<WhiteningTransform> {
    fit_zca_pooled(std::slice::from_ref(x), epsilon)
}

/// Fits one whitening transform on the rows of several tensors at once.
pub fn fit_zca_pooled(xs: &[FeatureTensor], epsilon: f64) -> Result<WhiteningTransform> {
    let first = xs
        .first()
        .ok_or_else(|| Error::invalid("no features to whiten"))?;
    let k = first.k();
    if xs.iter().any(|x| x.k() != k) {
        return Err(Error::invalid("pooled feature tensors differ in K"));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("zca epsilon must be finite and >= 0"));
    }
    if xs
        .iter()
        .any(|x| x.as_slice().iter().any(|v| !v.is_finite()))
    {
        return Err(Error::NonFinite("features"));
    }
    let n: usize = xs.iter().map(FeatureTensor::rows).sum();
    if n <= k {
        return Err(Error::invalid(format!(
            "whitening needs more pixels than features ({n} <= {k})"
        )));
    }

    let mut mean = vec![0.0; k];
    for x in xs {
        for row in x.as_slice().chunks(k) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = DMatrix::<f64>::zeros(k, k);
    let mut centred = vec![0.0; k];
    for x in xs {
        for row in x.as_slice().chunks(k) {
            for ((c, v), m) in centred.iter_mut().zip(row).zip(&mean) {
                *c = v - m;
            }
            for i in 0..k {
                for j in i..k {
                    cov[(i, j)] += centred[i] * centred[j];
                }
            }
        }
    }
    for i in 0..k {
        for j in i..k {
            let v = cov[(i, j)] / (n - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let eig = SymmetricEigen::new(cov);
    let largest = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let scale: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&d| {
            let v = d + epsilon;
            if v > EIGEN_FLOOR * largest && v > 0.0 {
                1.0 / v.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let p = &eig.eigenvectors;
    let mut matrix = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            matrix[i * k + j] = (0..k).map(|c| p[(i, c)] * scale[c] * p[(j, c)]).sum();
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            let s = 0.5 * (matrix[i * k + j] + matrix[j * k + i]);
            matrix[i * k + j] = s;
            matrix[j * k + i] = s;
        }
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("whitening matrix"));
    }
    Ok(WhiteningTransform { mean, matrix })
}

pub fn apply_zca(x: &FeatureTensor, w: &WhiteningTransform) -> Result<FeatureTensor> {
    let k = x.k();
    if w.k() != k || w.matrix.len() != k * k {
        return Err(Error::dims(
            format!("{} features", w.k()),
            format!("{k} features"),
        ));
    }
    let mut out = vec![0.0; x.as_slice().len()];
    let mut centred = vec![0.0; k];
    for (row, dst) in x.as_slice().chunks(k).zip(out.chunks_mut(k)) {
        for ((c, v), m) in centred.iter_mut().zip(row).zip(&w.mean) {
            *c = v - m;
        }
        for (j, d) in dst.iter_mut().enumerate() {
            *d = (0..k).map(|i| centred[i] * w.matrix[i * k + j]).sum();
        }
    }
    FeatureTensor::new(x.width(), x.height(), k, out)
}

/// One bank for a whole texture dictionary: radial and angular boundaries are
/// detected per texture, merged per axis, and the bank is built on the
/// requested grid.
pub fn build_dictionary_bank(
    textures: &[Plane],
    radial: &MergeConfig,
    angular: &MergeConfig,
    scale_space: &ScaleSpaceConfig,
    width: usize,
    height: usize,
) -> Result<CurveletBank> {
    if textures.is_empty() {
        return Err(Error::invalid("texture dictionary is empty"));
    }
    let mut radial_spectra = Vec::with_capacity(textures.len());
    let mut angular_spectra = Vec::with_capacity(textures.len());
    for t in textures {
        let (r, a) = polar_spectra(t)?;
        radial_spectra.push(r);
        angular_spectra.push(a);
    }
    let scales = merge_boundary_sets(&radial_spectra, radial, scale_space)?;
    let angles = merge_boundary_sets(&angular_spectra, angular, scale_space)?;
    let cfg = auto_gamma(&scales, &angles)?;
    build_bank(&scales, &angles, &cfg, width, height)
}

/// What to do with the whitening stage of [`extract_features`].
#[derive(Debug, Clone, Copy)]
pub enum Whitening<'a> {
    /// Fit a new transform on this image and apply it.
    Fit,
    Apply(&'a WhiteningTransform),
    /// Return raw local energies.
    Skip,
}

/// Transform, local energy and whitening. Returns the fitted transform when
/// `whitening` is [`Whitening::Fit`].
pub fn extract_features(
    image: &Plane,
    bank: &CurveletBank,
    cfg: &FeatureConfig,
    whitening: Whitening<'_>,
) -> Result<(FeatureTensor, Option<WhiteningTransform>)> {
    let stack = forward(image, bank)?;
    let energy = local_energy(&stack, cfg)?;
    match whitening {
        Whitening::Skip => Ok((energy, None)),
        Whitening::Apply(w) => Ok((apply_zca(&energy, w)?, None)),
        Whitening::Fit => {
            let w = fit_zca(&energy, cfg.zca_epsilon)?;
            Ok((apply_zca(&energy, &w)?, Some(w)))
        }
    }
}

/// HSV value channel: the per-pixel maximum of R, G and B.
pub fn v_channel(rgb: &RgbImage) -> Plane {
    rgb.map(|p| p[0].max(p[1]).max(p[2]))
}

/// [`v_channel`] for interleaved samples with an explicit channel count.
pub fn v_channel_interleaved(
    width: usize,
    height: usize,
    channels: usize,
    samples: &[f64],
) -> Result<Plane> {
    if channels != 3 {
        return Err(Error::invalid(format!(
            "expected 3 channels, got {channels}"
        )));
    }
    if samples.len() != width * height * 3 {
        return Err(Error::dims(width * height * 3, samples.len()));
    }
    let data = samples
        .chunks(3)
        .map(|p| p[0].max(p[1]).max(p[2]))
        .collect();
    Plane::from_vec(width, height, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn stack(planes: Vec<Plane>) -> CoefficientStack {
        CoefficientStack::new(planes).unwrap()
    }

    #[test]
    fn window_one_squares_coefficients() {
        let p = Plane::from_fn(5, 4, |x, y| x as f64 - y as f64 * 0.5);
        let cfg = FeatureConfig {
            window: 1,
            drop_lowpass: false,
            zca_epsilon: 0.0,
        };
        let t = local_energy(&stack(vec![p.clone()]), &cfg).unwrap();
        for (e, v) in t.as_slice().iter().zip(p.as_slice()) {
            assert_eq!(*e, v * v);
        }
    }

    #[test]
    fn unit_plane_window_three_interior_is_nine() {
        let cfg = FeatureConfig {
            window: 3,
            drop_lowpass: false,
            zca_epsilon: 0.0,
        };
        let t = local_energy(&stack(vec![Plane::filled(6, 6, 1.0)]), &cfg).unwrap();
        assert_eq!(t.row(2 * 6 + 3), &[9.0]);
    }

    #[test]
    fn large_window_on_constant_plane() {
        let c = 0.3;
        let cfg = FeatureConfig {
            window: 19,
            drop_lowpass: false,
            zca_epsilon: 0.0,
        };
        let t = local_energy(&stack(vec![Plane::filled(12, 7, c)]), &cfg).unwrap();
        assert!(t
            .as_slice()
            .iter()
            .all(|v| (v - 361.0 * c * c).abs() < 1e-12));
    }

    #[test]
    fn drop_lowpass_removes_first_plane() {
        let s = stack(vec![Plane::filled(4, 4, 1.0), Plane::filled(4, 4, 2.0)]);
        let t = local_energy(&s, &FeatureConfig::grayscale()).unwrap();
        assert_eq!(t.k(), 1);
        assert!(t.as_slice().iter().all(|&v| v == 4.0));
        let only = stack(vec![Plane::filled(4, 4, 1.0)]);
        assert!(local_energy(&only, &FeatureConfig::grayscale()).is_err());
    }

    #[test]
    fn rejects_even_window() {
        let cfg = FeatureConfig {
            window: 4,
            ..FeatureConfig::grayscale()
        };
        assert!(local_energy(&stack(vec![Plane::filled(4, 4, 1.0); 2]), &cfg).is_err());
    }

    #[test]
    fn diagonal_covariance_whitening() {
        // columns with variance 4 and 9 (sample covariance, n - 1)
        let a = [2.0, -2.0, 2.0, -2.0, 0.0];
        let b = [3.0, 3.0, -3.0, -3.0, 0.0];
        let data: Vec<f64> = a.iter().zip(&b).flat_map(|(x, y)| [*x, *y]).collect();
        let x = FeatureTensor::new(5, 1, 2, data).unwrap();
        let w = fit_zca(&x, 0.0).unwrap();
        let expect = [0.5, 0.0, 0.0, 1.0 / 3.0];
        for (g, e) in w.matrix.iter().zip(expect) {
            assert!((g - e).abs() < 1e-12, "{:?}", w.matrix);
        }
    }

    #[test]
    fn degenerate_column_stays_finite() {
        let data: Vec<f64> = (0..40).flat_map(|i| [i as f64, 7.0]).collect();
        let x = FeatureTensor::new(40, 1, 2, data).unwrap();
        let w = fit_zca(&x, 1e-6).unwrap();
        let y = apply_zca(&x, &w).unwrap();
        assert!(y.as_slice().iter().all(|v| v.is_finite()));
        assert!(y.plane(1).as_slice().iter().all(|v| v.abs() < 1e-9));
        let w0 = fit_zca(&x, 0.0).unwrap();
        assert!(w0.matrix.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn whitening_preconditions() {
        let x = FeatureTensor::new(2, 1, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(fit_zca(&x, 0.0).is_err());
        assert!(FeatureTensor::new(1, 1, 1, vec![f64::NAN]).is_err());
        let w = WhiteningTransform {
            mean: vec![0.0; 3],
            matrix: vec![0.0; 9],
        };
        assert!(apply_zca(&x, &w).is_err());
    }

    #[test]
    fn v_channel_takes_max() {
        let rgb: RgbImage = Grid::from_vec(
            3,
            1,
            vec![[1.0, 0.0, 0.0], [0.5, 0.5, 0.5], [0.2, 0.7, 0.4]],
        )
        .unwrap();
        assert_eq!(v_channel(&rgb).as_slice(), &[1.0, 0.5, 0.7]);
        assert!(v_channel_interleaved(1, 1, 4, &[0.0; 4]).is_err());
        let v = v_channel_interleaved(1, 1, 3, &[0.2, 0.7, 0.4]).unwrap();
        assert_eq!(v.as_slice(), &[0.7]);
    }
}
