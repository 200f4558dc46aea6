//! Small 1D/2D convolution helpers shared by the scale-space detector and the
//! mask generator.

use crate::grid::Plane;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Border {
    /// `d c b | a b c d | c b a`
    Mirror,
    Periodic,
}

/// Mirrors an out-of-range index back into `0..n` without repeating the edge sample.
#[inline]
pub(crate) fn mirror_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

#[inline]
fn border_index(i: isize, n: usize, border: Border) -> usize {
    match border {
        Border::Mirror => mirror_index(i, n),
        Border::Periodic => i.rem_euclid(n as isize) as usize,
    }
}

/// Sampled Gaussian normalized to unit sum, truncated at `ceil(4 sigma)`.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil().max(1.0) as isize;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

pub(crate) fn convolve1d(signal: &[f64], kernel: &[f64], border: Border) -> Vec<f64> {
    let n = signal.len();
    let r = (kernel.len() / 2) as isize;
    (0..n as isize)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, &w)| w * signal[border_index(i + j as isize - r, n, border)])
                .sum()
        })
        .collect()
}

/// Separable Gaussian blur with mirrored borders.
pub(crate) fn gaussian_blur(plane: &Plane, sigma: f64) -> Plane {
    let kernel = gaussian_kernel(sigma);
    let (w, h) = plane.dims();
    let mut rows = Vec::with_capacity(w * h);
    for row in plane.as_slice().chunks(w) {
        rows.extend(convolve1d(row, &kernel, Border::Mirror));
    }
    let mut out = vec![0.0; w * h];
    let mut column = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            column[y] = rows[y * w + x];
        }
        for (y, v) in convolve1d(&column, &kernel, Border::Mirror)
            .into_iter()
            .enumerate()
        {
            out[y * w + x] = v;
        }
    }
    Plane::from_vec(w, h, out).expect("same dimensions")
}
