//! 2D FFT over row-major complex buffers.

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

pub(crate) struct Fft2d {
    width: usize,
    height: usize,
    row: std::sync::Arc<dyn rustfft::Fft<f64>>,
    col: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Fft2d {
    pub(crate) fn new(width: usize, height: usize, direction: FftDirection) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row: planner.plan_fft(width, direction),
            col: planner.plan_fft(height, direction),
        }
    }

    /// Unnormalized in-place transform.
    pub(crate) fn process(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.width * self.height);
        self.row.process(buf);
        let (w, h) = (self.width, self.height);
        let mut column = vec![Complex64::new(0.0, 0.0); h];
        for x in 0..w {
            for y in 0..h {
                column[y] = buf[y * w + x];
            }
            self.col.process(&mut column);
            for y in 0..h {
                buf[y * w + x] = column[y];
            }
        }
    }
}

pub(crate) fn forward_real(data: &[f64], width: usize, height: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Fft2d::new(width, height, FftDirection::Forward).process(&mut buf);
    buf
}

/// Signed frequency of FFT index `k` on an axis of length `n`. The Nyquist
/// index of an even axis is reported as `-n/2`.
#[inline]
pub(crate) fn signed_frequency(k: usize, n: usize) -> f64 {
    if 2 * k < n {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Frequency coordinates `(fx, fy)` of sample `(kx, ky)`, chosen so that the
/// sample at `-k` always maps to the exact antipode. Nyquist rows and columns
/// alias `+n/2` and `-n/2`; the sign is picked from the other coordinate.
pub(crate) fn grid_frequency(kx: usize, ky: usize, width: usize, height: usize) -> (f64, f64) {
    let mut fx = signed_frequency(kx, width);
    let mut fy = signed_frequency(ky, height);
    let nyq_x = width.is_multiple_of(2) && 2 * kx == width;
    let nyq_y = height.is_multiple_of(2) && 2 * ky == height;
    if nyq_y && !nyq_x && fx < 0.0 {
        fy = -fy;
    }
    if nyq_x && !nyq_y && fy < 0.0 {
        fx = -fx;
    }
    (fx, fy)
}
