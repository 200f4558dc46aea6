#![allow(dead_code)]

use std::f64::consts::PI;

use ewtseg_core::Plane;

/// Textbook O(N^2) 2D DFT. `sign` is -1 for forward, +1 for inverse
/// (unnormalized).
pub fn dft2(re: &[f64], im: &[f64], w: usize, h: usize, sign: f64) -> (Vec<f64>, Vec<f64>) {
    let mut out_re = vec![0.0; w * h];
    let mut out_im = vec![0.0; w * h];
    for ky in 0..h {
        for kx in 0..w {
            let (mut sr, mut si) = (0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let phase =
                        sign * 2.0 * PI * ((kx * x) as f64 / w as f64 + (ky * y) as f64 / h as f64);
                    let (s, c) = phase.sin_cos();
                    let (a, b) = (re[y * w + x], im[y * w + x]);
                    sr += a * c - b * s;
                    si += a * s + b * c;
                }
            }
            out_re[ky * w + kx] = sr;
            out_im[ky * w + kx] = si;
        }
    }
    (out_re, out_im)
}

pub fn max_abs_diff(a: &Plane, b: &Plane) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Small deterministic generator so oracles do not share the library's RNG.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}
