//! Forward and inverse empirical curvelet transform. All filtering happens as
//! pointwise products in the Fourier domain, so borders are periodic.

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use crate::bank::CurveletBank;
use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::grid::Plane;

/// Largest imaginary residue tolerated after filtering, relative to the
/// largest real coefficient.
pub const IMAG_TOLERANCE: f64 = 1e-9;

/// One full-resolution coefficient plane per filter; plane 0 is the lowpass.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientStack {
    planes: Vec<Plane>,
}

impl CoefficientStack {
    pub fn new(planes: Vec<Plane>) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::invalid("a coefficient stack needs at least one plane"))?;
        for p in &planes[1..] {
            first.ensure_same_dims(p)?;
        }
        Ok(Self { planes })
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn into_planes(self) -> Vec<Plane> {
        self.planes
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }
}

fn check_grid(width: usize, height: usize, bank: &CurveletBank) -> Result<()> {
    if (width, height) != (bank.width(), bank.height()) {
        return Err(Error::dims(
            format!("{}x{}", bank.width(), bank.height()),
            format!("{width}x{height}"),
        ));
    }
    Ok(())
}

pub fn forward(image: &Plane, bank: &CurveletBank) -> Result<CoefficientStack> {
    let (w, h) = image.dims();
    check_grid(w, h, bank)?;
    if image.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("image"));
    }
    let spectrum = crate::fft::forward_real(image.as_slice(), w, h);
    let inverse = Fft2d::new(w, h, FftDirection::Inverse);
    let scale = 1.0 / (w * h) as f64;

    let mut planes = Vec::with_capacity(bank.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); w * h];
    for filter in bank.filters() {
        for ((b, s), f) in buf.iter_mut().zip(&spectrum).zip(filter.as_slice()) {
            *b = s * f;
        }
        inverse.process(&mut buf);
        let mut max_re = 0.0f64;
        let mut max_im = 0.0f64;
        let data: Vec<f64> = buf
            .iter()
            .map(|c| {
                max_re = max_re.max(c.re.abs());
                max_im = max_im.max(c.im.abs());
                c.re * scale
            })
            .collect();
        if max_im > IMAG_TOLERANCE * max_re.max(1.0) {
            return Err(Error::Numerical(format!(
                "filtered plane has imaginary residue {:.3e}",
                max_im * scale
            )));
        }
        planes.push(Plane::from_vec(w, h, data)?);
    }
    Ok(CoefficientStack { planes })
}

/// Dual-frame reconstruction. The denominator is the frame's partition
/// function, identically one for a tight bank.
pub fn inverse(stack: &CoefficientStack, bank: &CurveletBank) -> Result<Plane> {
    let (w, h) = stack.dims();
    check_grid(w, h, bank)?;
    if stack.len() != bank.len() {
        return Err(Error::dims(
            format!("{} planes", bank.len()),
            format!("{} planes", stack.len()),
        ));
    }
    let forward = Fft2d::new(w, h, FftDirection::Forward);
    let mut acc = vec![Complex64::new(0.0, 0.0); w * h];
    let mut buf = vec![Complex64::new(0.0, 0.0); w * h];
    for (plane, filter) in stack.planes().iter().zip(bank.filters()) {
        for (b, &v) in buf.iter_mut().zip(plane.as_slice()) {
            *b = Complex64::new(v, 0.0);
        }
        forward.process(&mut buf);
        for ((a, b), f) in acc.iter_mut().zip(&buf).zip(filter.as_slice()) {
            *a += b * f;
        }
    }
    for (i, a) in acc.iter_mut().enumerate() {
        let denom: f64 = bank.filters().iter().map(|f| f.as_slice()[i].powi(2)).sum();
        *a = if denom > 0.0 {
            *a / denom
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    Fft2d::new(w, h, FftDirection::Inverse).process(&mut acc);
    let scale = 1.0 / (w * h) as f64;
    Plane::from_vec(w, h, acc.iter().map(|c| c.re * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::{auto_gamma, build_bank};
    use crate::spectral::{Axis, BoundarySet};
    use std::f64::consts::PI;

    fn bank(w: usize, h: usize) -> CurveletBank {
        let s = BoundarySet::new(vec![0.0, 0.7, 1.6, PI], Axis::Radial, PI).unwrap();
        let a = BoundarySet::with_origin(vec![0.0, 1.0, 2.0, PI], Axis::Angular, PI, 0.3).unwrap();
        let cfg = auto_gamma(&s, &a).unwrap();
        build_bank(&s, &a, &cfg, w, h).unwrap()
    }

    #[test]
    fn zero_image_gives_zero_stack() {
        let b = bank(16, 16);
        let st = forward(&Plane::filled(16, 16, 0.0), &b).unwrap();
        assert_eq!(st.len(), b.len());
        assert!(st
            .planes()
            .iter()
            .all(|p| p.as_slice().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn constant_image_lives_in_lowpass() {
        let b = bank(16, 12);
        let st = forward(&Plane::filled(16, 12, 3.0), &b).unwrap();
        assert!(st.planes()[0]
            .as_slice()
            .iter()
            .all(|v| (v - 3.0).abs() < 1e-12));
        for p in &st.planes()[1..] {
            assert!(p.as_slice().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn inverse_of_lowpass_only_constant() {
        let b = bank(16, 16);
        let mut planes = vec![Plane::filled(16, 16, 0.0); b.len()];
        planes[0] = Plane::filled(16, 16, 2.0);
        let img = inverse(&CoefficientStack::new(planes).unwrap(), &b).unwrap();
        assert!(img.as_slice().iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn zero_stack_inverts_to_zero() {
        let b = bank(8, 8);
        let st = CoefficientStack::new(vec![Plane::filled(8, 8, 0.0); b.len()]).unwrap();
        assert!(inverse(&st, &b)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let b = bank(16, 16);
        assert!(matches!(
            forward(&Plane::filled(8, 16, 1.0), &b),
            Err(Error::DimensionMismatch { .. })
        ));
        let st = CoefficientStack::new(vec![Plane::filled(16, 16, 0.0); 2]).unwrap();
        assert!(inverse(&st, &b).is_err());
    }
}
