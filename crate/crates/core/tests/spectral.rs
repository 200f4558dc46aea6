mod common;

use std::f64::consts::PI;

use common::dft2;
use ewtseg_core::spectral::{
    detect_boundaries, polar_spectra, Axis, ScaleSpaceConfig, Spectrum1D, ANGULAR_BINS,
};
use ewtseg_core::Plane;

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

fn circular_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b) % n;
    d.min(n - d)
}

#[test]
fn horizontal_sinusoid_matches_dft_oracle() {
    let n = 64;
    let k0 = 8;
    let omega0 = 2.0 * PI * k0 as f64 / n as f64;
    let img = Plane::from_fn(n, n, |x, _| (omega0 * x as f64).cos());
    let (re, im) = dft2(img.as_slice(), &vec![0.0; n * n], n, n, -1.0);

    // strongest non-DC coefficient of the oracle
    let mag: Vec<f64> = re.iter().zip(&im).map(|(a, b)| a.hypot(*b)).collect();
    let peak = (1..n * n).fold(1, |b, i| if mag[i] > mag[b] { i } else { b });
    let signed = |k: usize| {
        if k > n / 2 {
            k as f64 - n as f64
        } else {
            k as f64
        }
    };
    let (fx, fy) = (signed(peak % n), signed(peak / n));
    let theta = fy.atan2(fx);
    let t = (theta + PI / 2.0).rem_euclid(PI);
    let expected_angle_bin = (t / (PI / ANGULAR_BINS as f64)).round() as usize % ANGULAR_BINS;
    let radial_len = n / 2;
    let radius = PI * fx.hypot(fy) / radial_len as f64;
    let expected_radial_bin = (radius / (PI / (radial_len - 1) as f64)).round() as usize;

    let (radial, angular) = polar_spectra(&img).unwrap();
    assert_eq!(radial.len(), radial_len);
    assert_eq!(angular.len(), ANGULAR_BINS);
    assert_eq!(argmax(angular.samples()), expected_angle_bin);
    // theta = 0 lands in the middle of the angular axis
    assert_eq!(expected_angle_bin, ANGULAR_BINS / 2);
    assert!(argmax(radial.samples()).abs_diff(expected_radial_bin) <= 1);
}

#[test]
fn quarter_turn_shifts_angular_spectrum_by_half() {
    let n = 64;
    let f = |x: f64, y: f64| (0.9 * x + 0.3 * y).cos() + 0.5 * (0.4 * x - 1.1 * y).sin();
    let a = Plane::from_fn(n, n, |x, y| f(x as f64, y as f64));
    // rotate the pattern by 90 degrees: (x, y) -> (-y, x)
    let b = Plane::from_fn(n, n, |x, y| f(y as f64, -(x as f64)));
    let (_, sa) = polar_spectra(&a).unwrap();
    let (_, sb) = polar_spectra(&b).unwrap();
    let pa = argmax(sa.samples());
    let pb = argmax(sb.samples());
    assert!(
        circular_distance(pb, (pa + 180) % 360, 360) <= 1,
        "{pa} -> {pb}"
    );
}

#[test]
fn two_bumps_give_boundary_in_valley() {
    let len = 128;
    let bump = |x: f64, c: f64| (-(x - c).powi(2) / (2.0 * 0.15f64.powi(2))).exp();
    let samples: Vec<f64> = (0..len)
        .map(|i| {
            let x = i as f64 * PI / (len - 1) as f64;
            bump(x, 0.8) + bump(x, 2.2)
        })
        .collect();
    let s = Spectrum1D::new(samples, Axis::Radial, PI).unwrap();
    let bs = detect_boundaries(&s, &ScaleSpaceConfig::default()).unwrap();
    let tol = 2.0 * s.spacing() + 1e-12;
    assert!(
        bs.interior().iter().any(|b| (b - 1.5).abs() <= tol),
        "{:?}",
        bs.boundaries()
    );
}

#[test]
fn boundaries_are_valid_for_random_spectra() {
    let mut rng = common::Lcg(11);
    for len in [8, 33, 200] {
        for axis in [Axis::Radial, Axis::Angular] {
            let samples: Vec<f64> = (0..len).map(|_| rng.next_f64()).collect();
            let s = Spectrum1D::new(samples, axis, PI).unwrap();
            let bs = detect_boundaries(&s, &ScaleSpaceConfig::default()).unwrap();
            let b = bs.boundaries();
            assert_eq!(b[0], 0.0);
            assert_eq!(*b.last().unwrap(), PI);
            assert!(b.windows(2).all(|p| p[0] < p[1]));
        }
    }
}
