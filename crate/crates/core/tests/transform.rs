mod common;

use std::f64::consts::PI;

use common::{dft2, max_abs_diff, Lcg};
use ewtseg_core::bank::{auto_gamma, build_bank, CurveletBank};
use ewtseg_core::spectral::{Axis, BoundarySet};
use ewtseg_core::transform::{forward, inverse};
use ewtseg_core::Plane;

fn bank(w: usize, h: usize) -> CurveletBank {
    let scales = BoundarySet::new(vec![0.0, 0.6, 1.7, PI], Axis::Radial, PI).unwrap();
    let angles = BoundarySet::with_origin(vec![0.0, 0.9, 2.1, PI], Axis::Angular, PI, 0.4).unwrap();
    let cfg = auto_gamma(&scales, &angles).unwrap();
    build_bank(&scales, &angles, &cfg, w, h).unwrap()
}

fn random_plane(w: usize, h: usize, seed: u64) -> Plane {
    let mut rng = Lcg(seed);
    Plane::from_fn(w, h, |_, _| rng.next_f64() - 0.5)
}

#[test]
fn matches_spatial_convolution() {
    let (w, h) = (32, 24);
    let bank = bank(w, h);
    let img = random_plane(w, h, 5);
    let stack = forward(&img, &bank).unwrap();
    for (filter, plane) in bank.filters().iter().zip(stack.planes()) {
        let (kr, ki) = dft2(filter.as_slice(), &vec![0.0; w * h], w, h, 1.0);
        let n = (w * h) as f64;
        // the kernel of an even real filter is real
        assert!(ki.iter().all(|v| (v / n).abs() < 1e-12));
        let kernel: Vec<f64> = kr.iter().map(|v| v / n).collect();
        let direct = Plane::from_fn(w, h, |x, y| {
            let mut acc = 0.0;
            for v in 0..h {
                for u in 0..w {
                    let kx = (x + w - u) % w;
                    let ky = (y + h - v) % h;
                    acc += img.get(u, v) * kernel[ky * w + kx];
                }
            }
            acc
        });
        assert!(max_abs_diff(&direct, plane) < 1e-10);
    }
}

#[test]
fn perfect_reconstruction_and_energy() {
    for (w, h) in [(64, 64), (48, 40)] {
        let bank = bank(w, h);
        assert!(bank.partition_residual() < 1e-12);
        let img = random_plane(w, h, 9);
        let stack = forward(&img, &bank).unwrap();
        assert!(max_abs_diff(&inverse(&stack, &bank).unwrap(), &img) < 1e-10);
        let e_in: f64 = img.as_slice().iter().map(|v| v * v).sum();
        let e_out: f64 = stack
            .planes()
            .iter()
            .flat_map(|p| p.as_slice())
            .map(|v| v * v)
            .sum();
        assert!((e_in - e_out).abs() < 1e-9 * e_in);
    }
}

#[test]
fn forward_is_linear() {
    let (w, h) = (32, 32);
    let bank = bank(w, h);
    let a = random_plane(w, h, 1);
    let b = random_plane(w, h, 2);
    let mix = Plane::from_fn(w, h, |x, y| 2.0 * a.get(x, y) - 0.5 * b.get(x, y));
    let sa = forward(&a, &bank).unwrap();
    let sb = forward(&b, &bank).unwrap();
    let sm = forward(&mix, &bank).unwrap();
    for ((pa, pb), pm) in sa.planes().iter().zip(sb.planes()).zip(sm.planes()) {
        let expect = Plane::from_fn(w, h, |x, y| 2.0 * pa.get(x, y) - 0.5 * pb.get(x, y));
        assert!(max_abs_diff(&expect, pm) < 1e-12);
    }
}
