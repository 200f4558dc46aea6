mod common;

use common::Lcg;
use ewtseg_core::features::{apply_zca, fit_zca, fit_zca_pooled, FeatureTensor};

fn random_tensor(n: usize, k: usize, seed: u64) -> FeatureTensor {
    let mut rng = Lcg(seed);
    let mut data = Vec::with_capacity(n * k);
    for _ in 0..n {
        let z: Vec<f64> = (0..k).map(|_| rng.next_f64() - 0.5).collect();
        for j in 0..k {
            // correlate each column with the first
            data.push(z[j] + 0.7 * z[0] + j as f64);
        }
    }
    FeatureTensor::new(n, 1, k, data).unwrap()
}

fn mean_and_cov(t: &FeatureTensor) -> (Vec<f64>, Vec<f64>) {
    let (n, k) = (t.rows(), t.k());
    let mut mean = vec![0.0; k];
    for p in 0..n {
        for j in 0..k {
            mean[j] += t.row(p)[j] / n as f64;
        }
    }
    let mut cov = vec![0.0; k * k];
    for p in 0..n {
        let r = t.row(p);
        for i in 0..k {
            for j in 0..k {
                cov[i * k + j] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n - 1) as f64;
            }
        }
    }
    (mean, cov)
}

#[test]
fn whitened_features_are_centred_and_white() {
    let x = random_tensor(500, 5, 1);
    let w = fit_zca(&x, 0.0).unwrap();
    let y = apply_zca(&x, &w).unwrap();
    let (mean, cov) = mean_and_cov(&y);
    assert!(mean.iter().all(|m| m.abs() < 1e-10));
    for i in 0..5 {
        for j in 0..5 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((cov[i * 5 + j] - want).abs() < 1e-8);
        }
    }
    // symmetric whitening matrix
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(w.matrix[i * 5 + j], w.matrix[j * 5 + i]);
        }
    }
}

#[test]
fn pooled_fit_equals_fit_on_concatenation() {
    let a = random_tensor(100, 3, 2);
    let b = random_tensor(60, 3, 3);
    let mut joined = a.as_slice().to_vec();
    joined.extend_from_slice(b.as_slice());
    let c = FeatureTensor::new(160, 1, 3, joined).unwrap();
    let pooled = fit_zca_pooled(&[a, b], 1e-9).unwrap();
    let single = fit_zca(&c, 1e-9).unwrap();
    for (p, s) in pooled.matrix.iter().zip(&single.matrix) {
        assert!((p - s).abs() < 1e-10);
    }
}

#[test]
fn zero_variance_direction_maps_near_zero() {
    let mut data = Vec::new();
    let mut rng = Lcg(4);
    for _ in 0..300 {
        let v = rng.next_f64();
        data.extend([v, 2.0]);
    }
    let x = FeatureTensor::new(300, 1, 2, data).unwrap();
    let y = apply_zca(&x, &fit_zca(&x, 1e-6).unwrap()).unwrap();
    assert!(y.as_slice().iter().all(|v| v.is_finite()));
    assert!((0..300).all(|p| y.row(p)[1].abs() < 1e-9));
}
