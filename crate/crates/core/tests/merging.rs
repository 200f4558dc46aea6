use std::f64::consts::PI;

use ewtseg_core::boundaries::{
    merge_boundary_sets, prune_narrow, prune_unsupported, union_boundaries, MaximaSet, MergeConfig,
};
use ewtseg_core::spectral::{detect_boundaries, Axis, BoundarySet, ScaleSpaceConfig, Spectrum1D};
use proptest::prelude::*;

fn set_from(mut interior: Vec<f64>) -> BoundarySet {
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    let mut b = vec![0.0];
    b.extend(interior);
    b.push(PI);
    BoundarySet::new(b, Axis::Radial, PI).unwrap()
}

fn is_trivial(bs: &BoundarySet) -> bool {
    bs.boundaries() == [0.0, PI]
}

proptest! {
    #[test]
    fn unsupported_pruning_leaves_supported_supports(
        interior in prop::collection::vec(0.01f64..3.13, 0..10),
        lambdas in prop::collection::vec(0.0f64..PI, 1..6),
    ) {
        let bs = set_from(interior);
        let out = prune_unsupported(&bs, &[MaximaSet { positions: lambdas.clone() }]);
        prop_assert_eq!(out.boundaries()[0], 0.0);
        prop_assert_eq!(*out.boundaries().last().unwrap(), PI);
        for (lo, hi) in out.supports() {
            prop_assert!(lambdas.iter().any(|&l| lo <= l && l <= hi));
        }
    }

    #[test]
    fn narrow_pruning_enforces_width(
        interior in prop::collection::vec(0.01f64..3.13, 0..10),
        t in 0.01f64..1.5,
    ) {
        let out = prune_narrow(&set_from(interior), &MergeConfig { min_width: t });
        prop_assert!(is_trivial(&out) || out.supports().all(|(lo, hi)| hi - lo >= t));
    }

    #[test]
    fn union_is_idempotent_and_contains_inputs(
        a in prop::collection::vec(0.01f64..3.13, 0..8),
        b in prop::collection::vec(0.01f64..3.13, 0..8),
    ) {
        let (a, b) = (set_from(a), set_from(b));
        let u = union_boundaries(&[a.clone(), b.clone()]).unwrap();
        prop_assert_eq!(&union_boundaries(&[u.clone(), u.clone()]).unwrap(), &u);
        for v in a.boundaries().iter().chain(b.boundaries()) {
            prop_assert!(u.boundaries().iter().any(|x| (x - v).abs() <= 1e-9));
        }
    }
}

fn bumps(centres: &[f64], len: usize, axis: Axis) -> Spectrum1D {
    let samples = (0..len)
        .map(|i| {
            let x = match axis {
                Axis::Radial => i as f64 * PI / (len - 1) as f64,
                Axis::Angular => i as f64 * PI / len as f64,
            };
            centres
                .iter()
                .map(|c| (-(x - c).powi(2) / 0.02).exp())
                .sum::<f64>()
                + 0.01
        })
        .collect();
    Spectrum1D::new(samples, axis, PI).unwrap()
}

#[test]
fn single_spectrum_reduces_to_detect_then_narrow() {
    let s = bumps(&[0.5, 1.4, 2.6], 160, Axis::Radial);
    let ss = ScaleSpaceConfig::default();
    let cfg = MergeConfig::radial();
    let merged = merge_boundary_sets(std::slice::from_ref(&s), &cfg, &ss).unwrap();
    let direct = prune_narrow(&detect_boundaries(&s, &ss).unwrap(), &cfg);
    assert_eq!(merged, direct);
}

#[test]
fn identical_spectra_merge_like_one() {
    let s = bumps(&[0.7, 2.0], 128, Axis::Radial);
    let ss = ScaleSpaceConfig::default();
    let cfg = MergeConfig::radial();
    let one = merge_boundary_sets(std::slice::from_ref(&s), &cfg, &ss).unwrap();
    let three = merge_boundary_sets(&[s.clone(), s.clone(), s], &cfg, &ss).unwrap();
    assert_eq!(one, three);
}

#[test]
fn disjoint_peaks_keep_both_supports() {
    let a = bumps(&[0.5, 1.3], 128, Axis::Radial);
    let b = bumps(&[1.9, 2.7], 128, Axis::Radial);
    let merged = merge_boundary_sets(
        &[a, b],
        &MergeConfig::radial(),
        &ScaleSpaceConfig::default(),
    )
    .unwrap();
    for peak in [0.5, 1.3, 1.9, 2.7] {
        let holder: Vec<_> = merged
            .supports()
            .filter(|&(lo, hi)| lo <= peak && peak <= hi)
            .collect();
        assert_eq!(holder.len(), 1);
    }
    // the peaks end up in at least three distinct supports
    let owners: std::collections::BTreeSet<_> = [0.5, 1.3, 1.9, 2.7]
        .iter()
        .map(|&p| merged.supports().position(|(lo, hi)| lo <= p && p <= hi))
        .collect();
    assert!(owners.len() >= 3, "{:?}", merged.boundaries());
}

#[test]
fn angular_merge_handles_the_seam() {
    // two orientation peaks, one straddling the wrap-around
    let a = bumps(&[0.02, PI - 0.02, 1.6], 360, Axis::Angular);
    let merged =
        merge_boundary_sets(&[a], &MergeConfig::angular(), &ScaleSpaceConfig::default()).unwrap();
    assert_eq!(merged.axis(), Axis::Angular);
    assert!(merged.support_count() >= 2, "{merged:?}");
    // the seam peak (0.02 and pi - 0.02 are neighbours) does not get a boundary
    // between its two halves
    let o = merged.origin();
    let unwrap = |t: f64| (t - o).rem_euclid(PI);
    let (p, q) = (unwrap(0.02), unwrap(PI - 0.02));
    let same = merged
        .supports()
        .any(|(lo, hi)| lo <= p.min(q) && p.max(q) <= hi);
    let wraps = merged
        .supports()
        .next()
        .is_some_and(|(lo, hi)| lo <= p.min(q) && p.min(q) <= hi)
        && merged
            .supports()
            .last()
            .is_some_and(|(lo, hi)| lo <= p.max(q) && p.max(q) <= hi);
    assert!(same || wraps, "{merged:?}");
}
