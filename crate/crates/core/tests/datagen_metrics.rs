use ewtseg_core::components::label_components;
use ewtseg_core::datagen::{
    compose_mosaic, gen_grayscale_mask, gen_grayscale_mask_detailed, gen_voronoi_mask, MaskSpec,
};
use ewtseg_core::metrics::score;
use ewtseg_core::{Grid, Plane, SegmentationMap};
use proptest::prelude::*;

fn spec(regions: usize, seed: u64) -> MaskSpec {
    MaskSpec {
        sigma: 8.0,
        ..MaskSpec::new(64, 48, regions, seed)
    }
}

#[test]
fn grayscale_mask_has_requested_regions() {
    for (regions, seed) in [(2, 0), (3, 1), (5, 2)] {
        let m = gen_grayscale_mask_detailed(&spec(regions, seed)).unwrap();
        assert_eq!(m.regions.classes() as usize, regions);
        assert_eq!(label_components(m.regions.labels()).count(), regions);
        assert_eq!(m.phases.len(), regions);
        // adjacent regions lie on opposite sides of the median
        let l = m.regions.labels();
        for y in 0..l.height() {
            for x in 0..l.width() {
                let a = *l.get(x, y) as usize;
                if x + 1 < l.width() {
                    let b = *l.get(x + 1, y) as usize;
                    assert!(a == b || m.phases[a] != m.phases[b]);
                }
                if y + 1 < l.height() {
                    let b = *l.get(x, y + 1) as usize;
                    assert!(a == b || m.phases[a] != m.phases[b]);
                }
            }
        }
    }
}

#[test]
fn generators_are_reproducible() {
    assert_eq!(
        gen_grayscale_mask(&spec(3, 7)),
        gen_grayscale_mask(&spec(3, 7))
    );
    assert_eq!(
        gen_voronoi_mask(40, 30, 9, 3, 5).unwrap(),
        gen_voronoi_mask(40, 30, 9, 3, 5).unwrap()
    );
    assert_ne!(
        gen_voronoi_mask(40, 30, 9, 3, 5).unwrap(),
        gen_voronoi_mask(40, 30, 9, 3, 6).unwrap()
    );
}

#[test]
fn mosaic_pixels_come_from_the_labelled_texture() {
    let mask = gen_voronoi_mask(30, 20, 6, 3, 1).unwrap();
    let textures: Vec<Plane> = (0..3).map(|i| Plane::filled(7, 5, i as f64)).collect();
    let mosaic = compose_mosaic(&mask, &textures).unwrap();
    for y in 0..20 {
        for x in 0..30 {
            assert_eq!(*mosaic.get(x, y), mask.get(x, y) as f64);
        }
    }
}

fn arb_map() -> impl Strategy<Value = SegmentationMap> {
    (1usize..12, 1usize..12, 1u32..5).prop_flat_map(|(w, h, c)| {
        prop::collection::vec(0..c, w * h)
            .prop_map(move |v| SegmentationMap::new(Grid::from_vec(w, h, v).unwrap(), c).unwrap())
    })
}

fn pair() -> impl Strategy<Value = (SegmentationMap, SegmentationMap)> {
    (1usize..12, 1usize..12, 1u32..5, 1u32..5).prop_flat_map(|(w, h, c1, c2)| {
        (
            prop::collection::vec(0..c1, w * h),
            prop::collection::vec(0..c2, w * h),
        )
            .prop_map(move |(a, b)| {
                (
                    SegmentationMap::new(Grid::from_vec(w, h, a).unwrap(), c1).unwrap(),
                    SegmentationMap::new(Grid::from_vec(w, h, b).unwrap(), c2).unwrap(),
                )
            })
    })
}

proptest! {
    #[test]
    fn self_score_is_perfect(m in arb_map()) {
        let s = score(&m, &m).unwrap();
        prop_assert_eq!(s.as_pairs().map(|p| p.1), [100.0; 4]);
    }

    #[test]
    fn scores_are_bounded_and_symmetric_where_expected((a, b) in pair()) {
        let ab = score(&a, &b).unwrap();
        let ba = score(&b, &a).unwrap();
        for (_, v) in ab.as_pairs() {
            prop_assert!((-1e-9..=100.0 + 1e-9).contains(&v));
        }
        prop_assert!((ab.vd - ba.vd).abs() < 1e-9);
        prop_assert!((ab.sdhd - ba.sdhd).abs() < 1e-9);
        prop_assert!((ab.ssc - ba.ssc).abs() < 1e-9);
        prop_assert!((ab.nvoi - ba.nvoi).abs() < 1e-9);
    }

    #[test]
    fn relabelling_does_not_change_scores((a, b) in pair(), shift in 0u32..4) {
        let c = a.classes();
        let perm: Vec<u32> = (0..c).map(|l| (l + shift) % c).collect();
        let relabelled = a.remap(&perm).unwrap();
        let s1 = score(&a, &b).unwrap();
        let s2 = score(&relabelled, &b).unwrap();
        for ((_, x), (_, y)) in s1.as_pairs().iter().zip(s2.as_pairs()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}
