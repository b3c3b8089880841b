mod common;

use common::scalar_partition;
use proptest::prelude::*;
use terraslope_core::partition::{
    equal_planes, expected_height, pixel_std, slope_guided_planes, split_counts, HypothesisPlanes,
    PixelRange, ProbabilityVolume,
};
use terraslope_core::slope::SlopeFactors;
use terraslope_core::{HeightGrid, ValidMask};

fn factor() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 4 => 0.0f64..50.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn matches_scalar_transcription(
        h in -1000.0f64..5000.0,
        sigma in 0.0f64..100.0,
        s_min in factor(),
        s_max in factor(),
        m in 2usize..=64,
    ) {
        let range = PixelRange::centered(h, sigma);
        let f = SlopeFactors { s_max, s_min };
        let planes = slope_guided_planes(h, range, f, m).unwrap();
        let oracle = scalar_partition(h, range.h_min, range.h_max, s_min, s_max, m);
        prop_assert_eq!(planes.len(), m);
        for (a, b) in planes.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-10, "{:?} vs {:?}", planes, oracle);
        }
        let (lower, upper) = split_counts(m, f);
        prop_assert_eq!(lower + upper, m);
        prop_assert!(planes.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(planes[0] >= range.h_min && planes[m - 1] <= range.h_max);
        prop_assert!(planes.contains(&h));
    }

    #[test]
    fn steeper_uphill_never_loses_planes(
        s_min in 0.0f64..50.0,
        s_max in 0.0f64..50.0,
        extra in 0.0f64..50.0,
        m in 2usize..=64,
    ) {
        let before = split_counts(m, SlopeFactors { s_max, s_min }).1;
        let after = split_counts(m, SlopeFactors { s_max: s_max + extra, s_min }).1;
        // The flat fallback sits at floor(m/2) below, matching the equal split.
        if s_min + s_max > 0.0 {
            prop_assert!(after >= before);
        }
    }

    #[test]
    fn balanced_even_split_is_uniform(
        h in -100.0f64..100.0,
        sigma in 0.5f64..50.0,
        s in 0.0f64..20.0,
        half in 1usize..=16,
    ) {
        let m = 2 * half;
        let range = PixelRange::centered(h, sigma);
        let planes = slope_guided_planes(h, range, SlopeFactors { s_max: s, s_min: s }, m).unwrap();
        prop_assert_eq!(split_counts(m, SlopeFactors { s_max: s, s_min: s }), (half, half));
        let below: Vec<f64> = planes[..=half].windows(2).map(|w| w[1] - w[0]).collect();
        let above: Vec<f64> = planes[half..].windows(2).map(|w| w[1] - w[0]).collect();
        for gaps in [below, above] {
            for g in &gaps {
                prop_assert!((g - gaps[0]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn mean_and_std_match_population_moments(
        raw in prop::collection::vec((-200.0f64..200.0, 0.0f64..1.0), 2..32),
    ) {
        let mut heights: Vec<f64> = raw.iter().map(|p| p.0).collect();
        heights.sort_by(f64::total_cmp);
        let weights: Vec<f64> = raw.iter().map(|p| p.1 + 1e-3).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let m = heights.len();
        let mask = ValidMask::all_valid(1, 1);
        let planes = HypothesisPlanes::new(1, 1, 1.0, m, heights.clone(), mask.clone()).unwrap();
        let vol = ProbabilityVolume::new(1, 1, m, probs.clone(), mask).unwrap();

        let mean: f64 = heights.iter().zip(&probs).map(|(d, p)| d * p).sum();
        let var: f64 = heights.iter().zip(&probs).map(|(d, p)| p * (d - mean).powi(2)).sum();
        let h = expected_height(&planes, &vol).unwrap();
        prop_assert!((h.values()[0] - mean).abs() <= 1e-9);
        let s = pixel_std(&planes, &vol, &h).unwrap();
        prop_assert!((s.values()[0] - var.sqrt()).abs() <= 1e-9);
    }

    #[test]
    fn equal_planes_are_linspace(lo in -100.0f64..100.0, width in 0.0f64..100.0, m in 2usize..40) {
        let p = equal_planes(PixelRange::from_bounds(lo, lo + width), m).unwrap();
        prop_assert_eq!(p.len(), m);
        prop_assert_eq!(p[0], lo);
        prop_assert_eq!(p[m - 1], lo + width);
        prop_assert!(p.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn grid_partition_respects_mask() {
    use terraslope_core::partition::{pixel_range, slope_guided_partition};
    use terraslope_core::slope::slope_factor_map;
    let h = HeightGrid::new(2, 2, 1.0, vec![10.0, 12.0, -9999.0, 14.0]).unwrap();
    let sigma = HeightGrid::new(2, 2, 1.0, vec![1.0; 4]).unwrap();
    let ranges = pixel_range(&h, &sigma, 3.0).unwrap();
    let planes = slope_guided_partition(&h, &ranges, &slope_factor_map(&h), 6).unwrap();
    assert_eq!(planes.mask().bits(), &[true, true, false, true]);
    for i in [0, 1, 3] {
        let px = planes.pixel(i);
        assert_eq!(px.len(), 6);
        assert_eq!(px[0], h.values()[i] - 3.0);
    }
}
