mod common;

use common::{golden_section, grid_from, naive_correct};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use terraslope_core::correction::{correct, fit_scale, GaussianKernel};
use terraslope_core::HeightGrid;

fn cells(n: usize) -> impl Strategy<Value = Vec<Option<f64>>> {
    prop::collection::vec(
        prop_oneof![1 => Just(None), 5 => (-300.0f64..300.0).prop_map(Some)],
        n,
    )
}

fn masked_grid() -> impl Strategy<Value = HeightGrid> {
    (1usize..=8, 1usize..=8)
        .prop_flat_map(|(r, c)| cells(r * c).prop_map(move |v| grid_from(r, c, &v)))
}

fn grid_pair() -> impl Strategy<Value = (HeightGrid, HeightGrid)> {
    (1usize..=8, 1usize..=8).prop_flat_map(|(r, c)| {
        (cells(r * c), cells(r * c))
            .prop_map(move |(a, b)| (grid_from(r, c, &a), grid_from(r, c, &b)))
    })
}

fn squared_loss(smoothed: &HeightGrid, target: &HeightGrid, scale: f64) -> f64 {
    (0..smoothed.len())
        .filter_map(|i| Some((scale * smoothed.value(i)? - target.value(i)?).powi(2)))
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_naive_loop(g in masked_grid(), scale in -3.0f64..3.0) {
        let out = correct(&g, &GaussianKernel::new(scale).unwrap());
        for (i, want) in naive_correct(&g, scale).into_iter().enumerate() {
            match (out.value(i), want) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs())),
                (None, None) => {}
                other => prop_assert!(false, "mask mismatch {:?}", other),
            }
        }
    }

    #[test]
    fn linear_in_input(g1 in masked_grid(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let g2 = g1.map_valid(|i, v| (v * 0.37 + i as f64).sin() * 50.0).unwrap();
        let mixed = g1.map_valid(|i, v| a * v + b * g2.values()[i]).unwrap();
        let k = GaussianKernel::default();
        let (c1, c2, cm) = (correct(&g1, &k), correct(&g2, &k), correct(&mixed, &k));
        for i in 0..g1.len() {
            if let Some(v) = cm.value(i) {
                let want = a * c1.values()[i] + b * c2.values()[i];
                prop_assert!((v - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn unit_kernel_stays_within_window(g in masked_grid()) {
        let out = correct(&g, &GaussianKernel::default());
        for r in 0..g.rows() {
            for c in 0..g.cols() {
                if let Some(v) = out.get(r, c) {
                    let w = common::brute_window(&g, r, c);
                    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
                }
            }
        }
    }

    #[test]
    fn fit_is_locally_optimal((g, t) in grid_pair()) {
        let Ok(k) = fit_scale(&g, &t) else { return Ok(()); };
        let smoothed = correct(&g, &GaussianKernel::default());
        let at = squared_loss(&smoothed, &t, k.scale());
        prop_assert!(at <= squared_loss(&smoothed, &t, k.scale() + 1e-3));
        prop_assert!(at <= squared_loss(&smoothed, &t, k.scale() - 1e-3));
    }
}

#[test]
fn fit_matches_golden_section_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let noisy = HeightGrid::from_fn(5, 5, 1.0, |_, _| rng.random_range(-50.0..50.0)).unwrap();
        let target = HeightGrid::from_fn(5, 5, 1.0, |_, _| rng.random_range(-50.0..50.0)).unwrap();
        let smoothed = correct(&noisy, &GaussianKernel::default());
        let fitted = fit_scale(&noisy, &target).unwrap().scale();
        let searched = golden_section(|s| squared_loss(&smoothed, &target, s), -10.0, 10.0, 1e-9);
        assert!((fitted - searched).abs() < 1e-6, "{fitted} vs {searched}");
    }
}

#[test]
fn smoothing_reduces_noise_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let g = HeightGrid::from_fn(24, 24, 1.0, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        let out = correct(&g, &GaussianKernel::default());
        let interior = |grid: &HeightGrid| -> Vec<f64> {
            (2..22)
                .flat_map(|r| (2..22).map(move |c| (r, c)))
                .map(|(r, c)| grid.get(r, c).unwrap())
                .collect()
        };
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        assert!(var(&interior(&out)) <= var(&interior(&g)));
    }
}
