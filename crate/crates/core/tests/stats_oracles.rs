mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qpcr_xai::stats::{bh_fdr, welch_t};

#[test]
fn welch_matches_quadrature_on_200_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let na = rng.random_range(3..=10);
        let nb = rng.random_range(3..=10);
        let shift = rng.random_range(-3.0..3.0);
        let sa = rng.random_range(0.2..3.0);
        let sb = rng.random_range(0.2..3.0);
        let a: Vec<f64> = (0..na).map(|_| 25.0 + sa * rng.random_range(-1.7..1.7)).collect();
        let b: Vec<f64> = (0..nb).map(|_| 25.0 + shift + sb * rng.random_range(-1.7..1.7)).collect();
        let w = welch_t(&a, &b).unwrap();
        let (t, df) = common::welch_reference(&a, &b);
        assert!((w.t - t).abs() < 1e-9 * t.abs().max(1.0));
        assert!((w.df - df).abs() < 1e-9 * df);
        let oracle = common::t_two_sided_by_quadrature(t, df);
        worst = worst.max((w.p - oracle).abs());
    }
    assert!(worst < 1e-6, "max |p - oracle| = {worst:e}");
}

#[test]
fn welch_frozen_example() {
    let w = welch_t(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
    assert!((w.p - common::t_two_sided_by_quadrature(w.t, w.df)).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bh_is_monotone_and_dominates_p(p in prop::collection::vec(0.0f64..=1.0, 1..60)) {
        let q = bh_fdr(&p).unwrap();
        prop_assert_eq!(q.len(), p.len());
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        for w in order.windows(2) {
            prop_assert!(q[w[0]] <= q[w[1]]);
        }
        for (qi, pi) in q.iter().zip(&p) {
            prop_assert!(*qi >= *pi && *qi <= 1.0);
        }
    }

    #[test]
    fn welch_is_antisymmetric(
        a in prop::collection::vec(10.0f64..40.0, 2..9),
        b in prop::collection::vec(10.0f64..40.0, 2..9),
    ) {
        let ab = welch_t(&a, &b).unwrap();
        let ba = welch_t(&b, &a).unwrap();
        prop_assert!((ab.t + ba.t).abs() < 1e-9 * ab.t.abs().max(1.0));
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }
}
