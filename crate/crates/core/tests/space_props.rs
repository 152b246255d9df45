mod common;

use common::{rng, spaces};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn exp_log_round_trip(seed in any::<u64>(), which in 0usize..7) {
        let s = &spaces()[which];
        let mut r = rng(seed);
        let x = s.random_point(&mut r, 1.0);
        let len = 5.0 * r.random::<f64>();
        let v = s.random_unit_tangent(&mut r, &x).scale(len);
        let y = s.exp(&x, &v);
        let back = s.log(&x, &y);
        prop_assert!(s.norm(&x, &back.sub(&v)) < 1e-9 * (1.0 + len));
        prop_assert!(s.distance(&s.exp(&x, &back), &y) < 1e-9);
        prop_assert!((s.distance(&x, &y) - s.norm(&x, &back)).abs() < 1e-9);
    }

    #[test]
    fn triangle_inequality(seed in any::<u64>(), which in 0usize..7) {
        let s = &spaces()[which];
        let mut r = rng(seed);
        let (a, b, c) = (s.random_point(&mut r, 3.0), s.random_point(&mut r, 3.0), s.random_point(&mut r, 3.0));
        let slack = s.distance(&a, &b) + s.distance(&b, &c) - s.distance(&a, &c);
        prop_assert!(slack >= -1e-9, "slack {slack}");
    }

    #[test]
    fn geodesics_realize_distance(seed in any::<u64>(), which in 0usize..7) {
        let s = &spaces()[which];
        let mut r = rng(seed);
        let x = s.random_point(&mut r, 2.0);
        let v = s.random_unit_tangent(&mut r, &x);
        for k in 0..=10 {
            let t = 0.5 * k as f64;
            let d = s.distance(&x, &s.exp(&x, &v.scale(t)));
            prop_assert!((d - t).abs() < 1e-9, "t = {t}: {d}");
        }
    }

    #[test]
    fn point_symmetry_is_isometric_involution(seed in any::<u64>(), which in 0usize..7) {
        let s = &spaces()[which];
        let mut r = rng(seed);
        let (x, y, z) = (s.random_point(&mut r, 2.0), s.random_point(&mut r, 2.0), s.random_point(&mut r, 2.0));
        let (sy, sz) = (s.point_symmetry(&x, &y), s.point_symmetry(&x, &z));
        prop_assert!((s.distance(&sy, &sz) - s.distance(&y, &z)).abs() < 1e-9);
        prop_assert!(s.distance(&s.point_symmetry(&x, &sy), &y) < 1e-9);
    }

    #[test]
    fn transport_round_trip(seed in any::<u64>(), which in 0usize..7) {
        let s = &spaces()[which];
        let mut r = rng(seed);
        let (x, y) = (s.random_point(&mut r, 2.0), s.random_point(&mut r, 2.0));
        let v = s.random_unit_tangent(&mut r, &x).scale(2.0);
        let w = s.parallel_transport(&x, &y, &v);
        prop_assert!((s.norm(&y, &w) - 2.0).abs() < 1e-9);
        let back = s.parallel_transport(&y, &x, &w);
        prop_assert!(s.norm(&x, &back.sub(&v)) < 1e-9);
    }

    #[test]
    fn sectional_curvature_within_bounds(seed in any::<u64>(), which in 0usize..7) {
        let s = &spaces()[which];
        let mut r = rng(seed);
        let x = s.random_point(&mut r, 2.0);
        let (a, b) = (s.random_unit_tangent(&mut r, &x), s.random_unit_tangent(&mut r, &x));
        let k = s.curvature_lower_bound();
        let sec = s.sectional_curvature(&x, &a, &b).unwrap();
        prop_assert!(sec <= 1e-10 && sec >= -k * k, "sec {sec}, κ {k}");
    }
}

#[test]
fn frame_is_orthonormal_and_deterministic() {
    let mut r = rng(5);
    for s in spaces() {
        let x = s.random_point(&mut r, 2.0);
        let f = s.frame_at(&x);
        assert_eq!(f.len(), s.dim());
        for i in 0..f.len() {
            for j in 0..f.len() {
                let g = s.inner(&x, &f[i], &f[j]);
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert_eq!(f, s.frame_at(&x));
    }
}
