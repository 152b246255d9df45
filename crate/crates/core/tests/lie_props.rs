use ccl_core::lie::{theta, MatrixLieAlgebra};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_sl(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut x = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let t = x.trace() / n as f64;
    for i in 0..n {
        x[(i, i)] -= t;
    }
    x
}

fn p_part(x: &DMatrix<f64>) -> DMatrix<f64> {
    (x - theta(x)) * 0.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn killing_form_is_trace_form(seed in any::<u64>(), n in 2usize..=4) {
        let alg = MatrixLieAlgebra::sl(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (random_sl(&mut rng, n), random_sl(&mut rng, n));
        let beta = alg.killing_form(&x, &y).unwrap();
        let closed = 2.0 * n as f64 * (&x * &y).trace();
        prop_assert!((beta - closed).abs() <= 1e-10 * (1.0 + closed.abs()), "{beta} vs {closed}");
    }

    #[test]
    fn beta_theta_is_positive(seed in any::<u64>(), n in 2usize..=4) {
        let alg = MatrixLieAlgebra::sl(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_sl(&mut rng, n);
        prop_assert!(alg.beta_theta(&x, &x).unwrap() > 0.0);
    }

    #[test]
    fn algebraic_curvature_is_bounded_by_roots(seed in any::<u64>(), n in 2usize..=4, lambda in 0.1f64..3.0) {
        let alg = MatrixLieAlgebra::sl(n).unwrap();
        let rd = alg.restricted_roots().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (p_part(&random_sl(&mut rng, n)), p_part(&random_sl(&mut rng, n)));
        let sec = alg.algebraic_sectional_curvature(&x, &y, lambda).unwrap();
        let bound = rd.max_root_norm.powi(2) / lambda;
        prop_assert!(sec <= 1e-12 && sec >= -bound * (1.0 + 1e-6), "{sec} vs -{bound}");
    }
}

#[test]
fn every_root_has_an_extremal_plane() {
    for alg in [MatrixLieAlgebra::sl(2).unwrap(), MatrixLieAlgebra::sl(3).unwrap(), MatrixLieAlgebra::sl(4).unwrap(), MatrixLieAlgebra::so(3).unwrap()] {
        let rd = alg.restricted_roots().unwrap();
        for lambda in [0.5, 1.0, 2.0] {
            for root in &rd.roots {
                let (h, y) = rd.root_plane(root);
                let sec = alg.algebraic_sectional_curvature(&h, &y, lambda).unwrap();
                assert!((sec + root.norm_sq / lambda).abs() < 1e-8, "{sec} vs {}", -root.norm_sq / lambda);
            }
        }
    }
}

#[test]
fn so_m1_roots_have_no_doubles() {
    for m in 2..=5 {
        let rd = MatrixLieAlgebra::so(m).unwrap().restricted_roots().unwrap();
        assert_eq!(rd.rank(), 1);
        assert_eq!(rd.roots.len(), 2);
        let total: usize = rd.roots.iter().map(|r| r.multiplicity).sum::<usize>() + rd.rank() + rd.centralizer_k_dim;
        assert_eq!(total, rd.algebra_dim);
    }
}
