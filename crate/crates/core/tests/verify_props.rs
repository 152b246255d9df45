mod common;

use ccl_core::gauss::gauss_map_at;
use ccl_core::sampling;
use ccl_core::space::SymmetricSpace;
use ccl_core::surface::{Hypersurface, RadialMode, SurfaceSpec};
use ccl_core::verify::{self, first_contact};
use nalgebra::DVector;
use proptest::prelude::*;

fn surface(spec: &str, s: SurfaceSpec, grid: &str) -> Hypersurface {
    let space = SymmetricSpace::parse(spec).unwrap();
    Hypersurface::new(&space, &space.base_point(), s, grid.parse().unwrap()).unwrap()
}

fn graph(amp: f64, base: f64) -> SurfaceSpec {
    SurfaceSpec::RadialGraph { base, mode: RadialMode::Zonal, amp }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn contact_levels_are_lipschitz_in_direction(seed in any::<u64>(), eps in 1e-3f64..0.2) {
        let h = surface("hyperbolic:3", graph(0.2, 1.0), "16x32");
        let o = h.center();
        let space = h.space();
        let mut rng = sampling::stream(seed, 0);
        let a = sampling::unit_vector(&mut rng, 3);
        let b = (&a + sampling::gaussian_vector(&mut rng, 3) * eps).normalize();
        let ra = first_contact(&h, o, &space.from_frame(o, &a)).unwrap();
        let rb = first_contact(&h, o, &space.from_frame(o, &b)).unwrap();
        let d = h.diameter_extrinsic();
        prop_assert!((ra.level - rb.level).abs() <= d * (&a - &b).norm() + 1e-6);
        prop_assert!((ra.refined_level - rb.refined_level).abs() <= d * (&a - &b).norm() + 1e-6);
    }

    #[test]
    fn enlarging_the_surface_never_lowers_contact(seed in any::<u64>(), grow in 0.0f64..0.5) {
        let small = surface("hyperbolic:3", graph(0.15, 0.8), "12x24");
        let large = surface("hyperbolic:3", graph(0.15, 0.8 + grow), "12x24");
        let o = small.center();
        let mut rng = sampling::stream(seed, 1);
        let v = small.space().from_frame(o, &sampling::unit_vector(&mut rng, 3));
        let a = first_contact(&small, o, &v).unwrap();
        let b = first_contact(&large, o, &v).unwrap();
        prop_assert!(b.level >= a.level - 1e-12);
        prop_assert!(b.refined_level >= a.refined_level - 1e-9);
    }

    #[test]
    fn gauss_map_is_consistent_on_graphs(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, which in 0usize..3) {
        prop_assume!(a * a + b * b + c * c > 1e-2);
        let spec = ["hyperbolic:3", "hyperbolic:2xeuclidean:1", "euclidean:3"][which];
        let h = surface(spec, graph(0.2, 0.7), "4x8");
        let s = DVector::from_column_slice(&[a, b, c]).normalize();
        let g = gauss_map_at(&h, &s, h.center()).unwrap();
        prop_assert!(g.residual <= 1e-5);
        prop_assert!((h.space().norm(h.center(), &g.v) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn generic_directions_have_a_single_contact_node() {
    let h = surface("hyperbolic:3", graph(0.2, 1.0), "32x64");
    let sweep = verify::direction_sweep(&h, h.center(), 100, 3);
    let tied = sweep.iter().filter(|r| r.as_ref().unwrap().nodes.len() > 1).count();
    assert!(tied <= 2, "{tied} of 100 directions tied");
    for r in &sweep {
        let r = r.as_ref().unwrap();
        assert!(!r.points.is_empty());
        assert!(r.refined_level >= r.level);
    }
}

#[test]
fn gauss_map_lipschitz_on_spheres() {
    for (spec, r) in [("euclidean:3", 1.0), ("hyperbolic:3", 0.5), ("hyperbolic:3", 1.0)] {
        let h = surface(spec, SurfaceSpec::GeodesicSphere { r }, "16x32");
        let rep = verify::gauss_lipschitz_check(&h, h.center());
        assert!(rep.pass, "{spec} r={r}: {rep:?}");
    }
}

#[test]
fn sweep_checks_pass_on_perturbed_surfaces() {
    for (spec, s) in [
        ("hyperbolic:3", graph(0.2, 1.0)),
        ("hyperbolic:3", SurfaceSpec::RadialGraph { base: 0.5, mode: RadialMode::Sectoral, amp: 0.2 }),
        ("hyperbolic:2xeuclidean:1", SurfaceSpec::GeodesicSphere { r: 0.75 }),
    ] {
        let h = surface(spec, s, "32x64");
        let sweep = verify::direction_sweep(&h, h.center(), 100, 11);
        for rep in [verify::contact_check(&h, &sweep, 11), verify::jacobian_check(&h, &sweep, 11), verify::total_curvature_check(&h, &sweep, 11)] {
            assert!(rep.pass, "{spec} {s}: {rep:?}");
        }
    }
}

#[test]
fn isoperimetric_small_ball_tends_to_euclidean_constant() {
    let space = SymmetricSpace::parse("hyperbolic:3").unwrap();
    let r = verify::isoperimetric_check(&space, &space.base_point(), 1e-2, "32x64".parse().unwrap()).unwrap();
    assert!(r.pass);
    assert!((r.lhs / (36.0 * std::f64::consts::PI) - 1.0).abs() < 1e-3, "{}", r.lhs);
}
