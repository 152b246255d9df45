mod common;

use std::f64::consts::PI;

use ccl_core::space::SymmetricSpace;
use ccl_core::surface::{Hypersurface, Integrand, RadialMode, SurfaceSpec};
use nalgebra::DVector;
use proptest::prelude::*;

fn surface(spec: &str, s: SurfaceSpec, grid: &str) -> Hypersurface {
    let space = SymmetricSpace::parse(spec).unwrap();
    Hypersurface::new(&space, &space.base_point(), s, grid.parse().unwrap()).unwrap()
}

fn unit(c: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(c).normalize()
}

fn mode(i: usize) -> RadialMode {
    [RadialMode::Coord, RadialMode::Zonal, RadialMode::Sectoral][i]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normal_points_away_from_center(
        which in 0usize..3, m in 0usize..3, amp in -0.3f64..0.3, base in 0.3f64..1.5,
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0,
    ) {
        prop_assume!(a * a + b * b + c * c > 1e-2);
        let spec = ["euclidean:3", "hyperbolic:3", "hyperbolic:2xeuclidean:1"][which];
        let h = surface(spec, SurfaceSpec::RadialGraph { base, mode: mode(m), amp }, "4x8");
        let space = h.space();
        let s = unit(&[a, b, c]);
        let (x, nu) = h.normal_at(&s).unwrap();
        prop_assert!((space.norm(&x, &nu) - 1.0).abs() < 1e-10);
        prop_assert!(space.inner(&x, &nu, &space.log(&x, h.center())) < 0.0);
        let (_, tangents, _) = h.local_frame(&s).unwrap();
        for t in &tangents {
            prop_assert!(space.inner(&x, &nu, t).abs() < 1e-8 * space.norm(&x, t).max(1.0));
        }
    }

    #[test]
    fn spheres_are_umbilic(r in 0.1f64..2.0, kappa in 0.2f64..3.0, a in -1.0f64..1.0, b in -1.0f64..1.0, c in 0.1f64..1.0) {
        // ambient round-off under finite differences grows like e^{2κr}
        prop_assume!(kappa * r <= 3.0);
        let h = surface(&format!("hyperbolic:3,kappa={kappa}"), SurfaceSpec::GeodesicSphere { r }, "4x8");
        let d = h.fundamental_at(&unit(&[a, b, c])).unwrap();
        // sectional curvature is -κ²
        let expected = kappa / (kappa * r).tanh();
        let shape = d.shape.as_matrix();
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { expected } else { 0.0 };
                prop_assert!((shape[(i, j)] - e).abs() < 1e-5 * expected.max(1.0), "{shape} vs {expected}");
            }
        }
        prop_assert!((d.gauss_kronecker - expected * expected).abs() < 1e-5 * expected * expected);
    }
}

#[test]
fn sphere_total_curvature_is_grid_stable() {
    // the quadrature is exact for the constant integrand; what is left is
    // the finite-difference error of the shape operator
    let exact = 4.0 * PI * 1f64.cosh().powi(2);
    for g in ["8x16", "16x32", "32x64", "64x128"] {
        let h = surface("hyperbolic:3", SurfaceSpec::GeodesicSphere { r: 1.0 }, g);
        let err = (h.integrate(Integrand::TotalCurvature).unwrap() - exact).abs() / exact;
        assert!(err < 1e-6, "{g}: {err}");
    }
}

#[test]
fn perturbed_graph_integrals_converge() {
    let spec = SurfaceSpec::RadialGraph { base: 1.0, mode: RadialMode::Zonal, amp: 0.2 };
    let vals: Vec<f64> = ["16x32", "32x64", "64x128"]
        .iter()
        .map(|g| surface("hyperbolic:3", spec, g).integrate(Integrand::TotalCurvature).unwrap())
        .collect();
    let (d1, d2) = ((vals[1] - vals[0]).abs(), (vals[2] - vals[1]).abs());
    assert!(d2 < 0.5 * d1, "{vals:?}");
    assert!(d2 / vals[2] < 1e-3, "{vals:?}");
}

#[test]
fn willmore_equals_total_curvature_on_umbilic_spheres() {
    for (spec, r) in [("euclidean:3", 1.0), ("hyperbolic:3", 0.5), ("hyperbolic:3", 1.0), ("hyperbolic:4,kappa=0.5", 0.7)] {
        let grid = if spec.contains(":4") { "10^3" } else { "24x48" };
        let h = surface(spec, SurfaceSpec::GeodesicSphere { r }, grid);
        let w = h.integrate(Integrand::Willmore).unwrap();
        let t = h.integrate(Integrand::TotalCurvature).unwrap();
        assert!((w / t - 1.0).abs() < 1e-6, "{spec} r={r}: {w} vs {t}");
    }
}

#[test]
fn area_of_hyperbolic_sphere() {
    for r in [0.25, 0.5, 1.0] {
        let h = surface("hyperbolic:3", SurfaceSpec::GeodesicSphere { r }, "64x128");
        let exact = 4.0 * PI * f64::sinh(r).powi(2);
        assert!((h.integrate(Integrand::Area).unwrap() / exact - 1.0).abs() < 1e-6);
    }
}
