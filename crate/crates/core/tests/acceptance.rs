//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Build with optimizations (the test profile does).

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ccl_core::error::Result;
use ccl_core::gauss::lipschitz_audit;
use ccl_core::lie::{bracket, metric_scale_bound, MatrixLieAlgebra};
use ccl_core::sampling;
use ccl_core::space::SymmetricSpace;
use ccl_core::surface::{ball_volume, Hypersurface, Integrand, RadialMode, SurfaceSpec};
use ccl_core::verify::{self, ContactRecord};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

const DIRECTIONS: usize = 500;
const SEED: u64 = 42;

/// Facts gathered by a criterion; it passes iff every fact holds.
#[derive(Default)]
struct Facts(Vec<(bool, String)>);

impl Facts {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.0.push((ok, what.into()));
    }
}

fn space(spec: &str) -> SymmetricSpace {
    SymmetricSpace::parse(spec).unwrap()
}

struct TestSurface {
    label: &'static str,
    m: Hypersurface,
    sweep: Vec<Result<ContactRecord>>,
    elapsed: Duration,
}

/// The surfaces shared by the surface criteria, each with its sweep.
fn test_surfaces() -> &'static [TestSurface] {
    static CELL: OnceLock<Vec<TestSurface>> = OnceLock::new();
    CELL.get_or_init(|| {
        let list: [(&str, &str, SurfaceSpec); 5] = [
            ("E3 unit sphere", "euclidean:3", SurfaceSpec::GeodesicSphere { r: 1.0 }),
            ("H3 sphere r=0.5", "hyperbolic:3", SurfaceSpec::GeodesicSphere { r: 0.5 }),
            ("H3 sphere r=1", "hyperbolic:3", SurfaceSpec::GeodesicSphere { r: 1.0 }),
            ("H3 graph amp=0.2", "hyperbolic:3", SurfaceSpec::RadialGraph { base: 1.0, mode: RadialMode::Coord, amp: 0.2 }),
            ("H2xR sphere r=0.75", "hyperbolic:2xeuclidean:1", SurfaceSpec::GeodesicSphere { r: 0.75 }),
        ];
        list.into_iter()
            .map(|(label, spec, s)| {
                let start = Instant::now();
                let sp = space(spec);
                let m = Hypersurface::new(&sp, &sp.base_point(), s, "64x128".parse().unwrap()).unwrap();
                let sweep = verify::direction_sweep(&m, m.center(), DIRECTIONS, SEED);
                TestSurface { label, m, sweep, elapsed: start.elapsed() }
            })
            .collect()
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn c1(f: &mut Facts) {
    let start = Instant::now();
    let sp = space("euclidean:3");
    let m = Hypersurface::geodesic_sphere(&sp, &sp.base_point(), 1.0, "64x128".parse().unwrap()).unwrap();
    let area = m.integrate(Integrand::Area).unwrap();
    let tc = m.integrate(Integrand::TotalCurvature).unwrap();
    let iso = verify::isoperimetric_check(&sp, &sp.base_point(), 1.0, "64x128".parse().unwrap()).unwrap();
    let t = start.elapsed();
    f.check(rel(area, 4.0 * PI) <= 1e-3, format!("area rel err {:.1e}", rel(area, 4.0 * PI)));
    f.check(rel(tc, 4.0 * PI) <= 1e-3, format!("total curvature rel err {:.1e}", rel(tc, 4.0 * PI)));
    f.check(rel(iso.lhs, 36.0 * PI) <= 1e-3, format!("isoperimetric ratio rel err {:.1e}", rel(iso.lhs, 36.0 * PI)));
    f.check(t < Duration::from_secs(5), format!("{:.2}s", t.as_secs_f64()));
}

fn c2(f: &mut Facts) {
    for s in &test_surfaces()[1..4] {
        let start = Instant::now();
        let rep = verify::total_curvature_check(&s.m, &s.sweep, SEED);
        let t = s.elapsed + start.elapsed();
        if let SurfaceSpec::GeodesicSphere { r } = *s.m.spec() {
            let closed = 4.0 * PI * r.cosh().powi(2);
            let floor = (-6.0 * 2.0 * r).exp() * 4.0 * PI;
            f.check(rel(rep.lhs, closed) <= 5e-3, format!("{}: rel err vs 4pi cosh^2 r {:.1e}", s.label, rel(rep.lhs, closed)));
            f.check(rep.lhs >= floor, format!("{}: lhs/e^(-12r)4pi = {:.3e}", s.label, rep.lhs / floor));
        }
        f.check(rep.pass, format!("{}: margin {:.3e}", s.label, rep.margin));
        f.check(t < Duration::from_secs(60), format!("{}: {:.1}s", s.label, t.as_secs_f64()));
    }
}

fn c3(f: &mut Facts) {
    let start = Instant::now();
    for spec in ["spd:3,lambda=1", "hyperbolic:3"] {
        let rep = verify::hessian_oracle_check(&space(spec), 50, 2.0, SEED);
        f.check(rep.pass && rep.lhs <= 1e-3, format!("{spec}: max entry err {:.1e}", rep.lhs));
    }
    let t = start.elapsed();
    f.check(t < Duration::from_secs(300), format!("{:.1}s", t.as_secs_f64()));
}

fn c4(f: &mut Facts) {
    for spec in ["euclidean:3", "hyperbolic:3", "spd:3", "hyperbolic:2xeuclidean:1"] {
        let rep = verify::hessian_bounds_check(&space(spec), 1000, 2.0, SEED);
        f.check(
            rep.pass,
            format!("{spec}: norm ratio {:.6}, difference ratio {:.3}", rep.details["norm_ratio"], rep.details["difference_ratio"]),
        );
    }
}

fn c5(f: &mut Facts) {
    for spec in ["hyperbolic:3", "spd:3"] {
        let rep = verify::lipschitz_check(&space(spec), 500, 1.0, SEED);
        f.check(rep.pass, format!("{spec}: worst normalized ratio {:.4}", rep.lhs));
    }
    let e = space("euclidean:3");
    let a = lipschitz_audit(&e, &e.base_point(), 500, 1.0, SEED).unwrap();
    f.check(a.worst_ratio == 1.0 && a.failures == 0, format!("euclidean:3: worst ratio {}", a.worst_ratio));
}

fn c6(f: &mut Facts) {
    for s in test_surfaces() {
        let rep = verify::gauss_consistency_check(&s.m, s.m.center());
        f.check(rep.pass && s.m.len() >= 1000, format!("{}: {} nodes, max residual {:.1e}", s.label, s.m.len(), rep.lhs));
    }
}

fn c7(f: &mut Facts) {
    for s in test_surfaces() {
        let tc = verify::total_curvature_check(&s.m, &s.sweep, SEED);
        let contact = verify::contact_check(&s.m, &s.sweep, SEED);
        let jac = verify::jacobian_check(&s.m, &s.sweep, SEED);
        f.check(
            tc.details["sweep.unmatched"] == 0.0 && tc.details["sweep.margin"] >= 0.0,
            format!("{}: worst S_M residual {:.1e}", s.label, tc.details["sweep.worst_residual"]),
        );
        f.check(contact.pass, format!("{}: worst normal gap {:.1e}", s.label, contact.lhs));
        f.check(
            jac.pass,
            format!(
                "{}: floors {:.2e}/{:.2e}, J ratio {:.2e}, {} excluded",
                s.label, jac.details["support.margin"], jac.details["convexity.margin"], jac.lhs, jac.details["points.excluded"]
            ),
        );
    }
}

fn c8(f: &mut Facts) {
    for s in test_surfaces() {
        let rep = verify::willmore_check(&s.m);
        f.check(rep.pass, format!("{}: margin {:.3e}", s.label, rep.margin));
        if matches!(s.m.spec(), SurfaceSpec::GeodesicSphere { .. }) && !s.label.starts_with("H2xR") {
            let gap = rel(rep.lhs, rep.details["total_curvature"]);
            f.check(gap <= 1e-6, format!("{}: willmore/total curvature gap {:.1e}", s.label, gap));
        }
    }
}

fn c9(f: &mut Facts) {
    let grid = "64x128".parse().unwrap();
    let h = space("hyperbolic:3");
    for r in [0.25, 0.5, 1.0] {
        let rep = verify::isoperimetric_check(&h, &h.base_point(), r, grid).unwrap();
        let vol = ball_volume(&h, &h.base_point(), r).unwrap();
        let closed = PI * ((2.0 * r).sinh() - 2.0 * r);
        f.check(rep.pass && rep.margin >= -1e-6, format!("H3 r={r}: margin {:.3e}", rep.margin));
        f.check(rel(vol, closed) <= 1e-3, format!("H3 r={r}: volume rel err {:.1e}", rel(vol, closed)));
    }
    let e = space("euclidean:3");
    let rep = verify::isoperimetric_check(&e, &e.base_point(), 1.0, grid).unwrap();
    let vol = ball_volume(&e, &e.base_point(), 1.0).unwrap();
    f.check(rep.pass, format!("E3 r=1: margin {:.3e}", rep.margin));
    f.check(rel(vol, 4.0 * PI / 3.0) <= 1e-3, format!("E3 r=1: volume rel err {:.1e}", rel(vol, 4.0 * PI / 3.0)));
}

fn c10(f: &mut Facts) {
    let det = verify::det_comparison_audit(10, 1000, SEED).unwrap();
    f.check(det.pass, format!("det audit worst ratio {:.3e}", det.lhs));
    let sqrt = verify::sqrt_perturbation_audit(12, 1000, SEED).unwrap();
    f.check(sqrt.pass, format!("sqrt audit worst ratio {:.3}", sqrt.lhs));
}

fn c11(f: &mut Facts) {
    let g = MatrixLieAlgebra::sl(3).unwrap();
    let rd = g.restricted_roots().unwrap();
    f.check(rd.roots.len() == 6, format!("{} roots", rd.roots.len()));
    // the dual vector is solved from the trace-form Gram matrix of the
    // abelian basis, independently of the library's Killing form
    let gram = DMatrix::from_fn(rd.rank(), rd.rank(), |a, b| 6.0 * (&rd.abelian_basis[a] * &rd.abelian_basis[b]).trace());
    let gram_inv = gram.clone().try_inverse().unwrap();
    let mut worst: f64 = 0.0;
    for root in &rd.roots {
        // α(H_b) read off from [H_b, E] = α(H_b) E
        let e = &root.root_vector;
        let k = e.iamax_full();
        let values = DVector::from_iterator(rd.rank(), rd.abelian_basis.iter().map(|h| bracket(h, e)[k] / e[k]));
        let norm_sq = values.dot(&(&gram_inv * &values));
        worst = worst.max((norm_sq - 1.0 / 3.0).abs()).max((root.norm_sq - 1.0 / 3.0).abs());
    }
    f.check(worst <= 1e-10, format!("max ||a|^2 - 1/3| {worst:.1e}"));
    let bound = metric_scale_bound(&rd, 1.0).unwrap();
    f.check((bound - 1.0 / 3.0).abs() <= 1e-10, format!("metric scale bound {bound:.12}"));
    let mut rng = sampling::stream(SEED, 11);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut x = DMatrix::from_fn(3, 3, |_, _| StandardNormal.sample(&mut rng));
        let mut y = DMatrix::from_fn(3, 3, |_, _| StandardNormal.sample(&mut rng));
        let (tx, ty) = (x.trace() / 3.0, y.trace() / 3.0);
        for i in 0..3 {
            x[(i, i)] -= tx;
            y[(i, i)] -= ty;
        }
        let closed = 6.0 * (&x * &y).trace();
        worst = worst.max((g.killing_form(&x, &y).unwrap() - closed).abs() / (1.0 + closed.abs()));
    }
    f.check(worst <= 1e-10, format!("Killing vs 6 tr(XY) worst {worst:.1e}"));
}

fn c12(f: &mut Facts) {
    let start = Instant::now();
    let sp = space("spd:3");
    let m = Hypersurface::geodesic_sphere(&sp, &sp.base_point(), 1.0, "12^4".parse().unwrap()).unwrap();
    let sweep = verify::direction_sweep(&m, m.center(), DIRECTIONS, SEED);
    let rep = verify::total_curvature_check(&m, &sweep, SEED);
    let t = start.elapsed();
    f.check(rep.pass, format!("margin {:.3e}, sweep worst residual {:.1e}", rep.margin, rep.details["sweep.worst_residual"]));
    f.check(t < Duration::from_secs(600), format!("{:.1}s", t.as_secs_f64()));
}

type Criterion = (&'static str, fn(&mut Facts));

fn main() {
    let criteria: [Criterion; 12] = [
        ("euclidean baseline", c1),
        ("total curvature on H3", c2),
        ("hessian cross-validation", c3),
        ("hessian bounds", c4),
        ("direction translation Lipschitz audit", c5),
        ("gauss map consistency", c6),
        ("contact pipeline", c7),
        ("willmore", c8),
        ("isoperimetric on balls", c9),
        ("algebraic audits", c10),
        ("sl(3) root structure", c11),
        ("SPD(3) end to end", c12),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut facts = Facts::default();
        let outcome = catch_unwind(AssertUnwindSafe(|| run(&mut facts)));
        let ok = outcome.is_ok() && !facts.0.is_empty() && facts.0.iter().all(|(ok, _)| *ok);
        failed += usize::from(!ok);
        let mut detail: Vec<String> =
            facts.0.iter().map(|(ok, s)| if *ok { s.clone() } else { format!("[fails] {s}") }).collect();
        if outcome.is_err() {
            detail.push("[panicked]".into());
        }
        println!(
            "{} {:>2} {} ({:.1}s): {}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            name,
            start.elapsed().as_secs_f64(),
            detail.join("; ")
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
