//! Surface checks and sampled Busemann/Gauss-map checks.
//!
//! Every exponent uses `κ = curvature_lower_bound` of the space and
//! `D = diameter_extrinsic(M)`, which under-estimates the diameter and so
//! makes the right-hand sides larger than the inequalities require.

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::busemann::{BusemannFunction, OracleOutput, OracleQuery};
use crate::error::{Error, Result};
use crate::gauss::{gauss_map_at, lipschitz_audit};
use crate::sampling;
use crate::space::{Point, SymmetricSpace};
use crate::surface::grid::{ball_volume_unit, sphere_area};
use crate::surface::{ball_volume, sphere_area_at, GridSpec, Hypersurface, Integrand, SurfaceSpec};
use crate::tolerances::{CHECK_TOL, LIPSCHITZ_TOL, TRANSLATION_RESIDUAL};

use super::contact::ContactRecord;
use super::report::{margin, Context, Sense, VerificationReport};

/// Largest accepted `|S_M(x) - v|` at a contact point.
pub const SWEEP_RESIDUAL: f64 = 1e-3;
/// Slack of the Jacobian bound.
pub const JACOBIAN_SLACK: f64 = 1e-3;
/// Floor for the smallest eigenvalue of `A - ∇²B_v` at contact points.
pub const SUPPORT_FLOOR: f64 = 1e-6;
/// Floor for the smallest eigenvalue of `∇²B_v`.
pub const CONVEXITY_FLOOR: f64 = 1e-8;
/// Largest accepted `|∇B_v(x) - ν(x)|` at a contact point.
pub const CONTACT_NORMAL_GAP: f64 = 1e-3;
/// Largest entrywise Hessian disagreement with the truncation oracle.
pub const HESSIAN_ORACLE_TOL: f64 = 1e-3;
/// Agreement of mesh and radial sphere areas in the isoperimetric check.
pub const AREA_QUADRATURE_TOL: f64 = 1e-3;
/// Relative tolerance of the Hessian bounds.
pub const HESSIAN_BOUND_TOL: f64 = 1e-6;

pub fn surface_context(m: &Hypersurface, seed: Option<u64>) -> Context {
    Context {
        space: m.space().spec_string(),
        surface: Some(m.spec().to_string()),
        grid: Some(m.grid().to_string()),
        kappa: m.space().curvature_lower_bound(),
        diameter: Some(m.diameter_extrinsic()),
        seed,
    }
}

pub fn space_context(space: &SymmetricSpace, seed: Option<u64>) -> Context {
    Context { space: space.spec_string(), kappa: space.curvature_lower_bound(), seed, ..Default::default() }
}

/// `e^{-n(n+1)κD} |𝕊ⁿ|`.
fn curvature_rhs(m: &Hypersurface) -> f64 {
    let n = m.dim() as f64;
    let kappa = m.space().curvature_lower_bound();
    (-n * (n + 1.0) * kappa * m.diameter_extrinsic()).exp() * sphere_area(m.dim())
}

/// `∫|GK| ≥ e^{-n(n+1)κD} |𝕊ⁿ|`, plus the sweep condition: every swept `v`
/// has a contact point with `|S_M(x) - v| ≤ 1e-3`.
pub fn total_curvature_check(m: &Hypersurface, sweep: &[Result<ContactRecord>], seed: u64) -> VerificationReport {
    let start = Instant::now();
    let ctx = surface_context(m, Some(seed));
    let lhs = match m.integrate(Integrand::TotalCurvature) {
        Ok(v) => v,
        Err(e) => return VerificationReport::failed("total-curvature", &ctx, CHECK_TOL, e.to_string()).timed(start),
    };
    let report = VerificationReport::new("total-curvature", &ctx, lhs, curvature_rhs(m), Sense::AtLeast, CHECK_TOL);
    let (worst, unmatched) = sweep_residuals(sweep);
    report
        .condition("sweep", margin(worst, SWEEP_RESIDUAL, Sense::AtMost), 0.0)
        .detail("sweep.directions", sweep.len() as f64)
        .detail("sweep.worst_residual", worst)
        .detail("sweep.unmatched", unmatched as f64)
        .note("diameter is a grid estimate from below")
        .timed(start)
}

/// Worst best-residual over the sweep and the number of unmatched
/// directions; errors count as unmatched with residual NaN.
fn sweep_residuals(sweep: &[Result<ContactRecord>]) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut unmatched = 0;
    for rec in sweep {
        let r = match rec {
            Ok(rec) => rec.best_gauss_residual(),
            Err(_) => f64::NAN,
        };
        if !(r <= SWEEP_RESIDUAL) {
            unmatched += 1;
        }
        worst = if r.is_nan() || worst.is_nan() { f64::NAN } else { worst.max(r) };
    }
    if sweep.is_empty() {
        worst = f64::NAN;
    }
    (worst, unmatched)
}

/// `∫|H/n|ⁿ ≥ e^{-n(n+1)κD} |𝕊ⁿ|`; when `A` is PSD on every node also
/// `∫|H/n|ⁿ ≥ ∫|GK|` (AM–GM).
pub fn willmore_check(m: &Hypersurface) -> VerificationReport {
    let start = Instant::now();
    let ctx = surface_context(m, None);
    let (lw, lt) = match (m.integrate(Integrand::Willmore), m.integrate(Integrand::TotalCurvature)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return VerificationReport::failed("willmore", &ctx, CHECK_TOL, e.to_string()).timed(start),
    };
    let mut report = VerificationReport::new("willmore", &ctx, lw, curvature_rhs(m), Sense::AtLeast, CHECK_TOL)
        .detail("total_curvature", lt)
        .detail("willmore_over_total_curvature", lw / lt);
    let psd = m
        .fundamental_all()
        .iter()
        .all(|d| d.as_ref().is_ok_and(|d| d.shape.min_eigenvalue() >= -SUPPORT_FLOOR));
    if psd {
        report = report.condition("am-gm", margin(lw, lt, Sense::AtLeast), CHECK_TOL);
    } else {
        report = report.note("shape operator not PSD everywhere; AM-GM comparison skipped");
    }
    report.timed(start)
}

/// At every stencil-consistent contact point:
/// `J ≤ e^{n(n+1)κD} |GK| (1 + 1e-3)`, reported as the worst ratio against
/// one. Side conditions: `A - ∇²B_v ≥ -1e-6` and `∇²B_v ≥ -1e-8` at all
/// contact points.
pub fn jacobian_check(m: &Hypersurface, records: &[Result<ContactRecord>], seed: u64) -> VerificationReport {
    let start = Instant::now();
    let ctx = surface_context(m, Some(seed));
    let n = m.dim() as f64;
    let factor = (n * (n + 1.0) * ctx.kappa * m.diameter_extrinsic()).exp();
    let mut worst = 0.0f64;
    let mut support = f64::INFINITY;
    let mut convexity = f64::INFINITY;
    let (mut checked, mut excluded, mut errors) = (0usize, 0usize, 0usize);
    for rec in records {
        let rec = match rec {
            Ok(r) => r,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        errors += rec.failures.len();
        for p in &rec.points {
            support = nan_min(support, p.support_floor);
            convexity = nan_min(convexity, p.convexity_floor);
            if !p.consistent {
                excluded += 1;
                continue;
            }
            checked += 1;
            worst = nan_max(worst, p.jacobian / (factor * p.gauss_kronecker.abs()));
        }
    }
    if checked == 0 {
        worst = f64::NAN;
    }
    VerificationReport::new("jacobian", &ctx, worst, 1.0, Sense::AtMost, JACOBIAN_SLACK)
        .condition("support", support, SUPPORT_FLOOR)
        .condition("convexity", convexity, CONVEXITY_FLOOR)
        .count_condition("errors", errors)
        .detail("points.checked", checked as f64)
        .detail("points.excluded", excluded as f64)
        .note("stencil-inconsistent contact points are excluded as suspected non-differentiable")
        .timed(start)
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.min(b)
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Supporting-level-set condition `|∇B_v - ν| ≤ 1e-3` at every contact
/// point, and continuity of contact levels: for each swept `v` and its
/// nearest swept neighbour `v'`, `|c_v - c_v'| ≤ D |v - v'| + 1e-6`.
pub fn contact_check(m: &Hypersurface, records: &[Result<ContactRecord>], seed: u64) -> VerificationReport {
    let start = Instant::now();
    let ctx = surface_context(m, Some(seed));
    let d = m.diameter_extrinsic();
    let ok: Vec<&ContactRecord> = records.iter().filter_map(|r| r.as_ref().ok()).collect();
    let errors = records.len() - ok.len() + ok.iter().map(|r| r.failures.len()).sum::<usize>();
    let mut gap = if ok.is_empty() { f64::NAN } else { 0.0f64 };
    for r in &ok {
        if r.points.is_empty() {
            gap = f64::NAN;
        }
        for p in &r.points {
            gap = nan_max(gap, p.normal_gap);
        }
    }
    let mut continuity = f64::INFINITY;
    for (i, a) in ok.iter().enumerate() {
        let va = DVector::from_column_slice(&a.v);
        let nearest = ok
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, b)| ((DVector::from_column_slice(&b.v) - &va).norm(), b))
            .min_by(|x, y| x.0.total_cmp(&y.0));
        if let Some((dv, b)) = nearest {
            let slack = d * dv + 1e-6 - (a.level - b.level).abs();
            continuity = continuity.min(slack);
        }
    }
    VerificationReport::new("contact", &ctx, gap, CONTACT_NORMAL_GAP, Sense::AtMost, 0.0)
        .condition("continuity", continuity, 0.0)
        .count_condition("errors", errors)
        .detail("directions", records.len() as f64)
        .detail("ties", ok.iter().filter(|r| r.nodes.len() > 1).count() as f64)
        .timed(start)
}

/// `|∇B_{S_M(x)}(x) - ν(x)| ≤ 1e-5` at every grid node.
pub fn gauss_consistency_check(m: &Hypersurface, o: &Point) -> VerificationReport {
    let start = Instant::now();
    let ctx = surface_context(m, None);
    let residuals: Vec<Result<f64>> = m.nodes().par_iter().map(|node| gauss_map_at(m, &node.s, o).map(|g| g.residual)).collect();
    let mut worst = 0.0f64;
    let mut errors = 0;
    for r in &residuals {
        match r {
            Ok(r) => worst = nan_max(worst, *r),
            Err(_) => errors += 1,
        }
    }
    VerificationReport::new("gauss-consistency", &ctx, worst, TRANSLATION_RESIDUAL, Sense::AtMost, 0.0)
        .count_condition("errors", errors)
        .detail("nodes", m.len() as f64)
        .timed(start)
}

/// `area(∂B)^{n+1} / vol(B)ⁿ ≥ e^{-2n(n+1)κD} |𝕊ⁿ|^{n+1} / |Bⁿ⁺¹|ⁿ` for the
/// geodesic ball of radius `r`, `D = 2r`. The area comes from the mesh and
/// must agree with the radial formula to `1e-3`.
pub fn isoperimetric_check(space: &SymmetricSpace, center: &Point, r: f64, grid: GridSpec) -> Result<VerificationReport> {
    let start = Instant::now();
    let volume = match ball_volume(space, center, r) {
        Err(Error::UnsupportedVolume) => {
            return Err(Error::Config(format!("isoperimetric check needs Euclidean and hyperbolic factors only, got {}", space.spec_string())))
        }
        other => other?,
    };
    let m = Hypersurface::new(space, center, SurfaceSpec::GeodesicSphere { r }, grid)?;
    let n = m.dim() as i32;
    let area = m.integrate(Integrand::Area)?;
    let radial_area = sphere_area_at(space, r)?;
    let kappa = space.curvature_lower_bound();
    let d = 2.0 * r;
    let lhs = area.powi(n + 1) / volume.powi(n);
    let nf = n as f64;
    let rhs = (-2.0 * nf * (nf + 1.0) * kappa * d).exp() * sphere_area(m.dim()).powi(n + 1) / ball_volume_unit(m.dim()).powi(n);
    let ctx = Context {
        space: space.spec_string(),
        surface: Some(m.spec().to_string()),
        grid: Some(grid.to_string()),
        kappa,
        diameter: Some(d),
        seed: None,
    };
    let area_gap = (area / radial_area - 1.0).abs();
    Ok(VerificationReport::new("isoperimetric", &ctx, lhs, rhs, Sense::AtLeast, CHECK_TOL)
        .condition("area-quadrature", margin(area_gap, AREA_QUADRATURE_TOL, Sense::AtMost), 0.0)
        .detail("area", area)
        .detail("area.radial", radial_area)
        .detail("volume", volume)
        .detail("euclidean_constant", sphere_area(m.dim()).powi(n + 1) / ball_volume_unit(m.dim()).powi(n))
        .timed(start))
}

/// Random `(v, x)` with `d(o, x) ≤ radius`: largest entrywise difference
/// between the closed-form Hessian and the truncation oracle.
pub fn hessian_oracle_check(space: &SymmetricSpace, samples: usize, radius: f64, seed: u64) -> VerificationReport {
    let start = Instant::now();
    let ctx = space_context(space, Some(seed));
    let o = space.base_point();
    let errs: Vec<Result<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(seed, i as u64);
            let v = space.random_unit_tangent(&mut rng, &o);
            let x = space.random_point(&mut rng, radius);
            let b = BusemannFunction::new(space, &o, &v)?;
            let closed = b.hessian(&x);
            let OracleOutput::Hessian(oracle) = b.truncated_oracle(&x, OracleQuery::Hessian)?.output else {
                unreachable!("hessian query")
            };
            Ok((closed.as_matrix() - oracle.as_matrix()).amax())
        })
        .collect();
    let mut worst = if samples == 0 { f64::NAN } else { 0.0f64 };
    let mut failures = 0;
    for e in &errs {
        match e {
            Ok(e) => worst = nan_max(worst, *e),
            Err(_) => failures += 1,
        }
    }
    VerificationReport::new("hessian-oracle", &ctx, worst, HESSIAN_ORACLE_TOL, Sense::AtMost, 0.0)
        .count_condition("oracle-failures", failures)
        .detail("samples", samples as f64)
        .detail("radius", radius)
        .timed(start)
}

/// `‖∇²B_v‖ ≤ κ + 1e-6`, `∇²B_v ≥ -1e-8` and
/// `‖∇²B_v - ∇²B_v'‖ ≤ κ (n+1) |∇B_v - ∇B_v'| (1 + 1e-6)` on random samples,
/// reported as the worst ratio of each side to its bound.
pub fn hessian_bounds_check(space: &SymmetricSpace, samples: usize, radius: f64, seed: u64) -> VerificationReport {
    let start = Instant::now();
    let ctx = space_context(space, Some(seed));
    let o = space.base_point();
    let kappa = space.curvature_lower_bound();
    let dim = space.dim() as f64;
    let out: Vec<Result<(f64, f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(seed, i as u64);
            let b1 = BusemannFunction::new(space, &o, &space.random_unit_tangent(&mut rng, &o))?;
            let b2 = BusemannFunction::new(space, &o, &space.random_unit_tangent(&mut rng, &o))?;
            let x = space.random_point(&mut rng, radius);
            let (h1, h2) = (b1.hessian(&x), b2.hessian(&x));
            let norm_ratio = h1.op_norm() / (kappa + HESSIAN_BOUND_TOL);
            let dg = space.norm(&x, &b1.gradient(&x).sub(&b2.gradient(&x)));
            let dh = h1.sub(&h2).op_norm();
            let bound = kappa * dim * dg * (1.0 + HESSIAN_BOUND_TOL);
            let diff_ratio = if dh <= 1e-12 { 0.0 } else { dh / bound };
            Ok((norm_ratio, diff_ratio, h1.min_eigenvalue()))
        })
        .collect();
    let (mut norm, mut diff, mut floor) = (0.0f64, 0.0f64, f64::INFINITY);
    let mut failures = 0;
    for r in &out {
        match r {
            Ok((a, b, c)) => {
                norm = nan_max(norm, *a);
                diff = nan_max(diff, *b);
                floor = nan_min(floor, *c);
            }
            Err(_) => failures += 1,
        }
    }
    VerificationReport::new("hessian-bounds", &ctx, nan_max(norm, diff), 1.0, Sense::AtMost, 0.0)
        .condition("psd", floor, CONVEXITY_FLOOR)
        .count_condition("errors", failures)
        .detail("norm_ratio", norm)
        .detail("difference_ratio", diff)
        .detail("samples", samples as f64)
        .timed(start)
}

/// Sampled Lipschitz and injectivity bounds of `G^x_o` for `d(o, x) ≤ radius`.
pub fn lipschitz_check(space: &SymmetricSpace, samples: usize, radius: f64, seed: u64) -> VerificationReport {
    let start = Instant::now();
    let ctx = space_context(space, Some(seed));
    let o = space.base_point();
    match lipschitz_audit(space, &o, samples, radius, seed) {
        Ok(a) => VerificationReport::new("lipschitz", &ctx, a.worst_normalized_ratio, 1.0, Sense::AtMost, LIPSCHITZ_TOL_AUDIT)
            .condition("injectivity", margin(a.worst_lower_ratio, 1.0, Sense::AtLeast), LIPSCHITZ_TOL_AUDIT)
            .count_condition("translation-failures", a.failures)
            .detail("worst_ratio", a.worst_ratio)
            .detail("skipped", a.skipped as f64)
            .detail("samples", samples as f64)
            .timed(start),
        Err(e) => VerificationReport::failed("lipschitz", &ctx, LIPSCHITZ_TOL_AUDIT, e.to_string()).timed(start),
    }
}

/// Slack of the sampled Lipschitz bound.
pub const LIPSCHITZ_TOL_AUDIT: f64 = 1e-4;

/// Sampled Lipschitz constant of `S_M` over neighbouring grid nodes against
/// `e^{(n+1)κD} (sup|A| + κ) + 1`.
pub fn gauss_lipschitz_check(m: &Hypersurface, o: &Point) -> VerificationReport {
    let start = Instant::now();
    let ctx = surface_context(m, None);
    let space = m.space();
    let n = m.dim() as f64;
    let sup_a = m
        .fundamental_all()
        .iter()
        .filter_map(|d| d.as_ref().ok())
        .map(|d| d.shape.op_norm())
        .fold(0.0f64, f64::max);
    let bound = ((n + 1.0) * ctx.kappa * m.diameter_extrinsic()).exp() * (sup_a + ctx.kappa) + 1.0;
    let samples: Vec<Option<(Point, nalgebra::DVector<f64>)>> = m
        .nodes()
        .par_iter()
        .map(|node| gauss_map_at(m, &node.s, o).ok().map(|g| (g.point, space.to_frame(o, &g.v))))
        .collect();
    // consecutive nodes along the fastest grid angle are neighbours
    let mut worst = 0.0f64;
    let mut missing = 0;
    for w in samples.windows(2) {
        match (&w[0], &w[1]) {
            (Some((x, a)), Some((y, b))) => {
                let dx = space.distance(x, y);
                if dx > 0.0 {
                    worst = worst.max((a - b).norm() / dx);
                }
            }
            _ => missing += 1,
        }
    }
    VerificationReport::new("gauss-lipschitz", &ctx, worst, bound, Sense::AtMost, LIPSCHITZ_TOL)
        .count_condition("errors", missing)
        .detail("sup_shape", sup_a)
        .timed(start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::contact::direction_sweep;
    use std::f64::consts::PI;

    fn sphere(spec: &str, r: f64, grid: &str) -> Hypersurface {
        let s = SymmetricSpace::parse(spec).unwrap();
        Hypersurface::geodesic_sphere(&s, &s.base_point(), r, grid.parse().unwrap()).unwrap()
    }

    #[test]
    fn euclidean_sphere_equality_case() {
        let m = sphere("euclidean:3", 1.0, "16x32");
        let o = m.center().clone();
        let sweep = direction_sweep(&m, &o, 20, 42);
        let tc = total_curvature_check(&m, &sweep, 42);
        assert!(tc.pass, "{tc:?}");
        assert!((tc.lhs / (4.0 * PI) - 1.0).abs() < 1e-6);
        assert_eq!(tc.rhs, 4.0 * PI);
        let j = jacobian_check(&m, &sweep, 42);
        assert!(j.pass, "{j:?}");
        assert!((j.lhs - 1.0).abs() < 1e-4);
        let c = contact_check(&m, &sweep, 42);
        assert!(c.pass, "{c:?}");
        let w = willmore_check(&m);
        assert!(w.pass, "{w:?}");
    }

    #[test]
    fn isoperimetric_on_balls() {
        let s = SymmetricSpace::parse("euclidean:3").unwrap();
        let r = isoperimetric_check(&s, &s.base_point(), 0.7, "32x64".parse().unwrap()).unwrap();
        assert!(r.pass);
        assert!((r.lhs / (36.0 * PI) - 1.0).abs() < 1e-6, "{}", r.lhs);
        let h = SymmetricSpace::parse("hyperbolic:3").unwrap();
        let r = isoperimetric_check(&h, &h.base_point(), 0.5, "32x64".parse().unwrap()).unwrap();
        let closed = (4.0 * PI * 0.5f64.sinh().powi(2)).powi(3) / (PI * (1f64.sinh() - 1.0)).powi(2);
        assert!((r.lhs / closed - 1.0).abs() < 1e-6);
        assert!(r.pass);
        let spd = SymmetricSpace::parse("spd:2").unwrap();
        assert!(matches!(isoperimetric_check(&spd, &spd.base_point(), 0.5, "4x8".parse().unwrap()), Err(Error::Config(_))));
    }

    #[test]
    fn sampled_busemann_checks_pass() {
        let s = SymmetricSpace::parse("hyperbolic:3").unwrap();
        assert!(hessian_oracle_check(&s, 5, 2.0, 42).pass);
        assert!(hessian_bounds_check(&s, 50, 2.0, 42).pass);
        let l = lipschitz_check(&s, 50, 1.0, 42);
        assert!(l.pass, "{l:?}");
    }

    #[test]
    fn gauss_checks_on_hyperbolic_sphere() {
        let m = sphere("hyperbolic:3", 1.0, "8x16");
        let o = m.center().clone();
        let g = gauss_consistency_check(&m, &o);
        assert!(g.pass && g.lhs < 1e-10, "{g:?}");
        assert!(gauss_lipschitz_check(&m, &o).pass);
    }
}
