//! Direction translation `G^x_o` and the generalized Gauss map.
//!
//! `G^x_o(u)` is the unit `v ∈ T_oN` with `∇B_v(x) = u`: the ray from `x`
//! in direction `-u` and the ray from `o` in direction `v` are asymptotic.
//! [`translate_direction`] uses per-factor closed forms for the asymptotic
//! direction and gates every result on the defining residual;
//! [`translate_direction_by_rays`] follows the ray numerically and serves as
//! the independent check.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::busemann::{richardson_diagonal, BusemannFunction};
use crate::error::{Error, Result};
use crate::numeric::{eig_sym, inv_sqrt_spd, sym_part, SymMatrix};
use crate::sampling;
use crate::space::{hyperbolic, Factor, Part, Point, SymmetricSpace, Tangent};
use crate::surface::{chart_point, tangent_basis, FundamentalData, Hypersurface};
use crate::tolerances::{FD_STEP, ORACLE_T_MAX, ORACLE_TOL, TRANSLATION_RESIDUAL};

fn check_unit(space: &SymmetricSpace, x: &Point, u: &Tangent) -> Result<()> {
    let norm = space.norm(x, u);
    if !((norm - 1.0).abs() <= 1e-8) {
        return Err(Error::Input(format!("direction must be a unit vector, |u| = {norm}")));
    }
    Ok(())
}

/// `|∇B_v(x) - u|` measured at `x`.
pub fn translation_residual(space: &SymmetricSpace, o: &Point, x: &Point, u: &Tangent, v: &Tangent) -> Result<f64> {
    let b = BusemannFunction::new(space, o, v)?;
    Ok(space.norm(x, &b.gradient(x).sub(u)))
}

/// `G^x_o(u)`. Errors with [`Error::TranslationFailure`] when the defining
/// residual `|∇B_v(x) - u|` exceeds `1e-5`.
pub fn translate_direction(space: &SymmetricSpace, o: &Point, x: &Point, u: &Tangent) -> Result<Tangent> {
    check_unit(space, x, u)?;
    let mut parts = Vec::with_capacity(space.factors().len());
    for (i, f) in space.factors().iter().enumerate() {
        let (of, xf, uf) = (o.part(i), x.part(i), u.part(i));
        let w = f.inner(xf, uf, uf).max(0.0).sqrt();
        let part = match f {
            Factor::Euclidean { .. } => Part::Vec(-uf.as_vec()),
            _ if w == 0.0 => uf.zeros_like(),
            Factor::Hyperbolic { kappa, .. } => {
                // ideal endpoint of the ray from x along -u: the null vector κx - û
                let null = xf.as_vec() * *kappa - uf.as_vec() / w;
                let d = hyperbolic::project(of.as_vec(), &null, *kappa);
                let nd = hyperbolic::minkowski(&d, &d).sqrt();
                Part::Vec(d * (w / nd))
            }
            Factor::Spd(f) => Part::Mat(spd_asymptotic_direction(f, of.as_mat(), xf.as_mat(), uf.as_mat()) * w),
        };
        parts.push(part);
    }
    // each factor keeps its share |u_f| of the unit norm
    let v = Tangent::from_parts(parts);
    let gap = translation_residual(space, o, x, u, &v)?;
    if !(gap <= TRANSLATION_RESIDUAL) {
        return Err(Error::TranslationFailure { gap });
    }
    Ok(v)
}

/// Unit direction at `o` of the geodesic asymptotic to `t ↦ exp_x(-t·u)`.
///
/// In the frame of `o`, the ray is `A Q e^{tD} Qᵀ Aᵀ` with `-A⁻¹uA⁻ᵀ = QDQᵀ`,
/// `D` descending. Writing `AQ = k·r` with `r` upper triangular, the
/// distance to `k e^{tD} kᵀ` stays bounded, so the direction is `k D kᵀ`.
fn spd_asymptotic_direction(f: &crate::space::SpdFactor, o: &DMatrix<f64>, x: &DMatrix<f64>, u: &DMatrix<f64>) -> DMatrix<f64> {
    let (os, osi) = f.sqrt_pair(o);
    let x1 = sym_part(&(&osi * x * &osi));
    let u1 = sym_part(&(&osi * u * &osi));
    let (a, a_inv) = f.sqrt_pair(&x1);
    let e = eig_sym(&sym_part(&(-(&a_inv * u1 * &a_inv))));
    let k = (&a * &e.vectors).qr().q();
    let mut d = &k * DMatrix::from_diagonal(&e.values) * k.transpose();
    d = sym_part(&d);
    let scale = f.inner(&f.identity(), &d, &d).sqrt();
    sym_part(&(&os * d * &os)) / scale
}

/// Settings for the ray-following oracle.
#[derive(Debug, Clone, Copy)]
pub struct RaySettings {
    pub tol: f64,
    pub t_max: f64,
    pub depth: usize,
}

impl Default for RaySettings {
    fn default() -> Self {
        RaySettings { tol: ORACLE_TOL, t_max: ORACLE_T_MAX, depth: 3 }
    }
}

/// Per-factor unit directions of `log_o(exp_x(-t·u))`, evaluated so that
/// nothing overflows for large `t`. Factors where `u` vanishes get the
/// direction toward `x` (their weight in the limit is zero anyway).
fn ray_factor_directions(space: &SymmetricSpace, o: &Point, x: &Point, u: &Tangent, t: f64) -> Vec<Part> {
    let mut parts = Vec::new();
    for (i, f) in space.factors().iter().enumerate() {
        let (of, xf, uf) = (o.part(i), x.part(i), u.part(i));
        let w = f.inner(xf, uf, uf).max(0.0).sqrt();
        let dir = if w == 0.0 {
            uf.zeros_like()
        } else {
            match f {
                Factor::Euclidean { .. } => {
                    let d = xf.as_vec() - uf.as_vec() * t - of.as_vec();
                    let n = d.norm();
                    Part::Vec(d / n)
                }
                Factor::Hyperbolic { kappa, .. } => {
                    // exp_x(-t u) ∝ x - û tanh(κtw)/κ, and log_o only sees the
                    // projection of the point, so the common factor drops out
                    let y = xf.as_vec() - uf.as_vec() * ((kappa * t * w).tanh() / (kappa * w));
                    let d = hyperbolic::project(of.as_vec(), &y, *kappa);
                    let nd = hyperbolic::minkowski(&d, &d).sqrt();
                    Part::Vec(d / nd)
                }
                Factor::Spd(f) => Part::Mat(f.log_toward(of.as_mat(), xf.as_mat(), &(-uf.as_mat()), t).0),
            }
        };
        parts.push(dir);
    }
    parts
}

/// `G^x_o(u)` by following the ray `exp_x(-t·u)` with `t = 4, 8, 16, …`
/// until the unit directions at `o` change by less than `settings.tol`.
///
/// Per-factor lengths of `log_o(exp_x(-t·u))` are `t·|u_f| + O(1)`, so the
/// assembled direction only converges like `1/t`, while each factor's unit
/// direction converges exponentially. The oracle therefore converges the
/// factor directions and weights them by their limiting shares `|u_f|`.
/// Factors of rank above one (Euclidean, SPD) contain flats, where the
/// direction still converges like `1/t`; those are Richardson-extrapolated.
/// Hyperbolic factors converge exponentially and are left alone, since
/// extrapolating them only amplifies their early error.
pub fn translate_direction_by_rays(
    space: &SymmetricSpace,
    o: &Point,
    x: &Point,
    u: &Tangent,
    settings: &RaySettings,
) -> Result<Tangent> {
    check_unit(space, x, u)?;
    let shares = space.factor_norms(x, u);
    let frame = space.frame_at(o);
    let extrapolate: Vec<bool> = space.factors().iter().map(|f| !matches!(f, Factor::Hyperbolic { .. })).collect();
    let mut history: Vec<Vec<Part>> = Vec::new();
    let mut prev: Option<DVector<f64>> = None;
    let mut last = f64::INFINITY;
    let mut t = 4.0;
    while t <= settings.t_max {
        history.push(ray_factor_directions(space, o, x, u, t));
        let parts = (0..shares.len())
            .map(|f| {
                let current = &history[history.len() - 1][f];
                let part = if extrapolate[f] {
                    let series: Vec<&Part> = history.iter().map(|h| &h[f]).collect();
                    extrapolate_parts(&series, settings.depth)
                } else {
                    current.clone()
                };
                part.scaled(shares[f])
            })
            .collect();
        let est = space.coords_in(o, &frame, &Tangent::from_parts(parts));
        if let Some(p) = &prev {
            last = (&est - p).norm();
            if !last.is_finite() {
                break;
            }
            if history.len() >= 3 && last < settings.tol {
                let est = &est / est.norm();
                return Ok(space.from_coords(o, &frame, &est));
            }
        }
        prev = Some(est);
        t *= 2.0;
    }
    Err(Error::TranslationFailure { gap: last })
}

fn extrapolate_parts(series: &[&Part], depth: usize) -> Part {
    let entry = |p: &Part, i: usize| match p {
        Part::Vec(v) => v[i],
        Part::Mat(m) => m[i],
    };
    let acc = |i: usize| {
        let s: Vec<f64> = series.iter().map(|p| entry(p, i)).collect();
        *richardson_diagonal(&s, depth).last().expect("nonempty")
    };
    match series[series.len() - 1] {
        Part::Vec(v) => Part::Vec(DVector::from_fn(v.len(), |i, _| acc(i))),
        Part::Mat(m) => Part::Mat(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| acc(i + j * m.nrows()))),
    }
}

/// Outcome of a sampled Lipschitz audit of `G^x_o`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LipschitzAudit {
    pub samples: usize,
    /// Pairs with `u == u'` (ratio undefined).
    pub skipped: usize,
    /// Worst `(|v - v'| / |u - u'|) / e^{(n+1)κ d(o,x)}`; at most 1 when the
    /// bound holds.
    pub worst_normalized_ratio: f64,
    /// Worst raw `|v - v'| / |u - u'|`.
    pub worst_ratio: f64,
    /// Smallest `(|v - v'| / |u - u'|) · e^{(n+1)κ d(o,x)}`; at least 1 when
    /// the injectivity bound holds.
    pub worst_lower_ratio: f64,
    pub violations: usize,
    pub failures: usize,
}

/// Samples `x` with `d(o, x) ≤ radius` and unit pairs `(u, u')` at `x`.
/// Sample `i` uses stream `i` of `seed`; results reduce in sample order.
pub fn lipschitz_audit(space: &SymmetricSpace, o: &Point, samples: usize, radius: f64, seed: u64) -> Result<LipschitzAudit> {
    if !(radius > 0.0) {
        return Err(Error::Input(format!("audit radius must be positive, got {radius}")));
    }
    let kappa = space.curvature_lower_bound();
    let n1 = space.dim() as f64;
    let outcomes: Vec<Option<(f64, f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(seed, i as u64);
            let x = random_point_near(space, o, radius, &mut rng);
            let u1 = space.random_unit_tangent(&mut rng, &x);
            let u2 = if rng.random::<f64>() < 0.5 {
                // nearby pair: exercises the local constant
                let w = space.random_unit_tangent(&mut rng, &x);
                let mixed = u1.axpy(1e-3, &w);
                mixed.scale(1.0 / space.norm(&x, &mixed))
            } else {
                space.random_unit_tangent(&mut rng, &x)
            };
            let du = space.norm(&x, &u1.sub(&u2));
            if du == 0.0 {
                return Some((f64::NAN, 0.0, 0.0));
            }
            let v1 = translate_direction(space, o, &x, &u1).ok()?;
            let v2 = translate_direction(space, o, &x, &u2).ok()?;
            let ratio = space.norm(o, &v1.sub(&v2)) / du;
            let bound = (n1 * kappa * space.distance(o, &x)).exp();
            Some((ratio, ratio / bound, ratio * bound))
        })
        .collect();
    let mut audit = LipschitzAudit {
        samples,
        skipped: 0,
        worst_normalized_ratio: 0.0,
        worst_ratio: 0.0,
        worst_lower_ratio: f64::INFINITY,
        violations: 0,
        failures: 0,
    };
    for o in outcomes {
        match o {
            None => audit.failures += 1,
            Some((r, _, _)) if r.is_nan() => audit.skipped += 1,
            Some((r, upper, lower)) => {
                audit.worst_ratio = audit.worst_ratio.max(r);
                audit.worst_normalized_ratio = audit.worst_normalized_ratio.max(upper);
                audit.worst_lower_ratio = audit.worst_lower_ratio.min(lower);
                if upper > 1.0 + 1e-4 || lower < 1.0 - 1e-4 {
                    audit.violations += 1;
                }
            }
        }
    }
    Ok(audit)
}

fn random_point_near(space: &SymmetricSpace, o: &Point, radius: f64, rng: &mut impl Rng) -> Point {
    let u = space.random_unit_tangent(rng, o);
    space.exp(o, &u.scale(radius * rng.random::<f64>()))
}

/// `S_M` at the surface point with parameter `s`: the point, its outward
/// normal, `v = G^x_o(ν(x))` and the residual `|∇B_v(x) - ν(x)|`.
#[derive(Debug, Clone)]
pub struct GaussSample {
    pub point: Point,
    pub normal: Tangent,
    pub v: Tangent,
    pub residual: f64,
}

pub fn gauss_map_at(m: &Hypersurface, s: &DVector<f64>, o: &Point) -> Result<GaussSample> {
    let (x, normal) = m.normal_at(s)?;
    let space = m.space();
    let v = translate_direction(space, o, &x, &normal)?;
    let residual = translation_residual(space, o, &x, &normal, &v)?;
    Ok(GaussSample { point: x, normal, v, residual })
}

/// `dS_M` at the parameter `s` on the orthonormal tangent basis of `M`
/// there, by central differences in the gnomonic chart. All values of
/// `S_M` live in `T_oN`, so no transport is needed.
#[derive(Debug, Clone)]
pub struct GaussDifferential {
    /// `dS_M(E_k)` for the orthonormal frame `E` of [`FundamentalData`].
    pub columns: Vec<Tangent>,
    /// `|det dS_M| = √det(DᵀD)`, `D` the columns in an orthonormal frame at `o`.
    pub jacobian: f64,
    /// Largest relative gap between steps `h` and `2h`.
    pub stencil_gap: f64,
    /// False when the two stencils disagree by more than
    /// [`STENCIL_CONSISTENCY`]; such points are suspected non-differentiable.
    pub consistent: bool,
}

/// Relative gap between the `h` and `2h` stencils above which a point is
/// flagged.
pub const STENCIL_CONSISTENCY: f64 = 1e-4;

pub fn gauss_differential(m: &Hypersurface, data: &FundamentalData, o: &Point) -> Result<GaussDifferential> {
    let space = m.space();
    let s = &data.s;
    let e = tangent_basis(s);
    let n = e.len();
    let h = FD_STEP;
    let frame = space.frame_at(o);
    let at = |i: usize, step: f64| -> Result<DVector<f64>> {
        let mut xi = DVector::zeros(n);
        xi[i] = step;
        let g = gauss_map_at(m, &chart_point(s, &e, &xi), o)?;
        Ok(space.coords_in(o, &frame, &g.v))
    };
    let mut chart_cols = Vec::with_capacity(n);
    let mut gap = 0.0f64;
    for i in 0..n {
        let (p1, m1, p2, m2) = (at(i, h)?, at(i, -h)?, at(i, 2.0 * h)?, at(i, -2.0 * h)?);
        let d1 = (p1 - m1) / (2.0 * h);
        let d2 = (p2 - m2) / (4.0 * h);
        gap = gap.max((&d1 - &d2).norm() / d1.norm().max(1e-300));
        chart_cols.push(d1);
    }
    // chart derivatives are along ∂_i = data.tangents[i]; move to E = ∂ C
    let gram = DMatrix::from_fn(n, n, |i, j| space.inner(&data.point, &data.tangents[i], &data.tangents[j]));
    let c = inv_sqrt_spd(&SymMatrix::new(gram)?)?;
    let chart = DMatrix::from_columns(&chart_cols);
    let d = chart * c;
    let jacobian = (d.transpose() * &d).determinant().max(0.0).sqrt();
    let columns = (0..n).map(|k| space.from_coords(o, &frame, &d.column(k).into_owned())).collect();
    Ok(GaussDifferential { columns, jacobian, stencil_gap: gap, consistent: gap <= STENCIL_CONSISTENCY })
}

/// `dS_M(w)` for a tangent `w` of `M` at the point of `data`.
pub fn differential_fd(m: &Hypersurface, data: &FundamentalData, o: &Point, w: &Tangent) -> Result<(Tangent, bool)> {
    let space = m.space();
    let diff = gauss_differential(m, data, o)?;
    let mut out = space.zero_tangent(o);
    for (e, col) in data.orthonormal.iter().zip(&diff.columns) {
        out = out.axpy(space.inner(&data.point, e, w), col);
    }
    Ok((out, diff.consistent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SPECS: [&str; 5] = ["euclidean:3", "hyperbolic:3", "spd:3", "hyperbolic:2xeuclidean:1", "hyperbolic:2,kappa=0.5xspd:2"];

    #[test]
    fn identity_at_base_point() {
        for spec in SPECS {
            let s = SymmetricSpace::parse(spec).unwrap();
            let o = s.base_point();
            let u = s.random_unit_tangent(&mut ChaCha8Rng::seed_from_u64(1), &o);
            let v = translate_direction(&s, &o, &o, &u).unwrap();
            if spec == "euclidean:3" {
                assert!(s.norm(&o, &v.add(&u)) < 1e-14);
            } else {
                assert!(s.norm(&o, &v.sub(&u)) < 1e-8 || s.norm(&o, &v.add(&u)) < 1e-8, "{spec}");
            }
        }
    }

    #[test]
    fn euclidean_is_negation() {
        let s = SymmetricSpace::euclidean(3).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let x = s.random_point(&mut r, 3.0);
        let u = s.random_unit_tangent(&mut r, &x);
        let v = translate_direction(&s, &s.base_point(), &x, &u).unwrap();
        assert_eq!(v.part(0).as_vec(), &-u.part(0).as_vec());
    }

    #[test]
    fn on_ray_identity() {
        for spec in SPECS {
            let s = SymmetricSpace::parse(spec).unwrap();
            let o = s.base_point();
            let v = s.random_unit_tangent(&mut ChaCha8Rng::seed_from_u64(3), &o);
            let b = BusemannFunction::new(&s, &o, &v).unwrap();
            let x = b.ray_point(1.7);
            // -γ'(s) is the gradient there
            let u = b.gradient(&x);
            let got = translate_direction(&s, &o, &x, &u).unwrap();
            assert!(s.norm(&o, &got.sub(&v)) < 1e-8, "{spec}");
        }
    }

    #[test]
    fn closed_form_matches_ray_oracle() {
        for spec in SPECS {
            let s = SymmetricSpace::parse(spec).unwrap();
            let o = s.base_point();
            let mut r = ChaCha8Rng::seed_from_u64(4);
            for _ in 0..10 {
                let x = s.random_point(&mut r, 1.5);
                let u = s.random_unit_tangent(&mut r, &x);
                let closed = translate_direction(&s, &o, &x, &u).unwrap();
                let rays = translate_direction_by_rays(&s, &o, &x, &u, &RaySettings::default())
                    .unwrap_or_else(|e| panic!("{spec}: {e}"));
                assert!(s.norm(&o, &closed.sub(&rays)) < 1e-6, "{spec}: {}", s.norm(&o, &closed.sub(&rays)));
            }
        }
    }

    #[test]
    fn gated_by_residual_and_unit_norm() {
        let s = SymmetricSpace::hyperbolic(3, 1.0).unwrap();
        let o = s.base_point();
        let x = s.random_point(&mut ChaCha8Rng::seed_from_u64(5), 1.0);
        let u = s.random_unit_tangent(&mut ChaCha8Rng::seed_from_u64(6), &x);
        assert!(matches!(translate_direction(&s, &o, &x, &u.scale(2.0)), Err(Error::Input(_))));
        let v = translate_direction(&s, &o, &x, &u).unwrap();
        assert!(translation_residual(&s, &o, &x, &u, &v).unwrap() < 1e-10);
    }

    #[test]
    fn euclidean_audit_ratio_is_one() {
        let s = SymmetricSpace::euclidean(3).unwrap();
        let a = lipschitz_audit(&s, &s.base_point(), 200, 1.0, 42).unwrap();
        assert_eq!(a.worst_ratio, 1.0);
        assert_eq!(a.violations, 0);
    }

    #[test]
    fn hyperbolic_audit_within_bound() {
        let s = SymmetricSpace::hyperbolic(3, 1.0).unwrap();
        let a = lipschitz_audit(&s, &s.base_point(), 200, 1.0, 42).unwrap();
        assert_eq!(a.violations, 0);
        assert_eq!(a.failures, 0);
        assert!(a.worst_ratio <= 3f64.exp());
    }

    fn sphere(spec: &str, r: f64) -> Hypersurface {
        let s = SymmetricSpace::parse(spec).unwrap();
        Hypersurface::geodesic_sphere(&s, &s.base_point(), r, "8x16".parse().unwrap()).unwrap()
    }

    #[test]
    fn euclidean_sphere_gauss_map_is_antipodal() {
        let m = sphere("euclidean:3", 1.0);
        let o = m.center().clone();
        for node in [0, 40, 100] {
            let g = gauss_map_at(&m, &m.nodes()[node].s, &o).unwrap();
            let e = m.space().log(&o, &g.point);
            assert!(m.space().norm(&o, &g.v.add(&e)) < 1e-8);
            let d = m.fundamental_forms(node).unwrap();
            let diff = gauss_differential(&m, d, &o).unwrap();
            assert!((diff.jacobian - 1.0).abs() < 1e-6, "{}", diff.jacobian);
            assert!(diff.consistent);
            let (dw, _) = differential_fd(&m, d, &o, &d.orthonormal[0]).unwrap();
            assert!((m.space().norm(&o, &dw) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn hyperbolic_sphere_gauss_map() {
        let r = 1.0;
        let m = sphere("hyperbolic:3", r);
        let o = m.center().clone();
        for node in [3, 64] {
            let g = gauss_map_at(&m, &m.nodes()[node].s, &o).unwrap();
            let l = m.space().log(&o, &g.point);
            let e = l.scale(1.0 / m.space().norm(&o, &l));
            assert!(m.space().norm(&o, &g.v.add(&e)) < 1e-7);
            assert!(g.residual < 1e-10);
            // S_M pulls the sphere of area 4π sinh²r back onto 𝕊²
            let d = m.fundamental_forms(node).unwrap();
            let diff = gauss_differential(&m, d, &o).unwrap();
            assert!((diff.jacobian * r.sinh().powi(2) - 1.0).abs() < 1e-6, "{}", diff.jacobian);
        }
    }
}
