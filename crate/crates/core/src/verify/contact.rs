//! First contact of horospheres with `M`.
//!
//! For a direction `v` at `o`, `c_v = max_M B_v` and the contact set `F_v`
//! is where the maximum is attained. The grid maximum is refined by
//! steepest ascent in the gnomonic chart, each step a golden-section line
//! search, and all checks run at the refined points.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::busemann::BusemannFunction;
use crate::error::Result;
use crate::gauss::{gauss_differential, translate_direction, translation_residual};
use crate::numeric::SymMatrix;
use crate::sampling;
use crate::space::{Point, Tangent};
use crate::surface::grid::sphere_area;
use crate::surface::{chart_point, tangent_basis, Hypersurface};
use crate::tolerances::CONTACT_TIE;

/// Ascent steps at most.
pub const ASCENT_STEPS: usize = 50;
/// Ascent stops once the chart gradient of `B_v` is below this.
pub const ASCENT_GRADIENT: f64 = 1e-10;
/// Refined points closer than this in parameter space are merged.
const MERGE: f64 = 1e-6;

/// Checks at one refined contact point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactPoint {
    /// Grid node the ascent started from.
    pub node: usize,
    pub s: Vec<f64>,
    /// `B_v` at the refined point.
    pub level: f64,
    /// `|∇B_v(x) - ν(x)|`.
    pub normal_gap: f64,
    /// `|S_M(x) - v|`.
    pub gauss_residual: f64,
    /// `|∇B_{S_M(x)}(x) - ν(x)|`.
    pub consistency: f64,
    /// Smallest eigenvalue of `A - ∇²B_v` on `T_xM`.
    pub support_floor: f64,
    /// Smallest eigenvalue of `∇²B_v` on `T_xM`.
    pub convexity_floor: f64,
    pub jacobian: f64,
    pub gauss_kronecker: f64,
    pub stencil_gap: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactRecord {
    /// Position in the sweep.
    pub index: usize,
    /// `v` in `frame_at(o)` coordinates.
    pub v: Vec<f64>,
    /// `max` of `B_v` over the grid.
    pub level: f64,
    /// Largest `B_v` over the refined points (at least `level`).
    pub refined_level: f64,
    /// Grid nodes within the tie tolerance of `level`, ascending.
    pub nodes: Vec<usize>,
    pub points: Vec<ContactPoint>,
    /// Errors met while checking a contact point.
    pub failures: Vec<String>,
}

impl ContactRecord {
    /// Smallest `|S_M(x) - v|` over the contact points.
    pub fn best_gauss_residual(&self) -> f64 {
        self.points.iter().map(|p| p.gauss_residual).fold(f64::INFINITY, f64::min)
    }
}

/// Tie tolerance for a contact level.
pub fn tie_tolerance(level: f64) -> f64 {
    CONTACT_TIE * (1.0 + level.abs())
}

pub fn first_contact(m: &Hypersurface, o: &Point, v: &Tangent) -> Result<ContactRecord> {
    first_contact_indexed(m, o, v, 0)
}

fn first_contact_indexed(m: &Hypersurface, o: &Point, v: &Tangent, index: usize) -> Result<ContactRecord> {
    let space = m.space();
    let b = BusemannFunction::new(space, o, v)?;
    let values: Vec<f64> = m.points().par_iter().map(|x| b.value(x)).collect();
    let level = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tie = tie_tolerance(level);
    let nodes: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= level - tie).collect();

    let bracket = 2.0 * (sphere_area(m.dim()) / m.len() as f64).powf(1.0 / m.dim() as f64);
    let mut refined: Vec<(usize, DVector<f64>, f64)> = Vec::new();
    let mut failures = Vec::new();
    for &node in &nodes {
        match ascend(m, &b, &m.nodes()[node].s, bracket) {
            Ok((s, val)) => {
                if !refined.iter().any(|(_, t, _)| (t - &s).norm() < MERGE) {
                    refined.push((node, s, val));
                }
            }
            Err(e) => failures.push(format!("node {node}: {e}")),
        }
    }
    let refined_level = refined.iter().map(|r| r.2).fold(level, f64::max);
    let mut points = Vec::new();
    for (node, s, val) in refined {
        match check_point(m, o, &b, node, &s, val) {
            Ok(p) => points.push(p),
            Err(e) => failures.push(format!("node {node}: {e}")),
        }
    }
    Ok(ContactRecord {
        index,
        v: space.to_frame(o, v).iter().copied().collect(),
        level,
        refined_level,
        nodes,
        points,
        failures,
    })
}

/// Contact records for `count` directions drawn from `seed`, in order.
pub fn direction_sweep(m: &Hypersurface, o: &Point, count: usize, seed: u64) -> Vec<Result<ContactRecord>> {
    let space = m.space();
    let frame = space.frame_at(o);
    (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = sampling::stream(seed, k as u64);
            let c = sampling::unit_vector(&mut rng, space.dim());
            let v = space.from_coords(o, &frame, &c);
            first_contact_indexed(m, o, &v, k)
        })
        .collect()
}

/// Steepest ascent of `B_v ∘ embed` from `s0`.
fn ascend(m: &Hypersurface, b: &BusemannFunction, s0: &DVector<f64>, bracket: f64) -> Result<(DVector<f64>, f64)> {
    let space = m.space();
    let value = |s: &DVector<f64>| b.value(&m.embed(s));
    let mut s = s0.normalize();
    let mut f = value(&s);
    let mut step = bracket;
    for _ in 0..ASCENT_STEPS {
        let (x, tangents, _) = m.local_frame(&s)?;
        let grad = b.gradient(&x);
        let g = DVector::from_iterator(tangents.len(), tangents.iter().map(|t| space.inner(&x, &grad, t)));
        let gn = g.norm();
        if !(gn > ASCENT_GRADIENT) {
            break;
        }
        let e = tangent_basis(&s);
        let dir = g / gn;
        let along = |a: f64| chart_point(&s, &e, &(&dir * a));
        let (a, fa) = golden_max(|a| value(&along(a)), 0.0, step);
        if !(fa > f) {
            // no progress at this resolution; a shorter bracket may still help
            step *= 0.1;
            if step < 1e-12 {
                break;
            }
            continue;
        }
        s = along(a);
        f = fa;
        step = (4.0 * a).clamp(1e-9, bracket);
    }
    Ok((s, f))
}

/// Maximizer of `f` on `[lo, hi]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (1.0 + hi.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    // endpoints are candidates too: the maximum may sit at the bracket edge
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    let fh = f(hi);
    if fh > best.1 {
        best = (hi, fh);
    }
    best
}

fn check_point(m: &Hypersurface, o: &Point, b: &BusemannFunction, node: usize, s: &DVector<f64>, level: f64) -> Result<ContactPoint> {
    let space = m.space();
    let data = m.fundamental_at(s)?;
    let x = &data.point;
    let grad = b.gradient(x);
    let normal_gap = space.norm(x, &grad.sub(&data.normal));
    let sm = translate_direction(space, o, x, &data.normal)?;
    let consistency = translation_residual(space, o, x, &data.normal, &sm)?;
    let gauss_residual = space.norm(o, &sm.sub(b.direction()));

    // ∇²B_v restricted to T_xM in the orthonormal basis of the data
    let frame = space.frame_at(x);
    let basis = DMatrix::from_columns(&data.orthonormal.iter().map(|t| space.coords_in(x, &frame, t)).collect::<Vec<_>>());
    let hess = b.hessian(x).congruence(&basis);
    let support = data.shape.sub(&hess);
    let diff = gauss_differential(m, &data, o)?;
    Ok(ContactPoint {
        node,
        s: s.iter().copied().collect(),
        level,
        normal_gap,
        gauss_residual,
        consistency,
        support_floor: min_eig(&support),
        convexity_floor: min_eig(&hess),
        jacobian: diff.jacobian,
        gauss_kronecker: data.gauss_kronecker,
        stencil_gap: diff.stencil_gap,
        consistent: diff.consistent,
    })
}

fn min_eig(m: &SymMatrix) -> f64 {
    if m.as_matrix().iter().all(|v| v.is_finite()) {
        m.min_eigenvalue()
    } else {
        f64::NAN
    }
}
