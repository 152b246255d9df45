//! Products of Euclidean, hyperbolic and SPD factors.
//!
//! Tangent vectors are stored per factor in the ambient coordinates of that
//! factor's model. `frame_at` fixes an orthonormal frame at each point;
//! frame coordinates are what the differential-geometric code works in.

pub mod hyperbolic;
pub mod spd;
mod spec;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::sampling;

pub use spd::SpdFactor;
pub use spec::FactorSpec;

/// Tolerance for point and tangent constraints on input.
pub const CONSTRAINT_TOL: f64 = 1e-10;

/// Coordinates of one factor: a vector for Euclidean and hyperbolic
/// factors, a matrix for SPD factors.
#[derive(Debug, Clone, PartialEq)]
pub enum Part {
    Vec(DVector<f64>),
    Mat(DMatrix<f64>),
}

impl Part {
    pub fn as_vec(&self) -> &DVector<f64> {
        match self {
            Part::Vec(v) => v,
            Part::Mat(_) => panic!("expected a vector part"),
        }
    }

    pub fn as_mat(&self) -> &DMatrix<f64> {
        match self {
            Part::Mat(m) => m,
            Part::Vec(_) => panic!("expected a matrix part"),
        }
    }

    pub(crate) fn scaled(&self, c: f64) -> Part {
        match self {
            Part::Vec(v) => Part::Vec(v * c),
            Part::Mat(m) => Part::Mat(m * c),
        }
    }

    fn axpy(&mut self, c: f64, other: &Part) {
        match (self, other) {
            (Part::Vec(a), Part::Vec(b)) => a.axpy(c, b, 1.0),
            (Part::Mat(a), Part::Mat(b)) => *a += b * c,
            _ => panic!("mismatched tangent parts"),
        }
    }

    pub(crate) fn zeros_like(&self) -> Part {
        self.scaled(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    parts: Vec<Part>,
}

impl Point {
    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &Part {
        &self.parts[i]
    }
}

/// A tangent vector. Linear combinations are only meaningful between
/// vectors at the same base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    parts: Vec<Part>,
}

impl Tangent {
    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &Part {
        &self.parts[i]
    }

    pub(crate) fn from_parts(parts: Vec<Part>) -> Self {
        Tangent { parts }
    }

    pub fn scale(&self, c: f64) -> Tangent {
        Tangent { parts: self.parts.iter().map(|p| p.scaled(c)).collect() }
    }

    pub fn add(&self, other: &Tangent) -> Tangent {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Tangent) -> Tangent {
        self.axpy(-1.0, other)
    }

    /// `self + c·other`
    pub fn axpy(&self, c: f64, other: &Tangent) -> Tangent {
        let mut out = self.clone();
        for (a, b) in out.parts.iter_mut().zip(&other.parts) {
            a.axpy(c, b);
        }
        out
    }

    pub fn zeros_like(&self) -> Tangent {
        Tangent { parts: self.parts.iter().map(Part::zeros_like).collect() }
    }
}

#[derive(Debug, Clone)]
pub enum Factor {
    Euclidean { dim: usize },
    Hyperbolic { dim: usize, kappa: f64 },
    Spd(Arc<SpdFactor>),
}

impl Factor {
    pub fn dim(&self) -> usize {
        match self {
            Factor::Euclidean { dim } | Factor::Hyperbolic { dim, .. } => *dim,
            Factor::Spd(f) => f.dim(),
        }
    }

    pub fn kappa(&self) -> f64 {
        match self {
            Factor::Euclidean { .. } => 0.0,
            Factor::Hyperbolic { kappa, .. } => *kappa,
            Factor::Spd(f) => f.kappa,
        }
    }

    pub fn spec(&self) -> FactorSpec {
        match self {
            Factor::Euclidean { dim } => FactorSpec::Euclidean { dim: *dim },
            Factor::Hyperbolic { dim, kappa } => FactorSpec::Hyperbolic { dim: *dim, kappa: *kappa },
            Factor::Spd(f) => FactorSpec::Spd { n: f.n, lambda: f.lambda },
        }
    }

    fn base(&self) -> Part {
        match self {
            Factor::Euclidean { dim } => Part::Vec(DVector::zeros(*dim)),
            Factor::Hyperbolic { dim, kappa } => Part::Vec(hyperbolic::base_point(*dim, *kappa)),
            Factor::Spd(f) => Part::Mat(f.identity()),
        }
    }

    pub(crate) fn inner(&self, x: &Part, a: &Part, b: &Part) -> f64 {
        match self {
            Factor::Euclidean { .. } => a.as_vec().dot(b.as_vec()),
            Factor::Hyperbolic { .. } => hyperbolic::minkowski(a.as_vec(), b.as_vec()),
            Factor::Spd(f) => f.inner(x.as_mat(), a.as_mat(), b.as_mat()),
        }
    }

    pub(crate) fn exp(&self, x: &Part, v: &Part) -> Part {
        match self {
            Factor::Euclidean { .. } => Part::Vec(x.as_vec() + v.as_vec()),
            Factor::Hyperbolic { kappa, .. } => Part::Vec(hyperbolic::exp(x.as_vec(), v.as_vec(), *kappa)),
            Factor::Spd(f) => Part::Mat(f.exp(x.as_mat(), v.as_mat())),
        }
    }

    pub(crate) fn log(&self, x: &Part, y: &Part) -> Part {
        if x == y {
            return x.zeros_like();
        }
        match self {
            Factor::Euclidean { .. } => Part::Vec(y.as_vec() - x.as_vec()),
            Factor::Hyperbolic { kappa, .. } => Part::Vec(hyperbolic::log(x.as_vec(), y.as_vec(), *kappa)),
            Factor::Spd(f) => Part::Mat(f.log(x.as_mat(), y.as_mat())),
        }
    }

    fn distance(&self, x: &Part, y: &Part) -> f64 {
        if x == y {
            return 0.0;
        }
        match self {
            Factor::Euclidean { .. } => (y.as_vec() - x.as_vec()).norm(),
            Factor::Hyperbolic { kappa, .. } => hyperbolic::distance(x.as_vec(), y.as_vec(), *kappa),
            Factor::Spd(f) => f.distance(x.as_mat(), y.as_mat()),
        }
    }

    pub(crate) fn transport(&self, x: &Part, y: &Part, v: &Part) -> Part {
        match self {
            Factor::Euclidean { .. } => v.clone(),
            Factor::Hyperbolic { kappa, .. } => {
                Part::Vec(hyperbolic::transport(x.as_vec(), y.as_vec(), v.as_vec(), *kappa))
            }
            Factor::Spd(f) => Part::Mat(f.transport(x.as_mat(), y.as_mat(), v.as_mat())),
        }
    }

    fn project(&self, x: &Part, v: &Part) -> Part {
        match self {
            Factor::Euclidean { .. } => v.clone(),
            Factor::Hyperbolic { kappa, .. } => Part::Vec(hyperbolic::project(x.as_vec(), v.as_vec(), *kappa)),
            Factor::Spd(f) => Part::Mat(f.project(x.as_mat(), v.as_mat())),
        }
    }

    fn frame(&self, x: &Part) -> Vec<Part> {
        match self {
            Factor::Euclidean { dim } => (0..*dim)
                .map(|i| {
                    let mut e = DVector::zeros(*dim);
                    e[i] = 1.0;
                    Part::Vec(e)
                })
                .collect(),
            Factor::Hyperbolic { dim, kappa } => {
                // Projected spatial axes are always independent.
                let x = x.as_vec();
                let mut frame: Vec<DVector<f64>> = Vec::with_capacity(*dim);
                for i in 0..*dim {
                    let mut e = DVector::zeros(dim + 1);
                    e[i] = 1.0;
                    let mut v = hyperbolic::project(x, &e, *kappa);
                    for _ in 0..2 {
                        for f in &frame {
                            let c = hyperbolic::minkowski(f, &v);
                            v -= f * c;
                        }
                    }
                    let nv = hyperbolic::minkowski(&v, &v).sqrt();
                    frame.push(v / nv);
                }
                frame.into_iter().map(Part::Vec).collect()
            }
            Factor::Spd(f) => f.frame(x.as_mat()).into_iter().map(Part::Mat).collect(),
        }
    }

    /// `R(a, b, b, a)`, which is `sec·Gram` for a nondegenerate factor plane.
    fn curvature_numerator(&self, x: &Part, a: &Part, b: &Part) -> Result<f64> {
        match self {
            Factor::Euclidean { .. } => Ok(0.0),
            Factor::Hyperbolic { kappa, .. } => {
                let (a, b) = (a.as_vec(), b.as_vec());
                let gram = hyperbolic::minkowski(a, a) * hyperbolic::minkowski(b, b)
                    - hyperbolic::minkowski(a, b).powi(2);
                Ok(-kappa * kappa * gram.max(0.0))
            }
            Factor::Spd(f) => f.curvature_numerator(x.as_mat(), a.as_mat(), b.as_mat()),
        }
    }

    fn validate_point(&self, x: &Part) -> Result<Part> {
        match (self, x) {
            (Factor::Euclidean { dim }, Part::Vec(v)) if v.len() == *dim => {
                if v.iter().all(|c| c.is_finite()) {
                    Ok(x.clone())
                } else {
                    Err(Error::Input("non-finite Euclidean coordinate".into()))
                }
            }
            (Factor::Hyperbolic { dim, kappa }, Part::Vec(v)) if v.len() == dim + 1 => {
                let defect = hyperbolic::point_defect(v, *kappa);
                if !(defect <= CONSTRAINT_TOL) {
                    return Err(Error::Input(format!("hyperboloid constraint violated by {defect:e}")));
                }
                Ok(Part::Vec(hyperbolic::normalize(v, *kappa)?))
            }
            (Factor::Spd(f), Part::Mat(m)) => {
                let p = f.normalize(m)?;
                let defect = f.point_defect(m);
                let asym = (m - m.transpose()).amax();
                if !(defect <= CONSTRAINT_TOL) || !(asym <= CONSTRAINT_TOL) {
                    return Err(Error::Input(format!(
                        "unit-determinant SPD constraint violated (det defect {defect:e}, asymmetry {asym:e})"
                    )));
                }
                Ok(Part::Mat(p))
            }
            _ => Err(Error::Input("point coordinates do not match the factor".into())),
        }
    }

    fn tangent_defect(&self, x: &Part, v: &Part) -> Option<f64> {
        match (self, v) {
            (Factor::Euclidean { dim }, Part::Vec(v)) if v.len() == *dim => Some(0.0),
            (Factor::Hyperbolic { dim, kappa }, Part::Vec(v)) if v.len() == dim + 1 => {
                Some((kappa * kappa * hyperbolic::minkowski(x.as_vec(), v)).abs())
            }
            (Factor::Spd(f), Part::Mat(m)) if m.nrows() == f.n && m.ncols() == f.n => {
                Some(f.tangent_defect(x.as_mat(), m))
            }
            _ => None,
        }
    }
}

/// A product of model factors.
#[derive(Debug, Clone)]
pub struct SymmetricSpace {
    factors: Vec<Factor>,
    offsets: Vec<usize>,
    dim: usize,
    kappa: f64,
}

impl PartialEq for SymmetricSpace {
    fn eq(&self, other: &Self) -> bool {
        self.specs() == other.specs()
    }
}

impl SymmetricSpace {
    pub fn new(specs: &[FactorSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config("a space needs at least one factor".into()));
        }
        let mut factors = Vec::with_capacity(specs.len());
        for s in specs {
            factors.push(match *s {
                FactorSpec::Euclidean { dim } => {
                    if dim == 0 {
                        return Err(Error::Config("Euclidean factor needs dim >= 1".into()));
                    }
                    Factor::Euclidean { dim }
                }
                FactorSpec::Hyperbolic { dim, kappa } => {
                    if dim < 2 {
                        return Err(Error::Config("hyperbolic factor needs dim >= 2".into()));
                    }
                    if !(kappa > 0.0) || !kappa.is_finite() {
                        return Err(Error::Config(format!("hyperbolic kappa must be positive, got {kappa}")));
                    }
                    Factor::Hyperbolic { dim, kappa }
                }
                FactorSpec::Spd { n, lambda } => Factor::Spd(Arc::new(SpdFactor::new(n, lambda)?)),
            });
        }
        let mut offsets = Vec::with_capacity(factors.len());
        let mut dim = 0;
        for f in &factors {
            offsets.push(dim);
            dim += f.dim();
        }
        if dim < 2 {
            return Err(Error::Config(format!("total dimension must be at least 2, got {dim}")));
        }
        let kappa = factors.iter().map(Factor::kappa).fold(0.0, f64::max);
        Ok(SymmetricSpace { factors, offsets, dim, kappa })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(&[FactorSpec::Euclidean { dim }])
    }

    pub fn hyperbolic(dim: usize, kappa: f64) -> Result<Self> {
        Self::new(&[FactorSpec::Hyperbolic { dim, kappa }])
    }

    pub fn spd(n: usize, lambda: f64) -> Result<Self> {
        Self::new(&[FactorSpec::Spd { n, lambda }])
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(&spec::parse_space(s)?)
    }

    pub fn specs(&self) -> Vec<FactorSpec> {
        self.factors.iter().map(Factor::spec).collect()
    }

    pub fn spec_string(&self) -> String {
        spec::print_space(&self.specs())
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Offset of factor `i` in frame coordinates.
    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    /// Manifold dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `κ` with sectional curvature `≥ -κ²`.
    pub fn curvature_lower_bound(&self) -> f64 {
        self.kappa
    }

    pub fn base_point(&self) -> Point {
        Point { parts: self.factors.iter().map(Factor::base).collect() }
    }

    /// Validates and renormalizes factor coordinates.
    pub fn point(&self, parts: Vec<Part>) -> Result<Point> {
        if parts.len() != self.factors.len() {
            return Err(Error::Input(format!(
                "expected {} factor parts, got {}",
                self.factors.len(),
                parts.len()
            )));
        }
        let parts = self
            .factors
            .iter()
            .zip(&parts)
            .map(|(f, p)| f.validate_point(p))
            .collect::<Result<_>>()?;
        Ok(Point { parts })
    }

    /// Validates a tangent at `x`.
    pub fn tangent(&self, x: &Point, parts: Vec<Part>) -> Result<Tangent> {
        if parts.len() != self.factors.len() {
            return Err(Error::Input("tangent has the wrong number of parts".into()));
        }
        for ((f, xp), vp) in self.factors.iter().zip(&x.parts).zip(&parts) {
            match f.tangent_defect(xp, vp) {
                None => return Err(Error::Input("tangent coordinates do not match the factor".into())),
                Some(d) if !(d <= CONSTRAINT_TOL * (1.0 + f.inner(xp, vp, vp).abs().sqrt())) => {
                    return Err(Error::Input(format!("tangent constraint violated by {d:e}")))
                }
                _ => {}
            }
        }
        Ok(Tangent { parts })
    }

    /// Orthogonal projection of ambient coordinates onto `T_x`.
    pub fn project(&self, x: &Point, parts: Vec<Part>) -> Tangent {
        Tangent {
            parts: self
                .factors
                .iter()
                .zip(&x.parts)
                .zip(&parts)
                .map(|((f, xp), vp)| f.project(xp, vp))
                .collect(),
        }
    }

    pub fn zero_tangent(&self, x: &Point) -> Tangent {
        Tangent { parts: x.parts.iter().map(Part::zeros_like).collect() }
    }

    pub fn inner(&self, x: &Point, a: &Tangent, b: &Tangent) -> f64 {
        let mut s = 0.0;
        for (i, f) in self.factors.iter().enumerate() {
            s += f.inner(&x.parts[i], &a.parts[i], &b.parts[i]);
        }
        s
    }

    pub fn norm(&self, x: &Point, v: &Tangent) -> f64 {
        self.inner(x, v, v).max(0.0).sqrt()
    }

    /// Per-factor norms of `v`.
    pub fn factor_norms(&self, x: &Point, v: &Tangent) -> Vec<f64> {
        self.factors
            .iter()
            .enumerate()
            .map(|(i, f)| f.inner(&x.parts[i], &v.parts[i], &v.parts[i]).max(0.0).sqrt())
            .collect()
    }

    pub fn exp(&self, x: &Point, v: &Tangent) -> Point {
        Point {
            parts: self
                .factors
                .iter()
                .enumerate()
                .map(|(i, f)| f.exp(&x.parts[i], &v.parts[i]))
                .collect(),
        }
    }

    pub fn log(&self, x: &Point, y: &Point) -> Tangent {
        Tangent {
            parts: self
                .factors
                .iter()
                .enumerate()
                .map(|(i, f)| f.log(&x.parts[i], &y.parts[i]))
                .collect(),
        }
    }

    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        let mut s = 0.0;
        for (i, f) in self.factors.iter().enumerate() {
            s += f.distance(&x.parts[i], &y.parts[i]).powi(2);
        }
        s.sqrt()
    }

    /// Distance between the `i`-th factor components.
    pub fn factor_distance(&self, i: usize, x: &Point, y: &Point) -> f64 {
        self.factors[i].distance(&x.parts[i], &y.parts[i])
    }

    pub fn parallel_transport(&self, x: &Point, y: &Point, v: &Tangent) -> Tangent {
        Tangent {
            parts: self
                .factors
                .iter()
                .enumerate()
                .map(|(i, f)| f.transport(&x.parts[i], &y.parts[i], &v.parts[i]))
                .collect(),
        }
    }

    /// Geodesic symmetry `s_x(y) = exp_x(-log_x y)`.
    pub fn point_symmetry(&self, x: &Point, y: &Point) -> Point {
        self.exp(x, &self.log(x, y).scale(-1.0))
    }

    /// Orthonormal frame of `T_x`, factor by factor.
    pub fn frame_at(&self, x: &Point) -> Vec<Tangent> {
        let mut out = Vec::with_capacity(self.dim);
        for (i, f) in self.factors.iter().enumerate() {
            for e in f.frame(&x.parts[i]) {
                let mut parts: Vec<Part> = x.parts.iter().map(Part::zeros_like).collect();
                parts[i] = e;
                out.push(Tangent { parts });
            }
        }
        out
    }

    /// Coordinates of `v` in `frame` (an orthonormal frame at `x`).
    pub fn coords_in(&self, x: &Point, frame: &[Tangent], v: &Tangent) -> DVector<f64> {
        DVector::from_iterator(frame.len(), frame.iter().map(|e| self.inner(x, e, v)))
    }

    pub fn from_coords(&self, x: &Point, frame: &[Tangent], c: &DVector<f64>) -> Tangent {
        let mut out = self.zero_tangent(x);
        for (e, ci) in frame.iter().zip(c.iter()) {
            out = out.axpy(*ci, e);
        }
        out
    }

    pub fn to_frame(&self, x: &Point, v: &Tangent) -> DVector<f64> {
        self.coords_in(x, &self.frame_at(x), v)
    }

    pub fn from_frame(&self, x: &Point, c: &DVector<f64>) -> Tangent {
        self.from_coords(x, &self.frame_at(x), c)
    }

    /// Sectional curvature of the plane spanned by `a, b` at `x`.
    pub fn sectional_curvature(&self, x: &Point, a: &Tangent, b: &Tangent) -> Result<f64> {
        let aa = self.inner(x, a, a);
        let bb = self.inner(x, b, b);
        let ab = self.inner(x, a, b);
        let gram = aa * bb - ab * ab;
        if !(gram > 1e-14 * aa * bb) {
            return Err(Error::DegeneratePlane { gram });
        }
        let mut num = 0.0;
        for (i, f) in self.factors.iter().enumerate() {
            num += f.curvature_numerator(&x.parts[i], &a.parts[i], &b.parts[i])?;
        }
        Ok((num / gram).min(0.0))
    }

    /// Point at distance `≤ radius` from the base point, radius uniform.
    pub fn random_point(&self, rng: &mut impl Rng, radius: f64) -> Point {
        let o = self.base_point();
        let u = self.random_unit_tangent(rng, &o);
        let r = radius * rng.random::<f64>();
        self.exp(&o, &u.scale(r))
    }

    pub fn random_unit_tangent(&self, rng: &mut impl Rng, x: &Point) -> Tangent {
        let c = loop {
            let g = sampling::gaussian_vector_from(rng, self.dim);
            let n = g.norm();
            if n > 1e-12 {
                break g / n;
            }
        };
        self.from_frame(x, &c)
    }
}
