//! Closed star-shaped hypersurfaces `M ⊂ N` as meshes over the parameter
//! sphere `𝕊ⁿ`, `n + 1 = dim N`.
//!
//! A direction `s ∈ 𝕊ⁿ` is sent to `exp_c(r(s) Σ s_i E_i)`, with `E` the
//! orthonormal frame at the center `c`. Derivatives are taken in the
//! gnomonic chart `ξ ↦ (s + Σ ξ_i e_i) / |s + Σ ξ_i e_i|` around each node,
//! `e` an orthonormal basis of `s^⊥`, with central differences of step
//! [`FD_STEP`] in `ξ` (a physical step of about `FD_STEP · r`).

pub mod grid;
pub mod volume;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{inv_sqrt_spd, SymMatrix};
use crate::space::{Point, SymmetricSpace, Tangent};
use crate::tolerances::FD_STEP;

pub use grid::{GridSpec, Node};
pub use volume::{ball_volume, sphere_area_at};

/// Smallest normalized Gram determinant accepted for a chart frame.
pub const CHART_GRAM_MIN: f64 = 1e-12;

/// Radial profile `f` of a radial graph `r = base (1 + amp f)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialMode {
    /// `f = s_0`
    Coord,
    /// `f = (3 s_0² - 1) / 2`
    Zonal,
    /// `f = s_{n-1}² - s_n²`
    Sectoral,
}

impl RadialMode {
    fn profile(&self, s: &DVector<f64>) -> f64 {
        let n = s.len() - 1;
        match self {
            RadialMode::Coord => s[0],
            RadialMode::Zonal => 0.5 * (3.0 * s[0] * s[0] - 1.0),
            RadialMode::Sectoral => s[n - 1] * s[n - 1] - s[n] * s[n],
        }
    }

    fn name(&self) -> &'static str {
        match self {
            RadialMode::Coord => "coord",
            RadialMode::Zonal => "zonal",
            RadialMode::Sectoral => "sectoral",
        }
    }
}

/// `geodesic-sphere:r=<r>` or `radial-graph:base=<r>,mode=<mode>,amp=<a>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SurfaceSpec {
    GeodesicSphere { r: f64 },
    RadialGraph { base: f64, mode: RadialMode, amp: f64 },
}

impl SurfaceSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SurfaceSpec::GeodesicSphere { r } => {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::Input(format!("sphere radius must be positive, got {r}")));
                }
            }
            SurfaceSpec::RadialGraph { base, amp, .. } => {
                if !(base > 0.0 && base.is_finite()) {
                    return Err(Error::Input(format!("base radius must be positive, got {base}")));
                }
                // every profile takes values in [-1, 1]
                if !(amp.abs() < 1.0) {
                    return Err(Error::Input(format!("amplitude must lie in (-1, 1), got {amp}")));
                }
            }
        }
        Ok(())
    }

    /// Radius in direction `s`.
    pub fn radius(&self, s: &DVector<f64>) -> f64 {
        match *self {
            SurfaceSpec::GeodesicSphere { r } => r,
            SurfaceSpec::RadialGraph { base, mode, amp } => base * (1.0 + amp * mode.profile(s)),
        }
    }

    /// Typical radius, used to scale steps.
    pub fn radius_scale(&self) -> f64 {
        match *self {
            SurfaceSpec::GeodesicSphere { r } => r,
            SurfaceSpec::RadialGraph { base, .. } => base,
        }
    }
}

impl fmt::Display for SurfaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceSpec::GeodesicSphere { r } => write!(f, "geodesic-sphere:r={r}"),
            SurfaceSpec::RadialGraph { base, mode, amp } => {
                write!(f, "radial-graph:base={base},mode={},amp={amp}", mode.name())
            }
        }
    }
}

impl FromStr for SurfaceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |token: &str, message: &str| Error::Parse { token: token.to_string(), message: message.to_string() };
        let (kind, rest) = s.split_once(':').ok_or_else(|| parse_err(s, "expected `<kind>:<key>=<value>,...`"))?;
        let mut r = None;
        let mut base = None;
        let mut mode = None;
        let mut amp = None;
        for kv in rest.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(|| parse_err(kv, "expected `<key>=<value>`"))?;
            let num = || v.parse::<f64>().map_err(|_| parse_err(v, "expected a number"));
            match (kind, k) {
                ("geodesic-sphere", "r") => r = Some(num()?),
                ("radial-graph", "base") => base = Some(num()?),
                ("radial-graph", "amp") => amp = Some(num()?),
                ("radial-graph", "mode") => {
                    mode = Some(match v {
                        "coord" => RadialMode::Coord,
                        "zonal" => RadialMode::Zonal,
                        "sectoral" => RadialMode::Sectoral,
                        _ => return Err(parse_err(v, "expected coord, zonal or sectoral")),
                    })
                }
                ("geodesic-sphere" | "radial-graph", _) => return Err(parse_err(k, "unknown key")),
                _ => return Err(parse_err(kind, "expected geodesic-sphere or radial-graph")),
            }
        }
        let missing = |key: &str| parse_err(s, &format!("missing `{key}`"));
        let spec = match kind {
            "geodesic-sphere" => SurfaceSpec::GeodesicSphere { r: r.ok_or_else(|| missing("r"))? },
            _ => SurfaceSpec::RadialGraph {
                base: base.ok_or_else(|| missing("base"))?,
                mode: mode.unwrap_or(RadialMode::Coord),
                amp: amp.ok_or_else(|| missing("amp"))?,
            },
        };
        spec.validate().map_err(|e| parse_err(s, &e.to_string()))?;
        Ok(spec)
    }
}

/// Orthonormal basis of `s^⊥ ⊂ ℝⁿ⁺¹`: Gram–Schmidt on the coordinate axes,
/// skipping the axis most aligned with `s`.
pub fn tangent_basis(s: &DVector<f64>) -> Vec<DVector<f64>> {
    let m = s.len();
    let skip = s.iamax();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m - 1);
    for k in (0..m).filter(|&k| k != skip) {
        let mut e = DVector::zeros(m);
        e[k] = 1.0;
        for _ in 0..2 {
            e -= s * s.dot(&e);
            for b in &basis {
                e -= b * b.dot(&e);
            }
        }
        basis.push(e.normalize());
    }
    basis
}

/// Gnomonic chart at `s` with basis `e`.
pub fn chart_point(s: &DVector<f64>, e: &[DVector<f64>], xi: &DVector<f64>) -> DVector<f64> {
    let mut p = s.clone();
    for (ei, x) in e.iter().zip(xi.iter()) {
        p.axpy(*x, ei, 1.0);
    }
    p.normalize()
}

/// Intrinsic data at a point of `M`.
#[derive(Debug, Clone)]
pub struct FundamentalData {
    /// Parameter direction.
    pub s: DVector<f64>,
    pub point: Point,
    /// Chart tangents `∂_i`.
    pub tangents: Vec<Tangent>,
    /// Orthonormal tangent basis `∂ · G^{-1/2}`.
    pub orthonormal: Vec<Tangent>,
    /// Outward unit normal.
    pub normal: Tangent,
    /// Shape operator `∇ν` in the orthonormal basis, symmetrized.
    pub shape: SymMatrix,
    /// `‖A - Aᵀ‖_F` before symmetrization.
    pub asymmetry: f64,
    pub gauss_kronecker: f64,
    pub mean_curvature: f64,
    /// `√det G`, the area density against the round measure at `s`.
    pub area_density: f64,
    /// `√det G · w` for a grid node, 0 off the grid.
    pub area_weight: f64,
}

/// Quantity to integrate over `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrand {
    Area,
    /// `|GK|`
    TotalCurvature,
    /// `|H / n|ⁿ`
    Willmore,
}

#[derive(Debug)]
pub struct Hypersurface {
    space: SymmetricSpace,
    center: Point,
    center_frame: Vec<Tangent>,
    spec: SurfaceSpec,
    grid: GridSpec,
    nodes: Vec<Node>,
    points: Vec<Point>,
    fundamental: OnceLock<Vec<Result<FundamentalData>>>,
    diameter: OnceLock<f64>,
}

impl Hypersurface {
    pub fn new(space: &SymmetricSpace, center: &Point, spec: SurfaceSpec, grid: GridSpec) -> Result<Self> {
        spec.validate()?;
        let n = space.dim() - 1;
        if n < 2 {
            return Err(Error::Config(format!("hypersurfaces need dim N >= 3, got {}", space.dim())));
        }
        if grid.sphere_dim() != n {
            return Err(Error::Config(format!("grid {grid} is for 𝕊^{}, but M is {n}-dimensional", grid.sphere_dim())));
        }
        let nodes = grid::build(&grid);
        let mut surface = Hypersurface {
            space: space.clone(),
            center: center.clone(),
            center_frame: space.frame_at(center),
            spec,
            grid,
            nodes,
            points: Vec::new(),
            fundamental: OnceLock::new(),
            diameter: OnceLock::new(),
        };
        surface.points = surface.nodes.par_iter().map(|node| surface.embed(&node.s)).collect();
        Ok(surface)
    }

    pub fn geodesic_sphere(space: &SymmetricSpace, center: &Point, r: f64, grid: GridSpec) -> Result<Self> {
        Self::new(space, center, SurfaceSpec::GeodesicSphere { r }, grid)
    }

    pub fn radial_graph(
        space: &SymmetricSpace,
        center: &Point,
        base: f64,
        mode: RadialMode,
        amp: f64,
        grid: GridSpec,
    ) -> Result<Self> {
        Self::new(space, center, SurfaceSpec::RadialGraph { base, mode, amp }, grid)
    }

    pub fn space(&self) -> &SymmetricSpace {
        &self.space
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn spec(&self) -> &SurfaceSpec {
        &self.spec
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `n = dim M`.
    pub fn dim(&self) -> usize {
        self.space.dim() - 1
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Image of a parameter direction (normalized first).
    pub fn embed(&self, s: &DVector<f64>) -> Point {
        let s = s.normalize();
        let v = self.space.from_coords(&self.center, &self.center_frame, &s);
        self.space.exp(&self.center, &v.scale(self.spec.radius(&s)))
    }

    /// Chart tangents at `ψ(ξ)` for the chart `(s, e)`.
    fn chart_tangents(&self, s: &DVector<f64>, e: &[DVector<f64>], xi: &DVector<f64>, x: &Point) -> Vec<Tangent> {
        let h = FD_STEP;
        (0..e.len())
            .map(|i| {
                let mut plus = xi.clone();
                plus[i] += h;
                let mut minus = xi.clone();
                minus[i] -= h;
                let yp = self.embed(&chart_point(s, e, &plus));
                let ym = self.embed(&chart_point(s, e, &minus));
                self.space.log(x, &yp).sub(&self.space.log(x, &ym)).scale(0.5 / h)
            })
            .collect()
    }

    /// Unit normal at `x` from tangents, oriented away from the center.
    fn normal_from(&self, x: &Point, tangents: &[Tangent]) -> Result<Tangent> {
        let space = &self.space;
        let frame = space.frame_at(x);
        let m = frame.len();
        let t = DMatrix::from_columns(&tangents.iter().map(|v| space.coords_in(x, &frame, v)).collect::<Vec<_>>());
        // normalized Gram determinant guards against collapsed charts
        let gram = t.transpose() * &t;
        let scale: f64 = (0..gram.nrows()).map(|i| gram[(i, i)]).product();
        let gram_det = gram.determinant() / scale;
        if !(gram_det >= CHART_GRAM_MIN) {
            return Err(Error::ChartDegeneracy { gram: gram_det });
        }
        // generalized cross product: ν_k = (-1)^k det(T without row k)
        let mut nu = DVector::zeros(m);
        for k in 0..m {
            let minor = t.clone().remove_row(k);
            nu[k] = if k % 2 == 0 { 1.0 } else { -1.0 } * minor.determinant();
        }
        let nu = nu.normalize();
        let mut normal = space.from_coords(x, &frame, &nu);
        if space.inner(x, &normal, &space.log(x, &self.center)) > 0.0 {
            normal = normal.scale(-1.0);
        }
        Ok(normal)
    }

    /// Point, chart tangents and outward normal at the parameter `s`.
    pub fn local_frame(&self, s: &DVector<f64>) -> Result<(Point, Vec<Tangent>, Tangent)> {
        let s = s.normalize();
        let e = tangent_basis(&s);
        let zero = DVector::zeros(e.len());
        let x = self.embed(&s);
        let tangents = self.chart_tangents(&s, &e, &zero, &x);
        let normal = self.normal_from(&x, &tangents)?;
        Ok((x, tangents, normal))
    }

    /// Outward unit normal at `s`.
    pub fn normal_at(&self, s: &DVector<f64>) -> Result<(Point, Tangent)> {
        let (x, _, nu) = self.local_frame(s)?;
        Ok((x, nu))
    }

    /// Fundamental data at an arbitrary parameter `s`; `area_weight` is 0.
    pub fn fundamental_at(&self, s: &DVector<f64>) -> Result<FundamentalData> {
        let space = &self.space;
        let h = FD_STEP;
        let s = s.normalize();
        let e = tangent_basis(&s);
        let n = e.len();
        let zero = DVector::zeros(n);
        let x = self.embed(&s);
        let tangents = self.chart_tangents(&s, &e, &zero, &x);
        let normal = self.normal_from(&x, &tangents)?;

        let gram = DMatrix::from_fn(n, n, |i, j| space.inner(&x, &tangents[i], &tangents[j]));
        let gram = SymMatrix::new(gram)?;
        let c = inv_sqrt_spd(&gram)?;
        let area_density = gram.determinant().max(0.0).sqrt();

        // second fundamental form S_ij = <∇_{∂_i} ν, ∂_j> from transported
        // neighbour normals
        let mut second = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut dnu = space.zero_tangent(&x);
            for sign in [1.0, -1.0] {
                let mut xi = zero.clone();
                xi[i] = sign * h;
                let y = self.embed(&chart_point(&s, &e, &xi));
                let ty = self.chart_tangents(&s, &e, &xi, &y);
                let ny = self.normal_from(&y, &ty)?;
                dnu = dnu.axpy(sign * 0.5 / h, &space.parallel_transport(&y, &x, &ny));
            }
            for j in 0..n {
                second[(i, j)] = space.inner(&x, &dnu, &tangents[j]);
            }
        }
        let a = &c * second * &c;
        let asymmetry = (&a - a.transpose()).norm();
        let shape = SymMatrix::new(a)?;
        let orthonormal = (0..n)
            .map(|k| {
                let mut t = space.zero_tangent(&x);
                for j in 0..n {
                    t = t.axpy(c[(j, k)], &tangents[j]);
                }
                t
            })
            .collect();
        Ok(FundamentalData {
            gauss_kronecker: shape.determinant(),
            mean_curvature: shape.trace(),
            s,
            point: x,
            tangents,
            orthonormal,
            normal,
            shape,
            asymmetry,
            area_density,
            area_weight: 0.0,
        })
    }

    /// Fundamental data at every node, computed once in parallel.
    pub fn fundamental_all(&self) -> &[Result<FundamentalData>] {
        self.fundamental.get_or_init(|| {
            self.nodes
                .par_iter()
                .map(|node| {
                    let mut d = self.fundamental_at(&node.s)?;
                    d.area_weight = d.area_density * node.weight;
                    Ok(d)
                })
                .collect()
        })
    }

    pub fn fundamental_forms(&self, node: usize) -> Result<&FundamentalData> {
        match self.fundamental_all().get(node) {
            Some(Ok(d)) => Ok(d),
            Some(Err(e)) => Err(e.clone()),
            None => Err(Error::Input(format!("node {node} out of range ({} nodes)", self.len()))),
        }
    }

    /// Quadrature of the integrand, summed in node order.
    pub fn integrate(&self, what: Integrand) -> Result<f64> {
        let n = self.dim() as i32;
        let mut total = 0.0;
        for d in self.fundamental_all() {
            let d = d.as_ref().map_err(Clone::clone)?;
            let f = match what {
                Integrand::Area => 1.0,
                Integrand::TotalCurvature => d.gauss_kronecker.abs(),
                Integrand::Willmore => (d.mean_curvature / n as f64).abs().powi(n),
            };
            total += f * d.area_weight;
        }
        Ok(total)
    }

    /// Largest ambient distance between mesh points: exhaustive up to
    /// [`DIAMETER_EXHAUSTIVE`] nodes, otherwise a strided subsample followed
    /// by alternating farthest-point scans. Never exceeds the true diameter.
    /// Computed once.
    pub fn diameter_extrinsic(&self) -> f64 {
        *self.diameter.get_or_init(|| self.compute_diameter())
    }

    fn compute_diameter(&self) -> f64 {
        let pts = &self.points;
        let space = &self.space;
        if pts.len() < 2 {
            return 0.0;
        }
        let farthest = |a: usize, pool: &[usize]| -> (usize, f64) {
            pool.par_iter()
                .map(|&b| (b, space.distance(&pts[a], &pts[b])))
                .reduce(|| (a, 0.0), |p, q| if q.1 > p.1 || (q.1 == p.1 && q.0 < p.0) { q } else { p })
        };
        let all: Vec<usize> = (0..pts.len()).collect();
        let pool: Vec<usize> = if pts.len() <= DIAMETER_EXHAUSTIVE {
            all.clone()
        } else {
            let stride = pts.len().div_ceil(DIAMETER_EXHAUSTIVE);
            (0..pts.len()).step_by(stride).collect()
        };
        let (a, b, mut best) = pool
            .par_iter()
            .enumerate()
            .map(|(k, &i)| {
                let (j, d) = farthest(i, &pool[k + 1..]);
                (i, j, d)
            })
            .reduce(|| (0, 0, 0.0), |p, q| if q.2 > p.2 || (q.2 == p.2 && (q.0, q.1) < (p.0, p.1)) { q } else { p });
        if pool.len() < pts.len() {
            for start in [a, b] {
                let mut end = start;
                for _ in 0..8 {
                    let (c, d) = farthest(end, &all);
                    if d <= best {
                        break;
                    }
                    best = d;
                    end = c;
                }
            }
        }
        best
    }
}

/// Node count up to which [`Hypersurface::diameter_extrinsic`] compares all
/// pairs.
pub const DIAMETER_EXHAUSTIVE: usize = 2048;
