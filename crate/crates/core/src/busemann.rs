//! Busemann functions `B_v(x) = lim_{t→∞} d(x, γ_v(t)) - t` on product
//! spaces.
//!
//! A unit direction `v = (v_f)` splits as weights `w_f = |v_f|` times unit
//! factor directions, and `B_v = Σ_f w_f B_{v_f/w_f}`. Each factor has a
//! closed form:
//!
//! * Euclidean: `-⟨u, x - o⟩`.
//! * Hyperbolic: `(1/κ) ln(-κ Q(x, κo + u))`; `κo + u` is the null vector of
//!   the ideal endpoint.
//! * SPD: with `o^{-1/2} u o^{-1/2} = O diag(d) Oᵀ`, `d` descending, and
//!   `S_k` the trailing `(n-k)×(n-k)` block of `Oᵀ o^{-1/2} x o^{-1/2} O`,
//!   `B = c Σ_{k≥1} (d_{k-1} - d_k) ln det S_k`.
//!
//! Hessians follow `∇²B = √(ad_u²)|_𝔭` on SPD factors and
//! `κ(g - ∇B⊗∇B)` on hyperbolic ones. [`BusemannFunction::truncated_oracle`]
//! recomputes everything from distances alone.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::{eig_sym, is_symmetric, sym_part, SymMatrix};
use crate::space::{hyperbolic, Factor, Part, Point, SpdFactor, SymmetricSpace, Tangent};
use crate::tolerances::{FD_STEP, ORACLE_TOL, ORACLE_T_MAX};

#[derive(Debug, Clone)]
enum FactorBusemann {
    Inactive,
    Euclidean {
        o: DVector<f64>,
        u: DVector<f64>,
    },
    Hyperbolic {
        o: DVector<f64>,
        u: DVector<f64>,
        xi: DVector<f64>,
        kappa: f64,
    },
    Spd {
        f: Arc<SpdFactor>,
        o: DMatrix<f64>,
        u: DMatrix<f64>,
        o_half: DMatrix<f64>,
        o_inv_half: DMatrix<f64>,
        /// Eigenvectors of `o^{-1/2} u o^{-1/2}`, eigenvalues descending.
        rot: DMatrix<f64>,
        d: DVector<f64>,
    },
}

impl FactorBusemann {
    fn value(&self, x: &Part) -> f64 {
        match self {
            FactorBusemann::Inactive => 0.0,
            FactorBusemann::Euclidean { o, u } => -u.dot(&(x.as_vec() - o)),
            FactorBusemann::Hyperbolic { xi, kappa, .. } => {
                (-kappa * hyperbolic::minkowski(x.as_vec(), xi)).ln() / kappa
            }
            FactorBusemann::Spd { f, o_inv_half, rot, d, .. } => {
                let m = rot.transpose() * o_inv_half * x.as_mat() * o_inv_half * rot;
                let n = f.n;
                let mut b = 0.0;
                for k in 1..n {
                    let w = d[k - 1] - d[k];
                    if w != 0.0 {
                        b += w * log_det_spd(&m.view((k, k), (n - k, n - k)).into_owned());
                    }
                }
                f.c * b
            }
        }
    }

    fn gradient(&self, x: &Part) -> Part {
        match self {
            FactorBusemann::Inactive => x.zeros_like(),
            FactorBusemann::Euclidean { u, .. } => Part::Vec(-u),
            FactorBusemann::Hyperbolic { xi, kappa, .. } => {
                let x = x.as_vec();
                let g = xi / (kappa * hyperbolic::minkowski(x, xi)) + x * *kappa;
                Part::Vec(hyperbolic::project(x, &g, *kappa))
            }
            FactorBusemann::Spd { f, o_half, o_inv_half, rot, d, .. } => {
                let n = f.n;
                let p = sym_part(&(o_inv_half * x.as_mat() * o_inv_half));
                let m = sym_part(&(rot.transpose() * &p * rot));
                let mut gm = DMatrix::zeros(n, n);
                for k in 1..n {
                    let w = d[k - 1] - d[k];
                    if w == 0.0 {
                        continue;
                    }
                    let s = m.view((k, k), (n - k, n - k)).into_owned();
                    let si = s.cholesky().map(|c| c.inverse()).unwrap_or_else(|| DMatrix::from_element(n - k, n - k, f64::NAN));
                    let mut block = gm.view_mut((k, k), (n - k, n - k));
                    block += si * w;
                }
                // dB = c·tr(G dP); the Riemannian gradient is P G P up to the
                // metric constant, projected to the tangent space.
                let g = rot * gm * rot.transpose();
                let grad_p = f.project(&p, &(&p * g * &p));
                Part::Mat(f.project(x.as_mat(), &(o_half * grad_p * o_half)))
            }
        }
    }

    /// Hessian of the unit-direction factor function in `frame` (an
    /// orthonormal frame of the factor at `x`).
    fn hessian(&self, x: &Part, grad: &Part, frame: &[Part]) -> DMatrix<f64> {
        let k = frame.len();
        match self {
            FactorBusemann::Inactive | FactorBusemann::Euclidean { .. } => DMatrix::zeros(k, k),
            FactorBusemann::Hyperbolic { kappa, .. } => {
                let g = DVector::from_iterator(
                    k,
                    frame.iter().map(|e| hyperbolic::minkowski(e.as_vec(), grad.as_vec())),
                );
                (DMatrix::identity(k, k) - &g * g.transpose()) * *kappa
            }
            FactorBusemann::Spd { f, .. } => spd_hessian(f, x.as_mat(), grad.as_mat(), frame),
        }
    }

    /// `d(x, γ(s)) - s` along this factor's unit ray.
    fn ray_excess(&self, x: &Part, s: f64) -> f64 {
        match self {
            FactorBusemann::Inactive => unreachable!("inactive factors use the plain distance"),
            FactorBusemann::Euclidean { o, u } => {
                let a = x.as_vec() - o;
                let far = (&a - u * s).norm();
                (a.norm_squared() - 2.0 * s * a.dot(u)) / (far + s)
            }
            FactorBusemann::Hyperbolic { o, u, kappa, .. } => hyperbolic::ray_excess(x.as_vec(), o, u, *kappa, s),
            FactorBusemann::Spd { f, o, u, .. } => f.ray_excess(x.as_mat(), o, u, s),
        }
    }
}

fn log_det_spd(m: &DMatrix<f64>) -> f64 {
    match m.clone().cholesky() {
        Some(c) => c.l().diagonal().iter().map(|x| 2.0 * x.ln()).sum(),
        None => f64::NAN,
    }
}

/// `√(ad_u²)|_𝔭 / √λ` with `u` the β-unit gradient moved to the identity,
/// expressed in `frame` (orthonormal at `x`). A tangent `T` at the identity
/// is the algebra element `T/2`; the operator is linear so only `u` needs the
/// conversion.
fn spd_hessian(f: &SpdFactor, x: &DMatrix<f64>, grad: &DMatrix<f64>, frame: &[Part]) -> DMatrix<f64> {
    let k = frame.len();
    let n = f.n;
    let e = eig_sym(x);
    let a_inv = e.map(|v| 1.0 / v.sqrt());
    let mut u0 = sym_part(&(&a_inv * grad * &a_inv));
    let t = u0.trace() / n as f64;
    for i in 0..n {
        u0[(i, i)] -= t;
    }
    let sqrt_lambda = f.lambda.sqrt();
    let nan = || DMatrix::from_element(k, k, f64::NAN);
    let Ok(ad) = f.algebra.ad_operator(&(u0 * (0.5 * sqrt_lambda))) else {
        return nan();
    };
    // ad_u is β_θ-self-adjoint for u ∈ 𝔭; conjugating by the Gram square
    // root makes it symmetric.
    // √(S²) of a symmetric S is |S|; taking it from the spectrum of S keeps
    // the kernel at rounding level instead of √ε.
    let s = &f.gram_half * ad * &f.gram_inv_half;
    if !is_symmetric(&s, 1e-9 * (1.0 + s.amax())) {
        return nan();
    }
    let root = eig_sym(&sym_part(&s)).map(f64::abs);
    let op = &f.gram_inv_half * root * &f.gram_half / sqrt_lambda;

    let pulled: Vec<DMatrix<f64>> = frame.iter().map(|e| sym_part(&(&a_inv * e.as_mat() * &a_inv))).collect();
    let mut images = Vec::with_capacity(k);
    for y in &pulled {
        match f.algebra.coords(y) {
            Ok(c) => images.push(f.algebra.element(&(&op * c))),
            Err(_) => return nan(),
        }
    }
    let mut h = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            h[(a, b)] = f.c * (&pulled[a] * &images[b]).trace();
        }
    }
    sym_part(&h)
}

/// What the truncation oracle should return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleQuery {
    Value,
    Gradient,
    Hessian,
}

#[derive(Debug, Clone)]
pub enum OracleOutput {
    Value(f64),
    /// Coordinates in `frame_at(x)`.
    Gradient(DVector<f64>),
    /// Coordinates in `frame_at(x)`.
    Hessian(SymMatrix),
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub output: OracleOutput,
    /// Truncation parameters combined by the extrapolation.
    pub t_values: Vec<f64>,
    /// Last Cauchy increment of the extrapolated value.
    pub last_increment: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleSettings {
    /// Cauchy tolerance on the extrapolated value.
    pub tol: f64,
    /// Cauchy tolerance on gradient coordinates.
    pub gradient_tol: f64,
    /// Cauchy tolerance on Hessian entries; finite-difference rounding
    /// grows with `T`, so this sits well above `tol / h²`.
    pub hessian_tol: f64,
    pub t_max: f64,
    pub fd_step: f64,
    /// Richardson table depth (number of `1/T` terms removed).
    pub depth: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            tol: ORACLE_TOL,
            gradient_tol: 1e-7,
            hessian_tol: 1e-4,
            t_max: ORACLE_T_MAX,
            fd_step: FD_STEP,
            depth: 3,
        }
    }
}

/// A Busemann function with base point `o` and unit direction `v ∈ T_oN`.
#[derive(Debug, Clone)]
pub struct BusemannFunction {
    space: SymmetricSpace,
    base: Point,
    direction: Tangent,
    weights: Vec<f64>,
    parts: Vec<FactorBusemann>,
}

impl BusemannFunction {
    /// `v` must have unit norm to `1e-10`; it is renormalized exactly.
    pub fn new(space: &SymmetricSpace, base: &Point, direction: &Tangent) -> Result<Self> {
        let norm = space.norm(base, direction);
        if !((norm - 1.0).abs() <= 1e-10) {
            return Err(Error::Input(format!("Busemann direction must be a unit vector, |v| = {norm}")));
        }
        let direction = direction.scale(1.0 / norm);
        let weights = space.factor_norms(base, &direction);
        let mut parts = Vec::with_capacity(weights.len());
        for (i, f) in space.factors().iter().enumerate() {
            let w = weights[i];
            if w == 0.0 {
                parts.push(FactorBusemann::Inactive);
                continue;
            }
            let o = base.part(i);
            let vi = direction.part(i);
            parts.push(match f {
                Factor::Euclidean { .. } => FactorBusemann::Euclidean { o: o.as_vec().clone(), u: vi.as_vec() / w },
                Factor::Hyperbolic { kappa, .. } => {
                    let u = vi.as_vec() / w;
                    let xi = o.as_vec() * *kappa + &u;
                    FactorBusemann::Hyperbolic { o: o.as_vec().clone(), u, xi, kappa: *kappa }
                }
                Factor::Spd(sf) => {
                    let u = vi.as_mat() / w;
                    let (o_half, o_inv_half) = sf.sqrt_pair(o.as_mat());
                    let e = eig_sym(&(&o_inv_half * &u * &o_inv_half));
                    FactorBusemann::Spd {
                        f: sf.clone(),
                        o: o.as_mat().clone(),
                        u,
                        o_half,
                        o_inv_half,
                        rot: e.vectors,
                        d: e.values,
                    }
                }
            });
        }
        Ok(BusemannFunction { space: space.clone(), base: base.clone(), direction, weights, parts })
    }

    /// Busemann function of the unit vector with the given `frame_at(o)`
    /// coordinates.
    pub fn from_frame(space: &SymmetricSpace, base: &Point, coords: &DVector<f64>) -> Result<Self> {
        let v = space.from_frame(base, &(coords / coords.norm()));
        Self::new(space, base, &v)
    }

    pub fn space(&self) -> &SymmetricSpace {
        &self.space
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn direction(&self) -> &Tangent {
        &self.direction
    }

    /// Per-factor weights `|v_f|`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `γ_v(s) = exp_o(s v)`.
    pub fn ray_point(&self, s: f64) -> Point {
        self.space.exp(&self.base, &self.direction.scale(s))
    }

    pub fn value(&self, x: &Point) -> f64 {
        let mut b = 0.0;
        for (i, p) in self.parts.iter().enumerate() {
            b += self.weights[i] * p.value(x.part(i));
        }
        b
    }

    pub fn gradient(&self, x: &Point) -> Tangent {
        let parts = self
            .parts
            .iter()
            .enumerate()
            .map(|(i, p)| match p.gradient(x.part(i)) {
                Part::Vec(v) => Part::Vec(v * self.weights[i]),
                Part::Mat(m) => Part::Mat(m * self.weights[i]),
            })
            .collect();
        Tangent::from_parts(parts)
    }

    /// Hessian in `frame_at(x)` coordinates: block diagonal with blocks
    /// `w_f ∇²B_f`.
    pub fn hessian(&self, x: &Point) -> SymMatrix {
        let space = &self.space;
        let frame = space.frame_at(x);
        let dim = space.dim();
        let mut h = DMatrix::zeros(dim, dim);
        for (i, (p, f)) in self.parts.iter().zip(space.factors()).enumerate() {
            let w = self.weights[i];
            if w == 0.0 {
                continue;
            }
            let off = space.offset(i);
            let k = f.dim();
            let fframe: Vec<Part> = frame[off..off + k].iter().map(|t| t.part(i).clone()).collect();
            let grad = p.gradient(x.part(i));
            let block = p.hessian(x.part(i), &grad, &fframe) * w;
            h.view_mut((off, off), (k, k)).copy_from(&block);
        }
        // NaN entries are kept so that failures show up in the checks.
        SymMatrix::symmetrize(h)
    }

    /// `B^T(x) = d(x, γ_v(T)) - T`, assembled from per-factor excesses
    /// without cancellation.
    pub fn truncated_value(&self, x: &Point, t: f64) -> f64 {
        let mut num = 0.0;
        let mut d2 = 0.0;
        for (i, p) in self.parts.iter().enumerate() {
            let w = self.weights[i];
            let (df, excess) = if w == 0.0 {
                let d = self.space.factor_distance(i, x, &self.base);
                (d, d)
            } else {
                let s = w * t;
                let e = p.ray_excess(x.part(i), s);
                (s + e, e)
            };
            // d_f² - (w_f T)² = e (d_f + w_f T)
            num += excess * (df + w * t);
            d2 += df * df;
        }
        num / (d2.sqrt() + t)
    }

    /// Independent evaluation from distances only. Truncations are taken at
    /// `T, 2T, 4T, …` on a fixed stencil of points `exp_x(Σ ξ_i e_i)`; the
    /// requested quantity (value, central-difference gradient or Hessian in
    /// `frame_at(x)`) is Richardson-extrapolated in `T` until its Cauchy
    /// increment drops below the matching tolerance.
    pub fn truncated_oracle(&self, x: &Point, what: OracleQuery) -> Result<OracleResult> {
        self.truncated_oracle_with(x, what, &OracleSettings::default())
    }

    pub fn truncated_oracle_with(&self, x: &Point, what: OracleQuery, settings: &OracleSettings) -> Result<OracleResult> {
        let space = &self.space;
        let dim = space.dim();
        let h = settings.fd_step;
        let frame = space.frame_at(x);
        let offsets = stencil(what, dim, h);
        let points: Vec<Point> = offsets
            .iter()
            .map(|c| if c.iter().all(|&v| v == 0.0) { x.clone() } else { space.exp(x, &space.from_coords(x, &frame, c)) })
            .collect();
        let tol = match what {
            OracleQuery::Value => settings.tol,
            OracleQuery::Gradient => settings.gradient_tol,
            OracleQuery::Hessian => settings.hessian_tol,
        };
        let r = space.distance(x, &self.base) + h * (dim as f64).sqrt();
        let mut t = 4.0;
        while t < 2.0 * (r + 1.0) {
            t *= 2.0;
        }
        let mut ts = Vec::new();
        // raw[k][p]: truncation at ts[k] evaluated at stencil point p
        let mut raw: Vec<Vec<f64>> = Vec::new();
        let mut history: Vec<DVector<f64>> = Vec::new();
        let mut last = f64::INFINITY;
        loop {
            if t > settings.t_max {
                return Err(Error::OracleFailure { t_max: settings.t_max, last_increment: last });
            }
            ts.push(t);
            raw.push(points.iter().map(|p| self.truncated_value(p, t)).collect());
            let extrapolated: Vec<f64> = (0..points.len())
                .map(|p| {
                    let series: Vec<f64> = raw.iter().map(|row| row[p]).collect();
                    *richardson_diagonal(&series, settings.depth).last().expect("nonempty")
                })
                .collect();
            let q = derived(what, dim, h, &extrapolated);
            if let Some(prev) = history.last() {
                last = (&q - prev).amax();
                if !last.is_finite() {
                    last = f64::INFINITY;
                }
            }
            history.push(q);
            if history.len() >= 3 && last < tol {
                break;
            }
            t *= 2.0;
        }
        let q = history.pop().expect("nonempty");
        let output = match what {
            OracleQuery::Value => OracleOutput::Value(q[0]),
            OracleQuery::Gradient => OracleOutput::Gradient(q),
            OracleQuery::Hessian => OracleOutput::Hessian(SymMatrix::new(DMatrix::from_column_slice(dim, dim, q.as_slice()))?),
        };
        Ok(OracleResult { output, t_values: ts, last_increment: last })
    }
}

/// Normal-coordinate offsets needed for `what`. Order: origin, then `±h e_i`,
/// then for `i < j` the four points `±h e_i ± h e_j`.
fn stencil(what: OracleQuery, dim: usize, h: f64) -> Vec<DVector<f64>> {
    let mut out = vec![DVector::zeros(dim)];
    if what == OracleQuery::Value {
        return out;
    }
    let unit = |i: usize| {
        let mut e = DVector::zeros(dim);
        e[i] = h;
        e
    };
    for i in 0..dim {
        out.push(unit(i));
        out.push(-unit(i));
    }
    if what == OracleQuery::Hessian {
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (ei, ej) = (unit(i), unit(j));
                out.push(&ei + &ej);
                out.push(&ei - &ej);
                out.push(&ej - &ei);
                out.push(-(&ei + &ej));
            }
        }
    }
    out
}

/// Value, gradient or column-major Hessian from values on `stencil`.
fn derived(what: OracleQuery, dim: usize, h: f64, f: &[f64]) -> DVector<f64> {
    match what {
        OracleQuery::Value => DVector::from_element(1, f[0]),
        OracleQuery::Gradient => DVector::from_fn(dim, |i, _| (f[1 + 2 * i] - f[2 + 2 * i]) / (2.0 * h)),
        OracleQuery::Hessian => {
            let mut m = DMatrix::zeros(dim, dim);
            for i in 0..dim {
                m[(i, i)] = (f[1 + 2 * i] - 2.0 * f[0] + f[2 + 2 * i]) / (h * h);
            }
            let mut k = 1 + 2 * dim;
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let v = (f[k] - f[k + 1] - f[k + 2] + f[k + 3]) / (4.0 * h * h);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                    k += 4;
                }
            }
            DVector::from_column_slice(m.as_slice())
        }
    }
}

/// Diagonal of the Richardson table for a sequence sampled at `T, 2T, 4T, …`
/// with an error expansion in powers of `1/T`.
pub(crate) fn richardson_diagonal(raw: &[f64], depth: usize) -> Vec<f64> {
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(raw.len());
    let mut diag = Vec::with_capacity(raw.len());
    for (k, &r) in raw.iter().enumerate() {
        let mut row = vec![r];
        for j in 1..=k.min(depth) {
            let prev = row[j - 1];
            let up = table[k - 1][j - 1];
            let factor = (1u64 << j) as f64 - 1.0;
            row.push(prev + (prev - up) / factor);
        }
        diag.push(*row.last().expect("nonempty"));
        table.push(row);
    }
    diag
}
