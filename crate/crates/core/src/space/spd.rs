//! Unit-determinant symmetric positive-definite matrices `SL(n)/SO(n)` with
//! the invariant metric `g_P(X, Y) = c·tr(P⁻¹XP⁻¹Y)`, `c = nλ/2`.
//!
//! `SL(n)` acts by `g·P = g P gᵀ`, so the tangent vector `X` at the identity
//! is the orbit velocity of the algebra element `X/2`. With that
//! identification `g_I(X, X) = λ β(X/2, X/2) = (nλ/2) tr(X²)`, i.e. the metric
//! is `λβ`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::lie::{metric_scale_bound, MatrixLieAlgebra, RootDatum};
use crate::numeric::{eig_sym, graded_svd, inv_sqrt_spd, psd_sqrt, singular_values_graded, sym_part, SymMatrix};
use crate::sampling;

/// Safety factor applied to the sampled curvature floor.
pub const KAPPA_MARGIN: f64 = 1.05;
const CURVATURE_SAMPLES: u64 = 10_000;
const DESCENT_STEPS: usize = 400;
const CURVATURE_SEED: u64 = 0x5eed_c0de;

#[derive(Debug, Clone)]
pub struct SpdFactor {
    pub n: usize,
    pub lambda: f64,
    /// `nλ/2`
    pub c: f64,
    pub algebra: MatrixLieAlgebra,
    pub roots: RootDatum,
    /// Certified lower curvature bound `κ` (sec ≥ -κ²).
    pub kappa: f64,
    /// Most negative sampled sectional curvature.
    pub min_sampled_sec: f64,
    /// `G^{1/2}` and `G^{-1/2}` for the `β_θ` Gram matrix of the algebra basis.
    pub gram_half: DMatrix<f64>,
    pub gram_inv_half: DMatrix<f64>,
}

impl SpdFactor {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("spd factor needs n >= 2, got {n}")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!("spd metric scale must be positive, got {lambda}")));
        }
        let algebra = MatrixLieAlgebra::sl(n)?;
        let roots = algebra.restricted_roots()?;
        let gram = SymMatrix::new(algebra.beta_theta_gram().clone())?;
        let gram_inv_half = inv_sqrt_spd(&gram)?;
        let gram_half = psd_sqrt(&gram)?.into_matrix();
        let mut f = SpdFactor {
            n,
            lambda,
            c: 0.5 * n as f64 * lambda,
            algebra,
            roots,
            kappa: 0.0,
            min_sampled_sec: 0.0,
            gram_half,
            gram_inv_half,
        };
        f.min_sampled_sec = f.sample_min_curvature()?;
        f.kappa = (-f.min_sampled_sec).max(0.0).sqrt() * KAPPA_MARGIN;
        let needed = metric_scale_bound(&f.roots, f.kappa)?;
        if needed > lambda * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "metric scale {lambda} is below the bound {needed} required for kappa = {}",
                f.kappa
            )));
        }
        Ok(f)
    }

    /// Default metric scale giving algebraic curvature floor `-1`.
    pub fn default_lambda(n: usize) -> f64 {
        1.0 / n as f64
    }

    pub fn dim(&self) -> usize {
        self.n * (self.n + 1) / 2 - 1
    }

    fn random_p(&self, rng: &mut impl Rng) -> DMatrix<f64> {
        let n = self.n;
        let g = sampling::gaussian_vector_from(rng, n * n);
        let m = DMatrix::from_column_slice(n, n, g.as_slice());
        let mut s = sym_part(&m);
        let t = s.trace() / n as f64;
        for i in 0..n {
            s[(i, i)] -= t;
        }
        s
    }

    /// Sectional curvature at the identity after orthonormalizing the plane
    /// (in the trace form). Nearly parallel pairs are rejected: the descent
    /// would otherwise chase rounding noise in their Gram determinant.
    fn sec_at_identity(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Option<f64> {
        let nx = x.norm();
        if nx == 0.0 {
            return None;
        }
        let x = x / nx;
        let y = y - &x * x.dot(y);
        let ny = y.norm();
        if ny < 1e-6 * x.norm().max(1.0) {
            return None;
        }
        let y = y / ny;
        self.algebra.algebraic_sectional_curvature(&x, &y, self.lambda).ok()
    }

    /// Random planes at the identity, root planes, then a shrinking random
    /// descent from the worst plane found.
    fn sample_min_curvature(&self) -> Result<f64> {
        let mut worst = f64::INFINITY;
        let mut worst_plane = None;
        for r in &self.roots.roots {
            let (x, y) = self.roots.root_plane(r);
            if let Some(k) = self.sec_at_identity(&x, &y) {
                if k < worst {
                    worst = k;
                    worst_plane = Some((x, y));
                }
            }
        }
        for i in 0..CURVATURE_SAMPLES {
            let mut rng = sampling::stream(CURVATURE_SEED, i);
            let x = self.random_p(&mut rng);
            let y = self.random_p(&mut rng);
            if let Some(k) = self.sec_at_identity(&x, &y) {
                if k < worst {
                    worst = k;
                    worst_plane = Some((x, y));
                }
            }
        }
        let (mut x, mut y) = worst_plane.ok_or_else(|| Error::Domain("no admissible curvature plane sampled".into()))?;
        let mut rng = sampling::stream(CURVATURE_SEED, u64::MAX);
        let mut step = 0.2;
        for _ in 0..DESCENT_STEPS {
            let nx = x.norm();
            let ny = y.norm();
            let x2 = &x + self.random_p(&mut rng) * (step * nx);
            let y2 = &y + self.random_p(&mut rng) * (step * ny);
            match self.sec_at_identity(&x2, &y2) {
                Some(k) if k < worst => {
                    worst = k;
                    x = x2;
                    y = y2;
                }
                _ => step *= 0.98,
            }
        }
        Ok(worst)
    }

    pub fn identity(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n)
    }

    /// Symmetrizes and rescales to determinant one.
    pub fn normalize(&self, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if p.nrows() != self.n || p.ncols() != self.n || p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input(format!("expected a finite {}x{} matrix", self.n, self.n)));
        }
        let s = sym_part(p);
        let chol = s
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Input("matrix is not positive definite".into()))?;
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        Ok(s * (-log_det / self.n as f64).exp())
    }

    fn renormalize(&self, p: DMatrix<f64>) -> DMatrix<f64> {
        self.normalize(&p).unwrap_or_else(|_| DMatrix::from_element(self.n, self.n, f64::NAN))
    }

    /// `|det P - 1|`
    pub fn point_defect(&self, p: &DMatrix<f64>) -> f64 {
        (p.clone().determinant() - 1.0).abs()
    }

    pub fn inverse(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        p.clone()
            .cholesky()
            .map(|c| c.inverse())
            .unwrap_or_else(|| DMatrix::from_element(self.n, self.n, f64::NAN))
    }

    pub fn inner(&self, p: &DMatrix<f64>, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let pi = self.inverse(p);
        self.c * (&pi * x * &pi * y).trace()
    }

    /// Symmetric part with the `P⁻¹`-trace removed.
    pub fn project(&self, p: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
        let s = sym_part(x);
        let t = (self.inverse(p) * &s).trace() / self.n as f64;
        s - p * t
    }

    /// `|tr(P⁻¹X)|` plus asymmetry of `X`.
    pub fn tangent_defect(&self, p: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
        (self.inverse(p) * x).trace().abs() + (x - x.transpose()).amax()
    }

    pub fn sqrt_pair(&self, p: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let e = eig_sym(p);
        (e.map(f64::sqrt), e.map(|x| 1.0 / x.sqrt()))
    }

    pub fn exp(&self, p: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (s, si) = self.sqrt_pair(p);
        let inner = eig_sym(&(&si * x * &si)).map(f64::exp);
        self.renormalize(&s * inner * &s)
    }

    pub fn log(&self, p: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
        let (s, si) = self.sqrt_pair(p);
        let inner = eig_sym(&(&si * q * &si)).map(|x| x.ln());
        self.project(p, &(&s * inner * &s))
    }

    pub fn distance(&self, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
        let (_, si) = self.sqrt_pair(p);
        let e = eig_sym(&(&si * q * &si));
        let ss: f64 = e.values.iter().map(|x| x.ln().powi(2)).sum();
        (self.c * ss).sqrt()
    }

    /// Transport along the geodesic from `p` to `q`: `X ↦ E X Eᵀ` with
    /// `E = P^{1/2} (P^{-1/2} Q P^{-1/2})^{1/2} P^{-1/2}`.
    pub fn transport(&self, p: &DMatrix<f64>, q: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (s, si) = self.sqrt_pair(p);
        let mid = eig_sym(&(&si * q * &si)).map(f64::sqrt);
        let e = &s * mid * &si;
        self.project(q, &(&e * x * e.transpose()))
    }

    /// Gram–Schmidt in `g_P` over the projected `E_ii`, then `E_ij + E_ji`.
    pub fn frame(&self, p: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let n = self.n;
        let mut candidates = Vec::new();
        for i in 0..n {
            let mut e = DMatrix::zeros(n, n);
            e[(i, i)] = 1.0;
            candidates.push(e);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let mut e = DMatrix::zeros(n, n);
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
                candidates.push(e);
            }
        }
        let pi = self.inverse(p);
        let inner = |a: &DMatrix<f64>, b: &DMatrix<f64>| self.c * (&pi * a * &pi * b).trace();
        let mut frame: Vec<DMatrix<f64>> = Vec::with_capacity(self.dim());
        for cand in candidates {
            if frame.len() == self.dim() {
                break;
            }
            let mut v = self.project(p, &cand);
            let start = inner(&v, &v).sqrt();
            for _ in 0..2 {
                for f in &frame {
                    let c = inner(f, &v);
                    v -= f * c;
                }
            }
            let nv = inner(&v, &v).sqrt();
            if nv > 1e-8 * start {
                frame.push(v / nv);
            }
        }
        frame
    }

    /// `R(a, b, b, a) = sec(a, b)·Gram(a, b)` at `p`, with the plane moved
    /// to the identity by the isometry `Q ↦ P^{-1/2} Q P^{-1/2}`.
    pub fn curvature_numerator(&self, p: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
        let (_, si) = self.sqrt_pair(p);
        let a0 = sym_part(&(&si * a * &si));
        let b0 = sym_part(&(&si * b * &si));
        let i = self.identity();
        let aa = self.inner(&i, &a0, &a0);
        let bb = self.inner(&i, &b0, &b0);
        let ab = self.inner(&i, &a0, &b0);
        let gram = aa * bb - ab * ab;
        if gram <= 1e-14 * aa * bb || gram == 0.0 {
            return Ok(0.0);
        }
        Ok(self.algebra.algebraic_sectional_curvature(&a0, &b0, self.lambda)? * gram)
    }

    /// `d(x, γ(s)) - s` for the ray `γ(s) = o^{1/2} exp(s o^{-1/2} v o^{-1/2}) o^{1/2}`.
    ///
    /// The eigenvalues of `x^{-1/2} γ(s) x^{-1/2}` are the squared singular
    /// values of `x^{-1/2} o^{1/2} O e^{sD/2}` (`O D Oᵀ` the eigen-split of the
    /// direction), computed by one-sided Jacobi so that the tiny ones keep
    /// relative accuracy.
    pub fn ray_excess(&self, x: &DMatrix<f64>, o: &DMatrix<f64>, v: &DMatrix<f64>, s: f64) -> f64 {
        let (os, osi) = self.sqrt_pair(o);
        let (_, xsi) = self.sqrt_pair(x);
        let e = eig_sym(&(&osi * v * &osi));
        let d = &e.values;
        let n = self.n;
        let mid = 0.5 * (d[0] + d[n - 1]);
        if s * (d[0] - d[n - 1]) * 0.25 > 340.0 {
            return f64::NAN;
        }
        let mut b = &xsi * &os * &e.vectors;
        for j in 0..n {
            let scale = (0.5 * s * (d[j] - mid)).exp();
            for i in 0..n {
                b[(i, j)] *= scale;
            }
        }
        let sv = singular_values_graded(&b);
        let r: DVector<f64> = DVector::from_fn(n, |i, _| s * (mid - d[i]) + 2.0 * sv[i].ln());
        let ell_sq: f64 = (0..n).map(|i| (s * d[i] + r[i]).powi(2)).sum();
        let dist = (self.c * ell_sq).sqrt();
        let dr: f64 = (0..n).map(|i| d[i] * r[i]).sum();
        let rr: f64 = r.iter().map(|x| x * x).sum();
        let unit_defect = self.c * d.iter().map(|x| x * x).sum::<f64>() - 1.0;
        (2.0 * s * self.c * dr + self.c * rr + unit_defect * s * s) / (dist + s)
    }
}

impl SpdFactor {
    /// Unit direction of `log_o(exp_x(t·w))` at `o` and its length, for
    /// `t` far beyond the range where `exp_x(t·w)` can be formed and
    /// logged directly. NaN once the column grading would overflow.
    pub fn log_toward(&self, o: &DMatrix<f64>, x: &DMatrix<f64>, w: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, f64) {
        let n = self.n;
        let (os, osi) = self.sqrt_pair(o);
        let (xs, xsi) = self.sqrt_pair(x);
        let e = eig_sym(&sym_part(&(&xsi * w * &xsi)));
        let d = &e.values;
        let mid = 0.5 * (d[0] + d[n - 1]);
        if t * (d[0] - d[n - 1]) * 0.5 > 680.0 {
            return (DMatrix::from_element(n, n, f64::NAN), f64::NAN);
        }
        let mut b = &osi * &xs * &e.vectors;
        for j in 0..n {
            let scale = (0.5 * t * (d[j] - mid)).exp();
            for i in 0..n {
                b[(i, j)] *= scale;
            }
        }
        let (sv, u) = graded_svd(&b);
        let logs = DVector::from_fn(n, |i, _| 2.0 * sv[i].ln() + t * mid);
        let l = &u * DMatrix::from_diagonal(&logs) * u.transpose();
        let dist = (self.c * logs.norm_squared()).sqrt();
        (sym_part(&(&os * l * &os)) / dist, dist)
    }
}
