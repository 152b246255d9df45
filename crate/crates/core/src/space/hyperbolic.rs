//! Hyperboloid model of `H^m` with curvature `-κ²`.
//!
//! Points live in `ℝ^{m+1}` with the time coordinate last and satisfy
//! `Q(x, x) = -1/κ²`, `x_m > 0`, where `Q` is the Minkowski form.

use nalgebra::DVector;

use crate::error::{Error, Result};

pub fn minkowski(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let m = a.len() - 1;
    let mut s = 0.0;
    for i in 0..m {
        s += a[i] * b[i];
    }
    s - a[m] * b[m]
}

pub fn base_point(dim: usize, kappa: f64) -> DVector<f64> {
    let mut o = DVector::zeros(dim + 1);
    o[dim] = 1.0 / kappa;
    o
}

/// Rescales onto the sheet. Errors if `x` is not timelike and future-pointing.
pub fn normalize(x: &DVector<f64>, kappa: f64) -> Result<DVector<f64>> {
    let q = minkowski(x, x);
    let last = x[x.len() - 1];
    if !(q < 0.0) || !(last > 0.0) || x.iter().any(|c| !c.is_finite()) {
        return Err(Error::Input(format!(
            "not a point of the upper hyperboloid sheet (Q = {q:e}, time = {last:e})"
        )));
    }
    Ok(renormalize(x.clone(), kappa))
}

/// Recomputes the time coordinate from the spatial ones. Rescaling by
/// `sqrt(-Q(x,x))` instead would lose all accuracy for far points, where
/// `Q(x,x)` is a difference of two huge numbers.
fn renormalize(mut x: DVector<f64>, kappa: f64) -> DVector<f64> {
    let m = x.len() - 1;
    let spatial = x.rows(0, m).norm_squared();
    x[m] = (spatial + 1.0 / (kappa * kappa)).sqrt();
    x
}

/// Constraint violation `|κ²Q(x,x) + 1|`.
pub fn point_defect(x: &DVector<f64>, kappa: f64) -> f64 {
    (kappa * kappa * minkowski(x, x) + 1.0).abs()
}

pub fn project(x: &DVector<f64>, v: &DVector<f64>, kappa: f64) -> DVector<f64> {
    v + x * (kappa * kappa * minkowski(x, v))
}

pub fn exp(x: &DVector<f64>, v: &DVector<f64>, kappa: f64) -> DVector<f64> {
    let nv = minkowski(v, v).max(0.0).sqrt();
    if nv == 0.0 {
        return x.clone();
    }
    let t = kappa * nv;
    renormalize(x * t.cosh() + v * (t.sinh() / t), kappa)
}

/// Uses `asinh` of the projected displacement, which stays accurate for
/// nearby points where `acosh(-κ²Q(x,y))` would cancel.
pub fn log(x: &DVector<f64>, y: &DVector<f64>, kappa: f64) -> DVector<f64> {
    let w = project(x, y, kappa);
    let nw = minkowski(&w, &w).max(0.0).sqrt();
    if nw == 0.0 {
        return DVector::zeros(x.len());
    }
    let d = (kappa * nw).asinh() / kappa;
    w * (d / nw)
}

/// Chord form `d = (2/κ) asinh(κ|x - y|_Q / 2)`. The time difference is
/// rebuilt from the spatial parts, so the error is relative to `d` even far
/// from the origin.
pub fn distance(x: &DVector<f64>, y: &DVector<f64>, kappa: f64) -> f64 {
    let m = x.len() - 1;
    let (sx, sy) = (x.rows(0, m), y.rows(0, m));
    let ds = sx - sy;
    let dt = ds.dot(&(sx + sy)) / (x[m] + y[m]);
    let chord_sq = (ds.norm_squared() - dt * dt).max(0.0);
    2.0 * (0.5 * kappa * chord_sq.sqrt()).asinh() / kappa
}

pub fn transport(x: &DVector<f64>, y: &DVector<f64>, v: &DVector<f64>, kappa: f64) -> DVector<f64> {
    let k2 = kappa * kappa;
    let coef = k2 * minkowski(y, v) / (1.0 - k2 * minkowski(x, y));
    v + (x + y) * coef
}

/// `d(x, γ(s)) - s` for the ray `γ(s) = o cosh(κs) + v sinh(κs)/κ`, `v`
/// unit at `o`, evaluated without overflow or cancellation for large `s`.
pub fn ray_excess(x: &DVector<f64>, o: &DVector<f64>, v: &DVector<f64>, kappa: f64, s: f64) -> f64 {
    let k2 = kappa * kappa;
    let a = -k2 * minkowski(x, o);
    let b = -kappa * minkowski(x, v);
    // -κ²Q(x, γ(s)) = e^{κs} p with p below
    let decay = (-2.0 * kappa * s).exp();
    let p = 0.5 * (a + b) + 0.5 * decay * (a - b);
    let ln_z = kappa * s + p.ln();
    let inv_z2 = (-2.0 * ln_z).exp().min(1.0);
    (p.ln() + (1.0 + (1.0 - inv_z2).sqrt()).ln()) / kappa
}
