//! Volumes of geodesic balls in products of Euclidean and hyperbolic
//! factors.
//!
//! In polar coordinates per factor, `dvol_f = j_f(ρ_f) dρ_f dω_f` with
//! `j = ρ^{m-1}` (Euclidean) or `(sinh(κρ)/κ)^{m-1}` (hyperbolic). Writing
//! `ρ_f = s a_f` with `a` on the positive orthant of `𝕊^{F-1}` gives
//! `vol B(r) = Π_f |𝕊^{m_f-1}| ∫_{a} ∫_0^r s^{F-1} Π_f j_f(s a_f) ds da`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::numeric::quadrature::adaptive_simpson;
use crate::space::{Factor, Point, SymmetricSpace};

use super::grid::sphere_area;

const TOL: f64 = 1e-13;

/// Area of the geodesic sphere of radius `r`, `d/dr vol B(r)`.
pub fn sphere_area_at(space: &SymmetricSpace, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Input(format!("sphere radius must be positive, got {r}")));
    }
    let densities = densities(space)?;
    let sphere_factor: f64 = densities.iter().map(|(m, _)| sphere_area(m - 1)).product();
    let nf = densities.len();
    Ok(sphere_factor * orthant(nf, &mut Vec::with_capacity(nf), 1.0, &|a| density(&densities, r, a)))
}

fn densities(space: &SymmetricSpace) -> Result<Vec<(usize, f64)>> {
    space
        .factors()
        .iter()
        .map(|f| match f {
            Factor::Euclidean { dim } => Ok((*dim, 0.0)),
            Factor::Hyperbolic { dim, kappa } => Ok((*dim, *kappa)),
            Factor::Spd(_) => Err(Error::UnsupportedVolume),
        })
        .collect()
}

/// `s^{F-1} Π_f j_f(s a_f)`.
fn density(densities: &[(usize, f64)], s: f64, a: &[f64]) -> f64 {
    let mut j = s.powi(densities.len() as i32 - 1);
    for ((m, kappa), af) in densities.iter().zip(a) {
        let rho = s * af;
        let radial = if *kappa == 0.0 { rho } else { (kappa * rho).sinh() / kappa };
        j *= radial.powi(*m as i32 - 1);
    }
    j
}

/// Volume of the geodesic ball of radius `r`. The spaces are homogeneous,
/// so `center` only has to be a valid point.
pub fn ball_volume(space: &SymmetricSpace, _center: &Point, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Input(format!("ball radius must be positive, got {r}")));
    }
    let densities = densities(space)?;
    let sphere_factor: f64 = densities.iter().map(|(m, _)| sphere_area(m - 1)).product();
    let nf = densities.len();
    let radial = |a: &[f64]| adaptive_simpson(&|s| density(&densities, s, a), 0.0, r, TOL * r);
    Ok(sphere_factor * orthant(nf, &mut Vec::with_capacity(nf), 1.0, &radial))
}

/// `∫ g(a) da` over the positive orthant of `𝕊^{k-1}` (the point `a = (1)`
/// when `k = 1`), by recursive angles `a_0 = cos θ`, rest `= sin θ · a'`.
fn orthant(k: usize, prefix: &mut Vec<f64>, scale: f64, g: &dyn Fn(&[f64]) -> f64) -> f64 {
    if k == 1 {
        prefix.push(scale);
        let v = g(prefix);
        prefix.pop();
        return v;
    }
    let inner = |theta: f64| {
        let (sin, cos) = theta.sin_cos();
        let mut p = prefix.clone();
        p.push(scale * cos);
        sin.powi(k as i32 - 2) * orthant(k - 1, &mut p, scale * sin, g)
    };
    adaptive_simpson(&inner, 0.0, FRAC_PI_2, TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn vol(spec: &str, r: f64) -> Result<f64> {
        let s = SymmetricSpace::parse(spec).unwrap();
        ball_volume(&s, &s.base_point(), r)
    }

    #[test]
    fn euclidean_balls() {
        assert!((vol("euclidean:3", 1.0).unwrap() - 4.0 * PI / 3.0).abs() < 1e-10);
        // the product ℝ² × ℝ is ℝ³
        assert!((vol("euclidean:2xeuclidean:1", 1.3).unwrap() - 4.0 * PI / 3.0 * 1.3f64.powi(3)).abs() < 1e-9);
    }

    #[test]
    fn hyperbolic_balls() {
        for r in [0.25, 0.5, 1.0, 2.0] {
            let v = vol("hyperbolic:3", r).unwrap();
            let exact = PI * ((2.0 * r).sinh() - 2.0 * r);
            assert!((v / exact - 1.0).abs() < 1e-9, "r = {r}");
        }
        // H² with κ = 2: 2π (cosh(κr) - 1) / κ²
        let v = vol("hyperbolic:2,kappa=2", 0.7).unwrap();
        assert!((v - 2.0 * PI * ((1.4f64).cosh() - 1.0) / 4.0).abs() < 1e-10);
    }

    #[test]
    fn sphere_areas() {
        let s = SymmetricSpace::parse("hyperbolic:3").unwrap();
        assert!((sphere_area_at(&s, 0.5).unwrap() - 4.0 * PI * 0.5f64.sinh().powi(2)).abs() < 1e-12);
        // derivative of the volume
        let s = SymmetricSpace::parse("hyperbolic:2xeuclidean:1").unwrap();
        let o = s.base_point();
        let h = 1e-4;
        let fd = (ball_volume(&s, &o, 0.8 + h).unwrap() - ball_volume(&s, &o, 0.8 - h).unwrap()) / (2.0 * h);
        assert!((sphere_area_at(&s, 0.8).unwrap() / fd - 1.0).abs() < 1e-7);
    }

    #[test]
    fn monotone_in_radius() {
        let mut prev = 0.0;
        for k in 1..10 {
            let v = vol("hyperbolic:2xeuclidean:1", 0.2 * k as f64).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn spd_is_unsupported() {
        assert_eq!(vol("spd:2", 1.0), Err(Error::UnsupportedVolume));
        assert!(matches!(vol("euclidean:3", 0.0), Err(Error::Input(_))));
    }
}
