//! Quadrature grids on the round sphere `𝕊ⁿ ⊂ ℝⁿ⁺¹`.
//!
//! Hyperspherical angles `θ_1, …, θ_{n-1} ∈ (0, π)` and `φ ∈ [0, 2π)`:
//! `s_0 = cos θ_1`, `s_1 = sin θ_1 cos θ_2`, …,
//! `s_{n-1} = sin θ_1 ⋯ sin θ_{n-1} cos φ`, `s_n = sin θ_1 ⋯ sin θ_{n-1} sin φ`,
//! with measure `Π_j sin^{n-j} θ_j dθ_j dφ`. Polar angles with exponent 1 use
//! Gauss–Legendre in `cos θ` (exact for polynomials in `s`), the others
//! Gauss–Legendre in `θ` with the sine weight folded in. Azimuths are
//! uniform with a half-step offset. No node sits on a pole.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::numeric::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpec {
    /// `<lat>x<lon>` on `𝕊²`.
    LatLon { lat: usize, lon: usize },
    /// `<k>^<n>`: `k` nodes in each of the `n` angles of `𝕊ⁿ`.
    Cube { k: usize, n: usize },
}

impl GridSpec {
    /// Sphere dimension `n`.
    pub fn sphere_dim(&self) -> usize {
        match self {
            GridSpec::LatLon { .. } => 2,
            GridSpec::Cube { n, .. } => *n,
        }
    }

    /// Per-angle node counts, polar angles first, azimuth last.
    fn counts(&self) -> Vec<usize> {
        match *self {
            GridSpec::LatLon { lat, lon } => vec![lat, lon],
            GridSpec::Cube { k, n } => vec![k; n],
        }
    }

    pub fn len(&self) -> usize {
        self.counts().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same shape with every count doubled.
    pub fn refined(&self) -> GridSpec {
        match *self {
            GridSpec::LatLon { lat, lon } => GridSpec::LatLon { lat: 2 * lat, lon: 2 * lon },
            GridSpec::Cube { k, n } => GridSpec::Cube { k: 2 * k, n },
        }
    }

    /// Default for a sphere of dimension `n`.
    pub fn default_for(n: usize) -> GridSpec {
        match n {
            2 => GridSpec::LatLon { lat: 64, lon: 128 },
            _ => GridSpec::Cube { k: 12, n },
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::LatLon { lat, lon } => write!(f, "{lat}x{lon}"),
            GridSpec::Cube { k, n } => write!(f, "{k}^{n}"),
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse { token: s.to_string(), message: msg.to_string() };
        let count = |t: &str| -> Result<usize> {
            match t.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(Error::Parse { token: t.to_string(), message: "expected a positive integer".into() }),
            }
        };
        if let Some((a, b)) = s.split_once('x') {
            let (lat, lon) = (count(a)?, count(b)?);
            if lon < 2 {
                return Err(bad("need at least 2 longitudes"));
            }
            Ok(GridSpec::LatLon { lat, lon })
        } else if let Some((a, b)) = s.split_once('^') {
            let (k, n) = (count(a)?, count(b)?);
            if n < 2 {
                return Err(bad("sphere dimension must be at least 2"));
            }
            if k < 2 {
                return Err(bad("need at least 2 nodes per angle"));
            }
            Ok(GridSpec::Cube { k, n })
        } else {
            Err(bad("expected `<lat>x<lon>` or `<k>^<n>`"))
        }
    }
}

/// A node: unit vector on `𝕊ⁿ` and its quadrature weight for the round
/// measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub s: DVector<f64>,
    pub weight: f64,
}

/// Nodes in row-major order over the angles (azimuth fastest).
pub fn build(spec: &GridSpec) -> Vec<Node> {
    let counts = spec.counts();
    let n = counts.len();
    // per-angle (value, weight) lists; polar angles are returned as θ
    let mut axes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n);
    for (j, &k) in counts[..n - 1].iter().enumerate() {
        let power = (n - 1 - j) as i32;
        let (x, w) = gauss_legendre(k);
        let axis = if power == 1 {
            // ∫ f(θ) sin θ dθ = ∫ f(acos t) dt; order θ ascending
            x.iter().zip(&w).rev().map(|(&t, &w)| (t.acos(), w)).collect()
        } else {
            x.iter()
                .zip(&w)
                .map(|(&t, &w)| {
                    let th = 0.5 * PI * (t + 1.0);
                    (th, 0.5 * PI * w * th.sin().powi(power))
                })
                .collect()
        };
        axes.push(axis);
    }
    let m = counts[n - 1];
    axes.push((0..m).map(|i| (2.0 * PI * (i as f64 + 0.5) / m as f64, 2.0 * PI / m as f64)).collect());

    let total: usize = counts.iter().product();
    let mut nodes = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut s = DVector::zeros(n + 1);
        let mut weight = 1.0;
        let mut sin_prod = 1.0;
        for j in 0..n - 1 {
            let (th, w) = axes[j][idx[j]];
            weight *= w;
            s[j] = sin_prod * th.cos();
            sin_prod *= th.sin();
        }
        let (phi, w) = axes[n - 1][idx[n - 1]];
        weight *= w;
        s[n - 1] = sin_prod * phi.cos();
        s[n] = sin_prod * phi.sin();
        nodes.push(Node { s, weight });
        for j in (0..n).rev() {
            idx[j] += 1;
            if idx[j] < counts[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    nodes
}

/// Area of the unit sphere `𝕊ⁿ`.
pub fn sphere_area(n: usize) -> f64 {
    // |𝕊⁰| = 2, |𝕊¹| = 2π, |𝕊ⁿ| = 2π/(n-1)·|𝕊ⁿ⁻²|
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * sphere_area(n - 2),
    }
}

/// Volume of the unit ball `Bⁿ⁺¹`.
pub fn ball_volume_unit(n: usize) -> f64 {
    sphere_area(n) / (n as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints() {
        assert_eq!("64x128".parse::<GridSpec>().unwrap(), GridSpec::LatLon { lat: 64, lon: 128 });
        assert_eq!("12^4".parse::<GridSpec>().unwrap(), GridSpec::Cube { k: 12, n: 4 });
        assert_eq!(GridSpec::Cube { k: 8, n: 3 }.to_string(), "8^3");
        for bad in ["64", "0x4", "ax3", "5^1", "1^3", "4x1"] {
            assert!(matches!(bad.parse::<GridSpec>(), Err(Error::Parse { .. })), "{bad}");
        }
    }

    #[test]
    fn weights_sum_to_sphere_area() {
        for spec in [GridSpec::LatLon { lat: 8, lon: 16 }, GridSpec::Cube { k: 10, n: 3 }, GridSpec::Cube { k: 12, n: 4 }] {
            let nodes = build(&spec);
            assert_eq!(nodes.len(), spec.len());
            let n = spec.sphere_dim();
            let total: f64 = nodes.iter().map(|x| x.weight).sum();
            assert!((total - sphere_area(n)).abs() < 1e-10 * sphere_area(n), "{spec}: {total}");
            for x in &nodes {
                assert!((x.s.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn integrates_low_degree_polynomials() {
        // ∫_{𝕊²} s_0² = 4π/3; ∫_{𝕊³} s_3² = |𝕊³|/4
        let nodes = build(&GridSpec::LatLon { lat: 6, lon: 8 });
        let v: f64 = nodes.iter().map(|x| x.weight * x.s[0] * x.s[0]).sum();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-13);
        let nodes = build(&GridSpec::Cube { k: 12, n: 3 });
        let v: f64 = nodes.iter().map(|x| x.weight * x.s[3] * x.s[3]).sum();
        assert!((v - sphere_area(3) / 4.0).abs() < 1e-9);
    }

    #[test]
    fn sphere_constants() {
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((ball_volume_unit(2) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn lat_lon_grid_has_antipodes() {
        let nodes = build(&GridSpec::LatLon { lat: 4, lon: 6 });
        for a in &nodes {
            assert!(nodes.iter().any(|b| (&a.s + &b.s).norm() < 1e-14));
        }
    }
}
