//! Matrix inequalities behind the Jacobian and Hessian estimates.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lie::MatrixLieAlgebra;
use crate::numeric::{inv_sqrt_spd, op_norm, psd_sqrt, sym_part, SymMatrix};
use crate::sampling;

use super::report::{Context, Sense, VerificationReport};

pub const DET_TOL: f64 = 1e-12;
pub const SQRT_TOL: f64 = 1e-10;

fn gaussian(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let v = sampling::gaussian_vector_from(rng, n * n);
    DMatrix::from_column_slice(n, n, v.as_slice())
}

fn context(name: &str, seed: u64) -> Context {
    Context { space: name.to_string(), seed: Some(seed), ..Default::default() }
}

/// Ratios whose maximum must stay below 1:
/// `|det(CN)| / |det N|` for `‖C‖ ≤ 1`, and `det N / det(N + P)` for PSD
/// `N, P`.
pub fn det_comparison_audit(dim: usize, samples: usize, seed: u64) -> Result<VerificationReport> {
    if dim == 0 || dim > 10 {
        return Err(Error::Input(format!("det audit dimension must be in 1..=10, got {dim}")));
    }
    let start = Instant::now();
    let ratios: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(seed, i as u64);
            let n = gaussian(&mut rng, dim);
            let c = gaussian(&mut rng, dim);
            let c = &c * (rng.random::<f64>() / op_norm(&c));
            let contraction = (&c * &n).determinant().abs() / n.determinant().abs();
            let g = gaussian(&mut rng, dim);
            let h = gaussian(&mut rng, dim);
            let np = &g * g.transpose();
            let p = &h * h.transpose();
            let monotone = np.determinant() / (&np + p).determinant();
            (contraction, monotone)
        })
        .collect();
    let worst1 = ratios.iter().map(|r| r.0).fold(0.0f64, f64::max);
    let worst2 = ratios.iter().map(|r| r.1).fold(0.0f64, f64::max);
    let worst = if ratios.iter().any(|r| r.0.is_nan() || r.1.is_nan()) { f64::NAN } else { worst1.max(worst2) };
    Ok(VerificationReport::new("det-audit", &context(&format!("matrices:{dim}"), seed), worst, 1.0, Sense::AtMost, DET_TOL)
        .detail("contraction.worst", worst1)
        .detail("monotone.worst", worst2)
        .detail("samples", samples as f64)
        .timed(start))
}

/// `‖√(A²) - √(B²)‖ / (√dim ‖A - B‖)` for random symmetric pairs, and for
/// pairs of `ad_u` (`u ∈ 𝔭`) on `sl(2)` and `sl(3)` in a `β_θ`-orthonormal
/// basis. All ratios must stay below 1.
pub fn sqrt_perturbation_audit(dim: usize, samples: usize, seed: u64) -> Result<VerificationReport> {
    if dim == 0 || dim > 12 {
        return Err(Error::Input(format!("sqrt audit dimension must be in 1..=12, got {dim}")));
    }
    let start = Instant::now();
    let random: Vec<Result<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(seed, i as u64);
            let a = sym_part(&gaussian(&mut rng, dim));
            let b = if i % 2 == 0 {
                sym_part(&gaussian(&mut rng, dim))
            } else {
                let eps = 10f64.powi(-(1 + (i / 2 % 2) as i32));
                &a + sym_part(&gaussian(&mut rng, dim)) * eps
            };
            ratio(&a, &b)
        })
        .collect();
    let mut report_worst = 0.0f64;
    let mut details = Vec::new();
    let mut failures = 0;
    let mut fold = |name: &str, rs: &[Result<f64>]| {
        let mut w = 0.0f64;
        for r in rs {
            match r {
                Ok(r) if r.is_nan() => w = f64::NAN,
                Ok(r) => w = if w.is_nan() { w } else { w.max(*r) },
                Err(_) => failures += 1,
            }
        }
        report_worst = if w.is_nan() || report_worst.is_nan() { f64::NAN } else { report_worst.max(w) };
        details.push((format!("{name}.worst"), w));
    };
    fold("random", &random);
    for n in [2usize, 3] {
        let rs = ad_pairs(n, samples, seed ^ (n as u64) << 32)?;
        fold(&format!("sl{n}"), &rs);
    }
    let mut report = VerificationReport::new("sqrt-audit", &context(&format!("matrices:{dim}"), seed), report_worst, 1.0, Sense::AtMost, SQRT_TOL)
        .count_condition("errors", failures)
        .detail("samples", samples as f64);
    for (k, v) in details {
        report = report.detail(&k, v);
    }
    Ok(report.timed(start))
}

fn ratio(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let dim = a.nrows() as f64;
    let abs = |m: &DMatrix<f64>| -> Result<DMatrix<f64>> { Ok(psd_sqrt(&SymMatrix::new(m * m)?)?.into_matrix()) };
    let lhs = op_norm(&(abs(a)? - abs(b)?));
    let rhs = dim.sqrt() * op_norm(&(a - b));
    Ok(if rhs == 0.0 { if lhs == 0.0 { 0.0 } else { f64::INFINITY } } else { lhs / rhs })
}

fn ad_pairs(n: usize, samples: usize, seed: u64) -> Result<Vec<Result<f64>>> {
    let g = MatrixLieAlgebra::sl(n)?;
    let gram = SymMatrix::new(g.beta_theta_gram().clone())?;
    let inv_half = inv_sqrt_spd(&gram)?;
    let half = inv_half.clone().try_inverse().ok_or_else(|| Error::Domain("singular β_θ Gram matrix".into()))?;
    let p_element = |rng: &mut rand_chacha::ChaCha8Rng| {
        let m = sym_part(&gaussian(rng, n));
        let tr = m.trace() / n as f64;
        m - DMatrix::identity(n, n) * tr
    };
    Ok((0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(seed, i as u64);
            let (u, w) = (p_element(&mut rng), p_element(&mut rng));
            let a = &half * g.ad_operator(&u)? * &inv_half;
            let b = &half * g.ad_operator(&w)? * &inv_half;
            ratio(&sym_part(&a), &sym_part(&b))
        })
        .collect())
}
