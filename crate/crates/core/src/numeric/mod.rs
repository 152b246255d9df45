//! Dense symmetric linear algebra for the small operators that show up in the
//! geometry: `ad_u²`, Busemann Hessians, shape operators.
//!
//! Everything here is a pure function of its input. Eigen-decompositions use
//! cyclic Jacobi rotations, which are deterministic and accurate to a few ulps
//! on the dimensions used in this crate (at most ~15).

pub mod quadrature;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetric square matrix. Symmetrized on construction so that
/// `m[(i, j)] == m[(j, i)]` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Builds from a square matrix, replacing it with `(m + mᵀ) / 2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Input(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("matrix has non-finite entries".into()));
        }
        Ok(Self::symmetrize(m))
    }

    pub(crate) fn symmetrize(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let s = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
        }
        SymMatrix(m)
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        let mut t = 0.0;
        for i in 0..self.dim() {
            t += self.0[(i, i)];
        }
        t
    }

    pub fn scale(&self, c: f64) -> Self {
        SymMatrix(&self.0 * c)
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        SymMatrix::symmetrize(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        SymMatrix::symmetrize(&self.0 - &other.0)
    }

    /// `‖m‖_op`, the largest absolute eigenvalue.
    pub fn op_norm(&self) -> f64 {
        let e = sym_eig(self).expect("finite by construction");
        e.values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let e = sym_eig(self).expect("finite by construction");
        e.values[e.values.len() - 1]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        let e = sym_eig(self).expect("finite by construction");
        e.values[0]
    }

    /// Congruence `bᵀ m b` (b may be rectangular).
    pub fn congruence(&self, b: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::symmetrize(b.transpose() * &self.0 * b)
    }

    pub fn determinant(&self) -> f64 {
        self.0.clone().determinant()
    }
}

/// Eigen-decomposition of a symmetric matrix: `m = Q Λ Qᵀ`, eigenvalues
/// sorted in descending order, eigenvectors stored as the columns of `Q`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    /// `Q f(Λ) Qᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * self.vectors.transpose()
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigen-solver for symmetric input.
pub fn sym_eig(m: &SymMatrix) -> Result<SymEigen> {
    let mut a = m.0.clone();
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("sym_eig: non-finite entries".into()));
    }
    let n = a.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += a[(i, i)] * a[(i, i)];
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off == 0.0 || off <= 1e-34 * diag {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // Skip rotations that cannot change the diagonal in floating point.
                if apq.abs() < 1e-18 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(i));
    }
    Ok(SymEigen { values, vectors })
}

/// Eigen-decomposition of the symmetric part of `m` for internal callers
/// that already hold valid data. Non-finite input yields NaN eigenvalues
/// instead of an error so failures surface in the checks downstream.
pub(crate) fn eig_sym(m: &DMatrix<f64>) -> SymEigen {
    let n = m.nrows();
    match sym_eig(&SymMatrix::symmetrize(m.clone())) {
        Ok(e) => e,
        Err(_) => SymEigen {
            values: DVector::from_element(n, f64::NAN),
            vectors: DMatrix::from_element(n, n, f64::NAN),
        },
    }
}

/// Symmetric part `(m + mᵀ) / 2`.
pub fn sym_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    SymMatrix::symmetrize(m.clone()).0
}

/// Threshold below which negative eigenvalues are treated as rounding noise.
pub fn psd_tolerance(op_norm: f64) -> f64 {
    1e-8 * (1.0 + op_norm)
}

/// The unique PSD square root of a PSD matrix. Eigenvalues in
/// `[-ε_psd, 0)` are clamped to zero first.
pub fn psd_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let e = sym_eig(m)?;
    let norm = e.values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let tol = psd_tolerance(norm);
    let min = e.values[e.values.len() - 1];
    if min < -tol {
        return Err(Error::NotPsd { min_eigenvalue: min, tolerance: tol });
    }
    Ok(SymMatrix::symmetrize(e.map(|x| x.max(0.0).sqrt())))
}

/// Which matrix function [`mat_exp_log`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatFn {
    Exp,
    LogSpd,
}

/// Matrix exponential of a square matrix, or principal logarithm of an SPD
/// matrix.
pub fn mat_exp_log(m: &DMatrix<f64>, mode: MatFn) -> Result<DMatrix<f64>> {
    match mode {
        MatFn::Exp => mat_exp(m),
        MatFn::LogSpd => log_spd(m),
    }
}

/// General matrix exponential. Symmetric input takes the eigen path; anything
/// else goes through nalgebra's Padé scaling-and-squaring.
pub fn mat_exp(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Input("mat_exp: matrix is not square".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("mat_exp: non-finite entries".into()));
    }
    if is_symmetric(m, 0.0) {
        return Ok(sym_exp(&SymMatrix(m.clone())));
    }
    Ok(m.clone().exp())
}

pub fn sym_exp(m: &SymMatrix) -> DMatrix<f64> {
    let e = sym_eig(m).expect("finite by construction");
    SymMatrix::symmetrize(e.map(f64::exp)).0
}

/// Principal logarithm of a symmetric positive-definite matrix.
pub fn log_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Domain("log_spd: matrix is not square".into()));
    }
    let scale = m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if !is_symmetric(m, 1e-10 * (1.0 + scale)) {
        return Err(Error::Domain("log_spd: matrix is not symmetric".into()));
    }
    let e = sym_eig(&SymMatrix::new(m.clone())?)?;
    let min = e.values[e.values.len() - 1];
    if min <= 0.0 {
        return Err(Error::Domain(format!(
            "log_spd: matrix is not positive definite (min eigenvalue {min:e})"
        )));
    }
    Ok(SymMatrix::symmetrize(e.map(f64::ln)).0)
}

/// `(P^{1/2}, P^{-1/2})` for SPD `P`.
pub fn spd_sqrt_pair(p: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let e = sym_eig(&SymMatrix::new(p.clone())?)?;
    let min = e.values[e.values.len() - 1];
    if min <= 0.0 {
        return Err(Error::Domain(format!(
            "matrix is not positive definite (min eigenvalue {min:e})"
        )));
    }
    let s = SymMatrix::symmetrize(e.map(f64::sqrt)).0;
    let si = SymMatrix::symmetrize(e.map(|x| 1.0 / x.sqrt())).0;
    Ok((s, si))
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    if n != m.ncols() {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Spectral norm of an arbitrary (possibly rectangular) matrix.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = SymMatrix::symmetrize(m.transpose() * m);
    gram.max_eigenvalue().max(0.0).sqrt()
}

/// Singular values by one-sided (Hestenes) Jacobi on the columns of `m`,
/// sorted descending.
///
/// When `m = B·D` with `B` well conditioned and `D` diagonal, every singular
/// value comes out with small *relative* error regardless of the spread in
/// `D`. The truncated Busemann oracle depends on this: its matrices carry
/// column scalings like `e^{±300}`.
pub fn singular_values_graded(m: &DMatrix<f64>) -> DVector<f64> {
    let (mut sv, _) = graded_svd(m);
    sv.as_mut_slice().sort_by(|x, y| y.total_cmp(x));
    sv
}

/// One-sided Jacobi SVD `m = U Σ Vᵀ` returning `(σ, U)` unsorted, with the
/// same relative accuracy as [`singular_values_graded`] for each column of
/// `U`. Zero singular values leave a zero column.
pub fn graded_svd(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let mut a = m.clone();
    let ncols = a.ncols();
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..ncols {
            for q in (p + 1)..ncols {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= 1e-16 * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..a.nrows() {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sv = DVector::from_fn(ncols, |j, _| a.column(j).norm());
    for j in 0..ncols {
        if sv[j] > 0.0 {
            let col = a.column(j) / sv[j];
            a.set_column(j, &col);
        }
    }
    (sv, a)
}

/// Inverse square root of a symmetric positive-definite Gram matrix.
pub fn inv_sqrt_spd(g: &SymMatrix) -> Result<DMatrix<f64>> {
    let e = sym_eig(g)?;
    let min = e.values[e.values.len() - 1];
    if min <= 0.0 {
        return Err(Error::Domain(format!("Gram matrix is singular (min eigenvalue {min:e})")));
    }
    Ok(SymMatrix::symmetrize(e.map(|x| 1.0 / x.sqrt())).0)
}
