//! Matrix Lie algebras of noncompact type: Killing form, Cartan
//! decomposition, `ad` operators and restricted roots.
//!
//! Curvature sign convention: for `X, Y ∈ 𝔭` the curvature tensor of the
//! symmetric space is `R(X, Y)Z = -[[X, Y], Z]`, and the sectional curvature
//! of the plane `X ∧ Y` in the metric `λβ` is
//!
//! ```text
//! sec(X, Y) = β([X,Y], [X,Y]) / (λ (β(X,X) β(Y,Y) - β(X,Y)²))
//! ```
//!
//! Since `[X, Y] ∈ 𝔨` where `β` is negative definite, this is `≤ 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::{inv_sqrt_spd, sym_eig, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LieFamily {
    /// `sl(n, ℝ)`
    Sl(usize),
    /// `so(m, 1)`
    So(usize),
}

/// A real matrix Lie algebra with a fixed ordered basis and cached structure
/// constants.
#[derive(Debug, Clone)]
pub struct MatrixLieAlgebra {
    family: LieFamily,
    size: usize,
    basis: Vec<DMatrix<f64>>,
    /// `(BᵀB)⁻¹Bᵀ` for the flattened basis matrix `B`.
    coord_solver: DMatrix<f64>,
    flat_basis: DMatrix<f64>,
    /// `c[(i * dim + j) * dim + k]` with `[b_i, b_j] = Σ_k c_ijk b_k`.
    structure: Vec<f64>,
    killing: DMatrix<f64>,
    beta_theta: DMatrix<f64>,
}

fn unit(size: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(size, size);
    m[(i, j)] = 1.0;
    m
}

pub fn bracket(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    x * y - y * x
}

/// Cartan involution `θ(X) = -Xᵀ`.
pub fn theta(x: &DMatrix<f64>) -> DMatrix<f64> {
    -x.transpose()
}

impl MatrixLieAlgebra {
    /// `sl(n, ℝ)`: off-diagonal units `E_ij` (row-major), then
    /// `E_kk - E_{k+1,k+1}`.
    pub fn sl(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("sl(n) needs n >= 2, got {n}")));
        }
        let mut basis = Vec::with_capacity(n * n - 1);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    basis.push(unit(n, i, j));
                }
            }
        }
        for k in 0..n - 1 {
            basis.push(unit(n, k, k) - unit(n, k + 1, k + 1));
        }
        Self::from_basis(LieFamily::Sl(n), n, basis)
    }

    /// `so(m, 1)` acting on `ℝ^{m+1}` with the time coordinate last:
    /// rotations `E_ij - E_ji` (i < j < m), then boosts `E_im + E_mi`.
    pub fn so(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Config(format!("so(m,1) needs m >= 2, got {m}")));
        }
        let size = m + 1;
        let mut basis = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                basis.push(unit(size, i, j) - unit(size, j, i));
            }
        }
        for i in 0..m {
            basis.push(unit(size, i, m) + unit(size, m, i));
        }
        Self::from_basis(LieFamily::So(m), size, basis)
    }

    fn from_basis(family: LieFamily, size: usize, basis: Vec<DMatrix<f64>>) -> Result<Self> {
        let dim = basis.len();
        let mut flat = DMatrix::zeros(size * size, dim);
        for (k, b) in basis.iter().enumerate() {
            flat.set_column(k, &DVector::from_column_slice(b.as_slice()));
        }
        let gram = flat.transpose() * &flat;
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| Error::Config("basis elements are linearly dependent".into()))?;
        let coord_solver = gram_inv * flat.transpose();

        let mut alg = MatrixLieAlgebra {
            family,
            size,
            basis,
            coord_solver,
            flat_basis: flat,
            structure: vec![0.0; dim * dim * dim],
            killing: DMatrix::zeros(dim, dim),
            beta_theta: DMatrix::zeros(dim, dim),
        };

        for i in 0..dim {
            for j in 0..dim {
                let c = alg.coords(&bracket(&alg.basis[i], &alg.basis[j]))?;
                for k in 0..dim {
                    alg.structure[(i * dim + j) * dim + k] = c[k];
                }
            }
        }
        let ads: Vec<DMatrix<f64>> = (0..dim).map(|i| alg.ad_coords(&unit_vec(dim, i))).collect();
        for a in 0..dim {
            for b in 0..dim {
                alg.killing[(a, b)] = (&ads[a] * &ads[b]).trace();
            }
        }
        let theta_cols: Vec<DVector<f64>> = alg
            .basis
            .iter()
            .map(|b| alg.coords(&theta(b)))
            .collect::<Result<_>>()?;
        let theta_m = DMatrix::from_columns(&theta_cols);
        alg.beta_theta = -(&alg.killing * theta_m);
        let bt = alg.beta_theta.clone();
        alg.beta_theta = (&bt + bt.transpose()) * 0.5;
        Ok(alg)
    }

    pub fn family(&self) -> LieFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Size of the defining matrices.
    pub fn matrix_size(&self) -> usize {
        self.size
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    /// Coordinates of `x` in the basis; errors if `x` is not in the span.
    pub fn coords(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.nrows() != self.size || x.ncols() != self.size {
            return Err(Error::Input(format!(
                "expected a {}x{} matrix, got {}x{}",
                self.size,
                self.size,
                x.nrows(),
                x.ncols()
            )));
        }
        let flat = DVector::from_column_slice(x.as_slice());
        let c = &self.coord_solver * &flat;
        let residual = (&self.flat_basis * &c - &flat).norm();
        if residual > 1e-10 * (1.0 + flat.norm()) {
            return Err(Error::Input(format!(
                "element is outside the algebra (residual {residual:e})"
            )));
        }
        Ok(c)
    }

    pub fn element(&self, coords: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (c, b) in coords.iter().zip(&self.basis) {
            m += b * *c;
        }
        m
    }

    /// Bracket in coordinates, via the structure constants.
    pub fn bracket_coords(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let dim = self.dim();
        let mut out = DVector::zeros(dim);
        for i in 0..dim {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..dim {
                if b[j] == 0.0 {
                    continue;
                }
                let w = a[i] * b[j];
                let base = (i * dim + j) * dim;
                for k in 0..dim {
                    out[k] += w * self.structure[base + k];
                }
            }
        }
        out
    }

    fn ad_coords(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..dim {
                let base = (i * dim + j) * dim;
                for k in 0..dim {
                    m[(k, j)] += u[i] * self.structure[base + k];
                }
            }
        }
        m
    }

    /// Matrix of `X ↦ [u, X]` in the algebra basis.
    pub fn ad_operator(&self, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.ad_coords(&self.coords(u)?))
    }

    /// `β(X, Y) = tr(ad_X ∘ ad_Y)`.
    pub fn killing_form(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
        let a = self.coords(x)?;
        let b = self.coords(y)?;
        Ok(a.dot(&(&self.killing * b)))
    }

    pub fn killing_coords(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.killing * b))
    }

    /// `β_θ(X, Y) = -β(X, θY)`, positive definite.
    pub fn beta_theta(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
        let a = self.coords(x)?;
        let b = self.coords(y)?;
        Ok(a.dot(&(&self.beta_theta * b)))
    }

    /// Gram matrix of `β_θ` on the basis.
    pub fn beta_theta_gram(&self) -> &DMatrix<f64> {
        &self.beta_theta
    }

    /// `(𝔨-part, 𝔭-part) = ((X + θX)/2, (X - θX)/2)`.
    pub fn cartan_decompose(&self, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.coords(x)?;
        let tx = theta(x);
        let k = (x + &tx) * 0.5;
        let p = x - &k;
        Ok((k, p))
    }

    fn is_in_p(&self, x: &DMatrix<f64>) -> bool {
        let tx = theta(x);
        (&tx + x).norm() <= 1e-10 * (1.0 + x.norm())
    }

    /// Sectional curvature of the plane `X ∧ Y ⊆ 𝔭` in the metric `λβ`.
    pub fn algebraic_sectional_curvature(
        &self,
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        lambda: f64,
    ) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::Input(format!("metric scale must be positive, got {lambda}")));
        }
        if !self.is_in_p(x) || !self.is_in_p(y) {
            return Err(Error::Input("plane vectors must lie in 𝔭".into()));
        }
        let a = self.coords(x)?;
        let b = self.coords(y)?;
        let xx = self.killing_coords(&a, &a);
        let yy = self.killing_coords(&b, &b);
        let xy = self.killing_coords(&a, &b);
        let gram = xx * yy - xy * xy;
        if gram < 1e-14 * (xx * yy).max(f64::MIN_POSITIVE) {
            return Err(Error::DegeneratePlane { gram });
        }
        let z = self.bracket_coords(&a, &b);
        let zz = self.killing_coords(&z, &z);
        Ok(zz / (lambda * gram))
    }

    /// The standard maximal abelian subspace `𝔞 ⊆ 𝔭`, before
    /// orthogonalization.
    fn abelian_generators(&self) -> Vec<DMatrix<f64>> {
        match self.family {
            LieFamily::Sl(n) => (0..n - 1)
                .map(|k| unit(n, k, k) - unit(n, k + 1, k + 1))
                .collect(),
            LieFamily::So(m) => vec![unit(m + 1, 0, m) + unit(m + 1, m, 0)],
        }
    }

    /// Restricted roots of `𝔞` acting on `𝔤`.
    ///
    /// Joint eigenspaces are found by diagonalizing `ad_H` for a generic
    /// `H ∈ 𝔞` in a `β_θ`-orthonormal frame (where `ad_H` is symmetric), then
    /// each root is read off on the abelian basis.
    pub fn restricted_roots(&self) -> Result<RootDatum> {
        let dim = self.dim();
        // β-orthogonal basis of 𝔞
        let mut abelian: Vec<DMatrix<f64>> = Vec::new();
        for g in self.abelian_generators() {
            let mut h = g.clone();
            for prev in &abelian {
                let c = self.killing_form(&h, prev)? / self.killing_form(prev, prev)?;
                h -= prev * c;
            }
            abelian.push(h);
        }
        let rank = abelian.len();
        let abelian_gram = DMatrix::from_fn(rank, rank, |i, j| {
            self.killing_form(&abelian[i], &abelian[j]).expect("in algebra")
        });

        // β_θ-orthonormal coordinates: w = G^{1/2} c
        let gram = SymMatrix::new(self.beta_theta.clone())?;
        let g_inv_half = inv_sqrt_spd(&gram)?;
        let g_half = g_inv_half
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("β_θ Gram is singular".into()))?;
        let sym_ad = |h: &DMatrix<f64>| -> Result<SymMatrix> {
            let a = self.ad_operator(h)?;
            SymMatrix::new(&g_half * a * &g_inv_half)
        };

        let mut generic = DMatrix::zeros(self.size, self.size);
        for (b, h) in abelian.iter().enumerate() {
            let w = 1.0 + (b as f64 + 2.0).sqrt() * std::f64::consts::FRAC_1_PI;
            generic += h * w;
        }
        let e = sym_eig(&sym_ad(&generic)?)?;
        let scale = e.values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())).max(1.0);
        let tol = 1e-8 * scale;

        let per_basis: Vec<SymMatrix> = abelian.iter().map(sym_ad).collect::<Result<_>>()?;

        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..dim {
            match groups.last_mut() {
                Some(g) if (e.values[g[0]] - e.values[i]).abs() <= tol => g.push(i),
                _ => groups.push(vec![i]),
            }
        }

        let mut roots = Vec::new();
        let mut centralizer_dim = 0;
        for g in &groups {
            if e.values[g[0]].abs() <= tol {
                centralizer_dim += g.len();
                continue;
            }
            let q = DMatrix::from_columns(&g.iter().map(|&i| e.vectors.column(i).into_owned()).collect::<Vec<_>>());
            let mut values = DVector::zeros(rank);
            for (b, s) in per_basis.iter().enumerate() {
                let restricted = q.transpose() * s.as_matrix() * &q;
                let val = restricted.trace() / g.len() as f64;
                let resid = (s.as_matrix() * &q - &q * val).norm();
                if resid > 1e-7 * scale {
                    return Err(Error::Domain(format!(
                        "generic element failed to separate root spaces (residual {resid:e})"
                    )));
                }
                values[b] = val;
            }
            let dual = abelian_gram
                .clone()
                .lu()
                .solve(&values)
                .ok_or_else(|| Error::Domain("abelian Gram matrix is singular".into()))?;
            let norm_sq = values.dot(&dual);
            let root_vector = self.element(&(&g_inv_half * q.column(0)));
            roots.push(Root { values, multiplicity: g.len(), norm_sq, root_vector, dual });
        }

        let max_root_norm = roots.iter().map(|r| r.norm_sq).fold(0.0_f64, f64::max).sqrt();
        Ok(RootDatum {
            abelian_basis: abelian,
            abelian_gram,
            roots,
            max_root_norm,
            centralizer_k_dim: centralizer_dim - rank,
            algebra_dim: dim,
        })
    }
}

fn unit_vec(dim: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    v[i] = 1.0;
    v
}

/// A restricted root `α ∈ 𝔞*`.
#[derive(Debug, Clone)]
pub struct Root {
    /// `α(H_b)` on the abelian basis.
    pub values: DVector<f64>,
    pub multiplicity: usize,
    /// `|α|²_β`
    pub norm_sq: f64,
    /// A nonzero element of the root space `𝔤_α`.
    pub root_vector: DMatrix<f64>,
    /// Coefficients of the `β`-dual vector `H_α` on the abelian basis.
    pub dual: DVector<f64>,
}

impl Root {
    pub fn dual_vector(&self, abelian_basis: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(abelian_basis[0].nrows(), abelian_basis[0].ncols());
        for (c, b) in self.dual.iter().zip(abelian_basis) {
            h += b * *c;
        }
        h
    }

    /// `α(H)` for `H ∈ 𝔞`, given `H`'s coefficients on the abelian basis.
    pub fn eval(&self, coeffs: &DVector<f64>) -> f64 {
        self.values.dot(coeffs)
    }
}

#[derive(Debug, Clone)]
pub struct RootDatum {
    /// β-orthogonal basis of a maximal abelian `𝔞 ⊆ 𝔭`.
    pub abelian_basis: Vec<DMatrix<f64>>,
    pub abelian_gram: DMatrix<f64>,
    pub roots: Vec<Root>,
    /// `max |α|` in the β-metric on `𝔞`.
    pub max_root_norm: f64,
    /// `dim 𝔷(𝔞) ∩ 𝔨`
    pub centralizer_k_dim: usize,
    pub algebra_dim: usize,
}

impl RootDatum {
    pub fn rank(&self) -> usize {
        self.abelian_basis.len()
    }

    /// A plane in `𝔭` whose sectional curvature is `-|α|²/λ`: the unit dual
    /// vector of `α` and the `𝔭`-part of a root vector.
    pub fn root_plane(&self, root: &Root) -> (DMatrix<f64>, DMatrix<f64>) {
        let h = root.dual_vector(&self.abelian_basis);
        let e = &root.root_vector;
        let y = (e - theta(e)) * 0.5;
        (h, y)
    }
}

/// Smallest admissible metric scale `λ = max|α|² / κ²` for sectional
/// curvature bounded below by `-κ²`.
pub fn metric_scale_bound(rd: &RootDatum, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Input(format!("kappa must be positive and finite, got {kappa}")));
    }
    Ok(rd.max_root_norm * rd.max_root_norm / (kappa * kappa))
}
