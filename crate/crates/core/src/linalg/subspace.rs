//! SVD-based subspaces, pseudo-inverse, PSD square root and oblique projection.

use super::backend;
use super::{dot, norm2, require_square, DenseMatrix, LinalgError};

/// Orthonormal basis of a subspace of `R^ambient_dim`, stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl SubspaceBasis {
    /// Wraps vectors that are already orthonormal. Panics in debug builds when
    /// they are not, since every producer in this crate orthonormalizes.
    pub fn from_orthonormal(ambient_dim: usize, vectors: Vec<Vec<f64>>) -> Self {
        debug_assert!(vectors.len() <= ambient_dim);
        debug_assert!(vectors.iter().all(|v| v.len() == ambient_dim));
        Self {
            ambient_dim,
            vectors,
        }
    }

    /// Orthonormalizes arbitrary spanning vectors (modified Gram-Schmidt with
    /// reorthogonalization), dropping those that fall below `tol` after
    /// projection.
    pub fn span_of(ambient_dim: usize, spanning: &[Vec<f64>], tol: f64) -> Self {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for v in spanning {
            assert_eq!(v.len(), ambient_dim, "spanning vector has wrong length");
            let scale = norm2(v);
            let mut w = v.clone();
            for _ in 0..2 {
                for q in &out {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            let nw = norm2(&w);
            if nw > tol * scale.max(1.0) && nw > 0.0 {
                w.iter_mut().for_each(|x| *x /= nw);
                out.push(w);
            }
        }
        Self {
            ambient_dim,
            vectors: out,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Basis vectors as the columns of an `ambient_dim × dim` matrix.
    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.ambient_dim, self.dim(), |i, j| self.vectors[j][i])
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient_dim];
        for q in &self.vectors {
            let c = dot(q, v);
            out.iter_mut().zip(q).for_each(|(o, qi)| *o += c * qi);
        }
        out
    }

    /// Distance from `v` to the subspace.
    pub fn distance(&self, v: &[f64]) -> f64 {
        let p = self.project(v);
        norm2(&super::sub_vec(v, &p))
    }
}

pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    backend::singular_values(a)
}

/// Numerical rank: singular values strictly above `tol·σ_max`.
pub fn rank(a: &DenseMatrix, tol: f64) -> Result<usize, LinalgError> {
    let s = singular_values(a)?;
    let cut = tol * s.first().copied().unwrap_or(0.0);
    Ok(s.iter().filter(|&&x| x > cut).count())
}

fn split_svd(a: &DenseMatrix, tol: f64) -> Result<(backend::FullSvd, usize), LinalgError> {
    let svd = backend::full_svd(a)?;
    let cut = tol * svd.s.first().copied().unwrap_or(0.0);
    let r = svd.s.iter().filter(|&&x| x > cut).count();
    Ok((svd, r))
}

fn columns(m: faer::MatRef<'_, f64>, range: std::ops::Range<usize>) -> Vec<Vec<f64>> {
    range
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)]).collect())
        .collect()
}

/// Orthonormal basis of `ker(a)` under the singular-value cut `tol·σ_max`.
pub fn kernel_basis(a: &DenseMatrix, tol: f64) -> Result<SubspaceBasis, LinalgError> {
    let n = a.cols();
    if a.rows() == 0 {
        let id = DenseMatrix::identity(n);
        return Ok(SubspaceBasis::from_orthonormal(
            n,
            (0..n).map(|j| id.col_vec(j)).collect(),
        ));
    }
    let (svd, r) = split_svd(a, tol)?;
    Ok(SubspaceBasis::from_orthonormal(n, columns(svd.v.as_ref(), r..n)))
}

/// Orthonormal basis of `ran(a)` under the singular-value cut `tol·σ_max`.
pub fn range_basis(a: &DenseMatrix, tol: f64) -> Result<SubspaceBasis, LinalgError> {
    let m = a.rows();
    if a.cols() == 0 {
        return Ok(SubspaceBasis::from_orthonormal(m, Vec::new()));
    }
    let (svd, r) = split_svd(a, tol)?;
    Ok(SubspaceBasis::from_orthonormal(m, columns(svd.u.as_ref(), 0..r)))
}

/// Moore-Penrose pseudo-inverse with singular values `≤ tol·σ_max` dropped.
pub fn pseudo_inverse(a: &DenseMatrix, tol: f64) -> Result<DenseMatrix, LinalgError> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(DenseMatrix::zeros(n, m));
    }
    let (svd, r) = split_svd(a, tol)?;
    // a† = Σ_k v_k u_kᵀ / σ_k
    let mut out = DenseMatrix::zeros(n, m);
    for k in 0..r {
        let inv = 1.0 / svd.s[k];
        for i in 0..n {
            let vik = svd.v[(i, k)] * inv;
            if vik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[(i, j)] += vik * svd.u[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Symmetric PSD square root. Eigenvalues in `[-tol_psd, 0)` are clamped to 0.
pub fn psd_sqrt(s: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    require_square("psd_sqrt", s)?;
    let scale = s.max_abs().max(1.0);
    let asym = s.asymmetry();
    if asym > 1e-10 * scale {
        return Err(LinalgError::NotSymmetric(asym));
    }
    let (vals, vecs) = backend::sym_eigen(&s.symmetrized())?;
    let n = s.rows();
    let tol_psd = 1e-10 * scale * n.max(1) as f64;
    let mut roots = Vec::with_capacity(n);
    for &l in &vals {
        if l < -tol_psd {
            return Err(LinalgError::NotPsd(l));
        }
        roots.push(l.max(0.0).sqrt());
    }
    let r = DenseMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| vecs[(i, k)] * roots[k] * vecs[(j, k)]).sum()
    });
    Ok(r.symmetrized())
}

/// Largest conditioning of `[onto along]` still accepted as a direct sum.
const DIRECT_SUM_COND_MAX: f64 = 1e12;

/// Oblique projection of `v` onto `span(onto)` along `span(along)`.
pub fn oblique_project(
    v: &[f64],
    onto: &SubspaceBasis,
    along: &SubspaceBasis,
) -> Result<Vec<f64>, LinalgError> {
    let n = onto.ambient_dim();
    if along.ambient_dim() != n || v.len() != n {
        return Err(LinalgError::DimensionMismatch {
            op: "oblique_project",
            expected: (n, n),
            found: (along.ambient_dim(), v.len()),
        });
    }
    if onto.dim() + along.dim() != n {
        return Err(LinalgError::NotDirectSum(format!(
            "dimensions {} + {} != {n}",
            onto.dim(),
            along.dim()
        )));
    }
    if onto.is_empty() {
        return Ok(vec![0.0; n]);
    }
    if along.is_empty() {
        return Ok(v.to_vec());
    }
    let mut cols: Vec<&Vec<f64>> = onto.vectors().iter().collect();
    cols.extend(along.vectors());
    let stacked = DenseMatrix::from_fn(n, n, |i, j| cols[j][i]);
    let s = singular_values(&stacked)?;
    let cond = s[0] / s[n - 1];
    if !(cond <= DIRECT_SUM_COND_MAX) {
        return Err(LinalgError::NotDirectSum(format!(
            "stacked basis condition number {cond:e}"
        )));
    }
    let coef = backend::solve(&stacked, v);
    let mut u = vec![0.0; n];
    for (c, q) in coef.iter().zip(onto.vectors()) {
        u.iter_mut().zip(q).for_each(|(ui, qi)| *ui += c * qi);
    }
    Ok(u)
}

/// Largest principal angle between two subspaces, in radians.
///
/// Subspaces of different dimension are at angle π/2. Computed through
/// `‖(I − Q_b Q_bᵀ) Q_a‖₂`, which stays accurate for tiny angles.
pub fn max_principal_angle(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<f64, LinalgError> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(LinalgError::DimensionMismatch {
            op: "max_principal_angle",
            expected: (a.ambient_dim(), a.dim()),
            found: (b.ambient_dim(), b.dim()),
        });
    }
    if a.dim() != b.dim() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let n = a.ambient_dim();
    let resid: Vec<Vec<f64>> = a
        .vectors()
        .iter()
        .map(|q| super::sub_vec(q, &b.project(q)))
        .collect();
    let r = DenseMatrix::from_fn(n, a.dim(), |i, j| resid[j][i]);
    let s = singular_values(&r)?;
    Ok(s[0].min(1.0).asin())
}
