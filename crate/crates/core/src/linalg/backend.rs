//! Bridge to `faer` for the decompositions.

use faer::{Mat, MatRef, Side};

use super::{ComplexScalar, DenseMatrix, LinalgError};

pub(crate) fn to_faer(a: &DenseMatrix) -> Mat<f64> {
    Mat::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)])
}

pub(crate) fn from_faer(a: MatRef<'_, f64>) -> Result<DenseMatrix, LinalgError> {
    let mut data = Vec::with_capacity(a.nrows() * a.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            data.push(a[(i, j)]);
        }
    }
    DenseMatrix::from_row_major(a.nrows(), a.ncols(), data)
}

pub(crate) fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let prod = to_faer(a) * to_faer(b);
    from_faer(prod.as_ref()).expect("product of finite matrices overflowed")
}

/// Full SVD `a = U diag(s) Vᵀ` with `U` m×m and `V` n×n.
pub(crate) struct FullSvd {
    pub u: Mat<f64>,
    pub s: Vec<f64>,
    pub v: Mat<f64>,
}

pub(crate) fn full_svd(a: &DenseMatrix) -> Result<FullSvd, LinalgError> {
    let f = to_faer(a);
    let svd = f
        .svd()
        .map_err(|e| LinalgError::Decomposition(format!("svd: {e:?}")))?;
    let s = (0..a.rows().min(a.cols())).map(|i| svd.S()[i]).collect();
    Ok(FullSvd {
        u: svd.U().to_owned(),
        s,
        v: svd.V().to_owned(),
    })
}

pub(crate) fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(Vec::new());
    }
    to_faer(a)
        .singular_values()
        .map_err(|e| LinalgError::Decomposition(format!("svd: {e:?}")))
}

/// Symmetric eigendecomposition, eigenvalues ascending, eigenvectors as columns.
pub(crate) fn sym_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix), LinalgError> {
    let evd = to_faer(a)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| LinalgError::Decomposition(format!("symmetric eigen: {e:?}")))?;
    let vals = (0..a.rows()).map(|i| evd.S()[i]).collect();
    Ok((vals, from_faer(evd.U())?))
}

/// Eigenvalues only, without the eigenvector solve.
pub(crate) fn eigenvalues(a: &DenseMatrix) -> Result<Vec<ComplexScalar>, LinalgError> {
    if a.rows() == 0 {
        return Ok(Vec::new());
    }
    to_faer(a)
        .eigenvalues()
        .map_err(|e| LinalgError::Decomposition(format!("eigen: {e:?}")))
}

/// General eigendecomposition; eigenvector columns are normalized to unit length.
///
/// faer's triangular eigenvector solve can lose accuracy on a repeated,
/// non-defective eigenvalue. Clusters with a poor eigenpair residual get their
/// vectors replaced by the right singular vectors of `a − λ̄I` belonging to its
/// smallest singular values, which span the eigenspace when it is complete.
pub(crate) fn eigen(a: &DenseMatrix) -> Result<(Vec<ComplexScalar>, Mat<ComplexScalar>), LinalgError> {
    let n = a.rows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let evd = to_faer(a)
        .eigen()
        .map_err(|e| LinalgError::Decomposition(format!("eigen: {e:?}")))?;
    let vals: Vec<ComplexScalar> = (0..n).map(|i| evd.S()[i]).collect();
    let mut v = evd.U().to_owned();
    normalize_columns(&mut v);

    let ac = Mat::<ComplexScalar>::from_fn(n, n, |i, j| ComplexScalar::new(a[(i, j)], 0.0));
    let norm = a.frobenius_norm();
    let bad = |v: &Mat<ComplexScalar>, j: usize| residual(&ac, vals[j], v, j) > REFINE_RESIDUAL * norm;
    let mut done = vec![false; n];
    for j in 0..n {
        if done[j] || !bad(&v, j) {
            continue;
        }
        let cluster: Vec<usize> = (0..n)
            .filter(|&i| (vals[i] - vals[j]).norm() <= CLUSTER_TOL * norm.max(1.0))
            .collect();
        let center = cluster.iter().map(|&i| vals[i]).sum::<ComplexScalar>() / cluster.len() as f64;
        let shifted = Mat::<ComplexScalar>::from_fn(n, n, |r, c| {
            if r == c {
                ac[(r, c)] - center
            } else {
                ac[(r, c)]
            }
        });
        let svd = shifted
            .svd()
            .map_err(|e| LinalgError::Decomposition(format!("svd: {e:?}")))?;
        // Singular values come out in decreasing order.
        for (slot, &i) in cluster.iter().enumerate() {
            let col = n - cluster.len() + slot;
            for r in 0..n {
                v[(r, i)] = svd.V()[(r, col)];
            }
            done[i] = true;
        }
    }
    normalize_columns(&mut v);
    Ok((vals, v))
}

/// Relative residual above which an eigenvector is recomputed.
const REFINE_RESIDUAL: f64 = 1e-12;

/// Relative distance under which eigenvalues are treated as one cluster.
const CLUSTER_TOL: f64 = 1e-7;

fn residual(a: &Mat<ComplexScalar>, lambda: ComplexScalar, v: &Mat<ComplexScalar>, j: usize) -> f64 {
    let n = a.nrows();
    let mut r2 = 0.0;
    for i in 0..n {
        let mut acc = -lambda * v[(i, j)];
        for k in 0..n {
            acc += a[(i, k)] * v[(k, j)];
        }
        r2 += acc.norm_sqr();
    }
    r2.sqrt()
}

fn normalize_columns(v: &mut Mat<ComplexScalar>) {
    let n = v.nrows();
    for j in 0..v.ncols() {
        let norm = (0..n).map(|i| v[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            for i in 0..n {
                v[(i, j)] /= norm;
            }
        }
    }
}

/// Condition number σ_max/σ_min of a complex square matrix; infinite when singular.
pub(crate) fn complex_cond(v: MatRef<'_, ComplexScalar>) -> f64 {
    if v.nrows() == 0 {
        return 1.0;
    }
    if (0..v.nrows()).any(|i| (0..v.ncols()).any(|j| !v[(i, j)].is_finite())) {
        return f64::INFINITY;
    }
    match v.singular_values() {
        Ok(s) => {
            let lo = *s.last().unwrap();
            if lo > 0.0 {
                s[0] / lo
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Solves the square system `a x = b` by partial-pivot LU.
pub(crate) fn solve(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    use faer::linalg::solvers::Solve;
    let lu = to_faer(a).partial_piv_lu();
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = lu.solve(&rhs);
    (0..b.len()).map(|i| x[(i, 0)]).collect()
}

pub(crate) fn inverse(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    use faer::linalg::solvers::DenseSolveCore;
    let inv = to_faer(a).partial_piv_lu().inverse();
    from_faer(inv.as_ref())
}
