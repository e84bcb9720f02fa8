//! Eigenvalues and the semi-Hurwitz / semi-Schur predicates.

use super::backend;
use super::subspace::{kernel_basis, range_basis};
use super::{
    require_square, ComplexScalar, DenseMatrix, LinalgError, DIAGONALIZABLE_COND_MAX,
    EIG_RESIDUAL_TOL,
};

/// Eigenvalues without eigenvectors, so defective matrices are fine. Each
/// value has `σ_min(a − λI) ≤ 1e-9·‖a‖_F`; eigenpair residuals are checked by
/// [`eigen_decomposition`].
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<ComplexScalar>, LinalgError> {
    require_square("eigenvalues", a)?;
    backend::eigenvalues(a)
}

/// Eigenvalues plus the condition number of the unit-column eigenvector matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<ComplexScalar>,
    pub cond_v: f64,
    /// Largest eigenpair residual observed, relative to `‖a‖_F`.
    pub max_residual: f64,
}

pub fn eigen_decomposition(a: &DenseMatrix) -> Result<EigenDecomposition, LinalgError> {
    require_square("eigenvalues", a)?;
    let n = a.rows();
    let (values, v) = backend::eigen(a)?;
    let norm = a.frobenius_norm();
    let mut worst: f64 = 0.0;
    for (j, &lambda) in values.iter().enumerate() {
        let mut r2 = 0.0;
        for i in 0..n {
            let mut acc = -lambda * v[(i, j)];
            for (k, &aik) in a.row(i).iter().enumerate() {
                acc += aik * v[(k, j)];
            }
            r2 += acc.norm_sqr();
        }
        worst = worst.max(r2.sqrt());
    }
    let bound = EIG_RESIDUAL_TOL * norm;
    if worst > bound && worst > f64::EPSILON {
        return Err(LinalgError::EigenResidual {
            residual: worst,
            bound,
        });
    }
    let cond_v = backend::complex_cond(v.as_ref());
    Ok(EigenDecomposition {
        values,
        cond_v,
        max_residual: if norm > 0.0 { worst / norm } else { 0.0 },
    })
}

/// Outcome of the numerical diagonalizability test.
#[derive(Debug, Clone)]
pub struct DiagonalizabilityReport {
    pub is_diagonalizable: bool,
    /// Condition number of the eigenvector matrix with unit-length columns.
    pub cond_v: f64,
    pub eigenvalues: Vec<ComplexScalar>,
}

/// Declares `a` diagonalizable when `cond(V) ≤ 1e8`.
pub fn diagonalizability_report(a: &DenseMatrix) -> Result<DiagonalizabilityReport, LinalgError> {
    require_square("diagonalizability_report", a)?;
    let (values, v) = backend::eigen(a)?;
    let cond_v = backend::complex_cond(v.as_ref());
    Ok(DiagonalizabilityReport {
        is_diagonalizable: cond_v <= DIAGONALIZABLE_COND_MAX,
        cond_v,
        eigenvalues: values,
    })
}

/// Spectral norm `σ_max(a)`.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64, LinalgError> {
    Ok(backend::singular_values(a)?.first().copied().unwrap_or(0.0))
}

fn rank_abs(a: &DenseMatrix, tol: f64) -> Result<usize, LinalgError> {
    let s = backend::singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let cut = tol.max(8.0 * a.rows().max(1) as f64 * f64::EPSILON * smax);
    Ok(s.iter().filter(|&&x| x > cut).count())
}

/// Every eigenvalue has `Re λ < −tol` or is a non-defective zero (`|λ| ≤ tol`).
pub fn is_semi_hurwitz(a: &DenseMatrix, tol: f64) -> Result<bool, LinalgError> {
    require_square("is_semi_hurwitz", a)?;
    let n = a.rows();
    let mut zeros = 0;
    for l in eigenvalues(a)? {
        if l.norm() <= tol {
            zeros += 1;
        } else if l.re >= -tol {
            return Ok(false);
        }
    }
    Ok(rank_abs(a, tol)? == n - zeros)
}

/// Every eigenvalue has `|λ| < 1 − tol` or is a non-defective one (`|λ − 1| ≤ tol`).
pub fn is_semi_schur(a: &DenseMatrix, tol: f64) -> Result<bool, LinalgError> {
    require_square("is_semi_schur", a)?;
    let n = a.rows();
    let mut ones = 0;
    for l in eigenvalues(a)? {
        if (l - 1.0).norm() <= tol {
            ones += 1;
        } else if l.norm() >= 1.0 - tol {
            return Ok(false);
        }
    }
    let shifted = a - &DenseMatrix::identity(n);
    Ok(rank_abs(&shifted, tol)? == n - ones)
}

/// Semi-Schur test for `I + delta`, evaluated on `delta` itself.
///
/// When `I + delta` has all its eigenvalues within `1e-8` of one (a small
/// step size), forming it explicitly leaves too few digits to tell the unit
/// eigenvalues from the contracting ones. Here the eigenvalues `ν` of `delta`
/// count as zero when `|ν| ≤ tol·‖delta‖_F`, the rest must satisfy
/// `|1 + ν| < 1`, i.e. `2 Re ν + |ν|² < 0`, and the zero cluster must match the
/// kernel dimension under the same relative cut.
pub fn is_semi_schur_increment(delta: &DenseMatrix, tol: f64) -> Result<bool, LinalgError> {
    require_square("is_semi_schur_increment", delta)?;
    let n = delta.rows();
    let scale = delta.frobenius_norm();
    if scale == 0.0 {
        return Ok(true);
    }
    let cut = tol * scale;
    let mut zeros = 0;
    for nu in eigenvalues(delta)? {
        if nu.norm() <= cut {
            zeros += 1;
        } else if 2.0 * nu.re + nu.norm_sqr() >= 0.0 {
            return Ok(false);
        }
    }
    Ok(super::subspace::rank(delta, tol)? == n - zeros)
}

/// Splits `R^n = ran(s) ⊕ ker(s)` and returns `(U, r)` with `U = [V_ran V_ker]⁻¹`.
fn invariant_split(s: &DenseMatrix, tol: f64) -> Result<(DenseMatrix, usize), LinalgError> {
    let n = s.rows();
    let ran = range_basis(s, tol)?;
    let ker = kernel_basis(s, tol)?;
    if ran.dim() + ker.dim() != n {
        return Err(LinalgError::NotDirectSum("range and kernel dimensions".into()));
    }
    let mut cols = ran.vectors().to_vec();
    cols.extend_from_slice(ker.vectors());
    let v = DenseMatrix::from_fn(n, n, |i, j| cols[j][i]);
    Ok((backend::inverse(&v)?, ran.dim()))
}

/// Solves `x = rhs` for a linear operator on `r×r` matrices given as a dense
/// `r²×r²` matrix acting on column-stacked vectors.
fn solve_vec(op: &DenseMatrix, rhs: &DenseMatrix) -> DenseMatrix {
    let r = rhs.rows();
    let b: Vec<f64> = (0..r * r).map(|k| rhs[(k % r, k / r)]).collect();
    let x = backend::solve(op, &b);
    DenseMatrix::from_fn(r, r, |i, j| x[j * r + i]).symmetrized()
}

fn assemble_certificate(u: &DenseMatrix, p1: &DenseMatrix) -> DenseMatrix {
    let mut mid = DenseMatrix::identity(u.rows());
    mid.set_block(0, 0, p1);
    u.transpose().matmul(&mid).matmul(u).symmetrized()
}

/// For a semi-Hurwitz `a`, a matrix `P ≻ 0` with `Pa + aᵀP ⪯ 0`.
///
/// Built by splitting off the kernel and solving `A₁ᵀP₁ + P₁A₁ = −I` on the
/// Hurwitz part. Returns `None` when `a` is not semi-Hurwitz.
pub fn semi_hurwitz_certificate(a: &DenseMatrix, tol: f64) -> Result<Option<DenseMatrix>, LinalgError> {
    if !is_semi_hurwitz(a, tol)? {
        return Ok(None);
    }
    let (u, r) = invariant_split(a, tol)?;
    let vinv = backend::inverse(&u)?;
    let a1 = u.matmul(a).matmul(&vinv).block(0, 0, r, r);
    // vec(A₁ᵀP + PA₁) = (I⊗A₁ᵀ + A₁ᵀ⊗I) vec(P)
    let a1t = a1.transpose();
    let id = DenseMatrix::identity(r);
    let op = &super::kron(&id, &a1t) + &super::kron(&a1t, &id);
    let p1 = solve_vec(&op, &id.scale(-1.0));
    Ok(Some(assemble_certificate(&u, &p1)))
}

/// For a semi-Schur `a`, a matrix `P ≻ 0` with `aᵀPa − P ⪯ 0`.
pub fn semi_schur_certificate(a: &DenseMatrix, tol: f64) -> Result<Option<DenseMatrix>, LinalgError> {
    if !is_semi_schur(a, tol)? {
        return Ok(None);
    }
    let n = a.rows();
    let shifted = a - &DenseMatrix::identity(n);
    let (u, r) = invariant_split(&shifted, tol)?;
    let vinv = backend::inverse(&u)?;
    let a1 = u.matmul(a).matmul(&vinv).block(0, 0, r, r);
    // vec(A₁ᵀPA₁ − P) = (A₁ᵀ⊗A₁ᵀ − I) vec(P)
    let a1t = a1.transpose();
    let id = DenseMatrix::identity(r);
    let op = &super::kron(&a1t, &a1t) - &DenseMatrix::identity(r * r);
    let p1 = solve_vec(&op, &id.scale(-1.0));
    Ok(Some(assemble_certificate(&u, &p1)))
}
