//! Centralized reference solutions.

use crate::linalg::{
    kernel_basis, norm2, oblique_project, pseudo_inverse, range_basis, sub_vec, DenseMatrix,
};

use super::{AlgorithmMatrices, LaeProblem, ProblemError};

/// Relative singular-value cut for pseudo-inverses of problem data.
pub(crate) const LS_RANK_TOL: f64 = 1e-10;

/// Relative tolerance on the KKT residual.
const KKT_TOL: f64 = 1e-8;

/// Minimal-norm least-squares solution `A†b`.
pub fn centralized_ls(p: &LaeProblem) -> Result<Vec<f64>, ProblemError> {
    Ok(pseudo_inverse(p.a(), LS_RANK_TOL)?.matvec(p.b()))
}

/// `‖Ax − b‖`
pub fn ls_residual(p: &LaeProblem, x: &[f64]) -> Result<f64, ProblemError> {
    if x.len() != p.n() {
        return Err(ProblemError::SizeMismatch {
            what: "solution length",
            expected: p.n(),
            found: x.len(),
        });
    }
    Ok(norm2(&sub_vec(&p.a().matvec(x), p.b())))
}

/// Which subspace selects the limit among all KKT solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitMode {
    /// The solution in `ran(M)`, reached by the continuous-time flow.
    Continuous,
    /// The solution in `ran(Φ(α) − I)`, reached by the scheduled iteration.
    Discrete,
}

/// A KKT solution and the least-squares solution it encodes.
#[derive(Debug, Clone)]
pub struct KktSolution {
    /// Minimal-norm solution `M†F b̂`.
    pub xi_star: Vec<f64>,
    /// The KKT solution in the range selected by the limit mode.
    pub zeta_star: Vec<f64>,
    /// `x̂` block of `zeta_star`.
    pub x_hat: Vec<f64>,
    /// Least-squares solution read off the consensus structure of `x_hat`.
    pub x_star: Vec<f64>,
    /// Third block of `zeta_star`, i.e. `(1/√k_I)·L̂^½·λ̂`.
    pub lambda_norm_part: Vec<f64>,
}

fn split_zeta(mats: &AlgorithmMatrices, xi: Vec<f64>, zeta: Vec<f64>) -> KktSolution {
    let n: usize = mats.col_sizes.iter().sum();
    let pn = mats.p * n;
    let qm = mats.f_mat.cols();
    let x_hat = zeta[..pn].to_vec();
    let x_star = consensus_average(&x_hat, mats.p, &mats.col_sizes);
    KktSolution {
        lambda_norm_part: zeta[pn + qm..].to_vec(),
        xi_star: xi,
        zeta_star: zeta,
        x_hat,
        x_star,
    }
}

/// Averages the `p` copies of every portion in a portion-major `x̂`.
pub(crate) fn consensus_average(x_hat: &[f64], p: usize, col_sizes: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(col_sizes.iter().sum());
    let mut base = 0;
    for &nj in col_sizes {
        for t in 0..nj {
            let s: f64 = (0..p).map(|i| x_hat[base + i * nj + t]).sum();
            out.push(s / p as f64);
        }
        base += p * nj;
    }
    out
}

/// Largest deviation of any agent copy from the portion-wise average.
pub fn consensus_spread(x_hat: &[f64], p: usize, col_sizes: &[usize]) -> f64 {
    let avg = consensus_average(x_hat, p, col_sizes);
    let mut worst: f64 = 0.0;
    let (mut base, mut off) = (0, 0);
    for &nj in col_sizes {
        for i in 0..p {
            for t in 0..nj {
                worst = worst.max((x_hat[base + i * nj + t] - avg[off + t]).abs());
            }
        }
        base += p * nj;
        off += nj;
    }
    worst
}

fn min_norm_xi(mats: &AlgorithmMatrices, b_hat: &[f64]) -> Result<Vec<f64>, ProblemError> {
    if b_hat.len() != mats.f_mat.cols() {
        return Err(ProblemError::SizeMismatch {
            what: "b̂ length",
            expected: mats.f_mat.cols(),
            found: b_hat.len(),
        });
    }
    let fb = mats.f_mat.matvec(b_hat);
    let scale = norm2(&fb);
    if scale == 0.0 {
        return Ok(vec![0.0; fb.len()]);
    }
    let xi = pseudo_inverse(&mats.m_mat, LS_RANK_TOL)?.matvec(&fb);
    let residual = norm2(&sub_vec(&mats.m_mat.matvec(&xi), &fb));
    let bound = KKT_TOL * scale;
    if residual > bound {
        return Err(ProblemError::KktResidual { residual, bound });
    }
    Ok(xi)
}

/// `ξ* = M†F b̂` together with its continuous-mode limit representative.
pub fn solve_kkt_min_norm(mats: &AlgorithmMatrices, b_hat: &[f64]) -> Result<KktSolution, ProblemError> {
    characterize_limit(mats, b_hat, LimitMode::Continuous)
}

/// The unique KKT solution in `ran(M)` (continuous) or `ran(Φ(α) − I)`
/// (discrete), obtained by projecting `ξ*` along the matching kernel.
pub fn characterize_limit(
    mats: &AlgorithmMatrices,
    b_hat: &[f64],
    mode: LimitMode,
) -> Result<KktSolution, ProblemError> {
    let xi = min_norm_xi(mats, b_hat)?;
    let op: &DenseMatrix = match mode {
        LimitMode::Continuous => &mats.m_mat,
        LimitMode::Discrete => &mats.phi_minus_identity,
    };
    let onto = range_basis(op, LS_RANK_TOL)?;
    let along = kernel_basis(op, LS_RANK_TOL)?;
    let zeta = oblique_project(&xi, &onto, &along)?;
    Ok(split_zeta(mats, xi, zeta))
}
