//! Spectral checks on the algorithm matrices of one instance.

use serde::Serialize;

use crate::linalg::{
    diagonalizability_report, is_semi_hurwitz, is_semi_schur_increment, kernel_basis,
    max_principal_angle, PREDICATE_TOL,
};

use super::matrices::KERNEL_RANK_TOL;
use super::{alpha_max_report, build_matrices, AugmentedSystem, Gains, ProblemError};

/// Largest principal angle accepted when two kernels are compared.
pub const KERNEL_ANGLE_TOL: f64 = 1e-7;

/// Fraction of `min(1, α_max)` used when no step size is given.
pub const REPORT_ALPHA_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    #[serde(rename = "semi_hurwitz_M")]
    pub semi_hurwitz_m: bool,
    #[serde(rename = "diagonalizable_M_tilde")]
    pub diagonalizable_m_tilde: bool,
    #[serde(rename = "cond_V_M_tilde")]
    pub cond_v_m_tilde: f64,
    pub alpha_max: f64,
    #[serde(rename = "cond_V_M_ave")]
    pub cond_v_m_ave: f64,
    /// Step size at which `Φ(α)` was examined.
    pub alpha: f64,
    #[serde(rename = "semi_schur_Phi")]
    pub semi_schur_phi: bool,
    #[serde(rename = "dim_ker_M")]
    pub dim_ker_m: usize,
    #[serde(rename = "dim_ker_M_ave")]
    pub dim_ker_m_ave: usize,
    #[serde(rename = "dim_ker_Phi_minus_I")]
    pub dim_ker_phi: usize,
    /// Largest principal angle between `ker(M_ave)` and `ker(M)`.
    pub angle_ker_m_ave_m: f64,
    /// Largest principal angle between `ker(Φ(α) − I)` and `ker(M_ave)`.
    pub angle_ker_phi_m_ave: f64,
    /// Both angles within [`KERNEL_ANGLE_TOL`].
    pub kernels_agree: bool,
}

impl SpectralReport {
    /// All predicates hold.
    pub fn all_pass(&self) -> bool {
        self.semi_hurwitz_m && self.diagonalizable_m_tilde && self.semi_schur_phi && self.kernels_agree
    }
}

/// Runs every check for gains `k_p`, `k_i`.
///
/// `alpha` defaults to `0.9·min(1, α_max)`. A non-diagonalizable `M̃` is
/// reported rather than raised; a non-diagonalizable `M_ave` is an error since
/// `α_max` is then undefined.
pub fn spectral_report(
    aug: &AugmentedSystem,
    k_p: f64,
    k_i: f64,
    alpha: Option<f64>,
) -> Result<SpectralReport, ProblemError> {
    let probe = Gains::new(k_p, k_i, 1.0)?;
    let bound = alpha_max_report(aug, &probe)?;
    let alpha = alpha.unwrap_or(REPORT_ALPHA_FRACTION * bound.alpha_max.min(1.0));
    let mats = build_matrices(aug, &Gains::new(k_p, k_i, alpha)?)?;

    let diag = diagonalizability_report(&mats.m_tilde)?;
    let ker_m = kernel_basis(&mats.m_mat, KERNEL_RANK_TOL)?;
    let ker_ave = kernel_basis(&mats.m_ave, KERNEL_RANK_TOL)?;
    let ker_phi = kernel_basis(&mats.phi_minus_identity, KERNEL_RANK_TOL)?;
    let angle_ave_m = max_principal_angle(&ker_ave, &ker_m)?;
    let angle_phi_ave = max_principal_angle(&ker_phi, &ker_ave)?;

    Ok(SpectralReport {
        semi_hurwitz_m: is_semi_hurwitz(&mats.m_mat, PREDICATE_TOL)?,
        diagonalizable_m_tilde: diag.is_diagonalizable,
        cond_v_m_tilde: diag.cond_v,
        alpha_max: bound.alpha_max,
        cond_v_m_ave: bound.cond_v,
        alpha,
        semi_schur_phi: is_semi_schur_increment(&mats.phi_minus_identity, PREDICATE_TOL)?,
        dim_ker_m: ker_m.dim(),
        dim_ker_m_ave: ker_ave.dim(),
        dim_ker_phi: ker_phi.dim(),
        angle_ker_m_ave_m: angle_ave_m,
        angle_ker_phi_m_ave: angle_phi_ave,
        kernels_agree: angle_ave_m <= KERNEL_ANGLE_TOL && angle_phi_ave <= KERNEL_ANGLE_TOL,
    })
}
