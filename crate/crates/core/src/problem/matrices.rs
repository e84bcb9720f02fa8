use serde::{Deserialize, Serialize};

use crate::linalg::{eigen_decomposition, rank, spectral_norm, ComplexScalar, DenseMatrix, DIAGONALIZABLE_COND_MAX};

use super::{AugmentedSystem, ProblemError};

/// Proportional gain `k_P`, integral gain `k_I` and step size `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub k_p: f64,
    pub k_i: f64,
    pub alpha: f64,
}

impl Gains {
    pub fn new(k_p: f64, k_i: f64, alpha: f64) -> Result<Self, ProblemError> {
        let g = Self { k_p, k_i, alpha };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        for (name, v) in [("k_p", self.k_p), ("k_i", self.k_i), ("alpha", self.alpha)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ProblemError::InvalidGains(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// The per-iteration matrices `M_s(k)` and their period average.
#[derive(Debug, Clone)]
pub struct ScheduleMatrices {
    pub m_s: Vec<DenseMatrix>,
    pub m_ave: DenseMatrix,
}

/// Every matrix family of the stacked error dynamics.
#[derive(Debug, Clone)]
pub struct AlgorithmMatrices {
    pub gains: Gains,
    pub p: usize,
    pub q: usize,
    pub col_sizes: Vec<usize>,
    /// `M`, the continuous-time algorithm matrix.
    pub m_mat: DenseMatrix,
    /// `M̃`, with `k_P/q` and `√(k_I/q)` in place of `k_P` and `√k_I`.
    pub m_tilde: DenseMatrix,
    /// `M_ave = (1/q) Σ_k M_s(k)`.
    pub m_ave: DenseMatrix,
    /// `M_s(k)` for `k = 0..q`, with portion `k+1` scheduled.
    pub m_s: Vec<DenseMatrix>,
    /// `F`, so that the KKT system reads `M ξ = F b̂`.
    pub f_mat: DenseMatrix,
    /// `Φ(α) = (I + αM_s(q−1)) ⋯ (I + αM_s(0))`.
    pub phi: DenseMatrix,
    /// `Φ(α) − I`, accumulated without forming `Φ` first so that small
    /// step sizes do not lose digits to cancellation.
    pub phi_minus_identity: DenseMatrix,
}

/// Shared pieces of every block matrix.
struct Blocks {
    pn: usize,
    qm: usize,
    ata: DenseMatrix,
    at_sc: DenseMatrix,
    neg_lc: DenseMatrix,
}

impl Blocks {
    fn new(aug: &AugmentedSystem) -> Self {
        let at = aug.a_hat.transpose();
        Self {
            pn: aug.pn(),
            qm: aug.qm(),
            ata: at.matmul(&aug.a_hat),
            at_sc: at.matmul(&aug.sqrt_l_c_aug),
            neg_lc: aug.l_c_aug.scale(-1.0),
        }
    }

    /// `[[−ÂᵀÂ − kL, Âᵀ𝓛_c^½, −c₁₃·S], [𝓛_c^½Â, −𝓛_c, 0], [c₃₁·S', 0, 0]]`
    fn assemble(&self, k_l: &DenseMatrix, c13: f64, s13: &DenseMatrix, c31: f64, s31: &DenseMatrix) -> DenseMatrix {
        let (pn, qm) = (self.pn, self.qm);
        let mut out = DenseMatrix::zeros(2 * pn + qm, 2 * pn + qm);
        out.set_block(0, 0, &(&self.ata.scale(-1.0) - k_l));
        out.set_block(0, pn, &self.at_sc);
        out.set_block(0, pn + qm, &s13.scale(-c13));
        out.set_block(pn, 0, &self.at_sc.transpose());
        out.set_block(pn, pn, &self.neg_lc);
        out.set_block(pn + qm, 0, &s31.scale(c31));
        out
    }
}

pub fn build_schedule_matrices(aug: &AugmentedSystem, k_p: f64, k_i: f64) -> ScheduleMatrices {
    let blocks = Blocks::new(aug);
    schedule_from_blocks(aug, &blocks, k_p, k_i)
}

fn schedule_from_blocks(aug: &AugmentedSystem, blocks: &Blocks, k_p: f64, k_i: f64) -> ScheduleMatrices {
    let sk = k_i.sqrt();
    let m_s: Vec<DenseMatrix> = (0..aug.q)
        .map(|k| {
            blocks.assemble(&aug.l_hat_j[k].scale(k_p), sk, &aug.sqrt_l_hat, sk, &aug.sqrt_l_hat_j[k])
        })
        .collect();
    let mut m_ave = DenseMatrix::zeros(m_s[0].rows(), m_s[0].cols());
    for mk in &m_s {
        m_ave = &m_ave + mk;
    }
    let m_ave = m_ave.scale(1.0 / aug.q as f64);
    ScheduleMatrices { m_s, m_ave }
}

/// `Φ(α) − I` via `Δ ← Δ + αM_k(I + Δ)` for `k = 0..q`.
pub(crate) fn phi_delta(m_s: &[DenseMatrix], alpha: f64) -> DenseMatrix {
    let n = m_s[0].rows();
    let mut delta = DenseMatrix::zeros(n, n);
    for mk in m_s {
        let step = mk.matmul(&delta);
        delta = delta.add_scaled(alpha, mk).add_scaled(alpha, &step);
    }
    delta
}

pub fn build_matrices(aug: &AugmentedSystem, gains: &Gains) -> Result<AlgorithmMatrices, ProblemError> {
    gains.validate()?;
    let blocks = Blocks::new(aug);
    let (k_p, k_i, q) = (gains.k_p, gains.k_i, aug.q as f64);
    let sk = k_i.sqrt();
    let m_mat = blocks.assemble(&aug.l_hat.scale(k_p), sk, &aug.sqrt_l_hat, sk, &aug.sqrt_l_hat);
    let skq = (k_i / q).sqrt();
    let m_tilde = blocks.assemble(&aug.l_hat.scale(k_p / q), skq, &aug.sqrt_l_hat, skq, &aug.sqrt_l_hat);
    let ScheduleMatrices { m_s, m_ave } = schedule_from_blocks(aug, &blocks, k_p, k_i);

    let (pn, qm) = (aug.pn(), aug.qm());
    let mut f_mat = DenseMatrix::zeros(2 * pn + qm, qm);
    f_mat.set_block(0, 0, &aug.a_hat.transpose().scale(-1.0));
    // The ω̂ row of the KKT system is 𝓛_c^½(Âx̂ − 𝓛_c^½ω̂) = 𝓛_c^½ b̂, so this
    // block enters with a plus sign.
    f_mat.set_block(pn, 0, &aug.sqrt_l_c_aug);

    let delta = phi_delta(&m_s, gains.alpha);
    let phi = &DenseMatrix::identity(delta.rows()) + &delta;

    Ok(AlgorithmMatrices {
        gains: *gains,
        p: aug.p,
        q: aug.q,
        col_sizes: aug.col_sizes.clone(),
        m_mat,
        m_tilde,
        m_ave,
        m_s,
        f_mat,
        phi,
        phi_minus_identity: delta,
    })
}

/// Ingredients and value of the step-size bound.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaMaxReport {
    pub alpha_max: f64,
    /// `cond(V)` of `M_ave = VΛV⁻¹` with unit-length columns of `V`.
    pub cond_v: f64,
    /// `m̄ = max_k ‖M_s(k)‖₂`
    pub m_bar: f64,
    /// `Σ_{ℓ=2..q} m̄^ℓ·C(q, ℓ)`
    pub binomial_sum: f64,
    pub kernel_dim: usize,
    /// Nonzero eigenvalue attaining the minimum, as `[re, im]`.
    pub limiting_eigenvalue: [f64; 2],
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// Relative cut used to count the zero eigenvalues of `M_ave`.
pub(crate) const KERNEL_RANK_TOL: f64 = 1e-10;

pub fn alpha_max_report(aug: &AugmentedSystem, gains: &Gains) -> Result<AlphaMaxReport, ProblemError> {
    gains.validate()?;
    let sched = build_schedule_matrices(aug, gains.k_p, gains.k_i);
    alpha_max_from_schedule(&sched, aug.q)
}

pub(crate) fn alpha_max_from_schedule(sched: &ScheduleMatrices, q: usize) -> Result<AlphaMaxReport, ProblemError> {
    let dim = sched.m_ave.rows();
    let eig = eigen_decomposition(&sched.m_ave)?;
    if !(eig.cond_v <= DIAGONALIZABLE_COND_MAX) {
        return Err(ProblemError::NotDiagonalizable { cond_v: eig.cond_v });
    }
    let kernel_dim = dim - rank(&sched.m_ave, KERNEL_RANK_TOL)?;
    let mut values: Vec<ComplexScalar> = eig.values;
    values.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let nonzero = &values[kernel_dim.min(values.len())..];
    if nonzero.is_empty() {
        return Err(ProblemError::EmptyNonzeroSpectrum);
    }
    let mut m_bar: f64 = 0.0;
    for mk in &sched.m_s {
        m_bar = m_bar.max(spectral_norm(mk)?);
    }
    let binomial_sum: f64 = (2..=q).map(|l| m_bar.powi(l as i32) * binomial(q, l)).sum();
    let qf = q as f64;
    let mut best = f64::INFINITY;
    let mut arg = nonzero[0];
    for &l in nonzero {
        if l.re >= 0.0 {
            return Err(ProblemError::UnstableSpectrum { re: l.re, im: l.im });
        }
        let v = -2.0 * qf * l.re / (eig.cond_v * binomial_sum + qf * qf * l.norm_sqr());
        if v < best {
            best = v;
            arg = l;
        }
    }
    Ok(AlphaMaxReport {
        alpha_max: best,
        cond_v: eig.cond_v,
        m_bar,
        binomial_sum,
        kernel_dim,
        limiting_eigenvalue: [arg.re, arg.im],
    })
}

/// The step-size bound `α_max`; admissible steps satisfy `α < min(1, α_max)`.
pub fn alpha_max(aug: &AugmentedSystem, gains: &Gains) -> Result<f64, ProblemError> {
    Ok(alpha_max_report(aug, gains)?.alpha_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(12, 12), 1.0);
        assert_eq!(binomial(3, 0), 1.0);
    }

    #[test]
    fn phi_delta_matches_product() {
        let m0 = DenseMatrix::from_rows(&[&[-1.0, 0.5], &[0.0, -2.0]]);
        let m1 = DenseMatrix::from_rows(&[&[-0.3, 0.0], &[1.0, -1.0]]);
        let a = 0.1;
        let id = DenseMatrix::identity(2);
        let phi = id.add_scaled(a, &m1).matmul(&id.add_scaled(a, &m0));
        let delta = phi_delta(&[m0, m1], a);
        assert!((&phi - &id).max_abs_diff(&delta) < 1e-15);
    }

    #[test]
    fn gains_must_be_positive() {
        assert!(Gains::new(1.0, 1.0, 0.1).is_ok());
        assert!(Gains::new(0.0, 1.0, 0.1).is_err());
        assert!(Gains::new(1.0, f64::NAN, 0.1).is_err());
        assert!(Gains::new(1.0, 1.0, -0.1).is_err());
    }
}
