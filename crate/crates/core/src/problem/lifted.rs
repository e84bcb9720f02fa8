//! The stacked recursion `s⁺ = s + α(M_s(k)s − F b̂)` and its agent-wise reading.
//!
//! The lifted state is `s = [x̂; ω̂; ζ]`. Agent variables are recovered as
//! `ŷ = Âx̂ − b̂ − 𝓛_c^½ω̂` and `ẑ = L̂^½ζ / √k_I`.

use crate::protocols::AgentState;

use super::{AlgorithmMatrices, AugmentedSystem};

/// Agent variables in portion-major stacked form.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedView {
    pub x_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub z_hat: Vec<f64>,
}

impl LiftedView {
    /// Largest entrywise difference over all three blocks.
    pub fn max_abs_diff(&self, other: &LiftedView) -> f64 {
        [
            (&self.x_hat, &other.x_hat),
            (&self.y_hat, &other.y_hat),
            (&self.z_hat, &other.z_hat),
        ]
        .iter()
        .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
    }
}

/// Reorders per-agent variables into `x̂`, `ŷ`, `ẑ`.
pub fn stack_agent_state(aug: &AugmentedSystem, state: &AgentState) -> LiftedView {
    let mut view = LiftedView {
        x_hat: vec![0.0; aug.pn()],
        y_hat: vec![0.0; aug.qm()],
        z_hat: vec![0.0; aug.pn()],
    };
    for i in 0..aug.p {
        for j in 0..aug.q {
            let o = aug.x_offset(i, j);
            let nj = aug.col_sizes[j];
            view.x_hat[o..o + nj].copy_from_slice(state.x_ij(i, j));
            view.z_hat[o..o + nj].copy_from_slice(state.z_ij(i, j));
            let y = state.y_ij(i, j);
            let o = aug.y_offset(i, j);
            view.y_hat[o..o + y.len()].copy_from_slice(y);
        }
    }
    view
}

/// `s + α(M_s(k mod q)·s − F·b̂)`
pub fn lifted_step(mats: &AlgorithmMatrices, s: &[f64], k: usize, b_hat: &[f64]) -> Vec<f64> {
    let ms = mats.m_s[k % mats.q].matvec(s);
    let fb = mats.f_mat.matvec(b_hat);
    let alpha = mats.gains.alpha;
    s.iter()
        .zip(ms.iter().zip(&fb))
        .map(|(sv, (m, f))| sv + alpha * (m - f))
        .collect()
}

/// Maps a lifted state back to agent variables.
pub fn unstack_lifted(aug: &AugmentedSystem, mats: &AlgorithmMatrices, s: &[f64], b_hat: &[f64]) -> LiftedView {
    let (pn, qm) = (aug.pn(), aug.qm());
    let x_hat = s[..pn].to_vec();
    let omega = &s[pn..pn + qm];
    let ax = aug.a_hat.matvec(&x_hat);
    let so = aug.sqrt_l_c_aug.matvec(omega);
    let y_hat = (0..qm).map(|r| ax[r] - b_hat[r] - so[r]).collect();
    let sk = mats.gains.k_i.sqrt();
    let z_hat = aug.sqrt_l_hat.matvec(&s[pn + qm..]).into_iter().map(|v| v / sk).collect();
    LiftedView { x_hat, y_hat, z_hat }
}
