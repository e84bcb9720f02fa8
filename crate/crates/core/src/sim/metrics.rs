use serde::{Deserialize, Serialize};

use crate::linalg::{dot, norm2};
use crate::protocols::{AgentState, BaselineKind};

/// Every algorithm the simulator can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Cyclically scheduled law, one portion per iteration.
    Sdls,
    /// Unscheduled full-state law (also the Euler step of the continuous flow).
    Full,
    ConsensusProjectionPi,
    AhuFlow,
    GradientTracking,
    DoubleLayer,
}

impl Algorithm {
    pub fn baseline(self) -> Option<BaselineKind> {
        match self {
            Algorithm::Sdls | Algorithm::Full => None,
            Algorithm::ConsensusProjectionPi => Some(BaselineKind::ConsensusProjectionPi),
            Algorithm::AhuFlow => Some(BaselineKind::AhuFlow),
            Algorithm::GradientTracking => Some(BaselineKind::GradientTracking),
            Algorithm::DoubleLayer => Some(BaselineKind::DoubleLayer),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sdls => "sdls",
            Algorithm::Full => "full",
            Algorithm::ConsensusProjectionPi => "consensus_projection_pi",
            Algorithm::AhuFlow => "ahu_flow",
            Algorithm::GradientTracking => "gradient_tracking",
            Algorithm::DoubleLayer => "double_layer",
        }
    }
}

/// Communication cycles one iteration costs when at most `n_bar` numbers fit
/// in a packet.
pub fn comm_cycles_per_iteration(alg: Algorithm, n: usize, n_bar: usize, _q: usize) -> u64 {
    assert!(n_bar >= 1, "bandwidth must be positive");
    match alg {
        Algorithm::Sdls => 1,
        Algorithm::DoubleLayer => 2,
        Algorithm::Full => n.div_ceil(n_bar) as u64,
        Algorithm::ConsensusProjectionPi | Algorithm::AhuFlow | Algorithm::GradientTracking => {
            (2 * n).div_ceil(n_bar) as u64
        }
    }
}

/// `(1/p) Σ ‖x_i − x*‖`
pub fn metric_e1(state: &AgentState, x_star: &[f64]) -> f64 {
    let p = state.p();
    let total: f64 = (0..p)
        .map(|i| {
            let x = state.x(i);
            assert_eq!(x.len(), x_star.len(), "dimension mismatch");
            x.iter().zip(x_star).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        })
        .sum();
    total / p as f64
}

/// `(1/p) Σ ‖x_i − x_ave‖` with `x_ave = (1/p) Σ x_i`
pub fn metric_e2(state: &AgentState) -> f64 {
    let p = state.p();
    let n = state.x(0).len();
    let mut ave = vec![0.0; n];
    for i in 0..p {
        for (a, v) in ave.iter_mut().zip(state.x(i)) {
            *a += v;
        }
    }
    for a in &mut ave {
        *a /= p as f64;
    }
    metric_e1(state, &ave)
}

/// `(1/p) Σ ‖A x_i − b‖`, the mean global residual of the agents' estimates.
pub fn mean_residual(a_rows: &[f64], n: usize, b: &[f64], state: &AgentState) -> f64 {
    let p = state.p();
    let total: f64 = (0..p)
        .map(|i| {
            let x = state.x(i);
            let r: Vec<f64> = b
                .iter()
                .enumerate()
                .map(|(r, bv)| dot(&a_rows[r * n..(r + 1) * n], x) - bv)
                .collect();
            norm2(&r)
        })
        .sum();
    total / p as f64
}
