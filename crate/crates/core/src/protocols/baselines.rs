//! Comparison laws from the literature, explicit-Euler discretized where the
//! original is a flow.

use serde::{Deserialize, Serialize};

use crate::problem::{Gains, PartitionedLae};

use super::{deliver, AgentNetwork, AgentState, AgentVars, ProtocolError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Proportional-integral consensus flow:
    /// `ẋ_i = −A_iᵀ(A_i x_i − b_i) − k_P Σ(x_i − x_l) − Σ(z_i − z_l)`, `ż_i = Σ(x_i − x_l)`.
    ConsensusProjectionPi,
    /// Arrow-Hurwicz-Uzawa style flow without the proportional term:
    /// `ẋ_i = −A_iᵀ(A_i x_i − b_i) − k_P Σ(z_i − z_l)`, `ż_i = Σ(x_i − x_l)`.
    AhuFlow,
    /// `ẋ_i = −Σ(x_i − x_l) − k_I z_i`, `ż_i = −Σ(z_i − z_l) + A_iᵀA_i ẋ_i`.
    GradientTracking,
    /// Primal-dual law on a double-layered network, run with `β = α·k_P`.
    DoubleLayer,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::ConsensusProjectionPi,
        BaselineKind::AhuFlow,
        BaselineKind::GradientTracking,
        BaselineKind::DoubleLayer,
    ];

    /// Whether the agent keeps the per-portion `y` of the scheduled law.
    pub fn uses_y(self) -> bool {
        self == BaselineKind::DoubleLayer
    }
}

/// A neighbor's complete `x` and `z`.
///
/// For the double-layered law this is the first-layer traffic of all of an
/// agent's aggregators. Its second-layer `y` exchange stays inside the agent
/// hosting those aggregators.
#[derive(Debug, Clone, PartialEq)]
pub struct FullPacket {
    /// Sending agent, 1-based.
    pub sender: usize,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

/// Initial state of a baseline.
///
/// The continuous-flow baselines start from `x = 0`, `z = 0`, except gradient
/// tracking, whose tracker starts at the local gradient `z_i = −A_iᵀb_i` so
/// that `Σ z_i` tracks the global gradient. The double-layered law uses the
/// same initialization as the scheduled law.
pub fn init_baseline(kind: BaselineKind, pl: &PartitionedLae) -> AgentState {
    if kind.uses_y() {
        return super::init_agents(pl);
    }
    let agents = (0..pl.p())
        .map(|i| {
            let z = if kind == BaselineKind::GradientTracking {
                let a = pl.a_rows(i);
                let b = &pl.problem().b()[pl.row_offsets()[i]..pl.row_offsets()[i + 1]];
                a.tr_matvec(b).into_iter().map(|v| -v).collect()
            } else {
                vec![0.0; pl.n()]
            };
            AgentVars {
                x: vec![0.0; pl.n()],
                y: Vec::new(),
                z,
            }
        })
        .collect();
    AgentState::from_parts(pl.col_offsets().to_vec(), agents)
}

/// Full packets delivered in one iteration, indexed by receiver (0-based).
pub fn broadcast_full_packets(net: &AgentNetwork, state: &AgentState) -> Vec<Vec<FullPacket>> {
    deliver(net, |l| {
        vec![FullPacket {
            sender: l + 1,
            x: state.agents[l].x.clone(),
            z: state.agents[l].z.clone(),
        }]
    })
}

/// One agent's baseline update. `neighbor(l)` returns `(x_l, z_l)`.
///
/// `b_i` is agent `i`'s full observation; the double-layered law ignores it
/// because its `y` already carries the observation.
#[allow(clippy::too_many_arguments)]
pub(crate) fn baseline_agent_update<'a, F>(
    kind: BaselineKind,
    net: &AgentNetwork,
    i: usize,
    b_i: &[f64],
    cur: &AgentVars,
    next: &mut AgentVars,
    gains: &Gains,
    neighbor: F,
) where
    F: Fn(usize) -> (&'a [f64], &'a [f64]),
{
    let Gains { k_p, k_i, alpha } = *gains;
    let n = net.n;
    let mi = net.row_sizes[i];
    let a = net.a_rows(i);
    let at = net.a_cols_t(i);
    let nbrs = &net.neighbors[i];

    let lap = |v: &[f64], pick: fn((&'a [f64], &'a [f64])) -> &'a [f64], t: usize| -> f64 {
        let mut s = 0.0;
        for &l in nbrs {
            s += v[t] - pick(neighbor(l))[t];
        }
        s
    };
    let pick_x: fn((&'a [f64], &'a [f64])) -> &'a [f64] = |p| p.0;
    let pick_z: fn((&'a [f64], &'a [f64])) -> &'a [f64] = |p| p.1;

    // Local residual A_i x_i − b_i, used by the flows with a gradient term.
    let residual = |x: &[f64]| -> Vec<f64> {
        (0..mi)
            .map(|r| {
                let row = &a[r * n..(r + 1) * n];
                let mut s = 0.0;
                for t in 0..n {
                    s += row[t] * x[t];
                }
                s - b_i[r]
            })
            .collect()
    };
    let grad_at = |res: &[f64], t: usize| -> f64 {
        let col = &at[t * mi..(t + 1) * mi];
        let mut s = 0.0;
        for r in 0..mi {
            s += col[r] * res[r];
        }
        s
    };

    match kind {
        BaselineKind::ConsensusProjectionPi => {
            let res = residual(&cur.x);
            for t in 0..n {
                let dx = lap(&cur.x, pick_x, t);
                let dz = lap(&cur.z, pick_z, t);
                next.x[t] = cur.x[t] - alpha * (grad_at(&res, t) + k_p * dx + dz);
                next.z[t] = cur.z[t] + alpha * dx;
            }
        }
        BaselineKind::AhuFlow => {
            let res = residual(&cur.x);
            for t in 0..n {
                let dx = lap(&cur.x, pick_x, t);
                let dz = lap(&cur.z, pick_z, t);
                next.x[t] = cur.x[t] - alpha * (grad_at(&res, t) + k_p * dz);
                next.z[t] = cur.z[t] + alpha * dx;
            }
        }
        BaselineKind::GradientTracking => {
            for t in 0..n {
                let dx = lap(&cur.x, pick_x, t);
                next.x[t] = cur.x[t] - alpha * (dx + k_i * cur.z[t]);
            }
            // A_iᵀA_i (x⁺ − x)
            let step: Vec<f64> = (0..mi)
                .map(|r| {
                    let row = &a[r * n..(r + 1) * n];
                    let mut s = 0.0;
                    for t in 0..n {
                        s += row[t] * (next.x[t] - cur.x[t]);
                    }
                    s
                })
                .collect();
            for t in 0..n {
                let dz = lap(&cur.z, pick_z, t);
                next.z[t] = cur.z[t] - alpha * dz + grad_at(&step, t);
            }
        }
        BaselineKind::DoubleLayer => {
            let beta = alpha * k_p;
            for j in 0..net.q {
                let (c0, c1) = (net.col_offsets[j], net.col_offsets[j + 1]);
                let y_ij = &cur.y[j * mi..(j + 1) * mi];
                for t in c0..c1 {
                    let col = &at[t * mi..(t + 1) * mi];
                    let mut aty = 0.0;
                    for r in 0..mi {
                        aty += col[r] * y_ij[r];
                    }
                    let dx = lap(&cur.x, pick_x, t);
                    let dz = lap(&cur.z, pick_z, t);
                    next.x[t] = cur.x[t] - alpha * aty - beta * dx - beta * dz;
                    next.z[t] = cur.z[t] + beta * dx;
                }
            }
            let pn = &net.portion_neighbors;
            for j in 0..net.q {
                let (c0, c1) = (net.col_offsets[j], net.col_offsets[j + 1]);
                for r in 0..mi {
                    let row = &a[r * n..(r + 1) * n];
                    let mut ax = 0.0;
                    for t in c0..c1 {
                        ax += row[t] * (next.x[t] - cur.x[t]);
                    }
                    let y = cur.y[j * mi + r];
                    let mut c = 0.0;
                    for &l in &pn[j] {
                        c += y - cur.y[l * mi + r];
                    }
                    next.y[j * mi + r] = y + ax - alpha * c;
                }
            }
        }
    }
}

/// One baseline iteration. `inbox[i]` must hold exactly one full packet from
/// every neighbor of agent `i`; `b` is the stacked observation.
pub fn step_baseline(
    kind: BaselineKind,
    net: &AgentNetwork,
    state: &AgentState,
    inbox: &[Vec<FullPacket>],
    gains: &Gains,
    b: &[f64],
) -> Result<AgentState, ProtocolError> {
    state.check_layout(net, kind.uses_y())?;
    if inbox.len() != net.p {
        return Err(ProtocolError::InboxShape {
            expected: net.p,
            found: inbox.len(),
        });
    }
    if b.len() != net.row_sizes.iter().sum::<usize>() {
        return Err(ProtocolError::StateShape);
    }
    let mut slots: Vec<Vec<usize>> = Vec::with_capacity(net.p);
    for (i, msgs) in inbox.iter().enumerate() {
        let nbrs = &net.neighbors[i];
        let mut slot = vec![usize::MAX; nbrs.len()];
        for (pos, msg) in msgs.iter().enumerate() {
            let unexpected = ProtocolError::UnexpectedMessage {
                receiver: i + 1,
                sender: msg.sender,
                portion: 0,
            };
            let s = nbrs.iter().position(|&l| l + 1 == msg.sender).ok_or(unexpected)?;
            if slot[s] != usize::MAX {
                return Err(ProtocolError::UnexpectedMessage {
                    receiver: i + 1,
                    sender: msg.sender,
                    portion: 0,
                });
            }
            for v in [&msg.x, &msg.z] {
                if v.len() != net.n {
                    return Err(ProtocolError::PayloadLength {
                        receiver: i + 1,
                        sender: msg.sender,
                        expected: net.n,
                        found: v.len(),
                    });
                }
            }
            slot[s] = pos;
        }
        if let Some(s) = slot.iter().position(|&v| v == usize::MAX) {
            return Err(ProtocolError::MissingMessage {
                receiver: i + 1,
                sender: nbrs[s] + 1,
            });
        }
        slots.push(slot);
    }

    let mut next = state.clone();
    let mut r0 = 0;
    for i in 0..net.p {
        let nbrs = &net.neighbors[i];
        let mi = net.row_sizes[i];
        let lookup = |l: usize| -> (&[f64], &[f64]) {
            let s = nbrs.binary_search(&l).expect("kernel reads only neighbors");
            let msg = &inbox[i][slots[i][s]];
            (&msg.x, &msg.z)
        };
        baseline_agent_update(
            kind,
            net,
            i,
            &b[r0..r0 + mi],
            &state.agents[i],
            &mut next.agents[i],
            gains,
            lookup,
        );
        r0 += mi;
    }
    Ok(next)
}
