//! Agent-level update laws.
//!
//! Every law is split into a per-agent kernel, generic over how neighbor
//! values are fetched. The message-passing API in this module feeds the
//! kernel from validated inboxes; the simulator feeds the same kernel
//! straight from the previous state snapshot. Both paths therefore perform
//! identical floating-point operations.

mod baselines;
mod kernel;
mod prefilter;
mod snapshot;

use crate::graph::UndirectedGraph;
use crate::linalg::DenseMatrix;
use crate::problem::{Gains, PartitionedLae, ProblemError};

pub use baselines::{
    broadcast_full_packets, init_baseline, step_baseline, BaselineKind, FullPacket,
};
pub use kernel::LawKind;
pub(crate) use kernel::sdls_agent_update;
pub(crate) use baselines::baseline_agent_update;
pub use prefilter::{lowpass_prefilter, LowPass};
pub use snapshot::{read_snapshot, write_snapshot};

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("agent {receiver} is missing the message from neighbor {sender}")]
    MissingMessage { receiver: usize, sender: usize },
    #[error("agent {receiver} got an unexpected message from {sender} (portion {portion})")]
    UnexpectedMessage {
        receiver: usize,
        sender: usize,
        portion: usize,
    },
    #[error("agent {receiver}: payload from {sender} has length {found}, expected {expected}")]
    PayloadLength {
        receiver: usize,
        sender: usize,
        expected: usize,
        found: usize,
    },
    #[error("inbox covers {found} agents, network has {expected}")]
    InboxShape { expected: usize, found: usize },
    #[error("observation increment has the wrong shape for agent {0}")]
    DeltaShape(usize),
    #[error("state does not match the network layout")]
    StateShape,
    #[error("filter coefficient beta must lie in (0, 1], got {0}")]
    InvalidBeta(f64),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("snapshot {path}: {message}")]
    Snapshot { path: String, message: String },
}

/// The static data every agent holds, plus the two communication graphs.
///
/// Agent `i` only ever touches `a_rows[i]`, `a_cols_t[i]`, its own state and
/// what its neighbors send.
#[derive(Debug, Clone)]
pub struct AgentNetwork {
    p: usize,
    q: usize,
    n: usize,
    bandwidth: usize,
    col_sizes: Vec<usize>,
    col_offsets: Vec<usize>,
    row_sizes: Vec<usize>,
    /// `A_i`, row-major m_i × n.
    a_rows: Vec<Vec<f64>>,
    /// `A_iᵀ`, row-major n × m_i (so column `t` of `A_i` is contiguous).
    a_cols_t: Vec<Vec<f64>>,
    neighbors: Vec<Vec<usize>>,
    portion_neighbors: Vec<Vec<usize>>,
}

impl AgentNetwork {
    /// Checks the graphs (sizes and connectivity) and copies out each agent's rows.
    pub fn new(pl: &PartitionedLae, g: &UndirectedGraph, g_c: &UndirectedGraph) -> Result<Self, ProblemError> {
        for (what, expected, found) in [
            ("agent graph vertices", pl.p(), g.vertex_count()),
            ("portion graph vertices", pl.q(), g_c.vertex_count()),
        ] {
            if expected != found {
                return Err(ProblemError::SizeMismatch { what, expected, found });
            }
        }
        if !crate::graph::is_connected(g) {
            return Err(ProblemError::Disconnected("agent"));
        }
        if !crate::graph::is_connected(g_c) {
            return Err(ProblemError::Disconnected("portion"));
        }
        let a_rows: Vec<DenseMatrix> = (0..pl.p()).map(|i| pl.a_rows(i)).collect();
        Ok(Self {
            p: pl.p(),
            q: pl.q(),
            n: pl.n(),
            bandwidth: pl.bandwidth(),
            col_sizes: pl.col_sizes().to_vec(),
            col_offsets: pl.col_offsets().to_vec(),
            row_sizes: pl.row_sizes().to_vec(),
            a_cols_t: a_rows.iter().map(|a| a.transpose().into_vec()).collect(),
            a_rows: a_rows.into_iter().map(DenseMatrix::into_vec).collect(),
            neighbors: g.neighbor_lists(),
            portion_neighbors: g_c.neighbor_lists(),
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn col_sizes(&self) -> &[usize] {
        &self.col_sizes
    }

    pub fn col_offsets(&self) -> &[usize] {
        &self.col_offsets
    }

    pub fn row_sizes(&self) -> &[usize] {
        &self.row_sizes
    }

    /// 0-based neighbors of agent `i` (0-based), ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// 0-based neighbors of portion `j` (0-based) in `G_c`, ascending.
    pub fn portion_neighbors(&self, j: usize) -> &[usize] {
        &self.portion_neighbors[j]
    }

    pub(crate) fn a_rows(&self, i: usize) -> &[f64] {
        &self.a_rows[i]
    }

    pub(crate) fn a_cols_t(&self, i: usize) -> &[f64] {
        &self.a_cols_t[i]
    }
}

/// One agent's variables. `x` and `z` have length `n` (portions stored
/// consecutively); `y` stores `y_i1, …, y_iq` consecutively, each of length
/// `m_i`. The full-vector baselines leave `y` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentVars {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// State of every agent at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    col_offsets: Vec<usize>,
    agents: Vec<AgentVars>,
}

impl AgentState {
    pub(crate) fn from_parts(col_offsets: Vec<usize>, agents: Vec<AgentVars>) -> Self {
        Self {
            col_offsets,
            agents,
        }
    }

    pub fn p(&self) -> usize {
        self.agents.len()
    }

    pub fn q(&self) -> usize {
        self.col_offsets.len() - 1
    }

    pub fn agents(&self) -> &[AgentVars] {
        &self.agents
    }

    pub(crate) fn agents_mut(&mut self) -> &mut [AgentVars] {
        &mut self.agents
    }

    /// Agent `i`'s full estimate `x_i`.
    pub fn x(&self, i: usize) -> &[f64] {
        &self.agents[i].x
    }

    /// `x_ij` (both indices 0-based).
    pub fn x_ij(&self, i: usize, j: usize) -> &[f64] {
        &self.agents[i].x[self.col_offsets[j]..self.col_offsets[j + 1]]
    }

    /// `z_ij` (both indices 0-based).
    pub fn z_ij(&self, i: usize, j: usize) -> &[f64] {
        &self.agents[i].z[self.col_offsets[j]..self.col_offsets[j + 1]]
    }

    /// `y_ij` (both indices 0-based). Empty for the full-vector baselines.
    pub fn y_ij(&self, i: usize, j: usize) -> &[f64] {
        let y = &self.agents[i].y;
        let mi = y.len() / self.q();
        &y[j * mi..(j + 1) * mi]
    }

    pub fn is_finite(&self) -> bool {
        self.agents
            .iter()
            .all(|a| a.x.iter().chain(&a.y).chain(&a.z).all(|v| v.is_finite()))
    }

    fn check_layout(&self, net: &AgentNetwork, with_y: bool) -> Result<(), ProtocolError> {
        let ok = self.col_offsets == net.col_offsets
            && self.agents.len() == net.p
            && self.agents.iter().enumerate().all(|(i, a)| {
                a.x.len() == net.n
                    && a.z.len() == net.n
                    && (!with_y || a.y.len() == net.q * net.row_sizes[i])
            });
        if ok {
            Ok(())
        } else {
            Err(ProtocolError::StateShape)
        }
    }
}

/// A packet carrying one portion of one agent's estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PortionMessage {
    /// Sending agent, 1-based.
    pub sender: usize,
    /// Portion index, 1-based.
    pub portion: usize,
    pub payload: Vec<f64>,
}

/// Iteration counter of the cyclic schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchedulerState {
    pub k: usize,
    pub q: usize,
}

impl SchedulerState {
    pub fn new(q: usize) -> Self {
        assert!(q >= 1, "at least one portion");
        Self { k: 0, q }
    }

    /// Portion scheduled at the current iteration, 1-based.
    pub fn portion(&self) -> usize {
        scheduled_portion(self.k, self.q)
    }

    pub fn advance(&mut self) {
        self.k += 1;
    }
}

/// `(k mod q) + 1`
pub fn scheduled_portion(k: usize, q: usize) -> usize {
    assert!(q >= 1, "at least one portion");
    k % q + 1
}

/// `x_ij = 0`, `y_ij = −b_ij`, `z_ij = 0`.
pub fn init_agents(pl: &PartitionedLae) -> AgentState {
    let agents = (0..pl.p())
        .map(|i| AgentVars {
            x: vec![0.0; pl.n()],
            y: (0..pl.q()).flat_map(|j| pl.b_ij(i, j).iter().map(|v| -v)).collect(),
            z: vec![0.0; pl.n()],
        })
        .collect();
    AgentState::from_parts(pl.col_offsets().to_vec(), agents)
}

/// Messages delivered at iteration `k` under the cyclic schedule, indexed by
/// receiving agent (0-based). Each agent broadcasts exactly one portion.
pub fn broadcast_scheduled(net: &AgentNetwork, state: &AgentState, k: usize) -> Vec<Vec<PortionMessage>> {
    let j = scheduled_portion(k, net.q) - 1;
    deliver(net, |l| {
        vec![PortionMessage {
            sender: l + 1,
            portion: j + 1,
            payload: state.x_ij(l, j).to_vec(),
        }]
    })
}

/// Messages for the unscheduled full-state law: every portion from every neighbor.
pub fn broadcast_all(net: &AgentNetwork, state: &AgentState) -> Vec<Vec<PortionMessage>> {
    deliver(net, |l| {
        (0..net.q)
            .map(|j| PortionMessage {
                sender: l + 1,
                portion: j + 1,
                payload: state.x_ij(l, j).to_vec(),
            })
            .collect()
    })
}

fn deliver<T: Clone>(net: &AgentNetwork, emit: impl Fn(usize) -> Vec<T>) -> Vec<Vec<T>> {
    let sent: Vec<Vec<T>> = (0..net.p).map(&emit).collect();
    (0..net.p)
        .map(|i| {
            net.neighbors[i]
                .iter()
                .flat_map(|&l| sent[l].iter().cloned())
                .collect()
        })
        .collect()
}

/// Index `[receiver][neighbor position][portion] -> message position`.
type InboxIndex = Vec<Vec<Vec<Option<usize>>>>;

/// Checks that every receiver holds exactly the expected portions from each
/// neighbor and returns a lookup table into the inbox.
fn index_inbox(
    net: &AgentNetwork,
    inbox: &[Vec<PortionMessage>],
    expected: &dyn Fn(usize) -> bool,
) -> Result<InboxIndex, ProtocolError> {
    if inbox.len() != net.p {
        return Err(ProtocolError::InboxShape {
            expected: net.p,
            found: inbox.len(),
        });
    }
    let mut index = Vec::with_capacity(net.p);
    for (i, msgs) in inbox.iter().enumerate() {
        let nbrs = &net.neighbors[i];
        let mut table = vec![vec![None; net.q]; nbrs.len()];
        for (pos, msg) in msgs.iter().enumerate() {
            let unexpected = || ProtocolError::UnexpectedMessage {
                receiver: i + 1,
                sender: msg.sender,
                portion: msg.portion,
            };
            let slot = nbrs.iter().position(|&l| l + 1 == msg.sender).ok_or_else(unexpected)?;
            if msg.portion == 0 || msg.portion > net.q || !expected(msg.portion - 1) {
                return Err(unexpected());
            }
            let j = msg.portion - 1;
            if table[slot][j].is_some() {
                return Err(unexpected());
            }
            if msg.payload.len() != net.col_sizes[j] {
                return Err(ProtocolError::PayloadLength {
                    receiver: i + 1,
                    sender: msg.sender,
                    expected: net.col_sizes[j],
                    found: msg.payload.len(),
                });
            }
            table[slot][j] = Some(pos);
        }
        for (slot, &l) in nbrs.iter().enumerate() {
            for j in (0..net.q).filter(|&j| expected(j)) {
                if table[slot][j].is_none() {
                    return Err(ProtocolError::MissingMessage {
                        receiver: i + 1,
                        sender: l + 1,
                    });
                }
            }
        }
        index.push(table);
    }
    Ok(index)
}

fn step_with_inbox(
    net: &AgentNetwork,
    state: &AgentState,
    inbox: &[Vec<PortionMessage>],
    gains: &Gains,
    law: LawKind,
    delta_b: Option<&[Vec<Vec<f64>>]>,
) -> Result<AgentState, ProtocolError> {
    state.check_layout(net, true)?;
    if let Some(db) = delta_b {
        if db.len() != net.p {
            return Err(ProtocolError::DeltaShape(db.len()));
        }
        for (i, agent) in db.iter().enumerate() {
            if agent.len() != net.q || agent.iter().any(|v| v.len() != net.row_sizes[i]) {
                return Err(ProtocolError::DeltaShape(i + 1));
            }
        }
    }
    let scheduled = law.scheduled(net.q);
    let index = index_inbox(net, inbox, &|j| scheduled.is_none_or(|s| s == j))?;
    let mut next = state.clone();
    for i in 0..net.p {
        let nbrs = &net.neighbors[i];
        let lookup = |l: usize, j: usize| -> &[f64] {
            let slot = nbrs.binary_search(&l).expect("kernel reads only neighbors");
            let pos = index[i][slot][j].expect("kernel reads only delivered portions");
            &inbox[i][pos].payload
        };
        sdls_agent_update(
            net,
            i,
            &state.agents[i],
            &mut next.agents[i],
            gains,
            scheduled,
            lookup,
            delta_b.map(|d| d[i].as_slice()),
        );
    }
    Ok(next)
}

/// One iteration of the scheduled law. `inbox[i]` must hold exactly the
/// scheduled portion from every neighbor of agent `i`.
pub fn step_sdls(
    net: &AgentNetwork,
    state: &AgentState,
    inbox: &[Vec<PortionMessage>],
    gains: &Gains,
    k: usize,
) -> Result<AgentState, ProtocolError> {
    step_with_inbox(net, state, inbox, gains, LawKind::Scheduled(k), None)
}

/// One iteration of the unscheduled law: every portion diffuses.
pub fn step_full(
    net: &AgentNetwork,
    state: &AgentState,
    inbox: &[Vec<PortionMessage>],
    gains: &Gains,
) -> Result<AgentState, ProtocolError> {
    step_with_inbox(net, state, inbox, gains, LawKind::Full, None)
}

/// The scheduled law with the observation increment
/// `delta_b[i][j] = b_ij(k+1) − b_ij(k)` subtracted in the `y` update.
pub fn step_tracking(
    net: &AgentNetwork,
    state: &AgentState,
    inbox: &[Vec<PortionMessage>],
    gains: &Gains,
    k: usize,
    delta_b: &[Vec<Vec<f64>>],
) -> Result<AgentState, ProtocolError> {
    step_with_inbox(net, state, inbox, gains, LawKind::Scheduled(k), Some(delta_b))
}

#[cfg(test)]
mod tests;
