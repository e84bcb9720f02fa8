use crate::problem::Gains;

use super::{AgentNetwork, AgentVars};

/// Which portions diffuse in an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawKind {
    /// Only portion `(k mod q) + 1` diffuses at iteration `k`.
    Scheduled(usize),
    /// Every portion diffuses every iteration.
    Full,
}

impl LawKind {
    /// 0-based diffusing portion, or `None` when all portions diffuse.
    pub(crate) fn scheduled(self, q: usize) -> Option<usize> {
        match self {
            LawKind::Scheduled(k) => Some(k % q),
            LawKind::Full => None,
        }
    }
}

/// One agent's update.
///
/// `neighbor_x(l, j)` returns `x_lj` for a neighbor `l` (0-based agent and
/// portion). It is only called for neighbors of `i` and for diffusing
/// portions. `delta_b[j]`, when present, is subtracted from the new `y_ij`.
///
/// The arithmetic is written out so that `scheduled = None` with `q = 1`
/// performs exactly the same operations as `Some(0)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sdls_agent_update<'a, F>(
    net: &AgentNetwork,
    i: usize,
    cur: &AgentVars,
    next: &mut AgentVars,
    gains: &Gains,
    scheduled: Option<usize>,
    neighbor_x: F,
    delta_b: Option<&[Vec<f64>]>,
) where
    F: Fn(usize, usize) -> &'a [f64],
{
    let Gains { k_p, k_i, alpha } = *gains;
    let mi = net.row_sizes[i];
    let at = net.a_cols_t(i);
    let a = net.a_rows(i);
    let n = net.n;
    let nbrs = &net.neighbors[i];

    for j in 0..net.q {
        let (c0, c1) = (net.col_offsets[j], net.col_offsets[j + 1]);
        let y_ij = &cur.y[j * mi..(j + 1) * mi];
        let diffusing = scheduled.is_none_or(|s| s == j);
        for t in c0..c1 {
            let col = &at[t * mi..(t + 1) * mi];
            let mut aty = 0.0;
            for r in 0..mi {
                aty += col[r] * y_ij[r];
            }
            if diffusing {
                let mut d = 0.0;
                for &l in nbrs {
                    d += cur.x[t] - neighbor_x(l, j)[t - c0];
                }
                next.x[t] = cur.x[t] - alpha * (aty + k_p * d + k_i * cur.z[t]);
                next.z[t] = cur.z[t] + alpha * d;
            } else {
                next.x[t] = cur.x[t] - alpha * (aty + k_i * cur.z[t]);
                next.z[t] = cur.z[t];
            }
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
            let mut v = y + ax - alpha * c;
            if let Some(db) = delta_b {
                v -= db[j][r];
            }
            next.y[j * mi + r] = v;
        }
    }
}
