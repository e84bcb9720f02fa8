//! Problem data: the partitioned LAE, its augmented operators, the algorithm
//! matrices and the centralized oracles.

mod augmented;
mod bundle;
mod lifted;
mod matrices;
mod oracle;
mod report;

use serde::{Deserialize, Serialize};

use crate::graph::GraphError;
use crate::linalg::{DenseMatrix, LinalgError};

pub use augmented::{build_augmented, AugmentedSystem};
pub use bundle::{read_bundle, write_bundle, PartitionSpec, ProblemBundle};
pub use lifted::{lifted_step, stack_agent_state, unstack_lifted, LiftedView};
pub use matrices::{
    alpha_max, alpha_max_report, build_matrices, build_schedule_matrices, AlgorithmMatrices,
    AlphaMaxReport, Gains, ScheduleMatrices,
};
pub use report::{spectral_report, SpectralReport, KERNEL_ANGLE_TOL, REPORT_ALPHA_FRACTION};
pub use oracle::{
    centralized_ls, characterize_limit, consensus_spread, ls_residual, solve_kkt_min_norm,
    KktSolution, LimitMode,
};

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("problem must have m, n >= 1 (got {m}x{n})")]
    EmptyProblem { m: usize, n: usize },
    #[error("{what}: expected {expected}, found {found}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("portion {portion} has {size} columns, exceeding the bandwidth {bandwidth}")]
    BandwidthViolation {
        portion: usize,
        size: usize,
        bandwidth: usize,
    },
    #[error("{0} sizes must all be positive")]
    ZeroBlock(&'static str),
    #[error("{0} graph is not connected")]
    Disconnected(&'static str),
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error("M_ave is not numerically diagonalizable (cond(V) = {cond_v:e})")]
    NotDiagonalizable { cond_v: f64 },
    #[error("M_ave has no nonzero eigenvalues")]
    EmptyNonzeroSpectrum,
    #[error("M_ave has a nonzero eigenvalue {re:e}{im:+e}i outside the open left half-plane")]
    UnstableSpectrum { re: f64, im: f64 },
    #[error("KKT residual {residual:e} exceeds {bound:e}")]
    KktResidual { residual: f64, bound: f64 },
    #[error("discrete limit requires a step size in the algorithm matrices")]
    MissingStepSize,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: String, message: String },
}

/// `A x = b` with `A` of size m×n.
#[derive(Debug, Clone, PartialEq)]
pub struct LaeProblem {
    a: DenseMatrix,
    b: Vec<f64>,
}

impl LaeProblem {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self, ProblemError> {
        let (m, n) = a.shape();
        if m == 0 || n == 0 {
            return Err(ProblemError::EmptyProblem { m, n });
        }
        if b.len() != m {
            return Err(ProblemError::SizeMismatch {
                what: "observation length",
                expected: m,
                found: b.len(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite.into());
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Same coefficient matrix with a different observation.
    pub fn with_observation(&self, b: Vec<f64>) -> Result<Self, ProblemError> {
        Self::new(self.a.clone(), b)
    }
}

/// How each agent's observation `b_i` is split into portion terms `b_ij`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BSplitRule {
    /// `b_ij = b_i / q`
    #[default]
    Equal,
    /// `b_i1 = b_i`, all other terms zero
    FirstPortion,
}

impl BSplitRule {
    /// Splits one agent's observation into `q` portion terms.
    pub fn split(self, b_i: &[f64], q: usize) -> Vec<Vec<f64>> {
        match self {
            BSplitRule::Equal => {
                let inv = q as f64;
                (0..q).map(|_| b_i.iter().map(|v| v / inv).collect()).collect()
            }
            BSplitRule::FirstPortion => (0..q)
                .map(|j| {
                    if j == 0 {
                        b_i.to_vec()
                    } else {
                        vec![0.0; b_i.len()]
                    }
                })
                .collect(),
        }
    }
}

/// The LAE split into `p` agent row blocks and `q` column portions.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedLae {
    problem: LaeProblem,
    row_sizes: Vec<usize>,
    col_sizes: Vec<usize>,
    row_offsets: Vec<usize>,
    col_offsets: Vec<usize>,
    bandwidth: usize,
    b_split_rule: BSplitRule,
    /// `b_split[i][j] = b_ij`
    b_split: Vec<Vec<Vec<f64>>>,
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len() + 1);
    let mut acc = 0;
    out.push(0);
    for s in sizes {
        acc += s;
        out.push(acc);
    }
    out
}

pub fn partition_problem(
    problem: LaeProblem,
    row_sizes: &[usize],
    col_sizes: &[usize],
    bandwidth: usize,
    b_split_rule: BSplitRule,
) -> Result<PartitionedLae, ProblemError> {
    check_partition(problem.m(), problem.n(), row_sizes, col_sizes, bandwidth)?;
    let row_offsets = offsets(row_sizes);
    let q = col_sizes.len();
    let b_split = (0..row_sizes.len())
        .map(|i| b_split_rule.split(&problem.b()[row_offsets[i]..row_offsets[i + 1]], q))
        .collect();
    Ok(PartitionedLae {
        problem,
        row_sizes: row_sizes.to_vec(),
        col_sizes: col_sizes.to_vec(),
        row_offsets,
        col_offsets: offsets(col_sizes),
        bandwidth,
        b_split_rule,
        b_split,
    })
}

/// Validates the partition sizes against `m`, `n` and the bandwidth.
pub fn check_partition(
    m: usize,
    n: usize,
    row_sizes: &[usize],
    col_sizes: &[usize],
    bandwidth: usize,
) -> Result<(), ProblemError> {
    if row_sizes.is_empty() || row_sizes.contains(&0) {
        return Err(ProblemError::ZeroBlock("row"));
    }
    if col_sizes.is_empty() || col_sizes.contains(&0) {
        return Err(ProblemError::ZeroBlock("column"));
    }
    let rs: usize = row_sizes.iter().sum();
    if rs != m {
        return Err(ProblemError::SizeMismatch {
            what: "sum of row sizes",
            expected: m,
            found: rs,
        });
    }
    let cs: usize = col_sizes.iter().sum();
    if cs != n {
        return Err(ProblemError::SizeMismatch {
            what: "sum of column sizes",
            expected: n,
            found: cs,
        });
    }
    if let Some((j, &size)) = col_sizes.iter().enumerate().find(|(_, &s)| s > bandwidth) {
        return Err(ProblemError::BandwidthViolation {
            portion: j + 1,
            size,
            bandwidth,
        });
    }
    Ok(())
}

/// Splits `total` into `parts` nearly equal positive sizes, larger ones first.
pub fn even_sizes(total: usize, parts: usize) -> Vec<usize> {
    let base = total / parts;
    let extra = total % parts;
    (0..parts).map(|k| base + usize::from(k < extra)).collect()
}

/// Column sizes with the fewest portions that respect the bandwidth.
pub fn bandwidth_col_sizes(n: usize, bandwidth: usize) -> Vec<usize> {
    even_sizes(n, n.div_ceil(bandwidth.max(1)))
}

impl PartitionedLae {
    pub fn problem(&self) -> &LaeProblem {
        &self.problem
    }

    pub fn p(&self) -> usize {
        self.row_sizes.len()
    }

    pub fn q(&self) -> usize {
        self.col_sizes.len()
    }

    pub fn m(&self) -> usize {
        self.problem.m()
    }

    pub fn n(&self) -> usize {
        self.problem.n()
    }

    pub fn row_sizes(&self) -> &[usize] {
        &self.row_sizes
    }

    pub fn col_sizes(&self) -> &[usize] {
        &self.col_sizes
    }

    /// Offsets of the agent row blocks, with a trailing `m`.
    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    /// Offsets of the portions, with a trailing `n`.
    pub fn col_offsets(&self) -> &[usize] {
        &self.col_offsets
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn b_split_rule(&self) -> BSplitRule {
        self.b_split_rule
    }

    /// `b_ij` for agent `i` and portion `j` (both 0-based).
    pub fn b_ij(&self, i: usize, j: usize) -> &[f64] {
        &self.b_split[i][j]
    }

    /// Per-agent, per-portion split of an arbitrary observation vector.
    pub fn split_observation(&self, b: &[f64]) -> Vec<Vec<Vec<f64>>> {
        assert_eq!(b.len(), self.m(), "observation length");
        (0..self.p())
            .map(|i| {
                self.b_split_rule
                    .split(&b[self.row_offsets[i]..self.row_offsets[i + 1]], self.q())
            })
            .collect()
    }

    /// Agent `i`'s rows of `A` (all columns).
    pub fn a_rows(&self, i: usize) -> DenseMatrix {
        self.problem
            .a()
            .block(self.row_offsets[i], 0, self.row_sizes[i], self.n())
    }

    /// The block `A_ij`.
    pub fn a_block(&self, i: usize, j: usize) -> DenseMatrix {
        self.problem.a().block(
            self.row_offsets[i],
            self.col_offsets[j],
            self.row_sizes[i],
            self.col_sizes[j],
        )
    }

    /// Same partition over a new observation (used by tracking runs).
    pub fn with_observation(&self, b: Vec<f64>) -> Result<Self, ProblemError> {
        partition_problem(
            self.problem.with_observation(b)?,
            &self.row_sizes,
            &self.col_sizes,
            self.bandwidth,
            self.b_split_rule,
        )
    }
}


#[cfg(test)]
mod properties;
