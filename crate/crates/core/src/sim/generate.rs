use serde::{Deserialize, Serialize};

use crate::linalg::DenseMatrix;
use crate::problem::LaeProblem;

use super::rng::GaussianStream;
use super::SimError;

/// How the random coefficient matrix is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// iid standard normal entries.
    #[default]
    Gaussian,
    /// Product of `m × r` and `r × n` Gaussian factors.
    RankDeficient(usize),
}

/// Draws `A` (row-major, or both factors in turn) and then `b` from one
/// Gaussian stream.
pub fn generate_random_problem(m: usize, n: usize, seed: u64, conditioning: Conditioning) -> Result<LaeProblem, SimError> {
    if m == 0 || n == 0 {
        return Err(SimError::Config(format!("problem dimensions must be positive, got {m}x{n}")));
    }
    let mut g = GaussianStream::new(seed);
    let a = match conditioning {
        Conditioning::Gaussian => DenseMatrix::from_row_major(m, n, g.normals(m * n))?,
        Conditioning::RankDeficient(r) => {
            if r > m.min(n) {
                return Err(SimError::Config(format!("rank {r} exceeds min(m, n) = {}", m.min(n))));
            }
            let left = DenseMatrix::from_row_major(m, r, g.normals(m * r))?;
            let right = DenseMatrix::from_row_major(r, n, g.normals(r * n))?;
            left.matmul(&right)
        }
    };
    Ok(LaeProblem::new(a, g.normals(m))?)
}
