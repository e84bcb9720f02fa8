//! Agent states on disk, one matrix file per agent and field.
//!
//! `agent{i}_x.mat` and `agent{i}_z.mat` are `n × 1` columns. `agent{i}_y.mat`
//! is `m_i × q` with column `j` holding `y_ij`; it is absent for laws that
//! keep no `y`. Agents are numbered from 1.

use std::path::Path;

use crate::linalg::textio::{read_matrix, write_matrix};
use crate::linalg::DenseMatrix;

use super::{AgentState, AgentVars, ProtocolError};

fn io_err(path: &Path, e: impl std::fmt::Display) -> ProtocolError {
    ProtocolError::Snapshot {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn write_snapshot(state: &AgentState, dir: impl AsRef<Path>) -> Result<(), ProtocolError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let q = state.q();
    for (i, a) in state.agents.iter().enumerate() {
        let mut files = vec![("x", DenseMatrix::column(&a.x)), ("z", DenseMatrix::column(&a.z))];
        if !a.y.is_empty() {
            let mi = a.y.len() / q;
            files.push(("y", DenseMatrix::from_fn(mi, q, |r, j| a.y[j * mi + r])));
        }
        for (field, m) in files {
            let path = dir.join(format!("agent{}_{field}.mat", i + 1));
            write_matrix(&path, &m).map_err(|e| io_err(&path, e))?;
        }
    }
    Ok(())
}

/// Reads `p` agents back; `col_offsets` is the portion layout (with trailing total).
pub fn read_snapshot(dir: impl AsRef<Path>, p: usize, col_offsets: &[usize]) -> Result<AgentState, ProtocolError> {
    let dir = dir.as_ref();
    let n = *col_offsets.last().ok_or(ProtocolError::StateShape)?;
    let q = col_offsets.len() - 1;
    let read_col = |path: &Path| -> Result<Vec<f64>, ProtocolError> {
        let m = read_matrix(path).map_err(|e| io_err(path, e))?;
        if m.shape() != (n, 1) {
            return Err(io_err(path, format!("expected {n}x1, found {}x{}", m.rows(), m.cols())));
        }
        Ok(m.into_vec())
    };
    let mut agents = Vec::with_capacity(p);
    for i in 1..=p {
        let x = read_col(&dir.join(format!("agent{i}_x.mat")))?;
        let z = read_col(&dir.join(format!("agent{i}_z.mat")))?;
        let y_path = dir.join(format!("agent{i}_y.mat"));
        let y = if y_path.exists() {
            let m = read_matrix(&y_path).map_err(|e| io_err(&y_path, e))?;
            if m.cols() != q {
                return Err(io_err(&y_path, format!("expected {q} columns, found {}", m.cols())));
            }
            (0..q).flat_map(|j| m.col_vec(j)).collect()
        } else {
            Vec::new()
        };
        agents.push(AgentVars { x, y, z });
    }
    let state = AgentState::from_parts(col_offsets.to_vec(), agents);
    if !state.is_finite() {
        return Err(io_err(dir, "non-finite entry"));
    }
    Ok(state)
}
