//! Problem bundles on disk: `A.mat`, `b.mat` and `partition.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{GraphSpec, UndirectedGraph};
use crate::linalg::textio::{read_matrix, write_matrix};
use crate::linalg::DenseMatrix;

use super::{partition_problem, BSplitRule, LaeProblem, PartitionedLae, ProblemError};

/// Contents of `partition.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub row_sizes: Vec<usize>,
    pub col_sizes: Vec<usize>,
    pub bandwidth: usize,
    #[serde(default)]
    pub b_split_rule: BSplitRule,
    pub graph: GraphSpec,
    pub graph_c: GraphSpec,
}

#[derive(Debug, Clone)]
pub struct ProblemBundle {
    pub problem: LaeProblem,
    pub partition: PartitionSpec,
}

impl ProblemBundle {
    pub fn partitioned(&self) -> Result<PartitionedLae, ProblemError> {
        let s = &self.partition;
        partition_problem(self.problem.clone(), &s.row_sizes, &s.col_sizes, s.bandwidth, s.b_split_rule)
    }

    /// `(G, G_c)`
    pub fn graphs(&self) -> Result<(UndirectedGraph, UndirectedGraph), ProblemError> {
        Ok((self.partition.graph.build()?, self.partition.graph_c.build()?))
    }
}

fn io(path: &Path, source: std::io::Error) -> ProblemError {
    ProblemError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_bundle(bundle: &ProblemBundle, dir: impl AsRef<Path>) -> Result<(), ProblemError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let a_path = dir.join("A.mat");
    write_matrix(&a_path, bundle.problem.a()).map_err(|e| io(&a_path, e))?;
    let b_path = dir.join("b.mat");
    write_matrix(&b_path, &DenseMatrix::column(bundle.problem.b())).map_err(|e| io(&b_path, e))?;
    let p_path = dir.join("partition.json");
    let mut json = serde_json::to_string_pretty(&bundle.partition).expect("partition serializes");
    json.push('\n');
    std::fs::write(&p_path, json).map_err(|e| io(&p_path, e))
}

/// Reads and validates a bundle (sizes, bandwidth and graph literals).
pub fn read_bundle(dir: impl AsRef<Path>) -> Result<ProblemBundle, ProblemError> {
    let dir = dir.as_ref();
    let a = read_matrix(dir.join("A.mat"))?;
    let b = read_matrix(dir.join("b.mat"))?;
    if b.cols() != 1 {
        return Err(ProblemError::SizeMismatch {
            what: "b.mat columns",
            expected: 1,
            found: b.cols(),
        });
    }
    let p_path = dir.join("partition.json");
    let text = std::fs::read_to_string(&p_path).map_err(|e| io(&p_path, e))?;
    let partition: PartitionSpec = serde_json::from_str(&text).map_err(|e| ProblemError::Json {
        path: p_path.display().to_string(),
        message: e.to_string(),
    })?;
    let bundle = ProblemBundle {
        problem: LaeProblem::new(a, b.into_vec())?,
        partition,
    };
    let pl = bundle.partitioned()?;
    let (g, g_c) = bundle.graphs()?;
    for (what, expected, found) in [
        ("agent graph vertices", pl.p(), g.vertex_count()),
        ("portion graph vertices", pl.q(), g_c.vertex_count()),
    ] {
        if expected != found {
            return Err(ProblemError::SizeMismatch { what, expected, found });
        }
    }
    Ok(bundle)
}
