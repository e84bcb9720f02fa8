//! Undirected communication graphs for agents (G) and portions (G_c).
//!
//! Vertices are numbered from 1 in the public API. Internally the neighbor
//! lists are 0-based because they index agent and portion arrays.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("a graph needs at least one vertex")]
    Empty,
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) references a vertex outside 1..={2}")]
    VertexOutOfRange(usize, usize, usize),
    #[error("edge ({0}, {1}) appears more than once")]
    DuplicateEdge(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Ring,
    Path,
    Complete,
    Star,
    Single,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    vertex_count: usize,
    /// Edges with `i < j`, 1-based, sorted.
    edges: BTreeSet<(usize, usize)>,
}

impl UndirectedGraph {
    pub fn new(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if vertex_count == 0 {
            return Err(GraphError::Empty);
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a, b));
            }
            if a == 0 || b == 0 || a > vertex_count || b > vertex_count {
                return Err(GraphError::VertexOutOfRange(a, b, vertex_count));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(GraphError::DuplicateEdge(a, b));
            }
        }
        Ok(Self {
            vertex_count,
            edges: set,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as 1-based pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// 0-based neighbor lists, each sorted ascending.
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertex_count];
        for &(a, b) in &self.edges {
            out[a - 1].push(b - 1);
            out[b - 1].push(a - 1);
        }
        for list in &mut out {
            list.sort_unstable();
        }
        out
    }
}

/// `L = D − adjacency`.
pub fn laplacian(g: &UndirectedGraph) -> DenseMatrix {
    let n = g.vertex_count();
    let mut l = DenseMatrix::zeros(n, n);
    for (a, b) in g.edges() {
        let (i, j) = (a - 1, b - 1);
        l[(i, j)] -= 1.0;
        l[(j, i)] -= 1.0;
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
    }
    l
}

pub fn is_connected(g: &UndirectedGraph) -> bool {
    let nbrs = g.neighbor_lists();
    let mut seen = vec![false; g.vertex_count()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &nbrs[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Standard topologies. A ring on two vertices is a single edge and a ring on
/// one vertex has no edges.
pub fn make_topology(kind: Topology, n: usize) -> Result<UndirectedGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let edges: Vec<(usize, usize)> = match kind {
        Topology::Single => Vec::new(),
        Topology::Path => (1..n).map(|i| (i, i + 1)).collect(),
        Topology::Ring => {
            let mut e: Vec<_> = (1..n).map(|i| (i, i + 1)).collect();
            if n > 2 {
                e.push((n, 1));
            }
            e
        }
        Topology::Complete => (1..=n)
            .flat_map(|i| ((i + 1)..=n).map(move |j| (i, j)))
            .collect(),
        Topology::Star => (2..=n).map(|j| (1, j)).collect(),
    };
    UndirectedGraph::new(n, &edges)
}

/// Graph literal accepted in configs: `{"kind": "ring", "n": 8}` or
/// `{"edges": [[1,2],[2,3]], "n": 3}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GraphSpec {
    Named { kind: Topology, n: usize },
    Edges { edges: Vec<[usize; 2]>, n: usize },
}

impl GraphSpec {
    pub fn vertex_count(&self) -> usize {
        match self {
            GraphSpec::Named { n, .. } | GraphSpec::Edges { n, .. } => *n,
        }
    }

    pub fn build(&self) -> Result<UndirectedGraph, GraphError> {
        match self {
            GraphSpec::Named { kind, n } => make_topology(*kind, *n),
            GraphSpec::Edges { edges, n } => {
                let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
                UndirectedGraph::new(*n, &pairs)
            }
        }
    }

    /// Default portion graph: a ring, which for `q ≤ 3` is already complete.
    pub fn default_portion_graph(q: usize) -> Self {
        GraphSpec::Named {
            kind: Topology::Ring,
            n: q,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues, kernel_basis};
    use proptest::prelude::*;

    #[test]
    fn laplacian_examples() {
        let p2 = make_topology(Topology::Path, 2).unwrap();
        assert_eq!(laplacian(&p2), DenseMatrix::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]));
        let c3 = make_topology(Topology::Ring, 3).unwrap();
        assert_eq!(
            laplacian(&c3),
            DenseMatrix::from_rows(&[&[2.0, -1.0, -1.0], &[-1.0, 2.0, -1.0], &[-1.0, -1.0, 2.0]])
        );
        let one = make_topology(Topology::Single, 1).unwrap();
        assert_eq!(laplacian(&one), DenseMatrix::zeros(1, 1));
    }

    #[test]
    fn connectivity_examples() {
        assert!(is_connected(&make_topology(Topology::Ring, 8).unwrap()));
        assert!(!is_connected(&UndirectedGraph::new(2, &[]).unwrap()));
        assert!(is_connected(&make_topology(Topology::Single, 1).unwrap()));
    }

    #[test]
    fn topology_examples() {
        let ring = make_topology(Topology::Ring, 8).unwrap();
        assert_eq!(ring.edge_count(), 8);
        assert!((1..=8).all(|v| ring.degree(v) == 2));
        assert_eq!(make_topology(Topology::Complete, 4).unwrap().edge_count(), 6);
        assert_eq!(make_topology(Topology::Single, 1).unwrap().edge_count(), 0);
        assert_eq!(make_topology(Topology::Ring, 0), Err(GraphError::Empty));
        assert_eq!(make_topology(Topology::Star, 5).unwrap().degree(1), 4);
    }

    #[test]
    fn rejects_malformed_edges() {
        assert_eq!(UndirectedGraph::new(3, &[(2, 2)]), Err(GraphError::SelfLoop(2, 2)));
        assert!(matches!(UndirectedGraph::new(3, &[(0, 1)]), Err(GraphError::VertexOutOfRange(..))));
        assert!(matches!(UndirectedGraph::new(3, &[(1, 2), (2, 1)]), Err(GraphError::DuplicateEdge(..))));
    }

    #[test]
    fn graph_literals() {
        let named: GraphSpec = serde_json::from_str(r#"{"kind": "ring", "n": 8}"#).unwrap();
        assert_eq!(named.build().unwrap().edge_count(), 8);
        let listed: GraphSpec = serde_json::from_str(r#"{"edges": [[1,2],[2,3]], "n": 3}"#).unwrap();
        let g = listed.build().unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(1, 2), (2, 3)]);
        assert!(serde_json::from_str::<GraphSpec>(r#"{"kind": "torus", "n": 3}"#).is_err());
    }

    fn topology() -> impl Strategy<Value = UndirectedGraph> {
        (
            prop_oneof![
                Just(Topology::Ring),
                Just(Topology::Path),
                Just(Topology::Complete),
                Just(Topology::Star),
            ],
            1usize..12,
        )
            .prop_map(|(k, n)| make_topology(k, n).unwrap())
    }

    proptest! {
        #[test]
        fn laplacian_structure(g in topology()) {
            let l = laplacian(&g);
            prop_assert!(l.is_symmetric(0.0));
            for i in 0..l.rows() {
                prop_assert_eq!(l.row(i).iter().sum::<f64>(), 0.0);
            }
            for ev in eigenvalues(&l).unwrap() {
                prop_assert!(ev.re >= -1e-10 && ev.im.abs() < 1e-10);
            }
        }

        #[test]
        fn connected_kernel_is_ones(g in topology()) {
            prop_assume!(is_connected(&g));
            let k = kernel_basis(&laplacian(&g), 1e-10).unwrap();
            prop_assert_eq!(k.dim(), 1);
            let n = g.vertex_count();
            let ones = vec![1.0 / (n as f64).sqrt(); n];
            prop_assert!(k.distance(&ones) < 1e-10);
        }
    }
}
