use crate::graph::{is_connected, laplacian, UndirectedGraph};
use crate::linalg::{kron, psd_sqrt, DenseMatrix};

use super::{PartitionedLae, ProblemError};

/// Augmented operators in portion-major layout.
///
/// `x̂ = [x̂_1; …; x̂_q]` with `x̂_j = [x_1j; …; x_pj]`, and
/// `ŷ = [ŷ_1; …; ŷ_q]` with `ŷ_j = [y_1j; …; y_pj]`.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    pub p: usize,
    pub q: usize,
    pub m: usize,
    pub n: usize,
    pub col_sizes: Vec<usize>,
    pub col_offsets: Vec<usize>,
    pub row_sizes: Vec<usize>,
    pub row_offsets: Vec<usize>,
    /// Agent graph Laplacian `L` (p×p).
    pub l: DenseMatrix,
    /// Portion graph Laplacian `L_c` (q×q).
    pub l_c: DenseMatrix,
    /// `Â` (qm × pn)
    pub a_hat: DenseMatrix,
    /// `b̂` (qm)
    pub b_hat: Vec<f64>,
    /// `L̂ = diag(L⊗I_{n_1}, …, L⊗I_{n_q})`
    pub l_hat: DenseMatrix,
    /// `L̂_j`: only block `j` of `L̂` kept.
    pub l_hat_j: Vec<DenseMatrix>,
    /// `𝓛_c = L_c ⊗ I_m`
    pub l_c_aug: DenseMatrix,
    pub sqrt_l_hat: DenseMatrix,
    pub sqrt_l_hat_j: Vec<DenseMatrix>,
    pub sqrt_l_c_aug: DenseMatrix,
}

impl AugmentedSystem {
    /// `pn`, the length of `x̂` and `ẑ`.
    pub fn pn(&self) -> usize {
        self.p * self.n
    }

    /// `qm`, the length of `ŷ`, `ω̂` and `b̂`.
    pub fn qm(&self) -> usize {
        self.q * self.m
    }

    /// State dimension `2pn + qm` of the lifted recursion.
    pub fn state_dim(&self) -> usize {
        2 * self.pn() + self.qm()
    }

    /// Start of `x_ij` inside `x̂`.
    pub fn x_offset(&self, i: usize, j: usize) -> usize {
        self.p * self.col_offsets[j] + i * self.col_sizes[j]
    }

    /// Start of `y_ij` inside `ŷ`.
    pub fn y_offset(&self, i: usize, j: usize) -> usize {
        j * self.m + self.row_offsets[i]
    }

    /// Stacks a per-agent, per-portion observation split into `b̂`.
    pub fn stack_observation(&self, split: &[Vec<Vec<f64>>]) -> Vec<f64> {
        let mut out = vec![0.0; self.qm()];
        for (i, agent) in split.iter().enumerate() {
            for (j, bij) in agent.iter().enumerate() {
                let o = self.y_offset(i, j);
                out[o..o + bij.len()].copy_from_slice(bij);
            }
        }
        out
    }
}

/// Keeps only diagonal block `j` (of the portion-major layout) of `full`.
fn portion_block(full: &DenseMatrix, p: usize, col_offsets: &[usize], col_sizes: &[usize], j: usize) -> DenseMatrix {
    let dim = full.rows();
    let start = p * col_offsets[j];
    let len = p * col_sizes[j];
    let mut out = DenseMatrix::zeros(dim, dim);
    out.set_block(start, start, &full.block(start, start, len, len));
    out
}

pub fn build_augmented(
    pl: &PartitionedLae,
    g: &UndirectedGraph,
    g_c: &UndirectedGraph,
) -> Result<AugmentedSystem, ProblemError> {
    let (p, q, m, n) = (pl.p(), pl.q(), pl.m(), pl.n());
    if g.vertex_count() != p {
        return Err(ProblemError::SizeMismatch {
            what: "agent graph vertices",
            expected: p,
            found: g.vertex_count(),
        });
    }
    if g_c.vertex_count() != q {
        return Err(ProblemError::SizeMismatch {
            what: "portion graph vertices",
            expected: q,
            found: g_c.vertex_count(),
        });
    }
    if !is_connected(g) {
        return Err(ProblemError::Disconnected("agent"));
    }
    if !is_connected(g_c) {
        return Err(ProblemError::Disconnected("portion"));
    }

    let col_sizes = pl.col_sizes().to_vec();
    let col_offsets = pl.col_offsets().to_vec();
    let l = laplacian(g);
    let l_c = laplacian(g_c);
    let sqrt_l = psd_sqrt(&l)?;
    let sqrt_l_c = psd_sqrt(&l_c)?;

    let mut aug = AugmentedSystem {
        p,
        q,
        m,
        n,
        col_sizes: col_sizes.clone(),
        col_offsets: col_offsets.clone(),
        row_sizes: pl.row_sizes().to_vec(),
        row_offsets: pl.row_offsets().to_vec(),
        l: l.clone(),
        l_c: l_c.clone(),
        a_hat: DenseMatrix::zeros(q * m, p * n),
        b_hat: Vec::new(),
        l_hat: DenseMatrix::zeros(0, 0),
        l_hat_j: Vec::new(),
        l_c_aug: kron(&l_c, &DenseMatrix::identity(m)),
        sqrt_l_hat: DenseMatrix::zeros(0, 0),
        sqrt_l_hat_j: Vec::new(),
        sqrt_l_c_aug: kron(&sqrt_l_c, &DenseMatrix::identity(m)),
    };

    for j in 0..q {
        for i in 0..p {
            let (r0, c0) = (aug.y_offset(i, j), aug.x_offset(i, j));
            aug.a_hat.set_block(r0, c0, &pl.a_block(i, j));
        }
    }
    let split: Vec<Vec<Vec<f64>>> = (0..p)
        .map(|i| (0..q).map(|j| pl.b_ij(i, j).to_vec()).collect())
        .collect();
    aug.b_hat = aug.stack_observation(&split);

    let blocks: Vec<DenseMatrix> = col_sizes
        .iter()
        .map(|&nj| kron(&l, &DenseMatrix::identity(nj)))
        .collect();
    let sqrt_blocks: Vec<DenseMatrix> = col_sizes
        .iter()
        .map(|&nj| kron(&sqrt_l, &DenseMatrix::identity(nj)))
        .collect();
    aug.l_hat = DenseMatrix::block_diag(&blocks);
    aug.sqrt_l_hat = DenseMatrix::block_diag(&sqrt_blocks);
    aug.l_hat_j = (0..q)
        .map(|j| portion_block(&aug.l_hat, p, &col_offsets, &col_sizes, j))
        .collect();
    aug.sqrt_l_hat_j = (0..q)
        .map(|j| portion_block(&aug.sqrt_l_hat, p, &col_offsets, &col_sizes, j))
        .collect();
    Ok(aug)
}
