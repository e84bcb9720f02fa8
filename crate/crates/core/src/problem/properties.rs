use proptest::prelude::*;

use super::*;
use crate::graph::{make_topology, GraphSpec, Topology, UndirectedGraph};
use crate::linalg::{
    eigenvalues, is_semi_hurwitz, is_semi_schur_increment, kernel_basis, max_principal_angle,
    norm2, pseudo_inverse, spectral_norm, DenseMatrix, PREDICATE_TOL,
};
use crate::sim::{generate_random_problem, Conditioning};

struct Instance {
    pl: PartitionedLae,
    aug: AugmentedSystem,
}

fn instance(seed: u64, m: usize, n: usize, p: usize, bandwidth: usize, cond: Conditioning) -> Instance {
    let lae = generate_random_problem(m, n, seed, cond).unwrap();
    let cols = bandwidth_col_sizes(n, bandwidth);
    let q = cols.len();
    let pl = partition_problem(lae, &even_sizes(m, p), &cols, bandwidth, BSplitRule::Equal).unwrap();
    let g = make_topology(Topology::Ring, p).unwrap();
    let gc = GraphSpec::default_portion_graph(q).build().unwrap();
    let aug = build_augmented(&pl, &g, &gc).unwrap();
    Instance { pl, aug }
}

fn single(a: &[&[f64]], b: &[f64], cols: &[usize], bandwidth: usize) -> Instance {
    let lae = LaeProblem::new(DenseMatrix::from_rows(a), b.to_vec()).unwrap();
    let pl = partition_problem(lae, &[b.len()], cols, bandwidth, BSplitRule::Equal).unwrap();
    let one: UndirectedGraph = make_topology(Topology::Single, 1).unwrap();
    let gc = GraphSpec::default_portion_graph(cols.len()).build().unwrap();
    let aug = build_augmented(&pl, &one, &gc).unwrap();
    Instance { pl, aug }
}

/// Random shapes with `p ≤ 3`, `q ≤ 3`, up to rank-deficient `A`.
fn shapes() -> impl Strategy<Value = (u64, usize, usize, usize, usize, Conditioning)> {
    (0u64..1000, 1usize..=3, 1usize..=3, 1usize..=2, 2usize..=4, 0usize..3).prop_map(|(seed, p, q, nj, rows_per, rank_drop)| {
        let n = q * nj;
        let m = p * rows_per;
        let cond = match rank_drop {
            0 => Conditioning::Gaussian,
            d => Conditioning::RankDeficient(n.min(m).saturating_sub(d).max(1)),
        };
        (seed, m, n, p, nj, cond)
    })
}

fn gains(k_p: f64, k_i: f64, alpha: f64) -> Gains {
    Gains::new(k_p, k_i, alpha).unwrap()
}

#[test]
fn augmented_blocks_sum_and_factor() {
    let inst = instance(3, 9, 4, 3, 2, Conditioning::Gaussian);
    let aug = &inst.aug;
    assert_eq!(aug.q, 2);
    let mut sum = DenseMatrix::zeros(aug.pn(), aug.pn());
    for lj in &aug.l_hat_j {
        sum = &sum + lj;
    }
    assert!(sum.max_abs_diff(&aug.l_hat) < 1e-14);
    for (lj, sj) in aug.l_hat_j.iter().zip(&aug.sqrt_l_hat_j) {
        assert!(aug.sqrt_l_hat.matmul(sj).max_abs_diff(lj) < 1e-12);
    }
}

#[test]
fn single_portion_collapses() {
    let inst = instance(1, 6, 3, 2, 3, Conditioning::Gaussian);
    let g = gains(2.0, 1.0, 0.05);
    let mats = build_matrices(&inst.aug, &g).unwrap();
    assert!(mats.m_ave.max_abs_diff(&mats.m_mat) < 1e-14);
    let phi = DenseMatrix::identity(mats.m_mat.rows()).add_scaled(0.05, &mats.m_mat);
    assert!(mats.phi.max_abs_diff(&phi) < 1e-14);
}

#[test]
fn single_portion_alpha_max_reduces_to_spectrum() {
    let inst = instance(4, 8, 3, 2, 3, Conditioning::Gaussian);
    let g = gains(2.0, 1.0, 1.0);
    let report = alpha_max_report(&inst.aug, &g).unwrap();
    let mats = build_matrices(&inst.aug, &g).unwrap();
    let mut ev = eigenvalues(&mats.m_mat).unwrap();
    ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let oracle = ev[report.kernel_dim..]
        .iter()
        .map(|l| -2.0 * l.re / l.norm_sqr())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(report.binomial_sum, 0.0);
    assert!((report.alpha_max - oracle).abs() <= 1e-9 * oracle, "{} vs {oracle}", report.alpha_max);
}

#[test]
fn two_portion_phi_is_semi_schur_below_the_bound() {
    let inst = instance(7, 8, 4, 2, 2, Conditioning::Gaussian);
    let bound = alpha_max(&inst.aug, &gains(2.0, 1.0, 1.0)).unwrap();
    assert!(bound > 0.0);
    let mats = build_matrices(&inst.aug, &gains(2.0, 1.0, 0.9 * bound.min(1.0))).unwrap();
    assert!(is_semi_schur_increment(&mats.phi_minus_identity, PREDICATE_TOL).unwrap());
}

#[test]
fn kkt_examples() {
    let inst = single(&[&[1.0]], &[2.0], &[1], 1);
    let mats = build_matrices(&inst.aug, &gains(1.0, 1.0, 0.1)).unwrap();
    let sol = solve_kkt_min_norm(&mats, &inst.aug.b_hat).unwrap();
    assert!((sol.x_hat[0] - 2.0).abs() < 1e-12);
    assert!((sol.x_star[0] - 2.0).abs() < 1e-12);

    let zero = solve_kkt_min_norm(&mats, &[0.0]).unwrap();
    assert!(zero.xi_star.iter().all(|&v| v == 0.0));
    assert!(solve_kkt_min_norm(&mats, &[1.0, 2.0]).is_err());
}

#[test]
fn limit_of_single_agent_unique_problem_is_the_ls_solution() {
    let inst = single(&[&[1.0, 0.0], &[0.0, 2.0], &[1.0, 1.0]], &[1.0, 2.0, 4.0], &[2], 2);
    let mats = build_matrices(&inst.aug, &gains(1.0, 1.0, 0.1)).unwrap();
    let ls = centralized_ls(inst.pl.problem()).unwrap();
    for mode in [LimitMode::Continuous, LimitMode::Discrete] {
        let sol = characterize_limit(&mats, &inst.aug.b_hat, mode).unwrap();
        assert!(norm2(&crate::linalg::sub_vec(&sol.x_star, &ls)) < 1e-10);
    }
}

#[test]
fn underdetermined_limit_attains_the_ls_residual() {
    let inst = instance(9, 4, 6, 2, 3, Conditioning::Gaussian);
    let mats = build_matrices(&inst.aug, &gains(2.0, 1.0, 0.01)).unwrap();
    let oracle = ls_residual(inst.pl.problem(), &centralized_ls(inst.pl.problem()).unwrap()).unwrap();
    for mode in [LimitMode::Continuous, LimitMode::Discrete] {
        let sol = characterize_limit(&mats, &inst.aug.b_hat, mode).unwrap();
        let r = ls_residual(inst.pl.problem(), &sol.x_star).unwrap();
        assert!((r - oracle).abs() < 1e-8, "{mode:?}: {r} vs {oracle}");
    }
}

#[test]
fn repeated_complex_eigenvalues_get_accurate_vectors() {
    // This M has −0.75 ± 0.968i twice; the backend's first eigenvectors for
    // the second copy had a residual near 3e-3.
    let inst = instance(464, 6, 2, 3, 2, Conditioning::RankDeficient(1));
    let mats = build_matrices(&inst.aug, &gains(0.5, 0.5, 0.01)).unwrap();
    let eig = crate::linalg::eigen_decomposition(&mats.m_mat).unwrap();
    assert!(eig.max_residual < 1e-12, "{}", eig.max_residual);
    assert!(eig.cond_v < 100.0, "{}", eig.cond_v);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn algorithm_matrices_are_dissipative_and_semi_hurwitz(
        (seed, m, n, p, nj, cond) in shapes(),
        k_p in 0.5f64..5.0,
        k_i in 0.5f64..5.0,
    ) {
        let inst = instance(seed, m, n, p, nj, cond);
        let mats = build_matrices(&inst.aug, &gains(k_p, k_i, 0.01)).unwrap();
        let scale = mats.m_mat.frobenius_norm();
        let sym_max = eigenvalues(&mats.m_mat.symmetrized()).unwrap().iter().map(|l| l.re).fold(f64::MIN, f64::max);
        prop_assert!(sym_max <= 1e-10 * scale, "λmax(M + Mᵀ)/2 = {sym_max}");
        prop_assert!(is_semi_hurwitz(&mats.m_mat, PREDICATE_TOL).unwrap());
        prop_assert!(is_semi_hurwitz(&mats.m_tilde, PREDICATE_TOL).unwrap());
    }

    #[test]
    fn kernels_of_the_algorithm_matrices_coincide(
        (seed, m, n, p, nj, cond) in shapes(),
    ) {
        let inst = instance(seed, m, n, p, nj, cond);
        let bound = alpha_max(&inst.aug, &gains(2.0, 1.0, 1.0)).unwrap();
        prop_assert!(bound > 0.0);
        let mats = build_matrices(&inst.aug, &gains(2.0, 1.0, 0.5 * bound.min(1.0))).unwrap();
        let k_ave = kernel_basis(&mats.m_ave, 1e-10).unwrap();
        let k_m = kernel_basis(&mats.m_mat, 1e-10).unwrap();
        let k_phi = kernel_basis(&mats.phi_minus_identity, 1e-10).unwrap();
        prop_assert!(max_principal_angle(&k_ave, &k_m).unwrap() <= 1e-7);
        prop_assert!(max_principal_angle(&k_phi, &k_ave).unwrap() <= 1e-7);
        let basis = k_ave.to_matrix();
        for ms in &mats.m_s {
            prop_assert!(ms.matmul(&basis).max_abs() <= 1e-9 * ms.frobenius_norm().max(1.0));
        }
        prop_assert!(is_semi_schur_increment(&mats.phi_minus_identity, PREDICATE_TOL).unwrap());
    }

    #[test]
    fn kkt_solution_is_bounded_and_consensus_structured(
        (seed, m, n, p, nj, cond) in shapes(),
    ) {
        let inst = instance(seed, m, n, p, nj, cond);
        let mats = build_matrices(&inst.aug, &gains(2.0, 1.0, 0.01)).unwrap();
        let b_hat = &inst.aug.b_hat;
        let sol = solve_kkt_min_norm(&mats, b_hat).unwrap();
        let op = pseudo_inverse(&mats.m_mat, 1e-10).unwrap().matmul(&mats.f_mat);
        prop_assert!(norm2(&sol.xi_star) <= spectral_norm(&op).unwrap() * norm2(b_hat) * (1.0 + 1e-9));
        for mode in [LimitMode::Continuous, LimitMode::Discrete] {
            let lim = characterize_limit(&mats, b_hat, mode).unwrap();
            prop_assert!(consensus_spread(&lim.x_hat, p, &inst.aug.col_sizes) <= 1e-9);
            let r = ls_residual(inst.pl.problem(), &lim.x_star).unwrap();
            let oracle = ls_residual(inst.pl.problem(), &centralized_ls(inst.pl.problem()).unwrap()).unwrap();
            prop_assert!((r - oracle).abs() <= 1e-8);
        }
    }
}
