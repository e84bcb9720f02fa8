use std::cell::RefCell;

use proptest::prelude::*;

use super::*;
use crate::graph::{make_topology, Topology};
use crate::problem::{
    build_augmented, build_matrices, lifted_step, partition_problem, stack_agent_state, unstack_lifted,
    BSplitRule, LaeProblem,
};

fn ring(n: usize) -> UndirectedGraph {
    make_topology(Topology::Ring, n).unwrap()
}

fn scalar_problem(a: f64, b: f64) -> (PartitionedLae, AgentNetwork) {
    let pl = partition_problem(
        LaeProblem::new(DenseMatrix::from_rows(&[&[a]]), vec![b]).unwrap(),
        &[1],
        &[1],
        1,
        BSplitRule::Equal,
    )
    .unwrap();
    let net = AgentNetwork::new(&pl, &ring(1), &ring(1)).unwrap();
    (pl, net)
}

/// Random instance with `p` agents of `rows` rows each and `q` portions of
/// size at most 2.
fn instance(p: usize, q: usize, rows: usize, cols: &[usize], vals: &[f64]) -> (PartitionedLae, AgentNetwork) {
    let m = p * rows;
    let n: usize = cols.iter().sum();
    let a = DenseMatrix::from_fn(m, n, |i, j| vals[(i * n + j) % vals.len()]);
    let b = (0..m).map(|i| vals[(7 * i + 3) % vals.len()]).collect();
    let pl = partition_problem(LaeProblem::new(a, b).unwrap(), &vec![rows; p], cols, 2, BSplitRule::Equal).unwrap();
    let net = AgentNetwork::new(&pl, &ring(p), &ring(q)).unwrap();
    (pl, net)
}

fn instance_strategy() -> impl Strategy<Value = (usize, usize, usize, Vec<usize>, Vec<f64>)> {
    (1usize..=3, 1usize..=3, 1usize..=3).prop_flat_map(|(p, q, rows)| {
        (
            Just(p),
            Just(q),
            Just(rows),
            prop::collection::vec(1usize..=2, q),
            prop::collection::vec(-1.0f64..1.0, 7..40),
        )
    })
}

#[test]
fn scheduled_portion_examples() {
    assert_eq!(scheduled_portion(0, 3), 1);
    assert_eq!(scheduled_portion(5, 3), 3);
    assert_eq!(scheduled_portion(7, 1), 1);
    let mut s = SchedulerState::new(2);
    assert_eq!(s.portion(), 1);
    s.advance();
    assert_eq!(s.portion(), 2);
}

#[test]
fn init_splits_observation() {
    let pl = partition_problem(
        LaeProblem::new(DenseMatrix::from_rows(&[&[1.0, 2.0]]), vec![6.0]).unwrap(),
        &[1],
        &[1, 1],
        1,
        BSplitRule::Equal,
    )
    .unwrap();
    let s = init_agents(&pl);
    assert_eq!(s.y_ij(0, 0), &[-3.0]);
    assert_eq!(s.y_ij(0, 1), &[-3.0]);
    assert!(s.x(0).iter().chain(&s.agents()[0].z).all(|&v| v == 0.0));
}

#[test]
fn single_agent_hand_recurrence() {
    let (pl, net) = scalar_problem(2.0, 6.0);
    let gains = Gains::new(25.0, 5.0, 0.1).unwrap();
    let mut s = init_agents(&pl);
    let mut xs = Vec::new();
    for k in 0..200 {
        let inbox = broadcast_scheduled(&net, &s, k);
        s = step_sdls(&net, &s, &inbox, &gains, k).unwrap();
        xs.push((s.x(0)[0], s.y_ij(0, 0)[0]));
    }
    assert!((xs[0].0 - 1.2).abs() < 1e-15 && (xs[0].1 + 3.6).abs() < 1e-15);
    assert!((xs[1].0 - 1.92).abs() < 1e-15 && (xs[1].1 + 2.16).abs() < 1e-15);
    assert!((xs[199].0 - 3.0).abs() < 1e-12);
}

#[test]
fn full_law_single_agent_matches_hand_recurrence() {
    let (pl, net) = scalar_problem(2.0, 6.0);
    let gains = Gains::new(1.0, 1.0, 0.1).unwrap();
    let s = init_agents(&pl);
    let s = step_full(&net, &s, &broadcast_all(&net, &s), &gains).unwrap();
    assert!((s.x(0)[0] - 1.2).abs() < 1e-15);
    let s = step_full(&net, &s, &broadcast_all(&net, &s), &gains).unwrap();
    assert!((s.x(0)[0] - 1.92).abs() < 1e-15);
}

#[test]
fn zero_observation_is_stationary() {
    let (pl, net) = instance(2, 2, 2, &[1, 2], &[0.3, -0.7, 1.1, 0.2, -0.4]);
    let pl = pl.with_observation(vec![0.0; 4]).unwrap();
    let gains = Gains::new(2.0, 1.0, 0.05).unwrap();
    let s0 = init_agents(&pl);
    let s1 = step_full(&net, &s0, &broadcast_all(&net, &s0), &gains).unwrap();
    assert_eq!(s0, s1);
}

#[test]
fn consensus_fixed_point_is_stationary() {
    // A = [1; 1], b = (2, 2): unique LS solution 2 with zero residual.
    let pl = partition_problem(
        LaeProblem::new(DenseMatrix::from_rows(&[&[1.0], &[1.0]]), vec![2.0, 2.0]).unwrap(),
        &[1, 1],
        &[1],
        1,
        BSplitRule::Equal,
    )
    .unwrap();
    let net = AgentNetwork::new(&pl, &ring(2), &ring(1)).unwrap();
    let fixed = AgentVars {
        x: vec![2.0],
        y: vec![0.0],
        z: vec![0.0],
    };
    let s = AgentState::from_parts(vec![0, 1], vec![fixed.clone(), fixed]);
    let gains = Gains::new(3.0, 2.0, 0.1).unwrap();
    let next = step_sdls(&net, &s, &broadcast_scheduled(&net, &s, 0), &gains, 0).unwrap();
    assert_eq!(next, s);
}

#[test]
fn schedule_gates_diffusion() {
    let (pl, net) = instance(3, 2, 1, &[1, 1], &[0.5, -0.2, 0.9, 0.1, -1.0, 0.4]);
    let gains = Gains::new(2.0, 1.0, 0.05).unwrap();
    let mut s = init_agents(&pl);
    // Give agents distinct estimates so diffusion is visible.
    for (i, a) in s.agents_mut().iter_mut().enumerate() {
        a.x = vec![i as f64, -(i as f64)];
    }
    let next = step_sdls(&net, &s, &broadcast_scheduled(&net, &s, 0), &gains, 0).unwrap();
    for i in 0..3 {
        assert_eq!(next.z_ij(i, 1), s.z_ij(i, 1), "portion 2 z must stay frozen");
    }
    assert!((0..3).any(|i| next.z_ij(i, 0) != s.z_ij(i, 0)));
}

#[test]
fn inbox_validation() {
    let (pl, net) = instance(3, 2, 1, &[1, 1], &[0.5, -0.2, 0.9, 0.1]);
    let gains = Gains::new(1.0, 1.0, 0.05).unwrap();
    let s = init_agents(&pl);
    let good = broadcast_scheduled(&net, &s, 0);
    assert!(step_sdls(&net, &s, &good, &gains, 0).is_ok());

    let mut missing = good.clone();
    missing[0].pop();
    assert!(matches!(step_sdls(&net, &s, &missing, &gains, 0), Err(ProtocolError::MissingMessage { .. })));

    let mut extra = good.clone();
    let dup = extra[0][0].clone();
    extra[0].push(dup);
    assert!(matches!(step_sdls(&net, &s, &extra, &gains, 0), Err(ProtocolError::UnexpectedMessage { .. })));

    // Scheduled portion at k = 1 is portion 2, so the k = 0 inbox is wrong.
    assert!(matches!(step_sdls(&net, &s, &good, &gains, 1), Err(ProtocolError::UnexpectedMessage { .. })));

    let mut long = good.clone();
    long[1][0].payload.push(0.0);
    assert!(matches!(step_sdls(&net, &s, &long, &gains, 0), Err(ProtocolError::PayloadLength { .. })));

    assert!(step_full(&net, &s, &good, &gains).is_err());
}

#[test]
fn scheduled_broadcast_respects_bandwidth() {
    let (pl, net) = instance(3, 3, 1, &[2, 1, 2], &[0.5, -0.2, 0.9, 0.1]);
    let s = init_agents(&pl);
    for k in 0..6 {
        let inbox = broadcast_scheduled(&net, &s, k);
        for (i, msgs) in inbox.iter().enumerate() {
            assert_eq!(msgs.len(), net.neighbors(i).len(), "one portion per neighbor");
            for msg in msgs {
                assert!(msg.payload.len() <= net.bandwidth());
                assert_eq!(msg.portion, scheduled_portion(k, 3));
            }
        }
    }
}

#[test]
fn kernel_reads_only_neighbors_and_scheduled_portion() {
    let p = 5;
    let (pl, net) = instance(p, 3, 1, &[1, 2, 1], &[0.5, -0.2, 0.9, 0.1, 0.3]);
    let gains = Gains::new(1.0, 1.0, 0.05).unwrap();
    let s = init_agents(&pl);
    for k in 0..3 {
        for i in 0..p {
            let reads = RefCell::new(Vec::new());
            let mut next = s.agents()[i].clone();
            sdls_agent_update(
                &net,
                i,
                &s.agents()[i],
                &mut next,
                &gains,
                Some(k),
                |l, j| {
                    reads.borrow_mut().push((l, j));
                    s.x_ij(l, j)
                },
                None,
            );
            for (l, j) in reads.into_inner() {
                assert!(net.neighbors(i).contains(&l), "agent {i} read non-neighbor {l}");
                assert_eq!(j, k, "agent {i} read an unscheduled portion");
            }
        }
    }
}

#[test]
fn prefilter_examples() {
    let step: Vec<Vec<f64>> = (0..4).map(|k| vec![if k >= 1 { 1.0 } else { 0.0 }]).collect();
    let f = lowpass_prefilter(&step, 0.5).unwrap();
    assert_eq!(f, vec![vec![0.0], vec![0.5], vec![0.75], vec![0.875]]);
    assert_eq!(lowpass_prefilter(&step, 1.0).unwrap(), step);
    let c = vec![vec![2.5, -1.0]; 5];
    assert_eq!(lowpass_prefilter(&c, 0.3).unwrap(), c);
    assert!(matches!(lowpass_prefilter(&c, 0.0), Err(ProtocolError::InvalidBeta(_))));
    assert!(lowpass_prefilter(&c, 1.5).is_err());
}

#[test]
fn baseline_single_agent_examples() {
    let (pl, net) = scalar_problem(2.0, 6.0);
    let gains = Gains::new(25.0, 5.0, 0.1).unwrap();
    let b = [6.0];

    let s = init_baseline(BaselineKind::AhuFlow, &pl);
    let s = step_baseline(BaselineKind::AhuFlow, &net, &s, &broadcast_full_packets(&net, &s), &gains, &b).unwrap();
    assert!((s.x(0)[0] - 1.2).abs() < 1e-15);

    // Without neighbors the PI law is local gradient descent.
    let mut s = init_baseline(BaselineKind::ConsensusProjectionPi, &pl);
    let mut x = 0.0;
    for _ in 0..5 {
        s = step_baseline(BaselineKind::ConsensusProjectionPi, &net, &s, &broadcast_full_packets(&net, &s), &gains, &b)
            .unwrap();
        x -= 0.1 * 2.0 * (2.0 * x - 6.0);
        assert_eq!(s.x(0)[0], x);
    }

    let s0 = init_baseline(BaselineKind::DoubleLayer, &pl);
    let s1 = step_baseline(BaselineKind::DoubleLayer, &net, &s0, &broadcast_full_packets(&net, &s0), &gains, &b)
        .unwrap();
    assert_eq!(s1.x(0)[0], 0.0 - 0.1 * 2.0 * -6.0);

    let gt = init_baseline(BaselineKind::GradientTracking, &pl);
    assert_eq!(gt.agents()[0].z, vec![-12.0]);
}

#[test]
fn baselines_converge_on_small_instance() {
    let a = DenseMatrix::from_rows(&[&[2.0, 0.3], &[0.1, 1.5], &[1.0, -1.0], &[0.4, 0.9]]);
    let b = vec![1.0, -2.0, 0.5, 3.0];
    let x_star = crate::problem::centralized_ls(&LaeProblem::new(a.clone(), b.clone()).unwrap()).unwrap();
    let pl = partition_problem(LaeProblem::new(a, b.clone()).unwrap(), &[1, 1, 1, 1], &[1, 1], 1, BSplitRule::Equal)
        .unwrap();
    let net = AgentNetwork::new(&pl, &ring(4), &ring(2)).unwrap();
    for (kind, gains, iters) in [
        (BaselineKind::ConsensusProjectionPi, Gains::new(2.0, 1.0, 0.05).unwrap(), 40_000),
        // Euler on this flow is stable only for α·k_P well below 0.01 here.
        (BaselineKind::AhuFlow, Gains::new(0.2, 1.0, 0.02).unwrap(), 200_000),
        (BaselineKind::GradientTracking, Gains::new(1.0, 1.0, 0.05).unwrap(), 40_000),
        (BaselineKind::DoubleLayer, Gains::new(4.0, 1.0, 0.05).unwrap(), 40_000),
    ] {
        let mut s = init_baseline(kind, &pl);
        for _ in 0..iters {
            s = step_baseline(kind, &net, &s, &broadcast_full_packets(&net, &s), &gains, &b).unwrap();
        }
        for i in 0..4 {
            let err = s.x(i).iter().zip(&x_star).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "{kind:?} agent {i} error {err}");
        }
    }
}

#[test]
fn snapshot_round_trip() {
    let (pl, net) = instance(3, 2, 2, &[2, 1], &[0.5, -0.2, 0.9, 0.1, 1.0 / 3.0]);
    let gains = Gains::new(1.0, 1.0, 0.05).unwrap();
    let mut s = init_agents(&pl);
    for k in 0..7 {
        s = step_sdls(&net, &s, &broadcast_scheduled(&net, &s, k), &gains, k).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    write_snapshot(&s, dir.path()).unwrap();
    assert_eq!(read_snapshot(dir.path(), 3, pl.col_offsets()).unwrap(), s);

    let gt = init_baseline(BaselineKind::GradientTracking, &pl);
    let dir = tempfile::tempdir().unwrap();
    write_snapshot(&gt, dir.path()).unwrap();
    assert_eq!(read_snapshot(dir.path(), 3, pl.col_offsets()).unwrap(), gt);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn single_portion_scheduled_equals_full(
        (p, _q, rows, _cols, vals) in instance_strategy(),
        n in 1usize..=2,
    ) {
        let (pl, net) = instance(p, 1, rows, &[n], &vals);
        let gains = Gains::new(2.0, 1.5, 0.05).unwrap();
        let mut a = init_agents(&pl);
        let mut b = a.clone();
        for k in 0..1000 {
            a = step_sdls(&net, &a, &broadcast_scheduled(&net, &a, k), &gains, k).unwrap();
            b = step_full(&net, &b, &broadcast_all(&net, &b), &gains).unwrap();
            prop_assert_eq!(&a, &b);
        }
    }

    #[test]
    fn zero_increment_tracking_equals_static((p, q, rows, cols, vals) in instance_strategy()) {
        let (pl, net) = instance(p, q, rows, &cols, &vals);
        let gains = Gains::new(2.0, 1.5, 0.05).unwrap();
        let zero: Vec<Vec<Vec<f64>>> = (0..p).map(|_| vec![vec![0.0; rows]; q]).collect();
        let mut a = init_agents(&pl);
        let mut b = a.clone();
        for k in 0..300 {
            a = step_sdls(&net, &a, &broadcast_scheduled(&net, &a, k), &gains, k).unwrap();
            b = step_tracking(&net, &b, &broadcast_scheduled(&net, &b, k), &gains, k, &zero).unwrap();
            prop_assert_eq!(&a, &b);
        }
    }

    #[test]
    fn agent_law_matches_lifted_recursion((p, q, rows, cols, vals) in instance_strategy()) {
        let (pl, net) = instance(p, q, rows, &cols, &vals);
        let aug = build_augmented(&pl, &ring(p), &ring(q)).unwrap();
        let gains = Gains::new(2.0, 1.5, 0.05).unwrap();
        let mats = build_matrices(&aug, &gains).unwrap();
        let mut agents = init_agents(&pl);
        let mut s = vec![0.0; aug.state_dim()];
        for k in 0..200 {
            agents = step_sdls(&net, &agents, &broadcast_scheduled(&net, &agents, k), &gains, k).unwrap();
            s = lifted_step(&mats, &s, k, &aug.b_hat);
            let lifted = unstack_lifted(&aug, &mats, &s, &aug.b_hat);
            let direct = stack_agent_state(&aug, &agents);
            let gap = lifted.max_abs_diff(&direct);
            prop_assert!(gap <= 1e-12, "step {}: gap {}", k, gap);
        }
    }
}
