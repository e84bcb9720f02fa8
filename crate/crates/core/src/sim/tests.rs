use super::*;
use crate::graph::{GraphSpec, Topology};
use crate::problem::{write_bundle, BSplitRule, PartitionSpec, ProblemBundle};

fn generated(m: usize, n: usize, agents: usize, bandwidth: usize, seed: u64) -> ProblemSource {
    ProblemSource::Generate(GeneratorSpec {
        m,
        n,
        seed: Some(seed),
        conditioning: Conditioning::Gaussian,
        agents,
        bandwidth,
        row_sizes: None,
        col_sizes: None,
        b_split_rule: BSplitRule::Equal,
    })
}

fn small_config(alg: Algorithm) -> RunConfig {
    let mut c = RunConfig::new(generated(12, 4, 3, 2, 5), alg);
    c.gains = GainSpec { k_p: 2.0, k_i: 1.0, alpha: AlphaChoice::Value(0.02) };
    c.force_alpha = true;
    c.k_max = 3000;
    c
}

#[test]
fn runs_are_deterministic_and_parallel_mode_matches() {
    let cfg = small_config(Algorithm::Sdls);
    let a = run_simulation(&cfg).unwrap();
    let b = run_simulation(&cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    let mut par = cfg.clone();
    par.parallel = true;
    assert_eq!(run_simulation(&par).unwrap().to_csv(), a.to_csv());
}

#[test]
fn cycles_follow_cost_model() {
    for alg in [Algorithm::Sdls, Algorithm::GradientTracking, Algorithm::DoubleLayer, Algorithm::Full] {
        let mut cfg = small_config(alg);
        cfg.k_max = 50;
        cfg.record_stride = 7;
        let log = run_simulation(&cfg).unwrap();
        let per = comm_cycles_per_iteration(alg, 4, 2, 2);
        assert_eq!(log.meta.cycles_per_iteration, per);
        for row in &log.rows {
            assert_eq!(row.cycles, row.k as u64 * per);
        }
        assert!(log.rows.windows(2).all(|w| w[0].k < w[1].k && w[0].cycles <= w[1].cycles));
        assert_eq!(log.last().k, 50);
    }
}

#[test]
fn single_portion_scheduled_and_full_logs_agree() {
    let mut s = RunConfig::new(generated(9, 3, 3, 3, 2), Algorithm::Sdls);
    s.gains = GainSpec { k_p: 3.0, k_i: 1.0, alpha: AlphaChoice::Value(0.02) };
    s.force_alpha = true;
    s.k_max = 2000;
    let mut f = s.clone();
    f.algorithm = Algorithm::Full;
    let (a, b) = (run_simulation(&s).unwrap(), run_simulation(&f).unwrap());
    assert_eq!(a.rows, b.rows);
}

#[test]
fn auto_step_size_converges_to_oracle() {
    let mut cfg = RunConfig::new(generated(12, 4, 3, 4, 11), Algorithm::Sdls);
    cfg.gains.k_p = 2.0;
    cfg.gains.k_i = 1.0;
    let log = run_simulation(&cfg).unwrap();
    assert_eq!(log.meta.alpha_source, AlphaSource::Auto);
    let bound = log.meta.alpha_max.unwrap();
    assert!(log.meta.alpha <= AUTO_ALPHA_CAP && log.meta.alpha <= 0.5 * bound + 1e-18);
    assert!(log.last().e1 < 1e-8, "final e1 {} alpha {} bound {} it {} {:?}", log.last().e1, log.meta.alpha, bound, log.meta.iterations, log.meta.stop_reason);
    assert_eq!(log.meta.stop_reason, StopReason::Converged);
}

#[test]
fn explicit_step_size_is_checked() {
    let mut cfg = small_config(Algorithm::Sdls);
    cfg.gains.alpha = AlphaChoice::Value(0.9);
    cfg.force_alpha = false;
    assert!(matches!(run_simulation(&cfg), Err(SimError::AlphaAboveBound { .. })));
}

#[test]
fn divergence_is_reported() {
    let mut cfg = small_config(Algorithm::Sdls);
    cfg.gains.alpha = AlphaChoice::Value(0.9);
    let err = run_simulation(&cfg).unwrap_err();
    assert!(matches!(err, SimError::Diverged { .. }), "{err}");
    assert!(err.is_numerical());
}

#[test]
fn decaying_ramp_is_tracked_to_zero_error() {
    let mut cfg = small_config(Algorithm::Sdls);
    cfg.signal = SignalSpec::Ramp { step_norm: 0.01, decay: Some(0.999) };
    cfg.k_max = 40_000;
    cfg.stop.converge = false;
    let log = run_simulation(&cfg).unwrap();
    assert!(log.last().e1 < 1e-6, "final e1 {}", log.last().e1);
}

#[test]
fn baselines_need_a_static_signal() {
    let mut cfg = small_config(Algorithm::GradientTracking);
    cfg.signal = SignalSpec::Sinusoid { amplitude: 1.0, omega: 0.1, phase: 0.0 };
    assert!(matches!(run_simulation(&cfg), Err(SimError::Config(_))));
}

#[test]
fn threshold_and_comparison() {
    let base = small_config(Algorithm::Sdls);
    let mut gt = base.clone();
    gt.algorithm = Algorithm::GradientTracking;
    gt.gains = GainSpec { k_p: 1.0, k_i: 1.0, alpha: AlphaChoice::Value(0.05) };
    let rows = run_comparison(&[base.clone(), gt], 1_000_000, 1e-4).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.outcome == Outcome::Reached), "{rows:?}");

    let starved = run_comparison(&[base.clone()], 3, 1e-4).unwrap();
    assert_eq!(starved[0].outcome, Outcome::OverBudget);
    let csv = comparison_csv(&starved, 3);
    assert!(csv.lines().nth(1).unwrap().contains(">3"), "{csv}");

    let mut other = base.clone();
    other.problem = generated(12, 4, 3, 2, 6);
    assert!(run_comparison(&[base, other], 10, 1e-4).is_err());
}

#[test]
fn best_rows_pick_fewest_cycles() {
    let row = |alg, c: Option<u64>| ComparisonRow {
        algorithm: alg,
        alpha: 0.1,
        k_p: 1.0,
        k_i: 1.0,
        cycles_per_iteration: 1,
        cycles_to_threshold: c,
        outcome: if c.is_some() { Outcome::Reached } else { Outcome::OverBudget },
    };
    let rows = [
        row(Algorithm::Sdls, None),
        row(Algorithm::GradientTracking, Some(40)),
        row(Algorithm::Sdls, Some(90)),
        row(Algorithm::Sdls, Some(70)),
    ];
    let best = best_per_algorithm(&rows);
    assert_eq!(best.len(), 2);
    assert_eq!(best[0].cycles_to_threshold, Some(70));
}

#[test]
fn bundle_source_and_sidecar_replay() {
    let problem = generate_random_problem(8, 4, 3, Conditioning::Gaussian).unwrap();
    let bundle = ProblemBundle {
        problem,
        partition: PartitionSpec {
            row_sizes: vec![4, 4],
            col_sizes: vec![2, 2],
            bandwidth: 2,
            b_split_rule: BSplitRule::Equal,
            graph: GraphSpec::Named { kind: Topology::Path, n: 2 },
            graph_c: GraphSpec::default_portion_graph(2),
        },
    };
    let dir = tempfile::tempdir().unwrap();
    write_bundle(&bundle, dir.path().join("prob")).unwrap();
    let mut cfg = RunConfig::new(ProblemSource::Bundle { path: dir.path().join("prob") }, Algorithm::Sdls);
    cfg.gains = GainSpec { k_p: 2.0, k_i: 1.0, alpha: AlphaChoice::Value(0.02) };
    cfg.force_alpha = true;
    cfg.k_max = 500;
    let log = run_simulation(&cfg).unwrap();
    let csv = dir.path().join("out/metrics.csv");
    log.write(&csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "k,cycles,e1,e2,residual");
    let meta: RunMetadata = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&csv)).unwrap()).unwrap();
    assert_eq!(meta.config.graph, Some(GraphSpec::Named { kind: Topology::Path, n: 2 }));
    assert_eq!(run_simulation(&meta.config).unwrap().to_csv(), text);
}
