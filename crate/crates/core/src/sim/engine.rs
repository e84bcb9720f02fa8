use rayon::prelude::*;

use crate::graph::{GraphSpec, UndirectedGraph};
use crate::linalg::{pseudo_inverse, DenseMatrix};
use crate::problem::{
    alpha_max_report, build_augmented, partition_problem, read_bundle, AlphaMaxReport, Gains, PartitionedLae,
    ProblemError,
};
use crate::protocols::{
    baseline_agent_update, init_agents, init_baseline, sdls_agent_update, AgentNetwork, AgentState,
};

use super::config::{AlphaChoice, ProblemSource, RunConfig};
use super::generate::generate_random_problem;
use super::log::{AlphaSource, MetricsLog, MetricsRow, RunMetadata, StopReason};
use super::metrics::{comm_cycles_per_iteration, mean_residual, metric_e1, metric_e2, Algorithm};
use super::rng::derive_seed;
use super::signal::ObservationStream;
use super::SimError;

/// Cap applied to `0.5·α_max` when the step size is `"auto"`.
pub const AUTO_ALPHA_CAP: f64 = 0.01;

const SIGNAL_STREAM: u64 = 0x5349_474E;

/// A config with its problem loaded, graphs built and step size resolved.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    /// The config with bundle graphs and defaults filled in.
    pub config: RunConfig,
    pub pl: PartitionedLae,
    pub g: UndirectedGraph,
    pub g_c: UndirectedGraph,
    pub net: AgentNetwork,
    pub gains: Gains,
    pub alpha_source: AlphaSource,
    pub analysis: Option<AlphaMaxReport>,
    /// `A†`, mapping observations to the minimal-norm LS solution.
    pub pinv: DenseMatrix,
}

impl PreparedRun {
    pub fn cycles_per_iteration(&self) -> u64 {
        comm_cycles_per_iteration(self.config.algorithm, self.pl.n(), self.pl.bandwidth(), self.pl.q())
    }
}

/// Loads (or generates) the partitioned problem and its graphs.
pub fn load_problem(cfg: &RunConfig) -> Result<(PartitionedLae, GraphSpec, GraphSpec), SimError> {
    match &cfg.problem {
        ProblemSource::Bundle { path } => {
            let bundle = read_bundle(path)?;
            let pl = bundle.partitioned()?;
            let g = cfg.graph.clone().unwrap_or(bundle.partition.graph);
            let g_c = cfg.graph_c.clone().unwrap_or(bundle.partition.graph_c);
            Ok((pl, g, g_c))
        }
        ProblemSource::Generate(spec) => {
            let problem = generate_random_problem(spec.m, spec.n, spec.seed.unwrap_or(cfg.seed), spec.conditioning)?;
            let pl = partition_problem(problem, &spec.row_sizes(), &spec.col_sizes(), spec.bandwidth, spec.b_split_rule)?;
            let g = cfg.graph.clone().unwrap_or(GraphSpec::Named {
                kind: crate::graph::Topology::Ring,
                n: pl.p(),
            });
            let g_c = cfg.graph_c.clone().unwrap_or(GraphSpec::default_portion_graph(pl.q()));
            Ok((pl, g, g_c))
        }
    }
}

pub fn prepare_run(cfg: &RunConfig) -> Result<PreparedRun, SimError> {
    cfg.validate()?;
    let (pl, g_spec, gc_spec) = load_problem(cfg)?;
    let g = g_spec.build().map_err(ProblemError::from)?;
    let g_c = gc_spec.build().map_err(ProblemError::from)?;
    let net = AgentNetwork::new(&pl, &g, &g_c)?;

    let mut config = cfg.clone();
    config.graph = Some(g_spec);
    config.graph_c = Some(gc_spec);

    let scheduled_family = cfg.algorithm.baseline().is_none();
    let needs_bound = scheduled_family && !(cfg.force_alpha && matches!(cfg.gains.alpha, AlphaChoice::Value(_)));
    let analysis = if needs_bound {
        let aug = build_augmented(&pl, &g, &g_c)?;
        // α only enters Φ(α), not the bound itself.
        let probe = Gains::new(cfg.gains.k_p, cfg.gains.k_i, 1.0)?;
        Some(alpha_max_report(&aug, &probe)?)
    } else {
        None
    };

    let (alpha, alpha_source) = match (cfg.gains.alpha, &analysis) {
        (AlphaChoice::Auto, Some(r)) => (AUTO_ALPHA_CAP.min(0.5 * r.alpha_max), AlphaSource::Auto),
        (AlphaChoice::Auto, None) => (AUTO_ALPHA_CAP, AlphaSource::Auto),
        (AlphaChoice::Value(a), Some(r)) => {
            let bound = r.alpha_max.min(1.0);
            if !(a < bound) {
                return Err(SimError::AlphaAboveBound { alpha: a, bound });
            }
            (a, AlphaSource::Checked)
        }
        (AlphaChoice::Value(a), None) => (a, AlphaSource::Unchecked),
    };
    let gains = Gains::new(cfg.gains.k_p, cfg.gains.k_i, alpha)?;
    let pinv = pseudo_inverse(pl.problem().a(), 1e-10)?;

    Ok(PreparedRun {
        config,
        pl,
        g,
        g_c,
        net,
        gains,
        alpha_source,
        analysis,
        pinv,
    })
}

pub fn run_simulation(cfg: &RunConfig) -> Result<MetricsLog, SimError> {
    run_prepared(&prepare_run(cfg)?)
}

fn max_change(a: &AgentState, b: &AgentState) -> f64 {
    let mut worst: f64 = 0.0;
    for (u, v) in a.agents().iter().zip(b.agents()) {
        for (p, q) in u.x.iter().chain(&u.y).chain(&u.z).zip(v.x.iter().chain(&v.y).chain(&v.z)) {
            worst = worst.max((p - q).abs());
        }
    }
    worst
}

/// Per-agent, per-portion `b_ij(k+1) − b_ij(k)`.
fn split_delta(pl: &PartitionedLae, next: &[f64], cur: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let a = pl.split_observation(next);
    let b = pl.split_observation(cur);
    a.into_iter()
        .zip(b)
        .map(|(ai, bi)| {
            ai.into_iter()
                .zip(bi)
                .map(|(x, y)| x.iter().zip(&y).map(|(u, v)| u - v).collect())
                .collect()
        })
        .collect()
}

pub fn run_prepared(prep: &PreparedRun) -> Result<MetricsLog, SimError> {
    let cfg = &prep.config;
    let pl = &prep.pl;
    let net = &prep.net;
    let gains = &prep.gains;
    let alg = cfg.algorithm;
    let baseline = alg.baseline();
    let cycles = prep.cycles_per_iteration();
    let a = pl.problem().a().as_slice();
    let n = pl.n();

    let mut cur = match baseline {
        Some(kind) => init_baseline(kind, pl),
        None => init_agents(pl),
    };
    let mut next = cur.clone();
    let mut signal = ObservationStream::new(&cfg.signal, pl.problem().b(), derive_seed(cfg.seed, SIGNAL_STREAM))?;
    let tracking = !cfg.signal.is_static();
    let mut x_star = prep.pinv.matvec(signal.current());

    let row_offsets = pl.row_offsets().to_vec();
    let scheduled = |k: usize| match alg {
        Algorithm::Sdls => Some(k % pl.q()),
        _ => None,
    };

    let record = |k: usize, state: &AgentState, x_star: &[f64], b: &[f64]| MetricsRow {
        k,
        cycles: k as u64 * cycles,
        e1: metric_e1(state, x_star),
        e2: metric_e2(state),
        residual: mean_residual(a, n, b, state),
    };

    let mut rows = vec![record(0, &cur, &x_star, signal.current())];
    let mut calm = 0usize;
    let mut stop_reason = StopReason::KMax;
    let mut iterations = cfg.k_max;
    let stop = cfg.stop;

    if stop.e1_threshold.is_some_and(|t| rows[0].e1 <= t) {
        stop_reason = StopReason::Threshold;
        iterations = 0;
    } else {
        for k in 0..cfg.k_max {
            let delta_b = if tracking {
                let before = signal.current().to_vec();
                let after = signal.advance().to_vec();
                Some(split_delta(pl, &after, &before))
            } else {
                None
            };
            let sched = scheduled(k);
            let b = pl.problem().b();
            let update = |i: usize, nx: &mut crate::protocols::AgentVars| {
                let me = &cur.agents()[i];
                match baseline {
                    None => sdls_agent_update(
                        net,
                        i,
                        me,
                        nx,
                        gains,
                        sched,
                        |l, j| cur.x_ij(l, j),
                        delta_b.as_ref().map(|d| d[i].as_slice()),
                    ),
                    Some(kind) => baseline_agent_update(
                        kind,
                        net,
                        i,
                        &b[row_offsets[i]..row_offsets[i + 1]],
                        me,
                        nx,
                        gains,
                        |l| (cur.x(l), cur.agents()[l].z.as_slice()),
                    ),
                }
            };
            if cfg.parallel {
                next.agents_mut().par_iter_mut().enumerate().for_each(|(i, nx)| update(i, nx));
            } else {
                next.agents_mut().iter_mut().enumerate().for_each(|(i, nx)| update(i, nx));
            }

            if tracking {
                x_star = prep.pinv.matvec(signal.current());
            }
            // e1 drives the guards every iteration; e2 and the residual are
            // only evaluated when the stop rule or the log needs them.
            let e1 = metric_e1(&next, &x_star);
            if !e1.is_finite() || e1 > stop.divergence {
                return Err(SimError::Diverged { k: k + 1, e1 });
            }
            let mut e2 = None;
            if stop.converge {
                let v = metric_e2(&next);
                e2 = Some(v);
                calm = if v < stop.e2_tol && max_change(&cur, &next) < stop.delta_tol { calm + 1 } else { 0 };
            }
            std::mem::swap(&mut cur, &mut next);

            let last = k + 1 == cfg.k_max;
            let hit = stop.e1_threshold.is_some_and(|t| e1 <= t);
            let settled = stop.converge && calm >= stop.patience;
            if (k + 1) % cfg.record_stride == 0 || last || hit || settled {
                rows.push(MetricsRow {
                    k: k + 1,
                    cycles: (k + 1) as u64 * cycles,
                    e1,
                    e2: e2.unwrap_or_else(|| metric_e2(&cur)),
                    residual: mean_residual(a, n, signal.current(), &cur),
                });
            }
            if hit || settled {
                stop_reason = if hit { StopReason::Threshold } else { StopReason::Converged };
                iterations = k + 1;
                break;
            }
        }
    }

    let analysis = prep.analysis.as_ref();
    let discretization = match alg {
        Algorithm::Sdls => "scheduled discrete law",
        Algorithm::Full => "full-state discrete law (explicit Euler of the continuous flow)",
        Algorithm::DoubleLayer => "discrete primal-dual law",
        _ => "explicit Euler",
    };
    let meta = RunMetadata {
        config: cfg.clone(),
        alpha: gains.alpha,
        alpha_source: prep.alpha_source,
        alpha_max: analysis.map(|r| r.alpha_max),
        cond_v: analysis.map(|r| r.cond_v),
        diagonalizable: analysis.map(|_| true),
        discretization: discretization.into(),
        cycles_per_iteration: cycles,
        iterations,
        stop_reason,
        reference: if tracking {
            "minimal-norm LS solution of b(k)".into()
        } else {
            "minimal-norm LS solution".into()
        },
        m: pl.m(),
        n: pl.n(),
        p: pl.p(),
        q: pl.q(),
        bandwidth: pl.bandwidth(),
    };
    Ok(MetricsLog { rows, meta })
}
