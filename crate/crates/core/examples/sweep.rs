//! Cycles needed by the scheduled law and by gradient tracking to reach
//! `e₁ ≤ 1e-4` as the number of unknowns grows at fixed bandwidth.
//!
//! `cargo run --release --example sweep -- 8 16 32`

use sdls::graph::{GraphSpec, Topology};
use sdls::problem::BSplitRule;
use sdls::sim::{
    best_per_algorithm, run_comparison, AlphaChoice, Algorithm, Conditioning, GainSpec, GeneratorSpec,
    ProblemSource, RunConfig,
};

const BANDWIDTH: usize = 4;
const AGENTS: usize = 8;
const BUDGET: u64 = 400_000;

fn configs(n: usize) -> Vec<RunConfig> {
    let source = ProblemSource::Generate(GeneratorSpec {
        m: 64,
        n,
        seed: Some(2024),
        conditioning: Conditioning::Gaussian,
        agents: AGENTS,
        bandwidth: BANDWIDTH,
        row_sizes: None,
        col_sizes: None,
        b_split_rule: BSplitRule::Equal,
    });
    let grid = [
        (Algorithm::Sdls, &[1.0, 5.0][..], &[1.0, 4.0][..], &[0.01, 0.05][..]),
        (Algorithm::GradientTracking, &[1.0][..], &[0.5][..], &[0.01, 0.03][..]),
    ];
    let mut out = Vec::new();
    for (alg, kps, kis, alphas) in grid {
        for &k_p in kps {
            for &k_i in kis {
                for &a in alphas {
                    let mut c = RunConfig::new(source.clone(), alg);
                    c.gains = GainSpec { k_p, k_i, alpha: AlphaChoice::Value(a) };
                    c.force_alpha = true;
                    c.graph = Some(GraphSpec::Named { kind: Topology::Ring, n: AGENTS });
                    c.graph_c = Some(GraphSpec::Named { kind: Topology::Ring, n: n.div_ceil(BANDWIDTH) });
                    c.record_stride = usize::MAX;
                    out.push(c);
                }
            }
        }
    }
    out
}

fn main() {
    let ns: Vec<usize> = std::env::args()
        .skip(1)
        .map(|s| s.parse().expect("n must be an integer"))
        .collect();
    let ns = if ns.is_empty() { vec![8, 16] } else { ns };
    println!("n,algorithm,k_p,k_i,alpha,cycles");
    for n in ns {
        let rows = run_comparison(&configs(n), BUDGET, 1e-4).expect("comparison runs");
        for r in best_per_algorithm(&rows) {
            let cycles = r.cycles_to_threshold.map_or("-".to_string(), |c| c.to_string());
            println!("{n},{},{},{},{},{cycles}", r.algorithm.name(), r.k_p, r.k_i, r.alpha);
        }
    }
}
