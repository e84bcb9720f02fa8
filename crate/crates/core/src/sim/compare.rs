use serde::Serialize;

use super::config::RunConfig;
use super::engine::{prepare_run, run_prepared};
use super::metrics::Algorithm;
use super::SimError;

/// Threshold on `e₁` used when none is given.
pub const DEFAULT_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Reached,
    /// Budget exhausted (or the run stalled) above the threshold.
    OverBudget,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub k_p: f64,
    pub k_i: f64,
    pub cycles_per_iteration: u64,
    pub cycles_to_threshold: Option<u64>,
    pub outcome: Outcome,
}

/// Runs every config on the shared instance until `e₁ ≤ threshold` or the
/// cycle budget is spent.
pub fn run_comparison(cfgs: &[RunConfig], budget_cycles: u64, threshold: f64) -> Result<Vec<ComparisonRow>, SimError> {
    if let Some(first) = cfgs.first() {
        if cfgs.iter().any(|c| c.problem != first.problem || c.seed != first.seed) {
            return Err(SimError::Config("compared configs must share one problem instance".into()));
        }
    }
    let mut rows = Vec::with_capacity(cfgs.len());
    for cfg in cfgs {
        let mut cfg = cfg.clone();
        cfg.stop.e1_threshold = Some(threshold);
        cfg.stop.converge = false;
        cfg.record_stride = 1;
        // k_max is fixed after the cost model is known.
        cfg.k_max = 1;
        let mut prep = prepare_run(&cfg)?;
        let per_iter = prep.cycles_per_iteration();
        prep.config.k_max = (budget_cycles / per_iter).max(1) as usize;
        let (reached, outcome) = match run_prepared(&prep) {
            Ok(log) => match log.cycles_to(threshold) {
                Some(c) if c <= budget_cycles => (Some(c), Outcome::Reached),
                _ => (None, Outcome::OverBudget),
            },
            Err(SimError::Diverged { .. }) => (None, Outcome::Diverged),
            Err(e) => return Err(e),
        };
        rows.push(ComparisonRow {
            algorithm: cfg.algorithm,
            alpha: prep.gains.alpha,
            k_p: prep.gains.k_p,
            k_i: prep.gains.k_i,
            cycles_per_iteration: per_iter,
            cycles_to_threshold: reached,
            outcome,
        });
    }
    Ok(rows)
}

/// The fastest row of each algorithm, in first-appearance order.
pub fn best_per_algorithm(rows: &[ComparisonRow]) -> Vec<ComparisonRow> {
    let mut out: Vec<ComparisonRow> = Vec::new();
    for row in rows {
        match out.iter_mut().find(|r| r.algorithm == row.algorithm) {
            None => out.push(row.clone()),
            Some(best) => {
                let better = match (row.cycles_to_threshold, best.cycles_to_threshold) {
                    (Some(a), Some(b)) => a < b,
                    (Some(_), None) => true,
                    _ => false,
                };
                if better {
                    *best = row.clone();
                }
            }
        }
    }
    out
}

/// CSV table; unreached rows read `>budget` in the cycles column.
pub fn comparison_csv(rows: &[ComparisonRow], budget_cycles: u64) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algorithm", "alpha", "k_p", "k_i", "cycles_per_iteration", "cycles_to_threshold", "outcome"])
        .expect("in-memory csv write");
    for r in rows {
        let cycles = r.cycles_to_threshold.map_or_else(|| format!(">{budget_cycles}"), |c| c.to_string());
        let outcome = match r.outcome {
            Outcome::Reached => "reached",
            Outcome::OverBudget => "over_budget",
            Outcome::Diverged => "diverged",
        };
        w.write_record([
            r.algorithm.name().to_string(),
            r.alpha.to_string(),
            r.k_p.to_string(),
            r.k_i.to_string(),
            r.cycles_per_iteration.to_string(),
            cycles,
            outcome.to_string(),
        ])
        .expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}
