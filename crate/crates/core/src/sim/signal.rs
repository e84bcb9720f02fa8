//! Time-varying observations `b(k)`.
//!
//! Random ingredients (ramp direction, jump directions, noise) come from a
//! Gaussian stream seeded separately from the problem, so changing the signal
//! never changes the instance.

use serde::{Deserialize, Serialize};

use crate::protocols::LowPass;

use super::rng::GaussianStream;
use super::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    #[default]
    Static,
    /// `b₀ + k·δ` along a random unit direction with `‖δ‖ = step_norm`.
    /// With `decay = ρ` the increments shrink geometrically:
    /// `b₀ + δ(1 − ρᵏ)/(1 − ρ)`.
    Ramp {
        step_norm: f64,
        #[serde(default)]
        decay: Option<f64>,
    },
    /// `b₀ + a·sin(ωk + φ)` in every entry.
    Sinusoid { amplitude: f64, omega: f64, phase: f64 },
    /// At each epoch `b` jumps by `jump_norm` along a fresh random direction.
    Piecewise { epochs: Vec<usize>, jump_norm: f64 },
    /// `b₀ + σξ(k)` with white Gaussian `ξ` (and `ξ(0) = 0`), smoothed by the
    /// low-pass pre-filter with coefficient `beta`.
    FilteredNoise { sigma: f64, beta: f64 },
}

impl SignalSpec {
    pub fn is_static(&self) -> bool {
        matches!(self, SignalSpec::Static)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(format!("signal: {msg}")));
        match self {
            SignalSpec::Static => Ok(()),
            SignalSpec::Ramp { step_norm, decay } => {
                if !(step_norm.is_finite() && *step_norm >= 0.0) {
                    return bad(format!("step_norm must be finite and nonnegative, got {step_norm}"));
                }
                match decay {
                    Some(r) if !(0.0..1.0).contains(r) => bad(format!("decay must lie in [0, 1), got {r}")),
                    _ => Ok(()),
                }
            }
            SignalSpec::Sinusoid { amplitude, omega, phase } => {
                if [amplitude, omega, phase].iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    bad("sinusoid parameters must be finite".into())
                }
            }
            SignalSpec::Piecewise { epochs, jump_norm } => {
                if !(jump_norm.is_finite() && *jump_norm >= 0.0) {
                    return bad(format!("jump_norm must be finite and nonnegative, got {jump_norm}"));
                }
                if epochs.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("epochs must be strictly increasing".into());
                }
                Ok(())
            }
            SignalSpec::FilteredNoise { sigma, beta } => {
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return bad(format!("sigma must be finite and nonnegative, got {sigma}"));
                }
                if !(*beta > 0.0 && *beta <= 1.0) {
                    return bad(format!("beta must lie in (0, 1], got {beta}"));
                }
                Ok(())
            }
        }
    }
}

/// Produces `b(0), b(1), …` in order.
#[derive(Debug, Clone)]
pub struct ObservationStream {
    spec: SignalSpec,
    b0: Vec<f64>,
    k: usize,
    current: Vec<f64>,
    direction: Vec<f64>,
    rng: GaussianStream,
    filter: Option<LowPass>,
}

impl ObservationStream {
    pub fn new(spec: &SignalSpec, b0: &[f64], seed: u64) -> Result<Self, SimError> {
        spec.validate()?;
        let mut rng = GaussianStream::new(seed);
        let direction = match spec {
            SignalSpec::Ramp { .. } => rng.unit_vector(b0.len()),
            _ => Vec::new(),
        };
        let filter = match spec {
            SignalSpec::FilteredNoise { beta, .. } => {
                let mut f = LowPass::new(*beta)?;
                f.push(b0);
                Some(f)
            }
            _ => None,
        };
        let mut s = Self {
            spec: spec.clone(),
            b0: b0.to_vec(),
            k: 0,
            current: b0.to_vec(),
            direction,
            rng,
            filter,
        };
        s.current = s.closed_form(0).unwrap_or_else(|| b0.to_vec());
        Ok(s)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `b(k)` for the current `k`.
    pub fn current(&self) -> &[f64] {
        &self.current
    }

    fn closed_form(&self, k: usize) -> Option<Vec<f64>> {
        let kf = k as f64;
        match &self.spec {
            SignalSpec::Static => Some(self.b0.clone()),
            SignalSpec::Ramp { step_norm, decay } => {
                let scale = match decay {
                    None => kf * step_norm,
                    Some(r) => step_norm * (1.0 - r.powi(k as i32)) / (1.0 - r),
                };
                Some(self.b0.iter().zip(&self.direction).map(|(b, d)| b + scale * d).collect())
            }
            SignalSpec::Sinusoid { amplitude, omega, phase } => {
                let s = amplitude * (omega * kf + phase).sin();
                Some(self.b0.iter().map(|b| b + s).collect())
            }
            SignalSpec::Piecewise { .. } | SignalSpec::FilteredNoise { .. } => None,
        }
    }

    /// Moves to `k + 1` and returns `b(k+1)`.
    pub fn advance(&mut self) -> &[f64] {
        self.k += 1;
        let k = self.k;
        if let Some(b) = self.closed_form(k) {
            self.current = b;
            return &self.current;
        }
        match &self.spec {
            SignalSpec::Piecewise { epochs, jump_norm } => {
                if epochs.binary_search(&k).is_ok() {
                    let d = self.rng.unit_vector(self.b0.len());
                    for (c, dv) in self.current.iter_mut().zip(d) {
                        *c += jump_norm * dv;
                    }
                }
            }
            SignalSpec::FilteredNoise { sigma, .. } => {
                let noise = self.rng.normals(self.b0.len());
                let raw: Vec<f64> = self.b0.iter().zip(noise).map(|(b, e)| b + sigma * e).collect();
                let f = self.filter.as_mut().expect("noise signal has a filter");
                self.current = f.push(&raw).to_vec();
            }
            _ => unreachable!("closed-form signals handled above"),
        }
        &self.current
    }
}

/// `b(k)` for a signal started from `b₀` with the given signal seed.
pub fn generate_tv_observation(spec: &SignalSpec, b0: &[f64], seed: u64, k: usize) -> Result<Vec<f64>, SimError> {
    let mut s = ObservationStream::new(spec, b0, seed)?;
    for _ in 0..k {
        s.advance();
    }
    Ok(s.current().to_vec())
}
