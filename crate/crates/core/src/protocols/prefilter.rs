use super::ProtocolError;

/// Exponential smoothing `f(k+1) = (1−β)·f(k) + β·b(k+1)`, `f(0) = b(0)`.
#[derive(Debug, Clone)]
pub struct LowPass {
    beta: f64,
    state: Option<Vec<f64>>,
}

impl LowPass {
    pub fn new(beta: f64) -> Result<Self, ProtocolError> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(ProtocolError::InvalidBeta(beta));
        }
        Ok(Self { beta, state: None })
    }

    /// Feeds the next raw sample and returns the filtered one.
    pub fn push(&mut self, b: &[f64]) -> &[f64] {
        let beta = self.beta;
        match &mut self.state {
            Some(f) => {
                assert_eq!(f.len(), b.len(), "stream changed dimension");
                for (fv, bv) in f.iter_mut().zip(b) {
                    *fv = (1.0 - beta) * *fv + beta * bv;
                }
            }
            None => self.state = Some(b.to_vec()),
        }
        self.state.as_deref().unwrap()
    }
}

pub fn lowpass_prefilter(b_stream: &[Vec<f64>], beta: f64) -> Result<Vec<Vec<f64>>, ProtocolError> {
    let mut f = LowPass::new(beta)?;
    Ok(b_stream.iter().map(|b| f.push(b).to_vec()).collect())
}
