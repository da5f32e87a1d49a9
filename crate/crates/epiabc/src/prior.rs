//! Uniform prior over the eight model parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::{SimRng, DOMAIN_INFER};

/// Box-uniform prior; per-coordinate interval is half-open `[lower, upper)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub lower: [f64; 8],
    pub upper: [f64; 8],
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            lower: [0.0; 8],
            upper: [1.0, 100.0, 2.0, 1.0, 1.0, 1.0, 1.0, 2.0],
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        for (index, (lo, hi)) in self.lower.iter().zip(self.upper.iter()).enumerate() {
            if lo >= hi {
                return Err(Error::InvalidPrior { index });
            }
        }
        Ok(())
    }

    /// Draw one parameter vector, consuming exactly 8 uniforms.
    #[inline]
    pub fn sample_one(&self, rng: &mut SimRng) -> ModelParams {
        let mut v = [0.0; 8];
        for k in 0..8 {
            v[k] = self.lower[k] + (self.upper[k] - self.lower[k]) * rng.next_f64();
        }
        ModelParams::from_array(v)
    }
}

/// Draw `count` parameter vectors; sample `b` uses the substream for
/// flattened index `base_index + b`, matching the batched engine.
pub fn sample_prior(
    spec: &PriorSpec,
    count: usize,
    seed: u64,
    base_index: u64,
) -> Result<Vec<ModelParams>> {
    spec.validate()?;
    Ok((0..count)
        .map(|b| {
            let mut rng = SimRng::substream(seed, DOMAIN_INFER, base_index + b as u64);
            spec.sample_one(&mut rng)
        })
        .collect())
}
