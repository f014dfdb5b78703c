use rand::Rng;

use crate::env::{Action, Measurements, Observation};
use crate::error::{Error, Result};
use crate::policy::GoalVector;

use super::mlp::{Activations, Mlp};

/// Predicted measurement changes, laid out `[action][offset][measurement]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    offsets: usize,
    values: Vec<f64>,
}

impl Predictions {
    pub fn new(offsets: usize, values: Vec<f64>) -> Result<Self> {
        let expected = Action::COUNT * offsets * 3;
        if values.len() != expected {
            return Err(Error::Dimension {
                expected,
                actual: values.len(),
            });
        }
        Ok(Predictions { offsets, values })
    }

    pub fn offsets(&self) -> usize {
        self.offsets
    }

    /// The `offsets × 3` block for one action.
    pub fn for_action(&self, action: Action) -> &[f64] {
        let block = self.offsets * 3;
        &self.values[action.index() * block..(action.index() + 1) * block]
    }

    pub fn get(&self, action: Action, offset: usize, measurement: usize) -> f64 {
        self.for_action(action)[offset * 3 + measurement]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Regressor from (observation, measurements, goal) to per-action,
/// per-offset measurement changes in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorNet {
    offsets: Vec<u32>,
    radius: usize,
    mlp: Mlp,
}

/// Reusable buffers for repeated forward passes.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pub(crate) input: Vec<f64>,
    pub(crate) acts: Activations,
}

impl PredictorNet {
    pub fn input_len_for(radius: usize) -> usize {
        Observation::len_for(radius) + 3 + 3
    }

    pub fn output_len_for(offsets: usize) -> usize {
        Action::COUNT * offsets * 3
    }

    fn layer_sizes(radius: usize, offsets: usize, hidden: &[usize]) -> Vec<usize> {
        let mut sizes = vec![Self::input_len_for(radius)];
        sizes.extend_from_slice(hidden);
        sizes.push(Self::output_len_for(offsets));
        sizes
    }

    fn check_offsets(offsets: &[u32]) -> Result<()> {
        if offsets.is_empty() || offsets[0] == 0 || offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "temporal offsets must be positive and strictly increasing, got {offsets:?}"
            )));
        }
        Ok(())
    }

    pub fn new<R: Rng>(offsets: &[u32], radius: usize, hidden: &[usize], rng: &mut R) -> Result<Self> {
        Self::check_offsets(offsets)?;
        Ok(PredictorNet {
            offsets: offsets.to_vec(),
            radius,
            mlp: Mlp::random(&Self::layer_sizes(radius, offsets.len(), hidden), rng)?,
        })
    }

    pub fn zeros(offsets: &[u32], radius: usize, hidden: &[usize]) -> Result<Self> {
        Self::check_offsets(offsets)?;
        Ok(PredictorNet {
            offsets: offsets.to_vec(),
            radius,
            mlp: Mlp::zeros(&Self::layer_sizes(radius, offsets.len(), hidden))?,
        })
    }

    pub fn from_mlp(offsets: &[u32], radius: usize, mlp: Mlp) -> Result<Self> {
        Self::check_offsets(offsets)?;
        let n_in = Self::input_len_for(radius);
        if mlp.input_len() != n_in {
            return Err(Error::Dimension {
                expected: n_in,
                actual: mlp.input_len(),
            });
        }
        let n_out = Self::output_len_for(offsets.len());
        if mlp.output_len() != n_out {
            return Err(Error::Dimension {
                expected: n_out,
                actual: mlp.output_len(),
            });
        }
        Ok(PredictorNet {
            offsets: offsets.to_vec(),
            radius,
            mlp,
        })
    }

    pub fn offsets(&self) -> &[u32] {
        &self.offsets
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn hidden(&self) -> &[usize] {
        let s = self.mlp.sizes();
        &s[1..s.len() - 1]
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn mlp_mut(&mut self) -> &mut Mlp {
        &mut self.mlp
    }

    /// Writes the network input for `(obs, m, g)` into `buf`.
    pub fn encode_input(obs: &[f64], m: Measurements, g: &GoalVector, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend_from_slice(obs);
        buf.extend_from_slice(&m.normalized());
        buf.extend_from_slice(g.as_array());
    }

    pub fn forward(&self, obs: &Observation, m: Measurements, g: &GoalVector) -> Result<Predictions> {
        let mut ws = Workspace::default();
        self.forward_with(obs, m, g, &mut ws)
    }

    pub fn forward_with(
        &self,
        obs: &Observation,
        m: Measurements,
        g: &GoalVector,
        ws: &mut Workspace,
    ) -> Result<Predictions> {
        if obs.radius() != self.radius {
            return Err(Error::Dimension {
                expected: Observation::len_for(self.radius),
                actual: obs.len(),
            });
        }
        Self::encode_input(obs.as_slice(), m, g, &mut ws.input);
        self.mlp.forward(&ws.input, &mut ws.acts)?;
        Predictions::new(self.offsets.len(), ws.acts.output().to_vec())
    }
}
