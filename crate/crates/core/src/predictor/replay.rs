use rand::Rng;

use crate::env::{Action, Measurements, Observation, CHANNELS};
use crate::policy::GoalVector;

/// Occupancy planes of an [`Observation`] packed into bits. The
/// measurement tail is recomputed from the sample's measurements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompactObservation {
    radius: usize,
    bits: Vec<u64>,
}

impl CompactObservation {
    fn plane_cells(radius: usize) -> usize {
        let side = 2 * radius + 1;
        CHANNELS * side * side
    }

    pub fn pack(obs: &Observation) -> Self {
        let cells = Self::plane_cells(obs.radius());
        let mut bits = vec![0u64; cells.div_ceil(64)];
        for (i, &v) in obs.as_slice()[..cells].iter().enumerate() {
            if v != 0.0 {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        CompactObservation {
            radius: obs.radius(),
            bits,
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Writes the full observation vector for measurements `m` into `buf`.
    pub fn expand_into(&self, m: Measurements, buf: &mut Vec<f64>) {
        let cells = Self::plane_cells(self.radius);
        buf.clear();
        buf.extend((0..cells).map(|i| ((self.bits[i / 64] >> (i % 64)) & 1) as f64));
        buf.extend_from_slice(&m.normalized());
    }
}

/// One training example: the situation, the goal and action taken, and the
/// observed normalized measurement changes at each temporal offset.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperienceSample {
    pub observation: CompactObservation,
    pub measurements: Measurements,
    pub goal: GoalVector,
    pub action: Action,
    /// `offsets × 3` deltas; entries of invalid offsets are zero.
    pub targets: Vec<f64>,
    /// Whether each offset still lies inside the episode.
    pub valid: Vec<bool>,
}

/// Builds the samples of a finished episode.
///
/// `history[t]` are the measurements before step `t`, with one extra final
/// entry after the last step, so `history.len() == steps.len() + 1`. Offset
/// `τ` at time `t` is valid iff `t + τ` does not run past the final entry.
pub fn episode_samples(
    steps: Vec<(CompactObservation, Action)>,
    history: &[Measurements],
    goal: GoalVector,
    offsets: &[u32],
) -> Vec<ExperienceSample> {
    assert_eq!(history.len(), steps.len() + 1, "history must cover every step");
    let last = steps.len();
    steps
        .into_iter()
        .enumerate()
        .map(|(t, (observation, action))| {
            let now = history[t].scaled();
            let mut targets = vec![0.0; offsets.len() * 3];
            let mut valid = vec![false; offsets.len()];
            for (k, &tau) in offsets.iter().enumerate() {
                let future = t + tau as usize;
                if future <= last {
                    let then = history[future].scaled();
                    for j in 0..3 {
                        targets[k * 3 + j] = then[j] - now[j];
                    }
                    valid[k] = true;
                }
            }
            ExperienceSample {
                observation,
                measurements: history[t],
                goal,
                action,
                targets,
                valid,
            }
        })
        .collect()
}

/// Fixed-capacity ring buffer with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    samples: Vec<ExperienceSample>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity: capacity.max(1),
            samples: Vec::new(),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, s: ExperienceSample) {
        if self.samples.len() < self.capacity {
            self.samples.push(s);
        } else {
            self.samples[self.next] = s;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn extend(&mut self, it: impl IntoIterator<Item = ExperienceSample>) {
        for s in it {
            self.push(s);
        }
    }

    /// Draws `n` samples uniformly with replacement.
    pub fn sample<'a, R: Rng>(&'a self, n: usize, rng: &mut R) -> Vec<&'a ExperienceSample> {
        (0..n)
            .map(|_| &self.samples[rng.gen_range(0..self.samples.len())])
            .collect()
    }
}
