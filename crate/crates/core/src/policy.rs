//! Goal-weighted action selection and the goal providers compared in the
//! experiments.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::env::{Action, Measurements, Observation};
use crate::error::{Error, Result};
use crate::goal_ann::FeedForwardNet;
use crate::predictor::{Predictions, PredictorNet, Workspace};

/// Per-measurement preference weights `(ammo, health, kills)`, each in
/// `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalVector([f64; 3]);

impl GoalVector {
    pub const ZERO: GoalVector = GoalVector([0.0; 3]);

    pub fn new(weights: [f64; 3]) -> Result<Self> {
        if weights.iter().all(|w| (-1.0..=1.0).contains(w)) {
            Ok(GoalVector(weights))
        } else {
            Err(Error::Usage(format!("goal weights {weights:?} outside [-1, 1]")))
        }
    }

    /// Clamps each component into `[-1, 1]`; NaN maps to 0.
    pub fn clamped(weights: [f64; 3]) -> Self {
        GoalVector(weights.map(|w| if w.is_nan() { 0.0 } else { w.clamp(-1.0, 1.0) }))
    }

    pub fn as_array(&self) -> &[f64; 3] {
        &self.0
    }
}

impl fmt::Display for GoalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Weights of the temporal offsets when scoring a predicted future.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonWeights(Vec<f64>);

impl HorizonWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().all(|&w| w == 0.0) {
            return Err(Error::Config("horizon weights must not all be zero".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("horizon weights must be finite".into()));
        }
        Ok(HorizonWeights(weights))
    }

    /// Long-horizon emphasis over the default offsets `1, 2, 4, 8, 16, 32`.
    pub fn default_for_six() -> Self {
        HorizonWeights(vec![0.0, 0.0, 0.0, 0.5, 0.5, 1.0])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `Σ_k w_k · (g · Δm_k)` over an `offsets × 3` prediction block.
pub fn utility(block: &[f64], g: &GoalVector, w: &HorizonWeights) -> f64 {
    debug_assert_eq!(block.len(), w.len() * 3);
    block
        .chunks_exact(3)
        .zip(w.as_slice())
        .map(|(dm, wk)| wk * (g.0[0] * dm[0] + g.0[1] * dm[1] + g.0[2] * dm[2]))
        .sum()
}

/// Argmax of utility over actions; ties go to the lowest action index.
pub fn best_action(pred: &Predictions, g: &GoalVector, w: &HorizonWeights) -> Action {
    let mut best = Action::ALL[0];
    let mut best_u = f64::NEG_INFINITY;
    for a in Action::ALL {
        let u = utility(pred.for_action(a), g, w);
        if u > best_u {
            best = a;
            best_u = u;
        }
    }
    best
}

pub fn select_action(
    net: &PredictorNet,
    obs: &Observation,
    m: Measurements,
    g: &GoalVector,
    w: &HorizonWeights,
    ws: &mut Workspace,
) -> Result<Action> {
    if w.len() != net.offsets().len() {
        return Err(Error::Dimension {
            expected: net.offsets().len(),
            actual: w.len(),
        });
    }
    let pred = net.forward_with(obs, m, g, ws)?;
    Ok(best_action(&pred, g, w))
}

pub const AGGRESSIVE_GOAL: [f64; 3] = [0.5, 0.5, 1.0];
pub const CAUTIOUS_GOAL: [f64; 3] = [0.0, 1.0, -1.0];
pub const DEFENSIVE_GOAL: [f64; 3] = [1.0, 1.0, -1.0];
/// Health below which the hardcoded provider turns cautious.
pub const HARDCODED_HEALTH_THRESHOLD: u32 = 50;

/// Source of the goal vector at each step.
#[derive(Debug, Clone, PartialEq)]
pub enum GoalProvider {
    Static(GoalVector),
    /// Aggressive goal, switching to the cautious goal while health is
    /// below 50.
    Hardcoded,
    Defensive,
    Evolved(FeedForwardNet),
}

impl GoalProvider {
    pub fn goal(&self, m: Measurements) -> GoalVector {
        match self {
            GoalProvider::Static(g) => *g,
            GoalProvider::Hardcoded => {
                if m.health < HARDCODED_HEALTH_THRESHOLD {
                    GoalVector(CAUTIOUS_GOAL)
                } else {
                    GoalVector(AGGRESSIVE_GOAL)
                }
            }
            GoalProvider::Defensive => GoalVector(DEFENSIVE_GOAL),
            GoalProvider::Evolved(net) => net.activate(m.normalized()),
        }
    }
}

/// Textual provider selector: `static:a,b,c`, `hardcoded`, `defensive` or
/// `evolved:<genome-file>`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProviderSpec {
    Static(GoalVector),
    Hardcoded,
    Defensive,
    Evolved(PathBuf),
}

impl ProviderSpec {
    pub fn label(&self) -> String {
        match self {
            ProviderSpec::Static(g) => format!("static:{g}"),
            ProviderSpec::Hardcoded => "hardcoded".into(),
            ProviderSpec::Defensive => "defensive".into(),
            ProviderSpec::Evolved(p) => format!("evolved:{}", p.display()),
        }
    }

    /// Short name used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            ProviderSpec::Static(_) => "static",
            ProviderSpec::Hardcoded => "hardcoded",
            ProviderSpec::Defensive => "defensive",
            ProviderSpec::Evolved(_) => "evolved",
        }
    }
}

impl fmt::Display for ProviderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ProviderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        match (kind, arg) {
            ("static", None) => Ok(ProviderSpec::Static(GoalVector(AGGRESSIVE_GOAL))),
            ("static", Some(a)) => {
                let parts: Vec<f64> = crate::kv::parse_list("goal", a)?;
                let arr: [f64; 3] = parts
                    .try_into()
                    .map_err(|_| Error::Usage(format!("static goal needs 3 weights: `{s}`")))?;
                Ok(ProviderSpec::Static(GoalVector::new(arr)?))
            }
            ("hardcoded", None) => Ok(ProviderSpec::Hardcoded),
            ("defensive", None) => Ok(ProviderSpec::Defensive),
            ("evolved", Some(path)) if !path.is_empty() => Ok(ProviderSpec::Evolved(path.into())),
            _ => Err(Error::Usage(format!("unknown goal provider `{s}`"))),
        }
    }
}
