//! Running full episodes with a frozen predictor and a goal provider.

use crate::env::{episode_fitness, EnvState, EpisodeRecord, ScenarioConfig, TraceRow};
use crate::error::Result;
use crate::policy::{best_action, GoalProvider, HorizonWeights};
use crate::predictor::{PredictorNet, Workspace};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub record: EpisodeRecord,
    pub fitness: f64,
    /// Sum of the goal vectors over all steps, for averaging.
    pub goal_sum: [f64; 3],
}

impl EpisodeOutcome {
    pub fn steps(&self) -> u32 {
        self.record.steps
    }
}

/// Plays one greedy episode: each step asks `provider` for a goal given the
/// current measurements, then takes the action with the highest predicted
/// utility.
pub fn run_episode(
    scenario: &ScenarioConfig,
    seed: u64,
    predictor: &PredictorNet,
    provider: &GoalProvider,
    horizon: &HorizonWeights,
    keep_trace: bool,
) -> Result<EpisodeOutcome> {
    let env = EnvState::reset(scenario, seed)?;
    run_from(env, predictor, provider, horizon, keep_trace)
}

pub fn run_from(
    mut env: EnvState,
    predictor: &PredictorNet,
    provider: &GoalProvider,
    horizon: &HorizonWeights,
    keep_trace: bool,
) -> Result<EpisodeOutcome> {
    let mut ws = Workspace::default();
    let mut record = EpisodeRecord::default();
    let mut goal_sum = [0.0; 3];
    while !env.is_done() {
        let m = env.measurements();
        let goal = provider.goal(m);
        for (s, g) in goal_sum.iter_mut().zip(goal.as_array()) {
            *s += g;
        }
        let obs = env.observe(predictor.radius());
        let pred = predictor.forward_with(&obs, m, &goal, &mut ws)?;
        let action = best_action(&pred, &goal, horizon);
        env.step(action)?;
        if keep_trace {
            record.trace.push(TraceRow::after(&env, action));
        }
    }
    record.kills = env.measurements().kills;
    record.died = !env.is_alive();
    record.steps = env.step_count();
    let fitness = episode_fitness(&record, env.config());
    Ok(EpisodeOutcome {
        record,
        fitness,
        goal_sum,
    })
}
