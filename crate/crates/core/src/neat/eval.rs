use crate::agent::run_episode;
use crate::env::ScenarioConfig;
use crate::goal_ann::FeedForwardNet;
use crate::policy::{GoalProvider, HorizonWeights};
use crate::predictor::PredictorNet;
use crate::seed;

use super::evolve::{EvalResult, Evaluator};
use super::genome::Genome;

/// Seed of episode `index` within an evaluation seeded by `seed`.
pub fn episode_seed(seed: u64, index: usize) -> u64 {
    seed::derive(seed, "episode", index as u64)
}

/// Plays `episodes` greedy episodes with the goal network decoded from
/// `genome` steering a frozen predictor. Episode seeds depend only on
/// `seed` and the episode index, so every genome evaluated with the same
/// seed faces the same mazes and spawns. A genome that cannot be decoded,
/// or an episode that fails, scores the scenario's minimum fitness.
pub fn evaluate(
    genome: &Genome,
    predictor: &PredictorNet,
    scenario: &ScenarioConfig,
    horizon: &HorizonWeights,
    episodes: usize,
    seed: u64,
) -> EvalResult {
    let floor = scenario.min_fitness();
    let Ok(net) = FeedForwardNet::decode(genome) else {
        return EvalResult::new(vec![floor; episodes], [0.0; 3], 0);
    };
    let provider = GoalProvider::Evolved(net);
    let mut fitness = Vec::with_capacity(episodes);
    let mut goal_sum = [0.0; 3];
    let mut steps = 0u64;
    for i in 0..episodes {
        match run_episode(scenario, episode_seed(seed, i), predictor, &provider, horizon, false) {
            Ok(out) => {
                fitness.push(out.fitness);
                for (s, v) in goal_sum.iter_mut().zip(out.goal_sum) {
                    *s += v;
                }
                steps += u64::from(out.steps());
            }
            Err(_) => fitness.push(floor),
        }
    }
    EvalResult::new(fitness, goal_sum, steps)
}

/// [`evaluate`] bound to one predictor and scenario.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeEvaluator<'a> {
    pub predictor: &'a PredictorNet,
    pub scenario: &'a ScenarioConfig,
    pub horizon: &'a HorizonWeights,
    pub episodes: usize,
}

impl Evaluator for EpisodeEvaluator<'_> {
    fn evaluate(&self, genome: &Genome, seed: u64) -> EvalResult {
        evaluate(genome, self.predictor, self.scenario, self.horizon, self.episodes, seed)
    }
}
