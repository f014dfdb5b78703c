//! NEAT evolution of goal networks.

mod config;
mod crossover;
mod eval;
mod evolve;
mod genome;
mod mutate;

pub use config::EvolutionConfig;
pub use crossover::{compatibility_distance, crossover};
pub use eval::{episode_seed, evaluate, EpisodeEvaluator};
pub use evolve::{evolve, EvalResult, Evaluator, EvolutionRun, GenerationRow};
pub use genome::{
    clamp_weight, ConnGene, Genome, Innovation, NodeGene, NodeId, NodeKind, NUM_INPUTS, NUM_OUTPUTS, WEIGHT_LIMIT,
};
pub use mutate::{
    add_connection, add_node, delete_connection, delete_node, initial_genome, mutate, InnovationRegistry,
};
