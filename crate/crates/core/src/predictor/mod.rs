//! Multi-horizon measurement predictor.

mod mlp;
mod net;
pub mod persist;
mod replay;
mod train;

pub use mlp::{Activations, Mlp, LEAKY_SLOPE};
pub use net::{Predictions, PredictorNet, Workspace};
pub use replay::{episode_samples, CompactObservation, ExperienceSample, ReplayBuffer};
pub use train::{
    batch_loss, collect_and_train, epsilon_greedy, sample_goal, train_step, Adam, EpochRow, EpsilonSchedule, Optimizer,
    OptimizerKind, PredictorConfig, Sgd, TrainScratch, TrainingLog,
};
