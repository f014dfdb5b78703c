//! The end-to-end pipeline: predictor training, goal evolution, provider
//! evaluation and goal sweeps, each writing CSVs and a manifest into its
//! own output directory.

mod commands;
mod config;
mod manifest;

pub use commands::{
    cmd_evaluate, cmd_evolve, cmd_sweep, cmd_train_predictor, evaluation_seeds, load_model, resolve_horizon,
    sweep_rows, Artifacts, EvaluateReport, EvolveReport, LoadedModel, ProviderResult, SweepReport, SweepRow,
    TrainReport, COMPARISONS_FILE, CONFIG_FILE, EPISODES_FILE, GENERATIONS_FILE, GENOME_FILE, LOSS_FILE, MODEL_FILE,
    SUMMARY_FILE, SWEEP_FILE,
};
pub use config::{AxisRange, ExperimentConfig, SweepSpec};
pub use manifest::{sha256_file, Manifest, MANIFEST_FILE};
