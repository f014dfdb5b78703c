use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::agent::run_episode;
use crate::env::{EnvState, Measurements, Preset};
use crate::error::{Error, Result};
use crate::goal_ann::FeedForwardNet;
use crate::kv::{parse_list, KvMap};
use crate::neat::{evolve, EpisodeEvaluator, Genome};
use crate::policy::{GoalProvider, HorizonWeights, ProviderSpec};
use crate::predictor::{collect_and_train, persist, PredictorNet, TrainingLog};
use crate::stats::{compare_all, summarize, write_comparisons, Comparison, SampleSet};

use super::config::ExperimentConfig;
use super::manifest::Manifest;

pub const MODEL_FILE: &str = "model.txt";
pub const LOSS_FILE: &str = "loss.csv";
pub const GENOME_FILE: &str = "best_genome.txt";
pub const GENERATIONS_FILE: &str = "generations.csv";
pub const EPISODES_FILE: &str = "episodes.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const COMPARISONS_FILE: &str = "comparisons.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const CONFIG_FILE: &str = "config.txt";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn prepare(out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join(CONFIG_FILE);
    std::fs::write(&path, cfg.to_kv().render()).map_err(|e| Error::io(&path, e))
}

/// Paths written by a command; the manifest comes last.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

fn finish(out: &Path, manifest: Manifest) -> Result<Artifacts> {
    let files = std::iter::once(out.join(CONFIG_FILE))
        .chain(manifest.outputs.iter().map(|(_, p, _)| p.clone()))
        .collect();
    Ok(Artifacts {
        files,
        manifest: manifest.write(out)?,
    })
}

/// A trained model together with the settings it was trained with.
pub struct LoadedModel {
    pub net: PredictorNet,
    pub echo: KvMap,
    pub path: PathBuf,
}

pub fn load_model(cfg: &ExperimentConfig) -> Result<LoadedModel> {
    let path = cfg
        .model
        .clone()
        .ok_or_else(|| Error::Config("`model` is required for this command".into()))?;
    if !path.exists() {
        return Err(Error::io(
            &path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "model file not found"),
        ));
    }
    let (net, echo) = persist::load(&path)?;
    Ok(LoadedModel { net, echo, path })
}

/// Offset weighting for acting: the config's `horizon` if set, otherwise
/// the one the model was trained with.
pub fn resolve_horizon(cfg: &ExperimentConfig, model: &LoadedModel) -> Result<HorizonWeights> {
    let w = match (&cfg.horizon, model.echo.get("horizon")) {
        (Some(h), _) => h.clone(),
        (None, Some(v)) => parse_list("horizon", v)?,
        (None, None) => return Ok(HorizonWeights::default_for_six()),
    };
    if w.len() != model.net.offsets().len() {
        return Err(Error::Config(format!(
            "{} horizon weights for a model with {} offsets",
            w.len(),
            model.net.offsets().len()
        )));
    }
    HorizonWeights::new(w)
}

pub struct TrainReport {
    pub artifacts: Artifacts,
    pub model: PathBuf,
    pub log: TrainingLog,
}

/// Trains the predictor on the original scenario under randomized goals.
/// Scenario overrides are allowed but the preset must stay `original`.
pub fn cmd_train_predictor(cfg: &ExperimentConfig, out: &Path, progress: &mut dyn FnMut(&str)) -> Result<TrainReport> {
    if cfg.scenario.preset_name != Preset::Original {
        return Err(Error::Config(format!(
            "the predictor is trained on the original scenario, not `{}`",
            cfg.scenario.preset_name
        )));
    }
    prepare(out, cfg)?;
    progress(&format!(
        "training predictor: {} episodes, seed {}",
        cfg.predictor.training_episodes, cfg.seed
    ));
    let scenario = cfg.scenario.clone();
    let (net, log) = collect_and_train(|s| EnvState::reset(&scenario, s), &cfg.predictor, cfg.seed)?;
    if let (Some(first), Some(last)) = (log.rows.first(), log.rows.last()) {
        progress(&format!("held-out loss {:.6} -> {:.6}", first.loss, last.loss));
    }

    let mut echo = cfg.predictor.to_kv();
    echo.set("seed", cfg.seed);
    for (k, v) in cfg.scenario.to_kv().iter() {
        echo.set(&format!("scenario.{k}"), v);
    }
    let model = out.join(MODEL_FILE);
    persist::save(&net, &echo, &model)?;
    let loss = out.join(LOSS_FILE);
    write_with(&loss, |w| log.write_csv(w))?;

    let mut manifest = Manifest::new("train-predictor", cfg.seed, cfg.to_kv());
    manifest.notes.set("episodes", log.episodes);
    manifest.notes.set("env_steps", log.env_steps);
    manifest.notes.set("updates", log.updates);
    manifest.output("model", &model)?;
    manifest.output("loss", &loss)?;
    Ok(TrainReport {
        artifacts: finish(out, manifest)?,
        model,
        log,
    })
}

pub struct EvolveReport {
    pub artifacts: Artifacts,
    pub genome: PathBuf,
    pub best: Genome,
    pub evaluations: usize,
}

/// Evolves a goal network on the configured scenario with the predictor
/// frozen.
pub fn cmd_evolve(cfg: &ExperimentConfig, out: &Path, progress: &mut dyn FnMut(&str)) -> Result<EvolveReport> {
    let model = load_model(cfg)?;
    let horizon = resolve_horizon(cfg, &model)?;
    prepare(out, cfg)?;
    let mut manifest = Manifest::new("evolve", cfg.seed, cfg.to_kv());
    manifest.input("model", &model.path)?;
    manifest.notes.set("horizon", crate::kv::join(horizon.as_slice()));

    let evaluator = EpisodeEvaluator {
        predictor: &model.net,
        scenario: &cfg.scenario,
        horizon: &horizon,
        episodes: cfg.evolution.episodes_per_eval,
    };
    progress(&format!(
        "evolving on `{}`: {} x {} genomes, {} episodes each",
        cfg.scenario.preset_name,
        cfg.evolution.generations,
        cfg.evolution.population_size,
        cfg.evolution.episodes_per_eval
    ));
    let run = evolve(&cfg.evolution, &evaluator, cfg.seed, |r| {
        progress(&format!(
            "gen {:3}  best {:8.3}  mean {:8.3}  goal [{:+.2} {:+.2} {:+.2}]  species {}{}",
            r.generation,
            r.best_fitness,
            r.mean_fitness,
            r.mean_goal[0],
            r.mean_goal[1],
            r.mean_goal[2],
            r.species,
            if r.restarted { "  restart" } else { "" }
        ))
    })?;

    let genome = out.join(GENOME_FILE);
    run.best.save(&genome)?;
    let generations = out.join(GENERATIONS_FILE);
    write_with(&generations, |w| run.write_csv(w))?;
    manifest.notes.set("evaluations", run.evaluations);
    manifest.notes.set("best_fitness", run.best.fitness.unwrap_or(f64::NAN));
    manifest.output("genome", &genome)?;
    manifest.output("generations", &generations)?;
    Ok(EvolveReport {
        artifacts: finish(out, manifest)?,
        genome,
        best: run.best,
        evaluations: run.evaluations,
    })
}

/// Per-episode results of one goal provider.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderResult {
    pub label: String,
    pub seeds: Vec<u64>,
    pub fitness: Vec<f64>,
    pub kills: Vec<u32>,
    pub died: Vec<bool>,
    pub steps: Vec<u32>,
}

pub struct EvaluateReport {
    pub artifacts: Artifacts,
    pub results: Vec<ProviderResult>,
    pub comparisons: Vec<Comparison>,
}

impl EvaluateReport {
    pub fn result(&self, label: &str) -> Option<&ProviderResult> {
        self.results.iter().find(|r| r.label == label)
    }

    pub fn comparison(&self, a: &str, b: &str) -> Option<&Comparison> {
        self.comparisons
            .iter()
            .find(|c| (c.label_a == a && c.label_b == b) || (c.label_a == b && c.label_b == a))
    }
}

/// Seeds of the evaluation episodes: `seed + 1 ..= seed + n`, shared by
/// every provider.
pub fn evaluation_seeds(seed: u64, n: usize) -> Vec<u64> {
    (1..=n as u64).map(|i| seed.wrapping_add(i)).collect()
}

fn provider_labels(specs: &[ProviderSpec]) -> Vec<String> {
    specs
        .iter()
        .map(|s| {
            let unique = specs.iter().filter(|o| o.kind() == s.kind()).count() == 1;
            if unique {
                s.kind().to_string()
            } else {
                s.label()
            }
        })
        .collect()
}

/// Plays `evaluation_episodes` greedy episodes per provider on the
/// configured scenario and compares every pair of providers.
pub fn cmd_evaluate(cfg: &ExperimentConfig, out: &Path, progress: &mut dyn FnMut(&str)) -> Result<EvaluateReport> {
    if cfg.providers.is_empty() {
        return Err(Error::Usage(
            "no goal providers given (`providers = static; hardcoded; ...`)".into(),
        ));
    }
    let model = load_model(cfg)?;
    let horizon = resolve_horizon(cfg, &model)?;
    prepare(out, cfg)?;
    let mut manifest = Manifest::new("evaluate", cfg.seed, cfg.to_kv());
    manifest.input("model", &model.path)?;
    manifest.notes.set("horizon", crate::kv::join(horizon.as_slice()));

    let seeds = evaluation_seeds(cfg.seed, cfg.evaluation_episodes);
    let labels = provider_labels(&cfg.providers);
    let mut results = Vec::new();
    for (spec, label) in cfg.providers.iter().zip(labels) {
        let provider = match spec {
            ProviderSpec::Static(g) => GoalProvider::Static(*g),
            ProviderSpec::Hardcoded => GoalProvider::Hardcoded,
            ProviderSpec::Defensive => GoalProvider::Defensive,
            ProviderSpec::Evolved(path) => {
                manifest.input(&format!("genome.{label}"), path)?;
                GoalProvider::Evolved(FeedForwardNet::decode(&Genome::load(path)?)?)
            }
        };
        let outcomes = seeds
            .par_iter()
            .map(|&s| run_episode(&cfg.scenario, s, &model.net, &provider, &horizon, false))
            .collect::<Result<Vec<_>>>()?;
        let r = ProviderResult {
            label,
            seeds: seeds.clone(),
            fitness: outcomes.iter().map(|o| o.fitness).collect(),
            kills: outcomes.iter().map(|o| o.record.kills).collect(),
            died: outcomes.iter().map(|o| o.record.died).collect(),
            steps: outcomes.iter().map(|o| o.record.steps).collect(),
        };
        let s = summarize(&r.fitness)?;
        progress(&format!(
            "{:<10} mean fitness {:9.3} (se {:.3}), died {}/{}",
            r.label,
            s.mean,
            s.std_error,
            r.died.iter().filter(|&&d| d).count(),
            r.died.len()
        ));
        results.push(r);
    }
    let sets: Vec<SampleSet> = results
        .iter()
        .map(|r| SampleSet::new(r.label.clone(), r.fitness.clone()))
        .collect();
    let comparisons = compare_all(&sets)?;
    for c in &comparisons {
        progress(&format!(
            "{} vs {}: U = {}, p = {:.4}",
            c.label_a, c.label_b, c.test.u, c.test.p
        ));
    }

    let episodes = out.join(EPISODES_FILE);
    write_with(&episodes, |w| {
        writeln!(w, "provider,episode,seed,fitness,kills,died,steps")?;
        for r in &results {
            for i in 0..r.seeds.len() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    r.label,
                    i,
                    r.seeds[i],
                    r.fitness[i],
                    r.kills[i],
                    u8::from(r.died[i]),
                    r.steps[i]
                )?;
            }
        }
        Ok(())
    })?;
    let summary = out.join(SUMMARY_FILE);
    write_with(&summary, |w| {
        writeln!(w, "provider,mean,std_error,n,deaths")?;
        for r in &results {
            let s = summarize(&r.fitness).map_err(std::io::Error::other)?;
            let deaths = r.died.iter().filter(|&&d| d).count();
            writeln!(w, "{},{},{},{},{}", r.label, s.mean, s.std_error, s.n, deaths)?;
        }
        Ok(())
    })?;
    let comp = out.join(COMPARISONS_FILE);
    write_with(&comp, |w| write_comparisons(&comparisons, w))?;
    manifest.output("episodes", &episodes)?;
    manifest.output("summary", &summary)?;
    manifest.output("comparisons", &comp)?;
    Ok(EvaluateReport {
        artifacts: finish(out, manifest)?,
        results,
        comparisons,
    })
}

/// One sweep row: the measurements fed to the goal network and its output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub axis: &'static str,
    pub m: Measurements,
    pub goal: [f64; 3],
}

/// Activates `net` along each measurement axis of the sweep grid.
pub fn sweep_rows(net: &FeedForwardNet, cfg: &ExperimentConfig) -> Vec<SweepRow> {
    let base = cfg
        .sweep
        .base
        .unwrap_or([cfg.scenario.initial_ammo, cfg.scenario.initial_health, 0]);
    let mut rows = Vec::with_capacity(cfg.sweep.cardinality());
    for (axis, idx, range) in [
        ("ammo", 0, cfg.sweep.ammo),
        ("health", 1, cfg.sweep.health),
        ("kills", 2, cfg.sweep.kills),
    ] {
        for v in range.values() {
            let mut m = base;
            m[idx] = v;
            let m = Measurements::new(m[0], m[1], m[2]);
            rows.push(SweepRow {
                axis,
                m,
                goal: *net.activate(m.normalized()).as_array(),
            });
        }
    }
    rows
}

pub struct SweepReport {
    pub artifacts: Artifacts,
    pub rows: Vec<SweepRow>,
}

pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, progress: &mut dyn FnMut(&str)) -> Result<SweepReport> {
    let path = cfg
        .genome
        .clone()
        .ok_or_else(|| Error::Config("`genome` is required for sweep".into()))?;
    let net = FeedForwardNet::decode(&Genome::load(&path)?)?;
    prepare(out, cfg)?;
    let mut manifest = Manifest::new("sweep", cfg.seed, cfg.to_kv());
    manifest.input("genome", &path)?;
    let rows = sweep_rows(&net, cfg);
    let csv = out.join(SWEEP_FILE);
    write_with(&csv, |w| {
        writeln!(w, "axis,ammo,health,kills,goal_ammo,goal_health,goal_kills")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.axis, r.m.ammo, r.m.health, r.m.kills, r.goal[0], r.goal[1], r.goal[2]
            )?;
        }
        Ok(())
    })?;
    progress(&format!("{} sweep points", rows.len()));
    manifest.output("sweep", &csv)?;
    Ok(SweepReport {
        artifacts: finish(out, manifest)?,
        rows,
    })
}
