use std::path::{Path, PathBuf};

use crate::env::ScenarioConfig;
use crate::error::{Error, Result};
use crate::kv::{join, parse_list, parse_value, KvMap};
use crate::neat::EvolutionConfig;
use crate::policy::ProviderSpec;
use crate::predictor::PredictorConfig;

/// Inclusive measurement range `start:end:step` in raw units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisRange {
    pub start: u32,
    pub end: u32,
    pub step: u32,
}

impl AxisRange {
    pub fn values(&self) -> impl Iterator<Item = u32> + '_ {
        (self.start..=self.end).step_by(self.step.max(1) as usize)
    }

    pub fn len(&self) -> usize {
        self.values().count()
    }

    pub fn is_empty(&self) -> bool {
        self.start > self.end
    }

    fn parse(key: &str, v: &str) -> Result<Self> {
        let parts: Vec<u32> = v
            .split(':')
            .map(|p| parse_value(key, p.trim()))
            .collect::<Result<_>>()?;
        match parts[..] {
            [start, end, step] if step > 0 && start <= end => Ok(AxisRange { start, end, step }),
            _ => Err(Error::Config(format!(
                "`{key}` must be start:end:step with step > 0, got `{v}`"
            ))),
        }
    }
}

impl std::fmt::Display for AxisRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}

/// Grid of a measurement sweep: each axis is varied on its own while the
/// other two stay at `base` (the scenario's starting measurements unless
/// given).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub ammo: AxisRange,
    pub health: AxisRange,
    pub kills: AxisRange,
    pub base: Option<[u32; 3]>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            ammo: AxisRange {
                start: 0,
                end: 40,
                step: 1,
            },
            health: AxisRange {
                start: 0,
                end: 100,
                step: 5,
            },
            kills: AxisRange {
                start: 0,
                end: 25,
                step: 1,
            },
            base: None,
        }
    }
}

impl SweepSpec {
    pub fn cardinality(&self) -> usize {
        self.ammo.len() + self.health.len() + self.kills.len()
    }
}

/// Everything a command needs, read from one `key = value` file.
///
/// Top-level keys: `seed`, `model`, `genome`, `providers`,
/// `evaluation_episodes`, `horizon`. Sections: `scenario.*`,
/// `predictor.*`, `evolution.*`, `sweep.*`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub predictor: PredictorConfig,
    pub evolution: EvolutionConfig,
    pub model: Option<PathBuf>,
    pub genome: Option<PathBuf>,
    pub providers: Vec<ProviderSpec>,
    pub evaluation_episodes: usize,
    /// Offset weighting for acting; `None` takes it from the model file.
    pub horizon: Option<Vec<f64>>,
    pub sweep: SweepSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            scenario: ScenarioConfig::original(),
            predictor: PredictorConfig::default(),
            evolution: EvolutionConfig::default(),
            model: None,
            genome: None,
            providers: Vec::new(),
            evaluation_episodes: 20,
            horizon: None,
            sweep: SweepSpec::default(),
        }
    }
}

const SECTIONS: [&str; 4] = ["scenario", "predictor", "evolution", "sweep"];

impl ExperimentConfig {
    /// Parses a config map. Relative paths are resolved against `base_dir`.
    pub fn from_kv(kv: &KvMap, base_dir: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig {
            scenario: ScenarioConfig::from_kv(&kv.section("scenario"))?,
            predictor: PredictorConfig::from_kv(&kv.section("predictor"))?,
            evolution: EvolutionConfig::from_kv(&kv.section("evolution"))?,
            ..Self::default()
        };
        let resolve = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        for (key, value) in kv.iter() {
            if let Some((section, _)) = key.split_once('.') {
                if SECTIONS.contains(&section) {
                    continue;
                }
            }
            match key {
                "seed" => cfg.seed = parse_value(key, value)?,
                "model" => cfg.model = Some(resolve(value)),
                "genome" => cfg.genome = Some(resolve(value)),
                "evaluation_episodes" => cfg.evaluation_episodes = parse_value(key, value)?,
                "horizon" => cfg.horizon = Some(parse_list(key, value)?),
                "providers" => {
                    cfg.providers = value
                        .split(';')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| match s.parse::<ProviderSpec>()? {
                            ProviderSpec::Evolved(p) => Ok(ProviderSpec::Evolved(resolve(&p.to_string_lossy()))),
                            other => Ok(other),
                        })
                        .collect::<Result<_>>()?
                }
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        let sweep = kv.section("sweep");
        for (key, value) in sweep.iter() {
            match key {
                "ammo" => cfg.sweep.ammo = AxisRange::parse(key, value)?,
                "health" => cfg.sweep.health = AxisRange::parse(key, value)?,
                "kills" => cfg.sweep.kills = AxisRange::parse(key, value)?,
                "base" => {
                    let v: Vec<u32> = parse_list(key, value)?;
                    cfg.sweep.base = Some(
                        v.try_into()
                            .map_err(|_| Error::Config("sweep.base needs ammo,health,kills".into()))?,
                    );
                }
                other => return Err(Error::Config(format!("unknown key `sweep.{other}`"))),
            }
        }
        if cfg.evaluation_episodes == 0 {
            return Err(Error::Config("evaluation_episodes must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let kv = KvMap::load(path)?;
        Self::from_kv(&kv, path.parent().unwrap_or(Path::new(".")))
    }

    /// Fully resolved configuration; parsing it back gives the same value.
    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.set("seed", self.seed);
        if let Some(p) = &self.model {
            kv.set("model", p.display());
        }
        if let Some(p) = &self.genome {
            kv.set("genome", p.display());
        }
        if !self.providers.is_empty() {
            let labels: Vec<String> = self.providers.iter().map(ProviderSpec::label).collect();
            kv.set("providers", labels.join("; "));
        }
        kv.set("evaluation_episodes", self.evaluation_episodes);
        if let Some(h) = &self.horizon {
            kv.set("horizon", join(h));
        }
        for (prefix, section) in [
            ("scenario", self.scenario.to_kv()),
            ("predictor", self.predictor.to_kv()),
            ("evolution", self.evolution.to_kv()),
        ] {
            for (k, v) in section.iter() {
                kv.set(&format!("{prefix}.{k}"), v);
            }
        }
        kv.set("sweep.ammo", self.sweep.ammo);
        kv.set("sweep.health", self.sweep.health);
        kv.set("sweep.kills", self.sweep.kills);
        if let Some(b) = self.sweep.base {
            kv.set("sweep.base", join(&b));
        }
        kv
    }
}
