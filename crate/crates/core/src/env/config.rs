use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kv::{parse_value, KvMap};

use super::MAX_HEALTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Original,
    Hard,
    NoAmmo,
    /// A configuration that does not correspond to a named preset.
    Custom,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Original => "original",
            Preset::Hard => "hard",
            Preset::NoAmmo => "no_ammo",
            Preset::Custom => "custom",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Preset::Original),
            "hard" => Ok(Preset::Hard),
            "no_ammo" => Ok(Preset::NoAmmo),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

/// Everything that defines a scenario. All presets are plain values of this
/// type and every field can be overridden from a `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub preset_name: Preset,
    pub grid_width: usize,
    pub grid_height: usize,
    /// Fixed maze seed; `None` derives the maze from each episode seed.
    pub wall_layout_seed: Option<u64>,
    /// Fraction of the walls left after carving the maze that are knocked
    /// through to open loops.
    pub maze_braid: f64,
    pub n_monsters: usize,
    pub monster_health: u32,
    pub monster_damage: u32,
    pub monster_respawn: bool,
    /// Probability per step that a monster moves toward the agent rather
    /// than randomly.
    pub monster_chase_prob: f64,
    /// Monsters farther than this (Manhattan) from the agent wander randomly.
    pub monster_sight: u32,
    pub n_ammo_packs: usize,
    pub ammo_per_pack: u32,
    pub n_health_kits: usize,
    pub health_per_kit: u32,
    pub item_respawn_steps: u32,
    pub initial_ammo: u32,
    pub initial_health: u32,
    pub attack_range: u32,
    pub episode_length: u32,
    pub death_penalty: f64,
}

impl ScenarioConfig {
    pub fn original() -> Self {
        ScenarioConfig {
            preset_name: Preset::Original,
            grid_width: 32,
            grid_height: 32,
            wall_layout_seed: None,
            maze_braid: 0.25,
            n_monsters: 8,
            monster_health: 2,
            monster_damage: 4,
            monster_respawn: true,
            monster_chase_prob: 0.5,
            monster_sight: 3,
            n_ammo_packs: 6,
            ammo_per_pack: 5,
            n_health_kits: 6,
            health_per_kit: 20,
            item_respawn_steps: 50,
            initial_ammo: 20,
            initial_health: 100,
            attack_range: 5,
            episode_length: 525,
            death_penalty: 0.0,
        }
    }

    /// Tougher monsters, a weak unarmed agent and a penalty for dying.
    pub fn hard() -> Self {
        let base = Self::original();
        ScenarioConfig {
            preset_name: Preset::Hard,
            monster_health: base.monster_health * 2,
            initial_health: 10,
            death_penalty: 100.0,
            initial_ammo: 0,
            ..base
        }
    }

    pub fn no_ammo() -> Self {
        ScenarioConfig {
            preset_name: Preset::NoAmmo,
            n_ammo_packs: 0,
            ..Self::hard()
        }
    }

    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Original | Preset::Custom => Self::original(),
            Preset::Hard => Self::hard(),
            Preset::NoAmmo => Self::no_ammo(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.grid_width < 4 || self.grid_height < 4 {
            return bad(format!(
                "grid {}x{} is smaller than 4x4",
                self.grid_width, self.grid_height
            ));
        }
        self.validate_rules()
    }

    /// Checks everything except the maze dimensions, which hand-drawn
    /// layouts define for themselves.
    pub fn validate_rules(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.initial_health == 0 || self.initial_health > MAX_HEALTH {
            return bad(format!("initial_health {} outside 1..=100", self.initial_health));
        }
        if self.monster_health == 0 {
            return bad("monster_health must be positive".into());
        }
        if self.episode_length == 0 {
            return bad("episode_length must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.maze_braid) {
            return bad(format!("maze_braid {} outside [0, 1]", self.maze_braid));
        }
        if !(0.0..=1.0).contains(&self.monster_chase_prob) {
            return bad(format!("monster_chase_prob {} outside [0, 1]", self.monster_chase_prob));
        }
        if !self.death_penalty.is_finite() || self.death_penalty < 0.0 {
            return bad(format!("death_penalty {} must be finite and >= 0", self.death_penalty));
        }
        Ok(())
    }

    /// Number of spawned entities other than the agent.
    pub fn entity_count(&self) -> usize {
        self.n_monsters + self.n_ammo_packs + self.n_health_kits
    }

    /// Lowest fitness an episode can score.
    pub fn min_fitness(&self) -> f64 {
        -self.death_penalty
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.set("preset_name", self.preset_name);
        kv.set("grid_width", self.grid_width);
        kv.set("grid_height", self.grid_height);
        kv.set(
            "wall_layout_seed",
            self.wall_layout_seed
                .map_or_else(|| "episode".to_string(), |s| s.to_string()),
        );
        kv.set("maze_braid", self.maze_braid);
        kv.set("n_monsters", self.n_monsters);
        kv.set("monster_health", self.monster_health);
        kv.set("monster_damage", self.monster_damage);
        kv.set("monster_respawn", self.monster_respawn);
        kv.set("monster_chase_prob", self.monster_chase_prob);
        kv.set("monster_sight", self.monster_sight);
        kv.set("n_ammo_packs", self.n_ammo_packs);
        kv.set("ammo_per_pack", self.ammo_per_pack);
        kv.set("n_health_kits", self.n_health_kits);
        kv.set("health_per_kit", self.health_per_kit);
        kv.set("item_respawn_steps", self.item_respawn_steps);
        kv.set("initial_ammo", self.initial_ammo);
        kv.set("initial_health", self.initial_health);
        kv.set("attack_range", self.attack_range);
        kv.set("episode_length", self.episode_length);
        kv.set("death_penalty", self.death_penalty);
        kv
    }

    /// Builds a config from `preset_name` (default `original`) and applies
    /// every other key as an override. Unknown keys are rejected.
    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        let preset: Preset = kv.get("preset_name").unwrap_or("original").parse()?;
        let mut cfg = Self::preset(preset);
        for (key, value) in kv.iter() {
            cfg.apply(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "preset_name" => self.preset_name = value.parse()?,
            "grid_width" => self.grid_width = parse_value(key, value)?,
            "grid_height" => self.grid_height = parse_value(key, value)?,
            "wall_layout_seed" => {
                self.wall_layout_seed = match value {
                    "episode" | "none" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "maze_braid" => self.maze_braid = parse_value(key, value)?,
            "n_monsters" => self.n_monsters = parse_value(key, value)?,
            "monster_health" => self.monster_health = parse_value(key, value)?,
            "monster_damage" => self.monster_damage = parse_value(key, value)?,
            "monster_respawn" => self.monster_respawn = parse_value(key, value)?,
            "monster_chase_prob" => self.monster_chase_prob = parse_value(key, value)?,
            "monster_sight" => self.monster_sight = parse_value(key, value)?,
            "n_ammo_packs" => self.n_ammo_packs = parse_value(key, value)?,
            "ammo_per_pack" => self.ammo_per_pack = parse_value(key, value)?,
            "n_health_kits" => self.n_health_kits = parse_value(key, value)?,
            "health_per_kit" => self.health_per_kit = parse_value(key, value)?,
            "item_respawn_steps" => self.item_respawn_steps = parse_value(key, value)?,
            "initial_ammo" => self.initial_ammo = parse_value(key, value)?,
            "initial_health" => self.initial_health = parse_value(key, value)?,
            "attack_range" => self.attack_range = parse_value(key, value)?,
            "episode_length" => self.episode_length = parse_value(key, value)?,
            "death_penalty" => self.death_penalty = parse_value(key, value)?,
            other => return Err(Error::Config(format!("unknown scenario key `{other}`"))),
        }
        Ok(())
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::original()
    }
}
