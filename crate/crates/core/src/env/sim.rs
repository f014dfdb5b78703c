use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed;

use super::{Action, Grid, Heading, Measurements, Pos, ScenarioConfig, MAX_HEALTH};

/// Monsters never spawn or respawn closer than this to the agent, unless the
/// map leaves no other choice.
const SPAWN_CLEARANCE: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monster {
    pub pos: Pos,
    pub health: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ItemKind {
    Ammo,
    Health,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub pos: Pos,
    pub kind: ItemKind,
    /// Steps until the item reappears; zero while it is on the map.
    pub respawn_in: u32,
}

impl Item {
    pub fn is_present(&self) -> bool {
        self.respawn_in == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub measurements: Measurements,
    pub done: bool,
}

/// Complete simulator state. Equal configs and seeds give bit-identical
/// states, and equal action sequences keep them identical.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    config: ScenarioConfig,
    grid: Grid,
    agent: Pos,
    heading: Heading,
    monsters: Vec<Monster>,
    items: Vec<Item>,
    measurements: Measurements,
    step: u32,
    alive: bool,
    done: bool,
    spawnable: Vec<Pos>,
    rng: ChaCha8Rng,
}

impl EnvState {
    /// Starts a new episode.
    pub fn reset(config: &ScenarioConfig, seed: u64) -> Result<EnvState> {
        config.validate()?;
        let maze_seed = config.wall_layout_seed.unwrap_or_else(|| seed::derive(seed, "maze", 0));
        let grid = Grid::maze(
            config.grid_width,
            config.grid_height,
            config.maze_braid,
            &mut seed::rng(maze_seed),
        );
        let mut rng = seed::rng(seed::derive(seed, "env", 0));

        let free: Vec<Pos> = grid.free_cells().collect();
        let agent = *free
            .choose(&mut rng)
            .ok_or_else(|| Error::Config("layout has no free cells".into()))?;
        let dist = grid.distances_from(agent);
        let spawnable: Vec<Pos> = free.into_iter().filter(|&p| dist[grid.index(p)] != u32::MAX).collect();
        if config.entity_count() + 1 > spawnable.len() {
            return Err(Error::Config(format!(
                "{} entities do not fit in {} reachable cells",
                config.entity_count() + 1,
                spawnable.len()
            )));
        }
        let heading = *Heading::ALL.choose(&mut rng).expect("non-empty");

        let mut state = EnvState {
            config: config.clone(),
            grid,
            agent,
            heading,
            monsters: Vec::with_capacity(config.n_monsters),
            items: Vec::with_capacity(config.n_ammo_packs + config.n_health_kits),
            measurements: Measurements::new(config.initial_ammo, config.initial_health, 0),
            step: 0,
            alive: true,
            done: false,
            spawnable,
            rng,
        };
        for _ in 0..config.n_monsters {
            let pos = state.monster_spawn_cell();
            state.monsters.push(Monster {
                pos,
                health: config.monster_health,
            });
        }
        let kinds = std::iter::repeat_n(ItemKind::Ammo, config.n_ammo_packs)
            .chain(std::iter::repeat_n(ItemKind::Health, config.n_health_kits));
        for kind in kinds {
            let pos = state.item_spawn_cell();
            state.items.push(Item {
                pos,
                kind,
                respawn_in: 0,
            });
        }
        Ok(state)
    }

    /// Builds a state from a hand-drawn map: `#` wall, `.` floor, `^ > v <`
    /// the agent and its heading, `M` monster, `a` ammo pack, `h` health kit.
    /// Entity counts in the returned config follow the map.
    pub fn from_layout(config: &ScenarioConfig, layout: &str, seed: u64) -> Result<EnvState> {
        let grid = Grid::from_ascii(layout)?;
        let mut agent = None;
        let mut monsters = Vec::new();
        let mut items = Vec::new();
        let rows = layout.lines().map(str::trim).filter(|l| !l.is_empty());
        for (y, row) in rows.enumerate() {
            for (x, c) in row.chars().enumerate() {
                let pos = Pos::new(x as i32, y as i32);
                match c {
                    '^' => agent = Some((pos, Heading::North)),
                    '>' => agent = Some((pos, Heading::East)),
                    'v' => agent = Some((pos, Heading::South)),
                    '<' => agent = Some((pos, Heading::West)),
                    'M' => monsters.push(Monster {
                        pos,
                        health: config.monster_health,
                    }),
                    'a' => items.push(Item {
                        pos,
                        kind: ItemKind::Ammo,
                        respawn_in: 0,
                    }),
                    'h' => items.push(Item {
                        pos,
                        kind: ItemKind::Health,
                        respawn_in: 0,
                    }),
                    '#' | '.' => {}
                    other => return Err(Error::parse(y + 1, format!("unknown layout symbol `{other}`"))),
                }
            }
        }
        let (agent, heading) = agent.ok_or_else(|| Error::Config("layout has no agent".into()))?;
        let mut config = config.clone();
        config.grid_width = grid.width();
        config.grid_height = grid.height();
        config.n_monsters = monsters.len();
        config.n_ammo_packs = items.iter().filter(|i| i.kind == ItemKind::Ammo).count();
        config.n_health_kits = items.len() - config.n_ammo_packs;
        config.validate_rules()?;
        let dist = grid.distances_from(agent);
        let spawnable: Vec<Pos> = grid.free_cells().filter(|&p| dist[grid.index(p)] != u32::MAX).collect();
        Ok(EnvState {
            measurements: Measurements::new(config.initial_ammo, config.initial_health, 0),
            config,
            grid,
            agent,
            heading,
            monsters,
            items,
            step: 0,
            alive: true,
            done: false,
            spawnable,
            rng: seed::rng(seed::derive(seed, "env", 0)),
        })
    }

    /// Replaces the random stream driving monsters and respawns, e.g. to
    /// branch independent continuations from one state.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = seed::rng(seed);
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn agent(&self) -> Pos {
        self.agent
    }

    pub fn heading(&self) -> Heading {
        self.heading
    }

    pub fn monsters(&self) -> &[Monster] {
        &self.monsters
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn measurements(&self) -> Measurements {
        self.measurements
    }

    pub fn step_count(&self) -> u32 {
        self.step
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Free cells reachable from the agent's spawn point.
    pub fn spawnable_cells(&self) -> &[Pos] {
        &self.spawnable
    }

    pub fn monster_at(&self, p: Pos) -> Option<usize> {
        self.monsters.iter().position(|m| m.pos == p)
    }

    pub fn item_at(&self, p: Pos) -> Option<&Item> {
        self.items.iter().find(|i| i.is_present() && i.pos == p)
    }

    /// Advances the episode by one step.
    ///
    /// The agent acts first (move, turn or shoot, then pick up whatever lies
    /// on its cell), then every monster either hits the agent if adjacent or
    /// moves, then item respawn timers tick.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Usage("step called on a finished episode".into()));
        }
        match action {
            Action::MoveForward => self.try_move(self.heading),
            Action::MoveBackward => self.try_move(self.heading.left().left()),
            Action::TurnLeft => self.heading = self.heading.left(),
            Action::TurnRight => self.heading = self.heading.right(),
            Action::Attack => self.attack(),
            Action::NoOp => {}
        }
        self.move_monsters();
        self.tick_items();

        self.step += 1;
        if self.measurements.health == 0 {
            self.alive = false;
            self.done = true;
        } else if self.step >= self.config.episode_length {
            self.done = true;
        }
        Ok(StepOutcome {
            measurements: self.measurements,
            done: self.done,
        })
    }

    fn blocked(&self, p: Pos) -> bool {
        self.grid.is_wall(p) || self.monster_at(p).is_some()
    }

    fn try_move(&mut self, heading: Heading) {
        let (dx, dy) = heading.delta();
        let target = self.agent.offset(dx, dy);
        if self.blocked(target) {
            return;
        }
        self.agent = target;
        let cfg = &self.config;
        if let Some(item) = self.items.iter_mut().find(|i| i.is_present() && i.pos == target) {
            match item.kind {
                ItemKind::Ammo => self.measurements.ammo += cfg.ammo_per_pack,
                ItemKind::Health => {
                    self.measurements.health = (self.measurements.health + cfg.health_per_kit).min(MAX_HEALTH)
                }
            }
            item.respawn_in = cfg.item_respawn_steps.max(1);
        }
    }

    fn attack(&mut self) {
        if self.measurements.ammo == 0 {
            return;
        }
        self.measurements.ammo -= 1;
        let (dx, dy) = self.heading.delta();
        for d in 1..=self.config.attack_range as i32 {
            let p = self.agent.offset(dx * d, dy * d);
            if self.grid.is_wall(p) {
                return;
            }
            if let Some(i) = self.monster_at(p) {
                self.monsters[i].health -= 1;
                if self.monsters[i].health == 0 {
                    self.measurements.kills += 1;
                    if self.config.monster_respawn {
                        self.monsters[i].pos = Pos::new(-1, -1);
                        let pos = self.monster_spawn_cell();
                        self.monsters[i] = Monster {
                            pos,
                            health: self.config.monster_health,
                        };
                    } else {
                        self.monsters.remove(i);
                    }
                }
                return;
            }
        }
    }

    fn move_monsters(&mut self) {
        for i in 0..self.monsters.len() {
            let pos = self.monsters[i].pos;
            let dist = pos.manhattan(self.agent);
            if dist == 1 {
                self.measurements.health = self.measurements.health.saturating_sub(self.config.monster_damage);
                continue;
            }
            let chase = dist <= self.config.monster_sight && self.rng.gen_bool(self.config.monster_chase_prob);
            let target = if chase {
                self.chase_step(pos)
            } else {
                let (dx, dy) = Heading::ALL[self.rng.gen_range(0..4)].delta();
                Some(pos.offset(dx, dy))
            };
            if let Some(t) = target {
                if t != self.agent && !self.blocked(t) {
                    self.monsters[i].pos = t;
                }
            }
        }
    }

    /// Greedy step that shrinks the larger axis gap to the agent first.
    fn chase_step(&self, from: Pos) -> Option<Pos> {
        let gx = self.agent.x - from.x;
        let gy = self.agent.y - from.y;
        let along_x = (gx != 0).then(|| from.offset(gx.signum(), 0));
        let along_y = (gy != 0).then(|| from.offset(0, gy.signum()));
        let (first, second) = if gx.abs() >= gy.abs() {
            (along_x, along_y)
        } else {
            (along_y, along_x)
        };
        [first, second]
            .into_iter()
            .flatten()
            .find(|&p| p != self.agent && !self.blocked(p))
    }

    fn tick_items(&mut self) {
        for i in 0..self.items.len() {
            if self.items[i].respawn_in == 0 {
                continue;
            }
            self.items[i].respawn_in -= 1;
            if self.items[i].respawn_in == 0 {
                self.items[i].respawn_in = u32::MAX;
                let pos = self.item_spawn_cell();
                self.items[i].pos = pos;
                self.items[i].respawn_in = 0;
            }
        }
    }

    fn occupied(&self, p: Pos) -> bool {
        p == self.agent || self.monster_at(p).is_some() || self.items.iter().any(|i| i.is_present() && i.pos == p)
    }

    fn monster_spawn_cell(&mut self) -> Pos {
        let clear = SPAWN_CLEARANCE.min(self.config.grid_width.max(self.config.grid_height) as u32 / 4);
        for _ in 0..64 {
            let p = self.spawnable[self.rng.gen_range(0..self.spawnable.len())];
            if p.manhattan(self.agent) >= clear && !self.occupied(p) {
                return p;
            }
        }
        self.any_unoccupied_cell()
    }

    fn item_spawn_cell(&mut self) -> Pos {
        for _ in 0..64 {
            let p = self.spawnable[self.rng.gen_range(0..self.spawnable.len())];
            if !self.occupied(p) {
                return p;
            }
        }
        self.any_unoccupied_cell()
    }

    fn any_unoccupied_cell(&mut self) -> Pos {
        let open: Vec<Pos> = self.spawnable.iter().copied().filter(|&p| !self.occupied(p)).collect();
        // Entity counts are validated against the reachable area at reset, so
        // a free cell always exists.
        *open.choose(&mut self.rng).unwrap_or(&self.spawnable[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> ScenarioConfig {
        ScenarioConfig {
            monster_chase_prob: 0.0,
            ..ScenarioConfig::original()
        }
    }

    #[test]
    fn presets_start_with_expected_measurements() {
        let s = EnvState::reset(&ScenarioConfig::original(), 7).unwrap();
        assert_eq!(s.measurements(), Measurements::new(20, 100, 0));
        let s = EnvState::reset(&ScenarioConfig::hard(), 7).unwrap();
        assert_eq!(s.measurements(), Measurements::new(0, 10, 0));
        for seed in 0..5 {
            let s = EnvState::reset(&ScenarioConfig::no_ammo(), seed).unwrap();
            assert!(s.items().iter().all(|i| i.kind != ItemKind::Ammo));
        }
    }

    #[test]
    fn reset_is_deterministic() {
        let a = EnvState::reset(&ScenarioConfig::original(), 11).unwrap();
        let b = EnvState::reset(&ScenarioConfig::original(), 11).unwrap();
        assert_eq!(a, b);
        let c = EnvState::reset(&ScenarioConfig::original(), 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn overfull_config_is_rejected() {
        let cfg = ScenarioConfig {
            grid_width: 7,
            grid_height: 7,
            n_monsters: 30,
            ..ScenarioConfig::original()
        };
        assert!(matches!(EnvState::reset(&cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn blocked_move_only_advances_time() {
        let mut s = EnvState::from_layout(&quiet(), "#####\n#.^.#\n#####", 0).unwrap();
        let out = s.step(Action::MoveForward).unwrap();
        assert_eq!(s.agent(), Pos::new(2, 1));
        assert_eq!(s.step_count(), 1);
        assert_eq!(out.measurements, Measurements::new(20, 100, 0));
    }

    #[test]
    fn attack_without_ammo_changes_nothing() {
        let cfg = ScenarioConfig {
            initial_ammo: 0,
            ..quiet()
        };
        let mut s = EnvState::from_layout(&cfg, "#######\n#>..M.#\n#######", 0).unwrap();
        s.step(Action::Attack).unwrap();
        assert_eq!(s.measurements(), Measurements::new(0, 100, 0));
        assert_eq!(s.monsters()[0].health, 2);
    }

    #[test]
    fn adjacent_kill_with_one_hit_point() {
        let cfg = ScenarioConfig {
            initial_ammo: 3,
            monster_health: 1,
            ..quiet()
        };
        let layout = "\
            ##########
            #>M......#
            #........#
            #........#
            #........#
            ##########";
        let mut s = EnvState::from_layout(&cfg, layout, 5).unwrap();
        let out = s.step(Action::Attack).unwrap();
        assert_eq!(out.measurements, Measurements::new(2, 100, 1));
        assert_ne!(s.monsters()[0].pos, Pos::new(2, 1));
        assert_eq!(s.monsters()[0].health, 1);
    }

    #[test]
    fn attack_range_and_walls_limit_shots() {
        let cfg = ScenarioConfig {
            monster_health: 5,
            ..quiet()
        };
        let mut far = EnvState::from_layout(&cfg, "##########\n#>.....M.#\n##########", 0).unwrap();
        far.step(Action::Attack).unwrap();
        assert_eq!(far.monsters()[0].health, 5, "six cells away is out of range");
        assert_eq!(far.measurements().ammo, 19);

        let mut near = EnvState::from_layout(&cfg, "##########\n#>....M..#\n##########", 0).unwrap();
        near.step(Action::Attack).unwrap();
        assert_eq!(near.monsters()[0].health, 4);

        let mut walled = EnvState::from_layout(&cfg, "#########\n#>.#.M..#\n#########", 0).unwrap();
        walled.step(Action::Attack).unwrap();
        assert_eq!(walled.monsters()[0].health, 5);
    }

    #[test]
    fn pickups_apply_and_respawn() {
        let cfg = ScenarioConfig {
            initial_health: 90,
            item_respawn_steps: 3,
            ..quiet()
        };
        let mut s = EnvState::from_layout(&cfg, "#######\n#>ah..#\n#######", 0).unwrap();
        s.step(Action::MoveForward).unwrap();
        assert_eq!(s.measurements().ammo, 25);
        s.step(Action::MoveForward).unwrap();
        assert_eq!(s.measurements().health, 100, "health is capped");
        assert!(s.items().iter().all(|i| !i.is_present()));
        s.step(Action::NoOp).unwrap();
        s.step(Action::NoOp).unwrap();
        assert_eq!(s.items()[0].respawn_in, 0);
        assert!(s.items().iter().all(|i| i.is_present()));
    }

    #[test]
    fn adjacent_monster_hits_and_death_ends_episode() {
        let cfg = ScenarioConfig {
            initial_health: 10,
            initial_ammo: 0,
            ..quiet()
        };
        let mut s = EnvState::from_layout(&cfg, "#####\n#^M.#\n#####", 0).unwrap();
        assert_eq!(s.step(Action::NoOp).unwrap().measurements.health, 6);
        assert_eq!(s.step(Action::NoOp).unwrap().measurements.health, 2);
        let out = s.step(Action::NoOp).unwrap();
        assert_eq!(out.measurements.health, 0);
        assert!(out.done && !s.is_alive());
        assert!(matches!(s.step(Action::NoOp), Err(Error::Usage(_))));
    }

    #[test]
    fn episode_ends_at_length() {
        let cfg = ScenarioConfig {
            episode_length: 3,
            ..quiet()
        };
        let mut s = EnvState::from_layout(&cfg, "#####\n#^..#\n#####", 0).unwrap();
        assert!(!s.step(Action::NoOp).unwrap().done);
        assert!(!s.step(Action::NoOp).unwrap().done);
        assert!(s.step(Action::NoOp).unwrap().done);
        assert!(s.is_alive());
    }
}
