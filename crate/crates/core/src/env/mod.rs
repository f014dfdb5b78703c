//! Seeded gridworld battle simulator.
//!
//! An agent moves through a maze populated by monsters, ammunition packs and
//! health kits. Its performance is tracked by three measurements: ammunition,
//! health and kills.

mod config;
mod grid;
mod observe;
mod sim;
mod trace;

pub use config::{Preset, ScenarioConfig};
pub use grid::{Grid, Pos};
pub use observe::{Observation, AMMO_SCALE, CHANNELS, DEFAULT_RADIUS, KILLS_SCALE};
pub use sim::{EnvState, Item, ItemKind, Monster, StepOutcome};
pub use trace::{episode_fitness, EpisodeRecord, TraceRow};

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// The measurement triple `(ammo, health, kills)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Measurements {
    pub ammo: u32,
    pub health: u32,
    pub kills: u32,
}

pub const MAX_HEALTH: u32 = 100;

impl Measurements {
    pub fn new(ammo: u32, health: u32, kills: u32) -> Self {
        Self { ammo, health, kills }
    }

    /// Measurements in the normalized units shared by observations, predictor
    /// targets and the goal network inputs, clipped to `[0, 1]`.
    pub fn normalized(&self) -> [f64; 3] {
        let raw = self.scaled();
        [raw[0].min(1.0), raw[1].min(1.0), raw[2].min(1.0)]
    }

    /// Normalized units without clipping; differences of these are the
    /// predictor's regression targets.
    pub fn scaled(&self) -> [f64; 3] {
        [
            f64::from(self.ammo) / AMMO_SCALE,
            f64::from(self.health) / f64::from(MAX_HEALTH),
            f64::from(self.kills) / KILLS_SCALE,
        ]
    }
}

impl fmt::Display for Measurements {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(ammo {}, health {}, kills {})", self.ammo, self.health, self.kills)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    MoveBackward,
    Attack,
    NoOp,
}

impl Action {
    pub const COUNT: usize = 6;
    pub const ALL: [Action; Action::COUNT] = [
        Action::MoveForward,
        Action::TurnLeft,
        Action::TurnRight,
        Action::MoveBackward,
        Action::Attack,
        Action::NoOp,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::MoveForward => "forward",
            Action::TurnLeft => "left",
            Action::TurnRight => "right",
            Action::MoveBackward => "backward",
            Action::Attack => "attack",
            Action::NoOp => "noop",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown action `{s}`")))
    }
}

/// Compass heading; `y` grows southwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::North => (0, -1),
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
        }
    }

    pub fn left(self) -> Heading {
        match self {
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
            Heading::East => Heading::North,
        }
    }

    pub fn right(self) -> Heading {
        match self {
            Heading::North => Heading::East,
            Heading::East => Heading::South,
            Heading::South => Heading::West,
            Heading::West => Heading::North,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_indices_round_trip() {
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(Action::from_index(i), Some(*a));
            assert_eq!(a.name().parse::<Action>().unwrap(), *a);
        }
        assert_eq!(Action::from_index(6), None);
    }

    #[test]
    fn turning_four_times_is_identity() {
        for h in Heading::ALL {
            assert_eq!(h.left().left().left().left(), h);
            assert_eq!(h.left().right(), h);
        }
    }

    #[test]
    fn normalization_endpoints() {
        assert_eq!(Measurements::new(0, 100, 0).normalized(), [0.0, 1.0, 0.0]);
        assert_eq!(Measurements::new(80, 50, 50).normalized(), [1.0, 0.5, 1.0]);
        assert_eq!(Measurements::new(80, 50, 50).scaled(), [2.0, 0.5, 2.0]);
    }
}
