use std::io::Write;

use super::{Action, EnvState, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRow {
    pub step: u32,
    pub action: Action,
    pub ammo: u32,
    pub health: u32,
    pub kills: u32,
    pub agent_x: i32,
    pub agent_y: i32,
}

impl TraceRow {
    /// Row describing `state` after `action` was applied.
    pub fn after(state: &EnvState, action: Action) -> Self {
        let m = state.measurements();
        TraceRow {
            step: state.step_count(),
            action,
            ammo: m.ammo,
            health: m.health,
            kills: m.kills,
            agent_x: state.agent().x,
            agent_y: state.agent().y,
        }
    }
}

/// Outcome of a finished episode, with an optional per-step trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeRecord {
    pub kills: u32,
    pub died: bool,
    pub steps: u32,
    pub trace: Vec<TraceRow>,
}

impl EpisodeRecord {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,action,ammo,health,kills,agent_x,agent_y")?;
        for r in &self.trace {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.step, r.action, r.ammo, r.health, r.kills, r.agent_x, r.agent_y
            )?;
        }
        Ok(())
    }
}

/// Kills minus the death penalty when the agent died.
pub fn episode_fitness(record: &EpisodeRecord, config: &ScenarioConfig) -> f64 {
    let penalty = if record.died { config.death_penalty } else { 0.0 };
    f64::from(record.kills) - penalty
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(kills: u32, died: bool) -> EpisodeRecord {
        EpisodeRecord {
            kills,
            died,
            ..Default::default()
        }
    }

    #[test]
    fn fitness_per_preset() {
        assert_eq!(episode_fitness(&record(12, true), &ScenarioConfig::original()), 12.0);
        assert_eq!(episode_fitness(&record(5, true), &ScenarioConfig::hard()), -95.0);
        assert_eq!(episode_fitness(&record(0, false), &ScenarioConfig::hard()), 0.0);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut s = EnvState::reset(&ScenarioConfig::original(), 3).unwrap();
        let mut rec = EpisodeRecord::default();
        for a in [Action::TurnLeft, Action::MoveForward] {
            s.step(a).unwrap();
            rec.trace.push(TraceRow::after(&s, a));
        }
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,action,ammo,health,kills,agent_x,agent_y");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,left,20,"));
    }
}
