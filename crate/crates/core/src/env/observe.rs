use super::{EnvState, ItemKind};

/// Normalization divisor for ammunition.
pub const AMMO_SCALE: f64 = 40.0;
/// Normalization divisor for kills.
pub const KILLS_SCALE: f64 = 25.0;
pub const DEFAULT_RADIUS: usize = 4;
/// Occupancy channels: wall, monster, ammo pack, health kit.
pub const CHANNELS: usize = 4;

const WALL: usize = 0;
const MONSTER: usize = 1;
const AMMO: usize = 2;
const HEALTH: usize = 3;

/// Egocentric view of the agent's surroundings.
///
/// `values` holds four `(2R+1)×(2R+1)` occupancy planes, channel-major then
/// row-major. Row 0 is the farthest row ahead of the agent, column 0 the
/// farthest to its left, so the agent sits at the centre facing "up". The
/// last three entries are the normalized measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    radius: usize,
    values: Vec<f64>,
}

impl Observation {
    pub fn len_for(radius: usize) -> usize {
        let side = 2 * radius + 1;
        CHANNELS * side * side + 3
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Occupancy of `channel` at window cell `(row, col)`.
    pub fn cell(&self, channel: usize, row: usize, col: usize) -> f64 {
        let side = 2 * self.radius + 1;
        self.values[channel * side * side + row * side + col]
    }

    pub fn measurements(&self) -> [f64; 3] {
        let n = self.values.len();
        [self.values[n - 3], self.values[n - 2], self.values[n - 1]]
    }
}

impl EnvState {
    pub fn observe(&self, radius: usize) -> Observation {
        let side = 2 * radius + 1;
        let plane = side * side;
        let mut values = vec![0.0; Observation::len_for(radius)];
        let r = radius as i32;
        let (fx, fy) = self.heading().delta();
        // Right of heading (fx, fy) with y pointing south is (-fy, fx).
        let (rx, ry) = (-fy, fx);
        let agent = self.agent();
        let to_window = |px: i32, py: i32| -> Option<usize> {
            let (dx, dy) = (px - agent.x, py - agent.y);
            let ahead = dx * fx + dy * fy;
            let right = dx * rx + dy * ry;
            if ahead.abs() > r || right.abs() > r {
                return None;
            }
            Some(((r - ahead) * side as i32 + (right + r)) as usize)
        };

        for row in 0..side as i32 {
            for col in 0..side as i32 {
                let ahead = r - row;
                let right = col - r;
                let p = agent.offset(ahead * fx + right * rx, ahead * fy + right * ry);
                if self.grid().is_wall(p) {
                    values[WALL * plane + (row as usize) * side + col as usize] = 1.0;
                }
            }
        }
        for m in self.monsters() {
            if let Some(i) = to_window(m.pos.x, m.pos.y) {
                values[MONSTER * plane + i] = 1.0;
            }
        }
        for item in self.items().iter().filter(|i| i.is_present()) {
            if let Some(i) = to_window(item.pos.x, item.pos.y) {
                let ch = match item.kind {
                    ItemKind::Ammo => AMMO,
                    ItemKind::Health => HEALTH,
                };
                values[ch * plane + i] = 1.0;
            }
        }
        let m = self.measurements().normalized();
        let n = values.len();
        values[n - 3..].copy_from_slice(&m);
        Observation { radius, values }
    }
}
