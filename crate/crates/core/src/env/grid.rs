use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Pos { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Pos {
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

/// Static wall layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    width: usize,
    height: usize,
    walls: Vec<bool>,
}

/// Side length of a maze room in cells, excluding its wall.
const ROOM: usize = 2;
const PITCH: usize = ROOM + 1;

impl Grid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    /// Out-of-bounds cells count as walls.
    pub fn is_wall(&self, p: Pos) -> bool {
        !self.in_bounds(p) || self.walls[p.y as usize * self.width + p.x as usize]
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width)
                .map(move |x| Pos::new(x as i32, y as i32))
                .filter(|&p| !self.is_wall(p))
        })
    }

    /// Generates a braided maze of 2-cell-wide corridors.
    ///
    /// Rooms sit on a 3-cell pitch; a randomized depth-first search opens a
    /// spanning tree of doorways, then a fraction of the remaining walls
    /// between rooms (`braid`, in `[0, 1]`) is removed so the maze has loops.
    /// Cells beyond the last full room are walls.
    pub fn maze<R: Rng>(width: usize, height: usize, braid: f64, rng: &mut R) -> Grid {
        let rooms_x = (width - 1) / PITCH;
        let rooms_y = (height - 1) / PITCH;
        let mut grid = Grid {
            width,
            height,
            walls: vec![true; width * height],
        };
        for ry in 0..rooms_y {
            for rx in 0..rooms_x {
                for dy in 0..ROOM {
                    for dx in 0..ROOM {
                        grid.set_free(1 + rx * PITCH + dx, 1 + ry * PITCH + dy);
                    }
                }
            }
        }
        if rooms_x == 0 || rooms_y == 0 {
            return grid;
        }

        let mut visited = vec![false; rooms_x * rooms_y];
        let mut stack = vec![(0usize, 0usize)];
        visited[0] = true;
        let mut closed: Vec<((usize, usize), (usize, usize))> = Vec::new();
        while let Some(&(cx, cy)) = stack.last() {
            let mut next = Vec::with_capacity(4);
            if cx > 0 && !visited[cy * rooms_x + cx - 1] {
                next.push((cx - 1, cy));
            }
            if cx + 1 < rooms_x && !visited[cy * rooms_x + cx + 1] {
                next.push((cx + 1, cy));
            }
            if cy > 0 && !visited[(cy - 1) * rooms_x + cx] {
                next.push((cx, cy - 1));
            }
            if cy + 1 < rooms_y && !visited[(cy + 1) * rooms_x + cx] {
                next.push((cx, cy + 1));
            }
            match next.choose(rng) {
                Some(&(nx, ny)) => {
                    visited[ny * rooms_x + nx] = true;
                    grid.open_between((cx, cy), (nx, ny));
                    stack.push((nx, ny));
                }
                None => {
                    stack.pop();
                }
            }
        }
        for ry in 0..rooms_y {
            for rx in 0..rooms_x {
                if rx + 1 < rooms_x && !grid.is_open((rx, ry), (rx + 1, ry)) {
                    closed.push(((rx, ry), (rx + 1, ry)));
                }
                if ry + 1 < rooms_y && !grid.is_open((rx, ry), (rx, ry + 1)) {
                    closed.push(((rx, ry), (rx, ry + 1)));
                }
            }
        }
        for (a, b) in closed {
            if rng.gen_bool(braid) {
                grid.open_between(a, b);
            }
        }
        grid
    }

    /// Parses a layout drawn with `#` for walls; any other character is a
    /// free cell. Rows must have equal length.
    pub fn from_ascii(text: &str) -> Result<Grid> {
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        if width == 0 {
            return Err(Error::Config("empty layout".into()));
        }
        let mut walls = Vec::with_capacity(width * height);
        for (i, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::parse(i + 1, "layout rows differ in length"));
            }
            walls.extend(row.chars().map(|c| c == '#'));
        }
        Ok(Grid { width, height, walls })
    }

    /// Breadth-first distances from `start` over free cells; `u32::MAX` marks
    /// unreachable cells.
    pub fn distances_from(&self, start: Pos) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.width * self.height];
        if self.is_wall(start) {
            return dist;
        }
        let mut queue = VecDeque::new();
        dist[self.index(start)] = 0;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            let d = dist[self.index(p)];
            for (dx, dy) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
                let q = p.offset(dx, dy);
                if !self.is_wall(q) && dist[self.index(q)] == u32::MAX {
                    dist[self.index(q)] = d + 1;
                    queue.push_back(q);
                }
            }
        }
        dist
    }

    /// True when every free cell is reachable from every other.
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.free_cells().next() else {
            return false;
        };
        let dist = self.distances_from(start);
        self.free_cells().all(|p| dist[self.index(p)] != u32::MAX)
    }

    pub(crate) fn index(&self, p: Pos) -> usize {
        p.y as usize * self.width + p.x as usize
    }

    fn set_free(&mut self, x: usize, y: usize) {
        if x < self.width && y < self.height {
            self.walls[y * self.width + x] = false;
        }
    }

    fn doorway(a: (usize, usize), b: (usize, usize)) -> [(usize, usize); ROOM] {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo.0 != hi.0 {
            let x = 1 + lo.0 * PITCH + ROOM;
            let y0 = 1 + lo.1 * PITCH;
            std::array::from_fn(|i| (x, y0 + i))
        } else {
            let y = 1 + lo.1 * PITCH + ROOM;
            let x0 = 1 + lo.0 * PITCH;
            std::array::from_fn(|i| (x0 + i, y))
        }
    }

    fn open_between(&mut self, a: (usize, usize), b: (usize, usize)) {
        for (x, y) in Self::doorway(a, b) {
            self.set_free(x, y);
        }
    }

    fn is_open(&self, a: (usize, usize), b: (usize, usize)) -> bool {
        let (x, y) = Self::doorway(a, b)[0];
        !self.walls[y * self.width + x]
    }
}
