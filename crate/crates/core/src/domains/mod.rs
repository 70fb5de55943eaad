//! Gridworld domains: underwater sample collection (salp), shelf processing
//! (warehouse) and a simplified kitchen (overcooked).
//!
//! Every domain shares the same grid legend for `.` (floor) and `#` (wall):
//!
//! | domain     | glyph | meaning                                   |
//! |------------|-------|-------------------------------------------|
//! | salp       | `A`   | site for samples of type A                |
//! | salp       | `B`   | site for samples of type B                |
//! | salp       | `L`   | lab where samples are deposited           |
//! | salp       | `C`   | coral, walkable but damaged by residue    |
//! | warehouse  | `S`   | shelf, numbered in reading order          |
//! | warehouse  | `K`   | processing counter                        |
//! | warehouse  | `=`   | narrow corridor used by human workers     |
//! | overcooked | `T`   | tomato station                            |
//! | overcooked | `O`   | onion station                             |
//! | overcooked | `P`   | cooking pot                               |
//! | overcooked | `V`   | serving counter                           |
//! | overcooked | `D`   | dirty dishes / garbage pickup             |
//! | overcooked | `G`   | garbage bin                               |

mod build;
mod format;
mod generate;

pub use build::{build_models, BuildOptions, ACTION_NAMES};
pub use format::{parse_instance, serialize_instance};
pub use generate::generate_instance;

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DomainKind {
    Salp,
    Warehouse,
    Overcooked,
}

impl DomainKind {
    pub const ALL: [DomainKind; 3] = [
        DomainKind::Salp,
        DomainKind::Warehouse,
        DomainKind::Overcooked,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Salp => "salp",
            DomainKind::Warehouse => "warehouse",
            DomainKind::Overcooked => "overcooked",
        }
    }

    /// Glyphs allowed in this domain's grid besides `.` and `#`.
    pub fn special_glyphs(self) -> &'static [char] {
        match self {
            DomainKind::Salp => &['A', 'B', 'L', 'C'],
            DomainKind::Warehouse => &['S', 'K', '='],
            DomainKind::Overcooked => &['T', 'O', 'P', 'V', 'D', 'G'],
        }
    }

    /// Features the penalty generaliser regresses on.
    pub fn generalization_features(self) -> Vec<String> {
        let names: &[&str] = match self {
            DomainKind::Salp => &["sample", "coral"],
            DomainKind::Warehouse => &["shelf_size", "shelf_status", "corridor"],
            DomainKind::Overcooked => &["object", "bin"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "salp" => Ok(DomainKind::Salp),
            "warehouse" => Ok(DomainKind::Warehouse),
            "overcooked" => Ok(DomainKind::Overcooked),
            other => Err(Error::Input(format!("unknown domain '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SampleType {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShelfSize {
    Small,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ingredient {
    Tomato,
    Onion,
}

/// What an agent has been asked to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assignment {
    /// Collect a sample of this type and deposit it at the lab.
    Sample(SampleType),
    /// Pick up shelf `shelf`, process it at a counter and bring it back.
    Shelf { shelf: usize, size: ShelfSize },
    /// Fetch the ingredient, cook it in a pot and serve the soup.
    Cook(Ingredient),
    /// Pick up garbage and dump it in a bin.
    Clean,
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assignment::Sample(SampleType::A) => f.write_str("A"),
            Assignment::Sample(SampleType::B) => f.write_str("B"),
            Assignment::Shelf { shelf, size } => write!(
                f,
                "{shelf} {}",
                match size {
                    ShelfSize::Small => "small",
                    ShelfSize::Big => "big",
                }
            ),
            Assignment::Cook(Ingredient::Tomato) => f.write_str("cook tomato"),
            Assignment::Cook(Ingredient::Onion) => f.write_str("cook onion"),
            Assignment::Clean => f.write_str("clean"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgentSpec {
    pub id: usize,
    pub start: (usize, usize),
    pub assignment: Assignment,
}

/// `beta * ln(alpha * N + 1)` for agents with `feature = value` and every
/// `context` condition.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyLine {
    pub feature: String,
    pub value: String,
    pub beta: f64,
    pub alpha: f64,
    pub context: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainInstance {
    pub domain: DomainKind,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    /// `grid[y][x]`
    pub grid: Vec<Vec<char>>,
    pub agents: Vec<AgentSpec>,
    pub penalties: Vec<PenaltyLine>,
}

impl DomainInstance {
    pub fn glyph(&self, x: usize, y: usize) -> char {
        self.grid[y][x]
    }

    pub fn walkable(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.grid[y][x] != '#'
    }

    pub fn cells_with(&self, glyph: char) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.grid[y][x] == glyph {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Shelf cells in reading order; shelf ids index this list.
    pub fn shelves(&self) -> Vec<(usize, usize)> {
        self.cells_with('S')
    }

    /// Grid diameter used to size rollout horizons.
    pub fn diameter(&self) -> usize {
        self.width + self.height
    }

    /// Corridor component id of each cell (`None` off-corridor), with ids
    /// assigned in reading order of each component's first cell.
    pub fn corridor_ids(&self) -> (Vec<Vec<Option<usize>>>, usize) {
        let mut ids = vec![vec![None; self.width]; self.height];
        let mut next = 0;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.grid[y][x] != '=' || ids[y][x].is_some() {
                    continue;
                }
                let mut stack = vec![(x, y)];
                ids[y][x] = Some(next);
                while let Some((cx, cy)) = stack.pop() {
                    for (nx, ny) in neighbours(cx, cy, self.width, self.height) {
                        if self.grid[ny][nx] == '=' && ids[ny][nx].is_none() {
                            ids[ny][nx] = Some(next);
                            stack.push((nx, ny));
                        }
                    }
                }
                next += 1;
            }
        }
        (ids, next)
    }
}

pub(crate) fn neighbours(
    x: usize,
    y: usize,
    w: usize,
    h: usize,
) -> impl Iterator<Item = (usize, usize)> {
    let mut out = Vec::with_capacity(4);
    if y > 0 {
        out.push((x, y - 1));
    }
    if y + 1 < h {
        out.push((x, y + 1));
    }
    if x + 1 < w {
        out.push((x + 1, y));
    }
    if x > 0 {
        out.push((x - 1, y));
    }
    out.into_iter()
}

/// Number of cleaning agents in an overcooked team of `m`: a fifth of the
/// team, rounded to the nearest agent.
pub fn overcooked_cleaners(m: usize) -> usize {
    (m as f64 * 0.2).round() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cleaning_ratio() {
        assert_eq!(overcooked_cleaners(10), 2);
        assert_eq!(overcooked_cleaners(25), 5);
        assert_eq!(overcooked_cleaners(100), 20);
    }
}
