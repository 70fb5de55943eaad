//! Seeded random instances. Each attempt places the special cells, then the
//! agents; attempts that fail validation are discarded.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::build::{default_penalties, validate};
use super::{
    overcooked_cleaners, AgentSpec, Assignment, DomainInstance, DomainKind, Ingredient, SampleType,
    ShelfSize,
};
use crate::error::{Error, Result};

const MAX_ATTEMPTS: usize = 200;

pub fn generate_instance(
    domain: DomainKind,
    width: usize,
    height: usize,
    num_agents: usize,
    seed: u64,
) -> Result<DomainInstance> {
    if width < 3 || height < 3 {
        return Err(Error::Input(format!(
            "grid must be at least 3x3, got {width}x{height}"
        )));
    }
    if num_agents == 0 {
        return Err(Error::Input("need at least one agent".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(domain as u64);
    for _ in 0..MAX_ATTEMPTS {
        let attempt = match domain {
            DomainKind::Salp => salp(&mut rng, width, height, num_agents),
            DomainKind::Warehouse => warehouse(&mut rng, width, height, num_agents),
            DomainKind::Overcooked => overcooked(&mut rng, width, height, num_agents),
        };
        let Some((grid, agents)) = attempt else {
            continue;
        };
        let mut inst = DomainInstance {
            domain,
            width,
            height,
            seed,
            grid,
            agents,
            penalties: Vec::new(),
        };
        inst.penalties = default_penalties(&inst);
        if validate(&inst).is_ok() {
            return Ok(inst);
        }
    }
    Err(Error::Generation(format!(
        "no valid {domain} {width}x{height} instance with {num_agents} agents after {MAX_ATTEMPTS} attempts"
    )))
}

type Grid = Vec<Vec<char>>;

fn floor_cells(grid: &Grid) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (y, row) in grid.iter().enumerate() {
        for (x, &c) in row.iter().enumerate() {
            if c == '.' {
                out.push((x, y));
            }
        }
    }
    out
}

/// Take `n` distinct floor cells satisfying `keep`, or `None`.
fn take_cells(
    rng: &mut ChaCha8Rng,
    grid: &Grid,
    n: usize,
    keep: impl Fn(usize, usize) -> bool,
) -> Option<Vec<(usize, usize)>> {
    let mut cells: Vec<_> = floor_cells(grid)
        .into_iter()
        .filter(|&(x, y)| keep(x, y))
        .collect();
    if cells.len() < n {
        return None;
    }
    cells.shuffle(rng);
    cells.truncate(n);
    Some(cells)
}

fn place(grid: &mut Grid, cells: &[(usize, usize)], glyph: char) {
    for &(x, y) in cells {
        grid[y][x] = glyph;
    }
}

fn sprinkle_walls(rng: &mut ChaCha8Rng, grid: &mut Grid, density: f64) {
    for row in grid.iter_mut() {
        for c in row.iter_mut() {
            if *c == '.' && rng.random_bool(density) {
                *c = '#';
            }
        }
    }
}

fn starts(
    rng: &mut ChaCha8Rng,
    grid: &Grid,
    m: usize,
    keep: impl Fn(usize, usize) -> bool,
) -> Option<Vec<(usize, usize)>> {
    let cells: Vec<_> = floor_cells(grid)
        .into_iter()
        .filter(|&(x, y)| keep(x, y))
        .collect();
    if cells.is_empty() {
        return None;
    }
    Some(
        (0..m)
            .map(|_| cells[rng.random_range(0..cells.len())])
            .collect(),
    )
}

/// Lab partly ringed by coral, more coral scattered around, one or two sites
/// per sample type.
fn salp(rng: &mut ChaCha8Rng, w: usize, h: usize, m: usize) -> Option<(Grid, Vec<AgentSpec>)> {
    let mut grid = vec![vec!['.'; w]; h];
    let (lx, ly) = (rng.random_range(0..w), rng.random_range(0..h));
    grid[ly][lx] = 'L';
    for (nx, ny) in super::neighbours(lx, ly, w, h) {
        if rng.random_bool(0.6) {
            grid[ny][nx] = 'C';
        }
    }
    for row in grid.iter_mut() {
        for c in row.iter_mut() {
            if *c == '.' && rng.random_bool(0.12) {
                *c = 'C';
            }
        }
    }
    sprinkle_walls(rng, &mut grid, 0.05);
    let sites = 1 + usize::from(w * h >= 64);
    let a = take_cells(rng, &grid, sites, |_, _| true)?;
    place(&mut grid, &a, 'A');
    let b = take_cells(rng, &grid, sites, |_, _| true)?;
    place(&mut grid, &b, 'B');
    let starts = starts(rng, &grid, m, |_, _| true)?;
    let agents = starts
        .into_iter()
        .enumerate()
        .map(|(id, start)| {
            let t = if rng.random_bool(0.5) {
                SampleType::A
            } else {
                SampleType::B
            };
            AgentSpec {
                id,
                start,
                assignment: Assignment::Sample(t),
            }
        })
        .collect();
    Some((grid, agents))
}

/// Shelves west of a wall band, counters east of it; the band is crossed
/// only through corridor rows at random heights.
fn warehouse(rng: &mut ChaCha8Rng, w: usize, h: usize, m: usize) -> Option<(Grid, Vec<AgentSpec>)> {
    let mut grid = vec![vec!['.'; w]; h];
    let band = if w >= 7 {
        (w / 2 - 1)..(w / 2 + 2)
    } else {
        (w / 2)..(w / 2 + 1)
    };
    for row in grid.iter_mut() {
        for x in band.clone() {
            row[x] = '#';
        }
    }
    let mut rows: Vec<usize> = (0..h).collect();
    rows.shuffle(rng);
    let corridors = (1 + h / 6).min(3);
    for &y in &rows[..corridors] {
        for x in band.clone() {
            grid[y][x] = '=';
        }
    }
    let west = band.start;
    let east = band.end;
    let shelves = take_cells(rng, &grid, m, |x, _| x < west)?;
    // shelf ids follow reading order, so sort before placing
    let mut sorted = shelves.clone();
    sorted.sort_by_key(|&(x, y)| (y, x));
    place(&mut grid, &sorted, 'S');
    let counters = take_cells(rng, &grid, 1 + usize::from(h >= 8), |x, _| x >= east)?;
    place(&mut grid, &counters, 'K');
    let starts = starts(rng, &grid, m, |x, _| x < west)?;
    let mut ids: Vec<usize> = (0..m).collect();
    ids.shuffle(rng);
    let agents = starts
        .into_iter()
        .zip(ids)
        .enumerate()
        .map(|(id, (start, shelf))| {
            let size = if rng.random_bool(0.5) {
                ShelfSize::Big
            } else {
                ShelfSize::Small
            };
            AgentSpec {
                id,
                start,
                assignment: Assignment::Shelf { shelf, size },
            }
        })
        .collect();
    Some((grid, agents))
}

/// Kitchen stations at random cells with one to three garbage bins.
fn overcooked(
    rng: &mut ChaCha8Rng,
    w: usize,
    h: usize,
    m: usize,
) -> Option<(Grid, Vec<AgentSpec>)> {
    let mut grid = vec![vec!['.'; w]; h];
    sprinkle_walls(rng, &mut grid, 0.05);
    for glyph in ['T', 'O', 'P', 'V', 'D'] {
        let c = take_cells(rng, &grid, 1, |_, _| true)?;
        place(&mut grid, &c, glyph);
    }
    let bins = rng.random_range(1..=(w * h / 30).max(1));
    let c = take_cells(rng, &grid, bins, |_, _| true)?;
    place(&mut grid, &c, 'G');
    let starts = starts(rng, &grid, m, |_, _| true)?;
    let cleaners = overcooked_cleaners(m);
    let agents = starts
        .into_iter()
        .enumerate()
        .map(|(id, start)| {
            let assignment = if id < cleaners {
                Assignment::Clean
            } else if rng.random_bool(0.5) {
                Assignment::Cook(Ingredient::Tomato)
            } else {
                Assignment::Cook(Ingredient::Onion)
            };
            AgentSpec {
                id,
                start,
                assignment,
            }
        })
        .collect();
    Some((grid, agents))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{parse_instance, serialize_instance};

    #[test]
    fn deterministic_and_round_trips() {
        for d in DomainKind::ALL {
            let a = generate_instance(d, 8, 7, 4, 11).unwrap();
            let b = generate_instance(d, 8, 7, 4, 11).unwrap();
            assert_eq!(a, b);
            assert_eq!(parse_instance(&serialize_instance(&a)).unwrap(), a);
        }
    }

    #[test]
    fn salp_coral_varies_with_seed() {
        let grids: Vec<_> = (0..5)
            .map(|s| {
                generate_instance(DomainKind::Salp, 20, 20, 3, s)
                    .unwrap()
                    .cells_with('C')
            })
            .collect();
        for i in 0..5 {
            for j in i + 1..5 {
                assert_ne!(grids[i], grids[j]);
            }
        }
    }

    #[test]
    fn warehouse_corridors_vary_with_seed() {
        let a = generate_instance(DomainKind::Warehouse, 15, 15, 5, 1)
            .unwrap()
            .cells_with('=');
        let differs = (2..8).any(|s| {
            generate_instance(DomainKind::Warehouse, 15, 15, 5, s)
                .unwrap()
                .cells_with('=')
                != a
        });
        assert!(differs);
    }

    #[test]
    fn overcooked_team_split() {
        let inst = generate_instance(DomainKind::Overcooked, 15, 15, 10, 3).unwrap();
        let cleaning = inst
            .agents
            .iter()
            .filter(|a| a.assignment == Assignment::Clean)
            .count();
        assert_eq!(cleaning, 2);
    }

    #[test]
    fn infeasible_requests_fail() {
        assert!(generate_instance(DomainKind::Salp, 2, 5, 1, 0).is_err());
        assert!(matches!(
            generate_instance(DomainKind::Warehouse, 3, 3, 9, 0),
            Err(Error::Generation(_))
        ));
    }
}
