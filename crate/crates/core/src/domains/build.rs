//! Compiling a [`DomainInstance`] into per-agent task MDPs, the feature
//! schema and the penalty model.
//!
//! Every domain uses the same five actions and deterministic 4-connected
//! moves; bumping into a wall or the border leaves the agent in place. The
//! last action interacts with whatever is on the agent's current cell. Each
//! state enumerates the full product of the agent's feature values over the
//! walkable cells, so combinations the agent can never produce (say, carrying
//! the other sample type) exist as states but are unreachable.

use std::collections::{HashMap, VecDeque};

use super::{
    neighbours, Assignment, DomainInstance, DomainKind, Ingredient, PenaltyLine, SampleType,
    ShelfSize,
};
use crate::error::{Error, Result};
use crate::mdp::{AgentTaskModel, Outcome, RewardMap};
use crate::world::{
    AgentWorld, DynamicFeature, FeatureDomain, FeatureSchema, LocalStateSpace, PenaltyModel,
    PenaltyTerm, Projection, World,
};

pub const ACTION_NAMES: [&str; 5] = ["north", "south", "east", "west", "interact"];
const MOVES: [(isize, isize); 4] = [(0, -1), (0, 1), (1, 0), (-1, 0)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub discount: f64,
    /// Charged (as a negative reward) for every action before completion.
    pub step_cost: f64,
    /// Paid by the interaction that completes the task.
    pub goal_reward: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            discount: 0.95,
            step_cost: 0.01,
            goal_reward: 1.0,
        }
    }
}

// value names, shared by the schema and the penalty-line resolver
const SAMPLE: [&str; 3] = ["X", "A", "B"];
const YES_NO: [&str; 2] = ["no", "yes"];
const STATUS: [&str; 2] = ["pending", "done"];
const SHELF_SIZE: [&str; 3] = ["X", "small", "big"];
const SHELF_STATUS: [&str; 4] = ["none", "picked", "processed", "delivered"];
const OBJECT: [&str; 5] = ["none", "tomato", "onion", "soup", "garbage"];
const DIRS: [&str; 4] = ["N", "S", "E", "W"];

fn dynamic_domains(instance: &DomainInstance) -> Vec<FeatureDomain> {
    match instance.domain {
        DomainKind::Salp => vec![
            FeatureDomain::new("sample", SAMPLE),
            FeatureDomain::new("coral", YES_NO),
        ],
        DomainKind::Warehouse => {
            let (_, n) = instance.corridor_ids();
            let corridors =
                std::iter::once("none".to_string()).chain((0..n).map(|j| format!("c{j}")));
            vec![
                FeatureDomain::new("shelf_size", SHELF_SIZE),
                FeatureDomain::new("shelf_status", SHELF_STATUS),
                FeatureDomain::new("corridor", corridors),
            ]
        }
        DomainKind::Overcooked => vec![
            FeatureDomain::new("object", OBJECT),
            FeatureDomain::new("bin", YES_NO),
        ],
    }
}

fn local_domains(instance: &DomainInstance) -> Vec<FeatureDomain> {
    let mut f = vec![
        FeatureDomain::range("x", instance.width),
        FeatureDomain::range("y", instance.height),
    ];
    match instance.domain {
        DomainKind::Salp => f.push(FeatureDomain::new("status", STATUS)),
        DomainKind::Warehouse => f.push(FeatureDomain::new("done", YES_NO)),
        DomainKind::Overcooked => {
            f.push(FeatureDomain::new("dir", DIRS));
            f.push(FeatureDomain::new("status", STATUS));
        }
    }
    f
}

/// Penalty lines used when an instance declares none.
pub(crate) fn default_penalties(instance: &DomainInstance) -> Vec<PenaltyLine> {
    let line = |feature: &str, value: &str, beta: f64, ctx: (&str, String)| PenaltyLine {
        feature: feature.into(),
        value: value.into(),
        beta,
        alpha: 1.0,
        context: vec![(ctx.0.into(), ctx.1)],
    };
    match instance.domain {
        DomainKind::Salp => vec![
            line("sample", "A", 5.0, ("coral", "yes".into())),
            line("sample", "B", 3.0, ("coral", "yes".into())),
        ],
        DomainKind::Warehouse => {
            let (_, n) = instance.corridor_ids();
            (0..n)
                .flat_map(|j| {
                    [
                        line("shelf_size", "big", 5.0, ("corridor", format!("c{j}"))),
                        line("shelf_size", "small", 1.0, ("corridor", format!("c{j}"))),
                    ]
                })
                .collect()
        }
        DomainKind::Overcooked => vec![
            line("object", "tomato", 4.0, ("bin", "yes".into())),
            line("object", "onion", 4.0, ("bin", "yes".into())),
            line("object", "soup", 6.0, ("bin", "yes".into())),
        ],
    }
}

fn resolve_penalty(
    instance: &DomainInstance,
    domains: &[FeatureDomain],
) -> Result<(Vec<f64>, Vec<PenaltyTerm>)> {
    let lines = if instance.penalties.is_empty() {
        default_penalties(instance)
    } else {
        instance.penalties.clone()
    };
    let lookup = |f: &str, v: &str| -> Result<(usize, u16)> {
        let fi = domains
            .iter()
            .position(|d| d.name == f)
            .ok_or_else(|| Error::Instance(format!("penalty on unknown feature '{f}'")))?;
        let vi = domains[fi]
            .value_index(v)
            .ok_or_else(|| Error::Instance(format!("feature '{f}' has no value '{v}'")))?;
        Ok((fi, vi))
    };
    let mut alpha: Vec<Option<f64>> = vec![None; domains.len()];
    let mut terms = Vec::with_capacity(lines.len());
    for line in &lines {
        let (fi, vi) = lookup(&line.feature, &line.value)?;
        match alpha[fi] {
            Some(a) if a != line.alpha => {
                return Err(Error::Instance(format!(
                    "conflicting alpha for feature '{}': {a} and {}",
                    line.feature, line.alpha
                )))
            }
            _ => alpha[fi] = Some(line.alpha),
        }
        let mut term = PenaltyTerm::new(fi, vi, line.beta);
        for (f, v) in &line.context {
            let (cf, cv) = lookup(f, v)?;
            term = term.when(cf, cv);
        }
        terms.push(term);
    }
    Ok((alpha.into_iter().map(|a| a.unwrap_or(1.0)).collect(), terms))
}

/// Load-time checks: start cells walkable, referenced cells present and every
/// goal reachable from the agent's start.
pub(crate) fn validate(instance: &DomainInstance) -> Result<()> {
    let (w, h) = (instance.width, instance.height);
    if w == 0 || h == 0 {
        return Err(Error::Instance("grid must be nonempty".into()));
    }
    let shelves = instance.shelves();
    for a in &instance.agents {
        let (x, y) = a.start;
        if !instance.walkable(x, y) {
            return Err(Error::Instance(format!(
                "agent {} starts on a blocked cell ({x}, {y})",
                a.id
            )));
        }
        let ok = match (instance.domain, a.assignment) {
            (DomainKind::Salp, Assignment::Sample(_))
            | (DomainKind::Overcooked, Assignment::Cook(_) | Assignment::Clean) => true,
            (DomainKind::Warehouse, Assignment::Shelf { shelf, .. }) => {
                if shelf >= shelves.len() {
                    return Err(Error::Instance(format!(
                        "agent {} is assigned shelf {shelf} but the grid has {}",
                        a.id,
                        shelves.len()
                    )));
                }
                true
            }
            _ => false,
        };
        if !ok {
            return Err(Error::Instance(format!(
                "assignment '{}' does not belong to the {} domain",
                a.assignment, instance.domain
            )));
        }
        let component = component_of(instance, a.start);
        for targets in goal_cells(instance, a.assignment) {
            if targets.is_empty() {
                return Err(Error::Instance(format!(
                    "agent {}: assignment '{}' references a cell missing from the grid",
                    a.id, a.assignment
                )));
            }
            if !targets.iter().any(|&(tx, ty)| component[ty][tx]) {
                return Err(Error::Instance(format!(
                    "unreachable goal for agent {}",
                    a.id
                )));
            }
        }
    }
    resolve_penalty(instance, &dynamic_domains(instance))?;
    Ok(())
}

/// Cells the agent must visit, stage by stage.
fn goal_cells(instance: &DomainInstance, assignment: Assignment) -> Vec<Vec<(usize, usize)>> {
    match assignment {
        Assignment::Sample(t) => {
            let site = match t {
                SampleType::A => 'A',
                SampleType::B => 'B',
            };
            vec![instance.cells_with(site), instance.cells_with('L')]
        }
        Assignment::Shelf { shelf, .. } => {
            let s = instance.shelves().get(shelf).copied().into_iter().collect();
            vec![s, instance.cells_with('K')]
        }
        Assignment::Cook(i) => {
            let station = match i {
                Ingredient::Tomato => 'T',
                Ingredient::Onion => 'O',
            };
            vec![
                instance.cells_with(station),
                instance.cells_with('P'),
                instance.cells_with('V'),
            ]
        }
        Assignment::Clean => vec![instance.cells_with('D'), instance.cells_with('G')],
    }
}

fn component_of(instance: &DomainInstance, start: (usize, usize)) -> Vec<Vec<bool>> {
    let (w, h) = (instance.width, instance.height);
    let mut seen = vec![vec![false; w]; h];
    let mut queue = VecDeque::from([start]);
    seen[start.1][start.0] = true;
    while let Some((x, y)) = queue.pop_front() {
        for (nx, ny) in neighbours(x, y, w, h) {
            if instance.walkable(nx, ny) && !seen[ny][nx] {
                seen[ny][nx] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    seen
}

/// Non-positional part of an agent's state, as value indices.
type Vars = Vec<u16>;

/// Per-domain dynamics over `Vars`.
struct Rules<'a> {
    instance: &'a DomainInstance,
    corridor: Vec<Vec<Option<usize>>>,
    shelves: Vec<(usize, usize)>,
}

impl Rules<'_> {
    /// Sizes of the non-positional variables.
    fn var_sizes(&self) -> Vec<usize> {
        match self.instance.domain {
            // sample, status
            DomainKind::Salp => vec![3, 2],
            // shelf_size, shelf_status, done
            DomainKind::Warehouse => vec![3, 4, 2],
            // object, status
            DomainKind::Overcooked => vec![5, 2],
        }
    }

    fn num_dirs(&self) -> usize {
        if self.instance.domain == DomainKind::Overcooked {
            4
        } else {
            1
        }
    }

    fn is_done(&self, vars: &Vars) -> bool {
        match self.instance.domain {
            DomainKind::Salp | DomainKind::Overcooked => vars[1] == 1,
            DomainKind::Warehouse => vars[2] == 1,
        }
    }

    /// Result of interacting on `cell`: new vars and whether the task
    /// completes. `None` when nothing happens.
    fn interact(
        &self,
        assignment: Assignment,
        cell: (usize, usize),
        vars: &Vars,
    ) -> Option<(Vars, bool)> {
        let glyph = self.instance.glyph(cell.0, cell.1);
        match assignment {
            Assignment::Sample(t) => {
                let (site, value) = match t {
                    SampleType::A => ('A', 1),
                    SampleType::B => ('B', 2),
                };
                match (vars[0], glyph) {
                    (0, g) if g == site => Some((vec![value, 0], false)),
                    (v, 'L') if v == value => Some((vec![0, 1], true)),
                    _ => None,
                }
            }
            Assignment::Shelf { shelf, size } => {
                let size = match size {
                    ShelfSize::Small => 1,
                    ShelfSize::Big => 2,
                };
                let home = self.shelves[shelf];
                match vars[1] {
                    0 if cell == home => Some((vec![size, 1, 0], false)),
                    1 if glyph == 'K' && vars[0] == size => Some((vec![size, 2, 0], false)),
                    2 if cell == home && vars[0] == size => Some((vec![0, 3, 1], true)),
                    _ => None,
                }
            }
            Assignment::Cook(i) => {
                let (station, item) = match i {
                    Ingredient::Tomato => ('T', 1),
                    Ingredient::Onion => ('O', 2),
                };
                match (vars[0], glyph) {
                    (0, g) if g == station => Some((vec![item, 0], false)),
                    (o, 'P') if o == item => Some((vec![3, 0], false)),
                    (3, 'V') => Some((vec![0, 1], true)),
                    _ => None,
                }
            }
            Assignment::Clean => match (vars[0], glyph) {
                (0, 'D') => Some((vec![4, 0], false)),
                (4, 'G') => Some((vec![0, 1], true)),
                _ => None,
            },
        }
    }

    fn projection(&self, cell: (usize, usize), dir: usize, vars: &Vars) -> Projection {
        let (x, y) = (cell.0 as u16, cell.1 as u16);
        let glyph = self.instance.glyph(cell.0, cell.1);
        let (local, dynamic) = match self.instance.domain {
            DomainKind::Salp => (vec![x, y, vars[1]], vec![vars[0], u16::from(glyph == 'C')]),
            DomainKind::Warehouse => {
                let corridor = self.corridor[cell.1][cell.0].map_or(0, |j| j as u16 + 1);
                (vec![x, y, vars[2]], vec![vars[0], vars[1], corridor])
            }
            DomainKind::Overcooked => (
                vec![x, y, dir as u16, vars[1]],
                vec![vars[0], u16::from(glyph == 'G')],
            ),
        };
        Projection {
            local,
            dynamic: dynamic.into_iter().map(Some).collect(),
            static_values: Vec::new(),
        }
    }
}

fn all_vars(sizes: &[usize]) -> Vec<Vars> {
    let mut out = vec![Vec::new()];
    for &n in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..n as u16).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

fn build_agent(rules: &Rules<'_>, agent: usize, options: &BuildOptions) -> Result<AgentWorld> {
    let inst = rules.instance;
    let spec = &inst.agents[agent];
    let cells: Vec<(usize, usize)> = (0..inst.height)
        .flat_map(|y| (0..inst.width).map(move |x| (x, y)))
        .filter(|&(x, y)| inst.walkable(x, y))
        .collect();
    let cell_index: HashMap<(usize, usize), usize> =
        cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let var_list = all_vars(&rules.var_sizes());
    let var_index: HashMap<&Vars, usize> =
        var_list.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let dirs = rules.num_dirs();
    let index = |c: usize, d: usize, v: usize| (c * dirs + d) * var_list.len() + v;

    let n = cells.len() * dirs * var_list.len();
    let mut transitions = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    let mut terminal = Vec::with_capacity(n);
    let mut projections = Vec::with_capacity(n);
    for (ci, &cell) in cells.iter().enumerate() {
        for dir in 0..dirs {
            for (vi, vars) in var_list.iter().enumerate() {
                let here = index(ci, dir, vi);
                projections.push(rules.projection(cell, dir, vars));
                if rules.is_done(vars) {
                    transitions.push(vec![vec![Outcome::certain(here)]; ACTION_NAMES.len()]);
                    rewards.push(vec![0.0; ACTION_NAMES.len()]);
                    terminal.push(true);
                    continue;
                }
                let mut row = Vec::with_capacity(ACTION_NAMES.len());
                let mut reward = Vec::with_capacity(ACTION_NAMES.len());
                for (a, &(dx, dy)) in MOVES.iter().enumerate() {
                    let nx = cell.0 as isize + dx;
                    let ny = cell.1 as isize + dy;
                    let target = if nx >= 0 && ny >= 0 && inst.walkable(nx as usize, ny as usize) {
                        cell_index[&(nx as usize, ny as usize)]
                    } else {
                        ci
                    };
                    let new_dir = if dirs > 1 { a } else { 0 };
                    row.push(vec![Outcome::certain(index(target, new_dir, vi))]);
                    reward.push(-options.step_cost);
                }
                match rules.interact(spec.assignment, cell, vars) {
                    Some((next, completes)) => {
                        row.push(vec![Outcome::certain(index(ci, dir, var_index[&next]))]);
                        reward.push(if completes {
                            options.goal_reward
                        } else {
                            -options.step_cost
                        });
                    }
                    None => {
                        row.push(vec![Outcome::certain(here)]);
                        reward.push(-options.step_cost);
                    }
                }
                transitions.push(row);
                rewards.push(reward);
                terminal.push(false);
            }
        }
    }
    let start = index(cell_index[&spec.start], 0, 0);
    let model = AgentTaskModel::new(
        transitions,
        RewardMap::new(rewards),
        start,
        options.discount,
        terminal,
    )?;
    AgentWorld::new(model, LocalStateSpace::new(projections)?)
}

/// Compile every agent's MDP plus the shared schema and penalty model.
pub fn build_models(instance: &DomainInstance, options: &BuildOptions) -> Result<World> {
    validate(instance)?;
    let m = instance.agents.len();
    if m == 0 {
        return Err(Error::Instance("instance has no agents".into()));
    }
    let domains = dynamic_domains(instance);
    let dynamic = domains
        .iter()
        .map(|d| DynamicFeature {
            domain: d.clone(),
            controllers: (0..m).collect(),
        })
        .collect();
    let schema = FeatureSchema::new(vec![local_domains(instance); m], Vec::new(), dynamic)?;
    let (alpha, terms) = resolve_penalty(instance, &domains)?;
    let penalty = PenaltyModel::new(&schema, alpha, terms)?;
    let rules = Rules {
        instance,
        corridor: instance.corridor_ids().0,
        shelves: instance.shelves(),
    };
    let agents = (0..m)
        .map(|a| build_agent(&rules, a, options))
        .collect::<Result<Vec<_>>>()?;
    World::new(schema, penalty, agents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::parse_instance;
    use crate::mdp::{greedy_policy, value_iteration, DEFAULT_TOLERANCE};

    fn salp_line() -> DomainInstance {
        parse_instance(
            "domain salp
width 4
height 1
agents 1
seed 0
grid
.ACL
end
agent 0 0 0 A
",
        )
        .unwrap()
    }

    #[test]
    fn salp_collect_and_deposit() {
        let world = build_models(&salp_line(), &BuildOptions::default()).unwrap();
        let agent = &world.agents[0];
        let model = &agent.model;
        let table = value_iteration(model, model.task_reward(), DEFAULT_TOLERANCE).unwrap();
        // east, interact, east, east, interact
        let g: f64 = 0.95;
        let expected = -0.01 * (1.0 + g + g * g + g.powi(3)) + g.powi(4);
        assert!((table.value(model.start_state()) - expected).abs() < 1e-6);
        let policy = greedy_policy(model, &table).unwrap();
        let mut s = model.start_state();
        let mut carried_on_coral = false;
        for _ in 0..5 {
            s = model.outcomes(s, policy.action(s).unwrap())[0].target;
            let p = agent.space.projection(s);
            carried_on_coral |= p.dynamic == vec![Some(1), Some(1)];
        }
        assert!(model.is_terminal(s));
        assert!(carried_on_coral);
    }

    #[test]
    fn default_penalties_are_gated_by_context() {
        let world = build_models(&salp_line(), &BuildOptions::default()).unwrap();
        let p = &world.penalty;
        assert_eq!(p.terms().len(), 2);
        let on = p.counts([[Some(1), Some(1)].as_slice()]);
        assert!((p.penalty_from_counts(&on) - 5.0 * 2f64.ln()).abs() < 1e-12);
        let off = p.counts([[Some(1), Some(0)].as_slice()]);
        assert_eq!(p.penalty_from_counts(&off), 0.0);
    }

    #[test]
    fn conflicting_alpha_rejected() {
        let mut inst = salp_line();
        inst.penalties = default_penalties(&inst);
        inst.penalties[1].alpha = 2.0;
        assert!(matches!(validate(&inst), Err(Error::Instance(_))));
    }

    #[test]
    fn rows_are_distributions() {
        let world = build_models(&salp_line(), &BuildOptions::default()).unwrap();
        let model = &world.agents[0].model;
        for s in 0..model.num_states() {
            for a in 0..model.num_actions(s) {
                let total: f64 = model.outcomes(s, a).iter().map(|o| o.probability).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}
