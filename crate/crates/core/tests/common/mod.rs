//! Independent oracles shared by the integration tests. Nothing here calls
//! the solver, reachability or penalty code under test.
#![allow(dead_code)]

use std::collections::VecDeque;

use nse_planner::domains::{parse_instance, DomainInstance};
use nse_planner::mdp::AgentTaskModel;
use nse_planner::world::World;

/// Breadth-first reachability over the support of every action.
pub fn bfs_reachable(model: &AgentTaskModel) -> Vec<bool> {
    let mut seen = vec![false; model.num_states()];
    let mut queue = VecDeque::from([model.start_state()]);
    seen[model.start_state()] = true;
    while let Some(s) = queue.pop_front() {
        for a in 0..model.num_actions(s) {
            for o in model.outcomes(s, a) {
                if o.probability > 0.0 && !seen[o.target] {
                    seen[o.target] = true;
                    queue.push_back(o.target);
                }
            }
        }
    }
    seen
}

/// Every shortest state sequence from the start to a terminal state of a
/// deterministic model, with distinct successor states counted once.
pub fn shortest_trajectories(model: &AgentTaskModel, limit: usize) -> Vec<Vec<usize>> {
    let n = model.num_states();
    // backward distances to the terminal set
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        if model.is_terminal(s) {
            continue;
        }
        for a in 0..model.num_actions(s) {
            let t = model.outcomes(s, a)[0].target;
            if t != s {
                preds[t].push(s);
            }
        }
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for (s, d) in dist.iter_mut().enumerate() {
        if model.is_terminal(s) {
            *d = 0;
            queue.push_back(s);
        }
    }
    while let Some(t) = queue.pop_front() {
        for &p in &preds[t] {
            if dist[p] == usize::MAX {
                dist[p] = dist[t] + 1;
                queue.push_back(p);
            }
        }
    }
    let start = model.start_state();
    assert!(dist[start] != usize::MAX, "goal unreachable");
    let mut out = Vec::new();
    let mut stack = vec![vec![start]];
    while let Some(path) = stack.pop() {
        let s = *path.last().unwrap();
        if dist[s] == 0 {
            out.push(path);
            assert!(
                out.len() <= limit,
                "more than {limit} shortest trajectories"
            );
            continue;
        }
        let mut next: Vec<usize> = (0..model.num_actions(s))
            .map(|a| model.outcomes(s, a)[0].target)
            .filter(|&t| dist[t] + 1 == dist[s])
            .collect();
        next.sort_unstable();
        next.dedup();
        for t in next {
            let mut p = path.clone();
            p.push(t);
            stack.push(p);
        }
    }
    out
}

/// Discounted penalty of a trajectory that ends in an absorbing state:
/// `sum_t g^t p(s_t) + g^T p(s_T) / (1 - g)`.
pub fn trajectory_penalty(path: &[usize], penalty: &[f64], discount: f64) -> f64 {
    let t = path.len() - 1;
    let mut total = 0.0;
    for (i, &s) in path[..t].iter().enumerate() {
        total += discount.powi(i as i32) * penalty[s];
    }
    total + discount.powi(t as i32) * penalty[path[t]] / (1.0 - discount)
}

/// Penalty straight from the instance's penalty lines and the value names of
/// each agent's projection.
pub fn penalty_by_names(instance: &DomainInstance, world: &World, key: &[usize]) -> f64 {
    let dynamic = world.schema.dynamic_features();
    let name_of = |agent: usize, feature: &str| -> Option<String> {
        let d = dynamic.iter().position(|f| f.domain.name == feature)?;
        let v = world.agents[agent].space.projection(key[agent]).dynamic[d]?;
        Some(dynamic[d].domain.values[v as usize].clone())
    };
    let mut total = 0.0;
    for line in &instance.penalties {
        let n = (0..key.len())
            .filter(|&a| {
                name_of(a, &line.feature).as_deref() == Some(line.value.as_str())
                    && line
                        .context
                        .iter()
                        .all(|(f, v)| name_of(a, f).as_deref() == Some(v.as_str()))
            })
            .count();
        total += line.beta * (line.alpha * n as f64 + 1.0).ln();
    }
    total
}

/// A salp grid with three equally short carrying routes from the `A` site in
/// the corner to the lab: down the left column, down the middle column and
/// along the top. Coral sits on the first two.
pub fn three_route_salp(agents: usize) -> DomainInstance {
    let mut text = String::from(
        "domain salp\nwidth 5\nheight 4\nagents AGENTS\nseed 0\ngrid\nA....\n.#.#.\nC#C#.\n....L\nend\n",
    )
    .replace("AGENTS", &agents.to_string());
    for id in 0..agents {
        text.push_str(&format!("agent {id} 0 0 A\n"));
    }
    text.push_str("penalty sample A 5 1 coral=yes\npenalty sample B 3 1 coral=yes\n");
    parse_instance(&text).unwrap()
}

/// A `w x h` salp grid with the site in the top-left corner and the lab in
/// the bottom-right. Coral covers the bottom row between them, so the
/// tie-breaking naive route (south first) crosses it, while the equally
/// short route along the top row and down the right column is clean.
pub fn detour_salp(w: usize, h: usize, starts: &[(usize, usize)]) -> DomainInstance {
    let mut grid = vec![vec!['.'; w]; h];
    grid[0][0] = 'A';
    grid[0][1] = 'B';
    grid[h - 1][w - 1] = 'L';
    for cell in grid[h - 1].iter_mut().take(w - 1).skip(1) {
        *cell = 'C';
    }
    let mut text = format!(
        "domain salp\nwidth {w}\nheight {h}\nagents {}\nseed 0\ngrid\n",
        starts.len()
    );
    for row in &grid {
        text.extend(row.iter());
        text.push('\n');
    }
    text.push_str("end\n");
    for (id, &(x, y)) in starts.iter().enumerate() {
        let t = if id % 2 == 0 { "A" } else { "B" };
        text.push_str(&format!("agent {id} {x} {y} {t}\n"));
    }
    parse_instance(&text).unwrap()
}
