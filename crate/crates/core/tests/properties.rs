use std::collections::BTreeSet;

use nse_planner::counterfactual::{agent_cf_neighbors, counterfactual_neighbors, valid_filter};
use nse_planner::domains::{build_models, generate_instance, BuildOptions, DomainKind};
use nse_planner::mdp::{greedy_policy, value_iteration, AgentTaskModel, Outcome, RewardMap};
use nse_planner::recon::{intermediate_blame, normalize_blame};
use nse_planner::world::{rollout_joint, PenaltyModel, PenaltyTerm, RolloutConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(seed: u64) -> AgentTaskModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..9);
    let mut transitions = Vec::new();
    let mut rewards = Vec::new();
    for _ in 0..n {
        let actions = rng.random_range(1..4);
        let mut rows = Vec::new();
        let mut r = Vec::new();
        for _ in 0..actions {
            let k = rng.random_range(1..=n.min(3));
            let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let mut targets: Vec<usize> = (0..n).collect();
            targets.shuffle(&mut rng);
            rows.push(
                targets[..k]
                    .iter()
                    .zip(&weights)
                    .map(|(&t, w)| Outcome {
                        target: t,
                        probability: w / total,
                    })
                    .collect(),
            );
            r.push(rng.random_range(-1.0..1.0));
        }
        transitions.push(rows);
        rewards.push(r);
    }
    AgentTaskModel::new(transitions, RewardMap::new(rewards), 0, 0.9, vec![false; n]).unwrap()
}

fn random_penalty(seed: u64) -> (PenaltyModel, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes: Vec<usize> = (0..rng.random_range(1..4))
        .map(|_| rng.random_range(2..5))
        .collect();
    let alpha: Vec<f64> = sizes.iter().map(|_| rng.random_range(0.2..3.0)).collect();
    let mut terms = Vec::new();
    for _ in 0..rng.random_range(1..5) {
        let f = rng.random_range(0..sizes.len());
        let mut t = PenaltyTerm::new(
            f,
            rng.random_range(0..sizes[f]) as u16,
            rng.random_range(0.0..6.0),
        );
        if sizes.len() > 1 && rng.random_bool(0.5) {
            let g = (f + 1) % sizes.len();
            t = t.when(g, rng.random_range(0..sizes[g]) as u16);
        }
        terms.push(t);
    }
    (
        PenaltyModel::with_domains(sizes.clone(), alpha, terms).unwrap(),
        sizes,
    )
}

fn random_vector(rng: &mut ChaCha8Rng, sizes: &[usize]) -> Vec<Option<u16>> {
    sizes
        .iter()
        .map(|&n| Some(rng.random_range(0..n) as u16))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalized_blame_sums_to_the_penalty(
        current in 0.0f64..50.0,
        margins in prop::collection::vec(-10.0f64..10.0, 1..8),
        eps in 1e-6f64..1e-2,
    ) {
        let max = current + 10.0;
        let b: Vec<f64> = margins.iter().map(|&m| intermediate_blame(current, Some(current - m), max, eps)).collect();
        let big = normalize_blame(current, &b);
        let sum: f64 = big.iter().sum();
        prop_assert!((sum - current).abs() <= 1e-9 * current.max(1.0));
        for &x in &big {
            prop_assert!(x >= 0.0 && x <= current + 1e-12);
        }
    }

    #[test]
    fn larger_margin_gets_more_blame(current in 0.1f64..20.0, lo in 0.0f64..5.0, gap in 1e-3f64..5.0) {
        let max = current + 20.0;
        let others = [intermediate_blame(current, Some(current - 1.0), max, 1e-4)];
        let with = |margin: f64| {
            let mut b = vec![intermediate_blame(current, Some(current - margin), max, 1e-4)];
            b.extend_from_slice(&others);
            normalize_blame(current, &b)[0]
        };
        prop_assert!(with(lo + gap) > with(lo));
    }

    #[test]
    fn penalty_ignores_agent_order(seed in any::<u64>()) {
        let (model, sizes) = random_penalty(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mut agents: Vec<Vec<Option<u16>>> = (0..rng.random_range(1..7)).map(|_| random_vector(&mut rng, &sizes)).collect();
        let p = model.penalty_from_counts(&model.counts(agents.iter().map(|v| v.as_slice())));
        agents.shuffle(&mut rng);
        let q = model.penalty_from_counts(&model.counts(agents.iter().map(|v| v.as_slice())));
        prop_assert!((p - q).abs() < 1e-12);
    }

    #[test]
    fn adding_an_agent_never_lowers_the_penalty(seed in any::<u64>()) {
        let (model, sizes) = random_penalty(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let mut agents: Vec<Vec<Option<u16>>> = (0..rng.random_range(0..6)).map(|_| random_vector(&mut rng, &sizes)).collect();
        let before = model.penalty_from_counts(&model.counts(agents.iter().map(|v| v.as_slice())));
        agents.push(random_vector(&mut rng, &sizes));
        let after = model.penalty_from_counts(&model.counts(agents.iter().map(|v| v.as_slice())));
        prop_assert!(after >= before - 1e-12);
        prop_assert!(after <= nse_planner::world::max_penalty(&model, agents.len()) + 1e-9);
    }

    #[test]
    fn value_iteration_commutes_with_relabeling(seed in any::<u64>()) {
        let model = random_model(seed);
        let n = model.num_states();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 3));
        let renamed = model.relabeled(&perm).unwrap();
        let a = value_iteration(&model, model.task_reward(), 1e-10).unwrap();
        let b = value_iteration(&renamed, renamed.task_reward(), 1e-10).unwrap();
        for (s, &renamed_s) in perm.iter().enumerate() {
            prop_assert!((a.value(s) - b.value(renamed_s)).abs() < 1e-8);
        }
    }

    #[test]
    fn counterfactuals_keep_local_and_static_features(seed in 0u64..40, domain in 0usize..3) {
        let inst = generate_instance(DomainKind::ALL[domain], 5, 4, 2, seed).unwrap();
        let world = build_models(&inst, &BuildOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let key: Vec<usize> = world.agents.iter().map(|a| rng.random_range(0..a.space.len())).collect();
        let state = world.joint_state(&key);
        let full = counterfactual_neighbors(&state, &world.schema);
        let all: BTreeSet<_> = full.neighbors.iter().collect();
        for n in &full.neighbors {
            prop_assert_eq!(&n.local, &state.local);
            prop_assert_eq!(&n.static_values, &state.static_values);
        }
        for a in 0..world.num_agents() {
            let own = agent_cf_neighbors(&state, a, &world.schema);
            for n in &own.neighbors {
                prop_assert!(all.contains(n));
                for b in 0..world.num_agents() {
                    if b != a {
                        prop_assert_eq!(&n.dynamic[b], &state.dynamic[b]);
                    }
                }
            }
        }
        let valid = valid_filter(&full, &world);
        prop_assert!(valid.neighbors.iter().all(|n| all.contains(n)));
    }
}

#[test]
fn rollouts_are_reproducible_and_blind_to_the_penalty() {
    let inst = generate_instance(DomainKind::Salp, 7, 7, 4, 5).unwrap();
    let world = build_models(&inst, &BuildOptions::default()).unwrap();
    let policies: Vec<_> = world
        .agents
        .iter()
        .map(|a| {
            greedy_policy(
                &a.model,
                &value_iteration(&a.model, a.model.task_reward(), 1e-6).unwrap(),
            )
            .unwrap()
        })
        .collect();
    let config = RolloutConfig::new(40, 10, 9);
    let a = rollout_joint(&world, &policies, &config).unwrap();
    let b = rollout_joint(&world, &policies, &config).unwrap();
    assert_eq!(a, b);

    let mut quiet = world.clone();
    quiet.penalty =
        PenaltyModel::new(&world.schema, world.penalty.alphas().to_vec(), Vec::new()).unwrap();
    let c = rollout_joint(&quiet, &policies, &config).unwrap();
    assert_eq!(
        c.visits.keys().collect::<Vec<_>>(),
        a.visits.keys().collect::<Vec<_>>()
    );
    assert_eq!(c.episode_lengths, a.episode_lengths);
    assert_eq!(c.task_returns, a.task_returns);
    assert!(c.episode_penalties.iter().all(|&p| p == 0.0));
}
