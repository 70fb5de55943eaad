use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use super::config::{ExperimentConfig, InstanceSource, Method};
use crate::counterfactual::AlternativeCache;
use crate::domains::{
    build_models, generate_instance, parse_instance, BuildOptions, DomainInstance,
};
use crate::error::{Error, Result, Stage, StageExt};
use crate::generalize::{
    augment_with_counterfactuals, generalized_penalty, observed_samples, train, PenaltySample,
};
use crate::lexi::{lexicographic_value_iteration, LexicographicProblem};
use crate::mdp::{greedy_policy, policy_evaluation, value_iteration, Policy, RewardMap};
use crate::recon::{
    compile_local_penalties, select_agents_for_update, BlameLedger, BlameRule, StateBlame,
};
use crate::world::{rollout_joint, RolloutConfig, RolloutReport, World};

/// Tolerance of the exact evaluation behind reported task values.
const EVAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct NamedInstance {
    pub id: String,
    pub instance: DomainInstance,
}

/// Seconds spent in each pipeline stage for one row. Stages shared between
/// rows (naive planning, monitoring) are charged to each of them.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    pub naive: f64,
    pub monitor: f64,
    pub penalty: f64,
    pub replan: f64,
    pub rescore: f64,
}

impl StageTimes {
    pub fn total(&self) -> f64 {
        self.naive + self.monitor + self.penalty + self.replan + self.rescore
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub instance: String,
    pub method: Method,
    pub num_agents: usize,
    pub update_fraction: f64,
    pub seed: u64,
    /// Mean accumulated penalty per episode.
    pub avg_penalty: f64,
    pub std_penalty: f64,
    /// Mean over agents of the exact task value at the start state.
    pub avg_task_value: f64,
    pub updated_agents: usize,
    pub times: StageTimes,
}

pub const CSV_HEADER: [&str; 9] = [
    "instance",
    "method",
    "num_agents",
    "update_fraction",
    "seed",
    "avg_penalty",
    "std_penalty",
    "avg_task_value",
    "updated_agents",
];

pub const TIMING_HEADER: [&str; 6] = [
    "seconds",
    "naive_s",
    "monitor_s",
    "penalty_s",
    "replan_s",
    "rescore_s",
];

/// Write rows as CSV. Timing columns are appended only when asked for,
/// since they differ between otherwise identical runs.
pub fn write_csv<W: Write>(rows: &[ResultRow], timing: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if timing {
        header.extend(TIMING_HEADER);
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.instance.clone(),
            r.method.to_string(),
            r.num_agents.to_string(),
            format!("{}", r.update_fraction),
            r.seed.to_string(),
            format!("{:.6}", r.avg_penalty),
            format!("{:.6}", r.std_penalty),
            format!("{:.9}", r.avg_task_value),
            r.updated_agents.to_string(),
        ];
        if timing {
            let t = r.times;
            for v in [
                t.total(),
                t.naive,
                t.monitor,
                t.penalty,
                t.replan,
                t.rescore,
            ] {
                rec.push(format!("{v:.6}"));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_instances(config: &ExperimentConfig) -> Result<Vec<NamedInstance>> {
    load_with_agents(config, config.num_agents).stage(Stage::Instance)
}

fn load_with_agents(config: &ExperimentConfig, num_agents: usize) -> Result<Vec<NamedInstance>> {
    match &config.source {
        InstanceSource::Files(paths) => paths
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p)?;
                let instance = parse_instance(&text)
                    .map_err(|e| Error::Instance(format!("{}: {e}", p.display())))?;
                let id = Path::new(p).file_stem().map_or_else(
                    || p.display().to_string(),
                    |s| s.to_string_lossy().into_owned(),
                );
                Ok(NamedInstance { id, instance })
            })
            .collect(),
        &InstanceSource::Generated {
            width,
            height,
            count,
            first_seed,
        } => (0..count as u64)
            .map(|k| {
                let seed = first_seed + k;
                let instance = generate_instance(config.domain, width, height, num_agents, seed)?;
                Ok(NamedInstance {
                    id: format!("{}-{width}x{height}-m{num_agents}-s{seed}", config.domain),
                    instance,
                })
            })
            .collect(),
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Per-agent local penalties and blame totals for one method.
struct Construction {
    local: Vec<Vec<f64>>,
    totals: Vec<f64>,
    seconds: f64,
}

/// Runs methods against one instance and one rollout seed, sharing the
/// naive plan, the monitor report and per-agent replans between rows.
pub struct InstanceRun<'a> {
    config: &'a ExperimentConfig,
    id: String,
    world: World,
    features: Vec<String>,
    rollout: RolloutConfig,
    naive: Vec<Policy>,
    naive_values: Vec<f64>,
    naive_seconds: f64,
    report: RolloutReport,
    monitor_seconds: f64,
    triggered: bool,
    cache: AlternativeCache,
    ledgers: HashMap<BlameRule, (BlameLedger, f64)>,
    constructions: HashMap<Method, Construction>,
    replans: HashMap<(Method, usize), (Policy, f64, f64)>,
}

impl<'a> InstanceRun<'a> {
    /// Build the world, plan naively and score the naive joint policy.
    pub fn new(config: &'a ExperimentConfig, named: &NamedInstance, seed: u64) -> Result<Self> {
        let options = BuildOptions {
            discount: config.discount,
            ..BuildOptions::default()
        };
        let world = build_models(&named.instance, &options).stage(Stage::Instance)?;
        let (naive, naive_seconds) = timed(|| {
            world
                .agents
                .iter()
                .map(|a| {
                    let table =
                        value_iteration(&a.model, a.model.task_reward(), config.vi_tolerance)?;
                    greedy_policy(&a.model, &table)
                })
                .collect::<Result<Vec<_>>>()
        })
        .stage(Stage::NaivePlanning)?;
        let naive_values = world
            .agents
            .iter()
            .zip(&naive)
            .map(|(a, p)| task_value(&a.model, p))
            .collect::<Result<Vec<_>>>()
            .stage(Stage::NaivePlanning)?;
        let horizon = config.horizon.unwrap_or(4 * named.instance.diameter());
        let rollout = RolloutConfig::new(horizon, config.episodes, seed);
        let (report, monitor_seconds) =
            timed(|| rollout_joint(&world, &naive, &rollout)).stage(Stage::Monitor)?;
        let triggered = report.mean_penalty() > config.nse_tolerance;
        Ok(InstanceRun {
            config,
            id: named.id.clone(),
            world,
            features: named.instance.domain.generalization_features(),
            rollout,
            naive,
            naive_values,
            naive_seconds,
            report,
            monitor_seconds,
            triggered,
            cache: AlternativeCache::new(),
            ledgers: HashMap::new(),
            constructions: HashMap::new(),
            replans: HashMap::new(),
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn naive_policies(&self) -> &[Policy] {
        &self.naive
    }

    pub fn monitor_report(&self) -> &RolloutReport {
        &self.report
    }

    /// Whether the naive penalty exceeded the tolerance.
    pub fn triggered(&self) -> bool {
        self.triggered
    }

    fn ledger(&mut self, rule: BlameRule) -> Result<(BlameLedger, f64)> {
        if let Some(l) = self.ledgers.get(&rule) {
            return Ok(l.clone());
        }
        let (world, report, cache, eps) = (
            &self.world,
            &self.report,
            &mut self.cache,
            self.config.epsilon,
        );
        let built = timed(|| BlameLedger::build(world, report.visits.keys(), rule, eps, cache))?;
        self.ledgers.insert(rule, built.clone());
        Ok(built)
    }

    /// Method-specific local penalties (stage 3).
    pub fn local_penalties(&mut self, method: Method) -> Result<Vec<Vec<f64>>> {
        self.construct(method)?;
        Ok(self.constructions[&method].local.clone())
    }

    fn construct(&mut self, method: Method) -> Result<()> {
        if self.constructions.contains_key(&method) {
            return Ok(());
        }
        let features = self.features.clone();
        let zero = || Construction {
            local: self
                .world
                .agents
                .iter()
                .map(|a| vec![0.0; a.space.len()])
                .collect(),
            totals: vec![0.0; self.world.num_agents()],
            seconds: 0.0,
        };
        // below the tolerance nobody is blamed
        let built = match method {
            _ if !self.triggered => zero(),
            Method::Naive => zero(),
            Method::Recon => {
                let (ledger, seconds) = self.ledger(BlameRule::Counterfactual)?;
                Construction {
                    totals: ledger.total_blame(),
                    local: ledger.local_penalty,
                    seconds,
                }
            }
            Method::DifferenceReward => {
                let (ledger, seconds) = self.ledger(BlameRule::Difference)?;
                Construction {
                    totals: ledger.total_blame(),
                    local: ledger.local_penalty,
                    seconds,
                }
            }
            Method::Considerate => {
                let (ledger, seconds) = self.ledger(BlameRule::Counterfactual)?;
                let (local, extra) = timed(|| {
                    // the care term prices the share of the penalty caused by others
                    let others = ledger
                        .states
                        .iter()
                        .map(|(k, e)| {
                            let agents = e
                                .agents
                                .iter()
                                .map(|a| crate::recon::AgentBlame {
                                    intermediate: a.intermediate,
                                    blame: e.penalty - a.blame,
                                })
                                .collect();
                            (
                                k.clone(),
                                StateBlame {
                                    penalty: e.penalty,
                                    agents,
                                },
                            )
                        })
                        .collect();
                    Ok(compile_local_penalties(&self.world, &others))
                })?;
                Construction {
                    totals: ledger.total_blame(),
                    local,
                    seconds: seconds + extra,
                }
            }
            Method::GenReconNoCf | Method::GenReconCf => {
                let (ledger, seconds) = self.ledger(BlameRule::Counterfactual)?;
                let with_cf = method == Method::GenReconCf;
                let (world, cache, shared) =
                    (&self.world, &mut self.cache, self.config.shared_predictor);
                let (local, extra) = timed(|| {
                    let mut samples = observed_samples(world, &ledger, &features)?;
                    if with_cf {
                        samples = augment_with_counterfactuals(
                            world, &ledger, &features, samples, cache,
                        )?;
                    }
                    generalize(world, &ledger, &features, samples, shared)
                })?;
                Construction {
                    totals: ledger.total_blame(),
                    local,
                    seconds: seconds + extra,
                }
            }
        };
        self.constructions.insert(method, built);
        Ok(())
    }

    fn replan(&mut self, method: Method, agent: usize) -> Result<(Policy, f64, f64)> {
        if let Some(r) = self.replans.get(&(method, agent)) {
            return Ok(r.clone());
        }
        let penalty = &self.constructions[&method].local[agent];
        let model = &self.world.agents[agent].model;
        let config = self.config;
        let (policy, seconds) = timed(|| match method {
            Method::Considerate => {
                let task_max = model
                    .task_reward()
                    .rows()
                    .iter()
                    .flatten()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                let penalty_max = self.world.max_penalty();
                let w = config.considerate;
                let rows = (0..model.num_states())
                    .map(|s| {
                        (0..model.num_actions(s))
                            .map(|a| {
                                crate::recon::considerate_reward(
                                    model.task_reward().get(s, a),
                                    task_max,
                                    -penalty[s],
                                    0.0,
                                    penalty_max,
                                    w,
                                )
                            })
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                let table = value_iteration(model, &RewardMap::new(rows), config.vi_tolerance)?;
                greedy_policy(model, &table)
            }
            _ => {
                let problem = LexicographicProblem::new(model, penalty, config.slack)?;
                lexicographic_value_iteration(&problem, config.vi_tolerance)
            }
        })?;
        let value = task_value(model, &policy)?;
        self.replans
            .insert((method, agent), (policy.clone(), value, seconds));
        Ok((policy, value, seconds))
    }

    /// Agents `method` updates at `fraction` and the joint policy after their
    /// replans; everyone else keeps the naive policy.
    pub fn joint_policy(
        &mut self,
        method: Method,
        fraction: f64,
    ) -> Result<(Vec<usize>, Vec<Policy>)> {
        let mut policies = self.naive.clone();
        if method == Method::Naive || !self.triggered {
            return Ok((Vec::new(), policies));
        }
        self.construct(method).stage(Stage::PenaltyConstruction)?;
        let selected = select_agents_for_update(&self.constructions[&method].totals, fraction)
            .stage(Stage::PenaltyConstruction)?;
        for &agent in &selected {
            policies[agent] = self.replan(method, agent).stage(Stage::Replanning)?.0;
        }
        Ok((selected, policies))
    }

    /// One row: construct penalties, replan the selected agents and rescore.
    pub fn run(&mut self, method: Method, fraction: f64) -> Result<ResultRow> {
        let mut times = StageTimes {
            naive: self.naive_seconds,
            monitor: self.monitor_seconds,
            ..StageTimes::default()
        };
        let m = self.world.num_agents();
        let mut row = ResultRow {
            instance: self.id.clone(),
            method,
            num_agents: m,
            update_fraction: fraction,
            seed: self.rollout.seed,
            avg_penalty: self.report.mean_penalty(),
            std_penalty: self.report.std_penalty(),
            avg_task_value: mean(&self.naive_values),
            updated_agents: 0,
            times,
        };
        if method == Method::Naive || !self.triggered {
            return Ok(row);
        }
        self.construct(method).stage(Stage::PenaltyConstruction)?;
        times.penalty = self.constructions[&method].seconds;
        let selected = select_agents_for_update(&self.constructions[&method].totals, fraction)
            .stage(Stage::PenaltyConstruction)?;
        if selected.is_empty() {
            row.times = times;
            return Ok(row);
        }
        let mut policies = self.naive.clone();
        let mut values = self.naive_values.clone();
        for &agent in &selected {
            let (policy, value, seconds) = self.replan(method, agent).stage(Stage::Replanning)?;
            policies[agent] = policy;
            values[agent] = value;
            times.replan += seconds;
        }
        let (report, seconds) = timed(|| rollout_joint(&self.world, &policies, &self.rollout))
            .stage(Stage::Rescoring)?;
        times.rescore = seconds;
        row.avg_penalty = report.mean_penalty();
        row.std_penalty = report.std_penalty();
        row.avg_task_value = mean(&values);
        row.updated_agents = selected.len();
        row.times = times;
        Ok(row)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn task_value(model: &crate::mdp::AgentTaskModel, policy: &Policy) -> Result<f64> {
    let table = policy_evaluation(model, policy, model.task_reward(), EVAL_TOLERANCE)?;
    Ok(table.value(model.start_state()))
}

/// Visited local states keep their compiled penalty; every other state gets
/// the regressor's prediction.
fn generalize(
    world: &World,
    ledger: &BlameLedger,
    features: &[String],
    samples: Vec<Vec<PenaltySample>>,
    shared: bool,
) -> Result<Vec<Vec<f64>>> {
    let m = world.num_agents();
    let mut visited = world
        .agents
        .iter()
        .map(|a| vec![false; a.space.len()])
        .collect::<Vec<_>>();
    for key in ledger.states.keys() {
        for (agent, &s) in key.iter().enumerate() {
            visited[agent][s] = true;
        }
    }
    let pooled = if shared {
        let all: Vec<PenaltySample> = samples.iter().flatten().cloned().collect();
        Some(train(features, &all)?)
    } else {
        None
    };
    (0..m)
        .map(|agent| {
            let predicted = match &pooled {
                Some(p) => generalized_penalty(p, world, agent)?,
                None => generalized_penalty(&train(features, &samples[agent])?, world, agent)?,
            };
            Ok(predicted
                .into_iter()
                .enumerate()
                .map(|(s, p)| {
                    if visited[agent][s] {
                        ledger.local_penalty[agent][s]
                    } else {
                        p
                    }
                })
                .collect())
        })
        .collect()
}

fn run_rows(
    config: &ExperimentConfig,
    instances: &[NamedInstance],
    fractions: &[f64],
    fraction_major: bool,
) -> Result<Vec<ResultRow>> {
    config.validate().stage(Stage::Config)?;
    for &f in fractions {
        if !(0.0..=1.0).contains(&f) {
            return Err(
                Error::Input(format!("update fraction {f} outside [0, 1]")).at(Stage::Config)
            );
        }
    }
    let mut rows = Vec::new();
    for named in instances {
        let mut block = Vec::new();
        for &seed in &config.seeds {
            let mut run = InstanceRun::new(config, named, seed)?;
            for (mi, &method) in config.methods.iter().enumerate() {
                for (fi, &fraction) in fractions.iter().enumerate() {
                    block.push(((mi, fi, seed), run.run(method, fraction)?));
                }
            }
        }
        if fraction_major {
            block.sort_by_key(|&((mi, fi, seed), _)| (fi, mi, seed));
        } else {
            block.sort_by_key(|&(key, _)| key);
        }
        rows.extend(block.into_iter().map(|(_, r)| r));
    }
    Ok(rows)
}

/// Every configured method on every instance and seed at the configured
/// update fraction. Rows are ordered by instance, method, seed.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate().stage(Stage::Config)?;
    let instances = load_instances(config)?;
    run_rows(config, &instances, &[config.update_fraction], false)
}

/// [`run_pipeline`] per update fraction; rows ordered by instance, fraction,
/// method, seed.
pub fn sweep_fraction(config: &ExperimentConfig, fractions: &[f64]) -> Result<Vec<ResultRow>> {
    config.validate().stage(Stage::Config)?;
    if fractions.is_empty() {
        return Err(Error::Input("no update fractions".into()).at(Stage::Config));
    }
    let instances = load_instances(config)?;
    run_rows(config, &instances, fractions, true)
}

/// Regenerate the instances for each agent count and run every method.
/// Rows ordered by agent count, instance, method, seed.
pub fn sweep_agents(config: &ExperimentConfig, counts: &[usize]) -> Result<Vec<ResultRow>> {
    config.validate().stage(Stage::Config)?;
    if !matches!(config.source, InstanceSource::Generated { .. }) {
        return Err(Error::Input("agent sweeps need generated instances".into()).at(Stage::Config));
    }
    if counts.is_empty() || counts.contains(&0) {
        return Err(Error::Input("agent counts must be positive".into()).at(Stage::Config));
    }
    let mut rows = Vec::new();
    for &m in counts {
        let instances = load_with_agents(config, m).stage(Stage::Instance)?;
        rows.extend(run_rows(
            config,
            &instances,
            &[config.update_fraction],
            false,
        )?);
    }
    Ok(rows)
}
