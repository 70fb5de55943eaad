//! Experiment driver: configuration, the plan/monitor/blame/replan pipeline
//! and the sweeps built on it.
//!
//! Result CSV columns, in order:
//!
//! | column           | meaning                                              |
//! |------------------|------------------------------------------------------|
//! | `instance`       | file stem or generated instance id                   |
//! | `method`         | `naive`, `difference-reward`, `considerate`, `recon`, `gen-recon-no-cf`, `gen-recon-cf` |
//! | `num_agents`     | team size                                            |
//! | `update_fraction`| share of agents allowed to replan                    |
//! | `seed`           | rollout seed                                         |
//! | `avg_penalty`    | mean accumulated side-effect penalty per episode     |
//! | `std_penalty`    | population standard deviation of the above           |
//! | `avg_task_value` | mean over agents of the exact start-state task value |
//! | `updated_agents` | number of agents that replanned                      |
//!
//! With timing enabled, `seconds` and per-stage `naive_s`, `monitor_s`,
//! `penalty_s`, `replan_s`, `rescore_s` follow.

mod config;
mod pipeline;

pub use config::{ExperimentConfig, InstanceSource, Method};
pub use pipeline::{
    load_instances, run_pipeline, sweep_agents, sweep_fraction, write_csv, InstanceRun,
    NamedInstance, ResultRow, StageTimes, CSV_HEADER, TIMING_HEADER,
};
