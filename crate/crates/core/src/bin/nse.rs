use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nse_planner::domains::{
    build_models, generate_instance, parse_instance, serialize_instance, BuildOptions, DomainKind,
};
use nse_planner::harness::{
    run_pipeline, sweep_agents, sweep_fraction, write_csv, ExperimentConfig, ResultRow,
};
use nse_planner::{Error, Result, Stage};

#[derive(Parser)]
#[command(
    name = "nse",
    about = "Plan, blame and replan multi-agent teams with joint side effects"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured methods once per instance and seed.
    Solve(Experiment),
    /// Repeat the pipeline over several update fractions.
    SweepFraction {
        #[command(flatten)]
        experiment: Experiment,
        /// Comma-separated fractions in [0, 1].
        #[arg(long, default_value = "0,0.25,0.5,0.75,1")]
        fractions: String,
    },
    /// Regenerate instances per team size and run every method.
    SweepAgents {
        #[command(flatten)]
        experiment: Experiment,
        /// Comma-separated agent counts.
        #[arg(long, default_value = "2,5,10")]
        counts: String,
    },
    /// Write generated instance files.
    GenInstances {
        #[arg(long)]
        domain: DomainKind,
        #[arg(long, default_value_t = 10)]
        width: usize,
        #[arg(long, default_value_t = 10)]
        height: usize,
        #[arg(long, default_value_t = 4)]
        agents: usize,
        #[arg(long, default_value_t = 5)]
        count: usize,
        /// Seed of the first instance; the rest count up from it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Parse instance files, build their models and print a summary.
    ValidateInstance {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

/// Experiment settings; flags override the config file.
#[derive(Args)]
struct Experiment {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance files (repeatable); replaces generated instances.
    #[arg(long = "instance")]
    instances: Vec<PathBuf>,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    height: Option<String>,
    #[arg(long = "agents")]
    num_agents: Option<String>,
    #[arg(long)]
    instance_count: Option<String>,
    #[arg(long)]
    instance_seed: Option<String>,
    /// Comma-separated methods.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    update_fraction: Option<String>,
    #[arg(long)]
    slack: Option<String>,
    #[arg(long)]
    nse_tolerance: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    episodes: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    /// Comma-separated rollout seeds.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    alpha1: Option<String>,
    #[arg(long)]
    alpha2: Option<String>,
    #[arg(long)]
    discount: Option<String>,
    #[arg(long)]
    shared_predictor: bool,
    /// Append wall-clock columns.
    #[arg(long)]
    timing: bool,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Experiment {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_text(&fs::read_to_string(path)?)?;
        }
        let overrides = [
            ("domain", &self.domain),
            ("width", &self.width),
            ("height", &self.height),
            ("num_agents", &self.num_agents),
            ("instance_count", &self.instance_count),
            ("instance_seed", &self.instance_seed),
            ("methods", &self.methods),
            ("update_fraction", &self.update_fraction),
            ("slack", &self.slack),
            ("nse_tolerance", &self.nse_tolerance),
            ("epsilon", &self.epsilon),
            ("episodes", &self.episodes),
            ("horizon", &self.horizon),
            ("seeds", &self.seeds),
            ("alpha1", &self.alpha1),
            ("alpha2", &self.alpha2),
            ("discount", &self.discount),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if !self.instances.is_empty() {
            let joined = self
                .instances
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(",");
            cfg.set("instances", &joined)?;
        }
        cfg.shared_predictor |= self.shared_predictor;
        cfg.timing |= self.timing;
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit(&self, rows: &[ResultRow], timing: bool) -> Result<()> {
        match &self.out {
            Some(path) => write_csv(rows, timing, fs::File::create(path)?),
            None => write_csv(rows, timing, io::stdout().lock()),
        }
        .map_err(|e| e.at(Stage::Output))
    }
}

fn list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Input(format!("invalid {what} '{s}'")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let config_stage = |e: Error| e.at(Stage::Config);
    match cli.command {
        Command::Solve(exp) => {
            let cfg = exp.config().map_err(config_stage)?;
            exp.emit(&run_pipeline(&cfg)?, cfg.timing)
        }
        Command::SweepFraction {
            experiment,
            fractions,
        } => {
            let cfg = experiment.config().map_err(config_stage)?;
            let fractions: Vec<f64> = list(&fractions, "fraction").map_err(config_stage)?;
            experiment.emit(&sweep_fraction(&cfg, &fractions)?, cfg.timing)
        }
        Command::SweepAgents { experiment, counts } => {
            let cfg = experiment.config().map_err(config_stage)?;
            let counts: Vec<usize> = list(&counts, "agent count").map_err(config_stage)?;
            experiment.emit(&sweep_agents(&cfg, &counts)?, cfg.timing)
        }
        Command::GenInstances {
            domain,
            width,
            height,
            agents,
            count,
            seed,
            out_dir,
        } => {
            fs::create_dir_all(&out_dir).map_err(|e| Error::from(e).at(Stage::Output))?;
            for k in 0..count as u64 {
                let inst = generate_instance(domain, width, height, agents, seed + k)
                    .map_err(|e| e.at(Stage::Instance))?;
                let path = out_dir.join(format!(
                    "{domain}_{width}x{height}_m{agents}_s{}.txt",
                    seed + k
                ));
                fs::write(&path, serialize_instance(&inst))
                    .map_err(|e| Error::from(e).at(Stage::Output))?;
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::ValidateInstance { files } => {
            for f in files {
                validate_file(&f).map_err(|e| {
                    Error::Instance(format!("{}: {e}", f.display())).at(Stage::Instance)
                })?;
            }
            Ok(())
        }
    }
}

fn validate_file(path: &Path) -> Result<()> {
    let inst = parse_instance(&fs::read_to_string(path)?)?;
    let world = build_models(&inst, &BuildOptions::default())?;
    let states: usize = world.agents.iter().map(|a| a.space.len()).sum();
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{}: {} {}x{}, {} agents, {} states, max penalty {:.6}",
        path.display(),
        inst.domain,
        inst.width,
        inst.height,
        inst.agents.len(),
        states,
        world.max_penalty()
    )?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
