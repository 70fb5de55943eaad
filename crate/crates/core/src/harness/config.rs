use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::domains::DomainKind;
use crate::error::{Error, Result};
use crate::recon::{ConsiderateWeights, DEFAULT_EPSILON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Task-optimal policies with no penalty information.
    Naive,
    DifferenceReward,
    Considerate,
    Recon,
    /// RECON with penalties regressed onto unvisited states.
    GenReconNoCf,
    /// As above, with counterfactual blame added to the training data.
    GenReconCf,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Naive,
        Method::DifferenceReward,
        Method::Considerate,
        Method::Recon,
        Method::GenReconNoCf,
        Method::GenReconCf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::DifferenceReward => "difference-reward",
            Method::Considerate => "considerate",
            Method::Recon => "recon",
            Method::GenReconNoCf => "gen-recon-no-cf",
            Method::GenReconCf => "gen-recon-cf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown method '{s}'")))
    }
}

/// Where the instances come from.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Files(Vec<PathBuf>),
    /// `count` instances seeded `first_seed, first_seed + 1, ...`.
    Generated {
        width: usize,
        height: usize,
        count: usize,
        first_seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainKind,
    pub source: InstanceSource,
    /// Agents per generated instance; ignored for files.
    pub num_agents: usize,
    pub methods: Vec<Method>,
    pub update_fraction: f64,
    pub slack: f64,
    /// Mean per-episode penalty at or below which nobody replans.
    pub nse_tolerance: f64,
    pub epsilon: f64,
    pub episodes: usize,
    /// `None`: four times the grid diameter.
    pub horizon: Option<usize>,
    /// Rollout seeds; every instance is run once per seed.
    pub seeds: Vec<u64>,
    pub considerate: ConsiderateWeights,
    /// One generaliser trained on all agents' samples instead of one each.
    pub shared_predictor: bool,
    pub discount: f64,
    pub vi_tolerance: f64,
    /// Append wall-clock columns to the CSV (which then stops being
    /// reproducible byte for byte).
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: DomainKind::Salp,
            source: InstanceSource::Generated {
                width: 10,
                height: 10,
                count: 5,
                first_seed: 0,
            },
            num_agents: 4,
            methods: vec![Method::Naive, Method::Recon],
            update_fraction: 0.5,
            slack: 0.0,
            nse_tolerance: 0.0,
            epsilon: DEFAULT_EPSILON,
            episodes: 100,
            horizon: None,
            seeds: vec![0],
            considerate: ConsiderateWeights::default(),
            shared_predictor: false,
            discount: 0.95,
            vi_tolerance: 1e-6,
            timing: false,
        }
    }
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, ()> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| ()))
        .collect()
}

/// width, height, count, first seed
type Dims = (usize, usize, usize, u64);

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Input(m));
        if self.methods.is_empty() {
            return bad("no methods configured".into());
        }
        if !(0.0..=1.0).contains(&self.update_fraction) {
            return bad(format!(
                "update_fraction {} outside [0, 1]",
                self.update_fraction
            ));
        }
        if self.seeds.is_empty() {
            return bad("no seeds configured".into());
        }
        if !(self.slack >= 0.0) {
            return bad(format!("slack must be nonnegative, got {}", self.slack));
        }
        if !(self.nse_tolerance >= 0.0) {
            return bad(format!(
                "nse_tolerance must be nonnegative, got {}",
                self.nse_tolerance
            ));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.episodes == 0 {
            return bad("episodes must be positive".into());
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return bad(format!(
                "discount must lie in (0, 1), got {}",
                self.discount
            ));
        }
        if !(self.vi_tolerance > 0.0) {
            return bad("vi_tolerance must be positive".into());
        }
        match &self.source {
            InstanceSource::Files(f) if f.is_empty() => bad("no instance files".into()),
            InstanceSource::Generated { count: 0, .. } => {
                bad("instance count must be positive".into())
            }
            InstanceSource::Generated { .. } if self.num_agents == 0 => {
                bad("num_agents must be positive".into())
            }
            _ => Ok(()),
        }
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let invalid = || Error::Input(format!("invalid value '{value}' for '{key}'"));
        fn num<T: FromStr>(v: &str, e: impl Fn() -> Error) -> Result<T> {
            v.parse().map_err(|_| e())
        }
        let generated = |cfg: &mut Self| -> Dims {
            match cfg.source {
                InstanceSource::Generated {
                    width,
                    height,
                    count,
                    first_seed,
                } => (width, height, count, first_seed),
                InstanceSource::Files(_) => (10, 10, 5, 0),
            }
        };
        let set_generated = |cfg: &mut Self, f: &dyn Fn(&mut Dims)| {
            let mut g = generated(cfg);
            f(&mut g);
            cfg.source = InstanceSource::Generated {
                width: g.0,
                height: g.1,
                count: g.2,
                first_seed: g.3,
            };
        };
        match key {
            "domain" => self.domain = value.parse()?,
            "instances" => {
                self.source = InstanceSource::Files(
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(PathBuf::from)
                        .collect(),
                )
            }
            "width" => {
                let v: usize = num(value, invalid)?;
                set_generated(self, &|g| g.0 = v);
            }
            "height" => {
                let v: usize = num(value, invalid)?;
                set_generated(self, &|g| g.1 = v);
            }
            "instance_count" => {
                let v: usize = num(value, invalid)?;
                set_generated(self, &|g| g.2 = v);
            }
            "instance_seed" => {
                let v: u64 = num(value, invalid)?;
                set_generated(self, &|g| g.3 = v);
            }
            "num_agents" => self.num_agents = num(value, invalid)?,
            "methods" => {
                self.methods = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "update_fraction" => self.update_fraction = num(value, invalid)?,
            "slack" => self.slack = num(value, invalid)?,
            "nse_tolerance" => self.nse_tolerance = num(value, invalid)?,
            "epsilon" => self.epsilon = num(value, invalid)?,
            "episodes" => self.episodes = num(value, invalid)?,
            "horizon" => self.horizon = Some(num(value, invalid)?),
            "seeds" => self.seeds = parse_list(value).map_err(|_| invalid())?,
            "alpha1" => self.considerate.selfish = num(value, invalid)?,
            "alpha2" => self.considerate.care = num(value, invalid)?,
            "shared_predictor" => self.shared_predictor = num(value, invalid)?,
            "discount" => self.discount = num(value, invalid)?,
            "vi_tolerance" => self.vi_tolerance = num(value, invalid)?,
            "timing" => self.timing = num(value, invalid)?,
            other => return Err(Error::Input(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Read `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                column: 1,
                message: "expected key = value".into(),
            })?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                line: i + 1,
                column: raw.find(v.trim()).map_or(1, |c| c + 1),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}
