//! Line-oriented `key = value` scenario files.
//!
//! ```text
//! # topology: either a file written by `gen-topology` ...
//! topology_file = topo.txt
//! # ... or generator parameters (all optional, defaults shown)
//! transit = 1
//! transit_nodes = 6
//! stubs = 3
//! stub_routers = 3
//! hosts = 10
//! topology_seed = 1
//!
//! model = bandwidth-share
//! seed = 7
//! flow_count = 10000
//! flow_size = 200000            # bytes; a comma list for sweeps
//! arrival = all-at-once         # or poisson
//! poisson_rate = 100            # flows per second
//! poisson_horizon = 10          # seconds, optional
//! setup_delay = 0
//! csv = flows.csv
//! stats = stats.json
//! ```
//!
//! Relative `topology_file` paths are resolved against the config file's
//! directory; output names are relative to the output directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flowsim::flowmodel::ModelKind;
use flowsim::topology::TSParams;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("`{0}` and generator parameters are mutually exclusive")]
    Conflict(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopologySource {
    Generate(TSParams),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arrival {
    AllAtOnce,
    /// Exponential inter-arrival times at `rate` flows per second. Arrivals
    /// stop at `horizon` seconds if one is set, and after `flow_count` flows
    /// in any case.
    Poisson {
        rate: f64,
        horizon: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub topology: TopologySource,
    pub model: ModelKind,
    pub seed: u64,
    pub flow_count: usize,
    pub flow_sizes: Vec<u64>,
    pub arrival: Arrival,
    pub setup_delay: f64,
    pub csv: PathBuf,
    pub stats: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            topology: TopologySource::Generate(TSParams::default()),
            model: ModelKind::BandwidthShare,
            seed: 1,
            flow_count: 1000,
            flow_sizes: vec![200_000],
            arrival: Arrival::AllAtOnce,
            setup_delay: 0.0,
            csv: PathBuf::from("flows.csv"),
            stats: PathBuf::from("stats.json"),
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, crate::CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Ok(Self::parse(&text, base)?)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        let mut params = TSParams::default();
        let mut generator_keys = false;
        let mut file = None;
        let mut arrival = None;
        let mut rate = None;
        let mut horizon = None;
        let mut seen = HashSet::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey { line, key: key.into() });
            }
            let bad = |message: String| ConfigError::BadValue { line, key: key.into(), message };
            match key {
                "topology_file" => file = Some(base_dir.join(value)),
                "transit" | "transit_nodes" | "stubs" | "stub_routers" | "hosts" => {
                    generator_keys = true;
                    let n: u32 = num(value).map_err(bad)?;
                    match key {
                        "transit" => params.transit_domains = n,
                        "transit_nodes" => params.transit_nodes_per_domain = n,
                        "stubs" => params.stub_domains_per_transit_node = n,
                        "stub_routers" => params.stub_routers_per_stub = n,
                        _ => params.hosts_per_stub_router = n,
                    }
                }
                "topology_seed" => {
                    generator_keys = true;
                    params.seed = num(value).map_err(bad)?;
                }
                "model" => cfg.model = value.parse().map_err(bad)?,
                "seed" => cfg.seed = num(value).map_err(bad)?,
                "flow_count" => cfg.flow_count = num(value).map_err(bad)?,
                "flow_size" => {
                    cfg.flow_sizes = value.split(',').map(|v| num(v.trim())).collect::<Result<_, _>>().map_err(bad)?
                }
                "arrival" => {
                    arrival = Some(match value {
                        "all-at-once" | "all_at_once" => false,
                        "poisson" => true,
                        other => return Err(bad(format!("expected `all-at-once` or `poisson`, got {other:?}"))),
                    })
                }
                "poisson_rate" => rate = Some(num::<f64>(value).map_err(bad)?),
                "poisson_horizon" => horizon = Some(num::<f64>(value).map_err(bad)?),
                "setup_delay" => cfg.setup_delay = num(value).map_err(bad)?,
                "csv" => cfg.csv = PathBuf::from(value),
                "stats" => cfg.stats = PathBuf::from(value),
                _ => return Err(ConfigError::UnknownKey { line, key: key.into() }),
            }
        }

        cfg.topology = match file {
            Some(_) if generator_keys => return Err(ConfigError::Conflict("topology_file")),
            Some(path) => TopologySource::File(path),
            None => TopologySource::Generate(params),
        };
        cfg.arrival = match arrival {
            Some(true) => Arrival::Poisson {
                rate: rate.ok_or_else(|| ConfigError::Invalid("poisson arrival needs `poisson_rate`".into()))?,
                horizon,
            },
            _ if rate.is_some() || horizon.is_some() => {
                return Err(ConfigError::Invalid("poisson parameters given without `arrival = poisson`".into()))
            }
            _ => Arrival::AllAtOnce,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.flow_count == 0 {
            return Err(ConfigError::Invalid("flow_count must be at least 1".into()));
        }
        if self.flow_sizes.is_empty() || self.flow_sizes.contains(&0) {
            return Err(ConfigError::Invalid("flow sizes must be positive".into()));
        }
        if let Arrival::Poisson { rate, horizon } = self.arrival {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(ConfigError::Invalid("poisson_rate must be positive".into()));
            }
            if horizon.is_some_and(|h| !(h > 0.0 && h.is_finite())) {
                return Err(ConfigError::Invalid("poisson_horizon must be positive".into()));
            }
        }
        if !(self.setup_delay >= 0.0 && self.setup_delay.is_finite()) {
            return Err(ConfigError::Invalid("setup_delay must be non-negative".into()));
        }
        if let TopologySource::Generate(p) = &self.topology {
            p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    /// The single flow size of a `run`.
    pub fn flow_size(&self) -> Result<u64, ConfigError> {
        match self.flow_sizes[..] {
            [size] => Ok(size),
            _ => Err(ConfigError::Invalid("`run` takes one flow_size; use `sweep` for a list".into())),
        }
    }
}

fn num<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| format!("{value:?}: {e}"))
}
