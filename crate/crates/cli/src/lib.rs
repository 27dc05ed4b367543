//! Command-line harness: topology generation, randomized workloads, CSV and
//! JSON output.

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use flowsim::topology::{
    build_latency_table, generate_transit_stub, save_topology, topology_stats, validate_no_core_bottleneck, TSParams,
    TopologyError, TopologyFileError, TopologyStats, ValidationReport,
};
use flowsim::transport::TransportError;

pub mod config;
pub mod run;
pub mod stats;
pub mod workload;

pub use config::{Arrival, ConfigError, ScenarioConfig, TopologySource};
pub use run::{cmd_run, cmd_sweep, simulate_workload, FlowRecord, RunStats, Simulation};
pub use stats::{aggregate, DurationStats, EmptyInput};
pub use workload::{random_workload, WorkloadError, WorkloadFlow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("topology file: {0}")]
    TopologyFile(#[from] TopologyFileError),
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("workload: {0}")]
    Workload(#[from] WorkloadError),
    #[error("simulation: {0}")]
    Simulation(#[from] TransportError),
    #[error(transparent)]
    Empty(#[from] EmptyInput),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// 2 for validation failures, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenReport {
    pub nodes: usize,
    pub links: usize,
    pub hosts: usize,
    pub rtt: Option<TopologyStats>,
    pub validation: ValidationReport,
}

impl std::fmt::Display for GenReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "nodes: {}", self.nodes)?;
        writeln!(f, "links: {}", self.links)?;
        writeln!(f, "end hosts: {}", self.hosts)?;
        if let Some(s) = self.rtt {
            writeln!(f, "avg rtt: {:.3} ms", s.avg_rtt * 1e3)?;
            writeln!(f, "max rtt: {:.3} ms", s.max_rtt * 1e3)?;
        }
        if self.validation.passed() {
            write!(f, "no-core-bottleneck validation: passed")
        } else {
            write!(
                f,
                "no-core-bottleneck validation: FAILED ({} link(s) below {} bit/s)",
                self.validation.violations.len(),
                self.validation.max_access_bandwidth
            )
        }
    }
}

/// The `gen-topology` command. The file is written even when validation
/// fails; the caller decides the exit code from the report.
pub fn cmd_gen_topology(params: &TSParams, out: &Path) -> Result<GenReport, CliError> {
    let topology = generate_transit_stub(params)?;
    save_topology(&topology, out)?;
    let table = build_latency_table(&topology);
    Ok(GenReport {
        nodes: topology.node_count(),
        links: topology.link_count(),
        hosts: topology.host_count(),
        rtt: topology_stats(&table).ok(),
        validation: validate_no_core_bottleneck(&topology),
    })
}
