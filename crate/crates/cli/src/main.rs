use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flowsim::topology::TSParams;
use flowsim_cli::{cmd_gen_topology, cmd_run, cmd_sweep, CliError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "flowsim", version, about = "Flow-level network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a transit-stub topology file.
    GenTopology {
        #[arg(long, default_value_t = TSParams::default().transit_domains)]
        transit: u32,
        #[arg(long, default_value_t = TSParams::default().transit_nodes_per_domain)]
        transit_nodes: u32,
        #[arg(long, default_value_t = TSParams::default().stub_domains_per_transit_node)]
        stubs: u32,
        #[arg(long, default_value_t = TSParams::default().stub_routers_per_stub)]
        stub_routers: u32,
        #[arg(long, default_value_t = TSParams::default().hosts_per_stub_router)]
        hosts: u32,
        #[arg(long, default_value_t = TSParams::default().seed)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run one scenario and write per-flow CSV and stats JSON.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a scenario once per flow size.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated sizes in bytes; defaults to the config's flow_size list.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<u64>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn execute(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::GenTopology { transit, transit_nodes, stubs, stub_routers, hosts, seed, output } => {
            let params = TSParams {
                transit_domains: transit,
                transit_nodes_per_domain: transit_nodes,
                stub_domains_per_transit_node: stubs,
                stub_routers_per_stub: stub_routers,
                hosts_per_stub_router: hosts,
                seed,
                ..TSParams::default()
            };
            let report = cmd_gen_topology(&params, &output)?;
            println!("{report}");
            Ok(if report.validation.passed() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Run { config, output } => {
            let cfg = ScenarioConfig::load(&config)?;
            let stats = cmd_run(&cfg, &output)?;
            let d = stats.duration_s;
            println!(
                "{} flows, mean {:.6} s, median {:.6} s, p95 {:.6} s, max {:.6} s, {} events, {:.3} s wall clock",
                d.count, d.mean, d.median, d.p95, d.max, stats.events, stats.wall_clock_s
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, sizes, output } => {
            let cfg = ScenarioConfig::load(&config)?;
            let sizes = if sizes.is_empty() { cfg.flow_sizes.clone() } else { sizes };
            let rows = cmd_sweep(&cfg, &sizes, &output)?;
            let mut table = Vec::new();
            flowsim_cli::run::write_sweep(&rows, &mut table).expect("writing to memory");
            print!("{}", String::from_utf8_lossy(&table));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
