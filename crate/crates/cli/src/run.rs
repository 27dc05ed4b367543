use std::cell::RefCell;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::rc::Rc;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use flowsim::engine::RunSummary;
use flowsim::flowmodel::{ModelKind, ModelStats, Network};
use flowsim::topology::{generate_transit_stub, load_topology, validate_no_core_bottleneck, NodeId, Topology};
use flowsim::transport::{DeliveryRecord, Message, Transport, TransportError};

use crate::config::{ScenarioConfig, TopologySource};
use crate::stats::{aggregate, DurationStats};
use crate::workload::{random_workload, WorkloadFlow};
use crate::CliError;

pub const CSV_HEADER: &str = "flow_id,src,dst,size_bytes,start_s,delivered_s,duration_s";
const PORT: u16 = 1;

/// One output row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub flow_id: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u64,
    pub start: f64,
    pub delivered: f64,
}

impl FlowRecord {
    pub fn duration(&self) -> f64 {
        self.delivered - self.start
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub records: Vec<FlowRecord>,
    pub summary: RunSummary,
    pub model: ModelStats,
    /// Seconds spent building the transport, sending and running.
    pub wall_clock: f64,
}

/// Replays `workload` through a fresh transport with one listener per host.
/// Rows come back in workload order.
pub fn simulate_workload(
    network: Arc<Network>,
    model: ModelKind,
    setup_delay: f64,
    workload: &[WorkloadFlow],
) -> Result<Simulation, TransportError> {
    let clock = Instant::now();
    let mut transport = Transport::new(Arc::clone(&network), model).with_setup_delay(setup_delay)?;
    let arrived: Rc<RefCell<Vec<Option<DeliveryRecord>>>> = Rc::new(RefCell::new(vec![None; workload.len()]));
    for &host in network.hosts() {
        let arrived = Rc::clone(&arrived);
        transport.listen(host, PORT, move |_, record| {
            arrived.borrow_mut()[record.tag as usize] = Some(*record);
            Ok(())
        })?;
    }
    for (i, f) in workload.iter().enumerate() {
        let msg = Message { size: f.size, tag: i as u64, src: f.src, dst: f.dst, dst_port: PORT };
        transport.send_at(f.start, msg)?;
    }
    let summary = transport.run()?;
    let wall_clock = clock.elapsed().as_secs_f64();

    let records = arrived
        .borrow()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let r = r.expect("every sent flow is delivered");
            FlowRecord {
                flow_id: i,
                src: r.src,
                dst: r.dst,
                size: r.size,
                start: r.start.as_secs(),
                delivered: r.delivered.as_secs(),
            }
        })
        .collect();
    Ok(Simulation { records, summary, model: transport.model_stats(), wall_clock })
}

pub fn write_csv(records: &[FlowRecord], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{:.9},{:.9},{:.9}",
            r.flow_id,
            r.src,
            r.dst,
            r.size,
            r.start,
            r.delivered,
            r.duration()
        )?;
    }
    Ok(())
}

/// Contents of the stats JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub model: String,
    pub seed: u64,
    pub flow_size_bytes: u64,
    pub duration_s: DurationStats,
    pub events: u64,
    pub queue_high_water_mark: usize,
    pub rate_recomputations: u64,
    pub reschedules: u64,
    pub stale_completions: u64,
    pub final_clock_s: f64,
    /// Varies between runs.
    pub wall_clock_s: f64,
    /// Process-wide peak resident set, when the platform reports it. Varies
    /// between runs.
    pub peak_rss_kb: Option<u64>,
}

/// Fields of [`RunStats`] that are not reproducible.
pub const NONDETERMINISTIC_FIELDS: [&str; 2] = ["wall_clock_s", "peak_rss_kb"];

impl RunStats {
    pub fn new(model: ModelKind, seed: u64, size: u64, sim: &Simulation) -> Result<Self, CliError> {
        let durations: Vec<f64> = sim.records.iter().map(FlowRecord::duration).collect();
        Ok(RunStats {
            model: model.to_string(),
            seed,
            flow_size_bytes: size,
            duration_s: aggregate(&durations)?,
            events: sim.summary.events,
            queue_high_water_mark: sim.summary.high_water_mark,
            rate_recomputations: sim.model.rate_recomputations,
            reschedules: sim.model.reschedules,
            stale_completions: sim.model.stale_completions,
            final_clock_s: sim.summary.final_clock.as_secs(),
            wall_clock_s: sim.wall_clock,
            peak_rss_kb: peak_rss_kb(),
        })
    }
}

/// Drops the fields listed in [`NONDETERMINISTIC_FIELDS`] from a parsed stats
/// document.
pub fn deterministic_part(mut stats: serde_json::Value) -> serde_json::Value {
    if let Some(map) = stats.as_object_mut() {
        for key in NONDETERMINISTIC_FIELDS {
            map.remove(key);
        }
    }
    stats
}

fn peak_rss_kb() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

pub fn build_topology(source: &TopologySource) -> Result<Topology, CliError> {
    match source {
        TopologySource::Generate(params) => Ok(generate_transit_stub(params)?),
        TopologySource::File(path) => Ok(load_topology(path)?),
    }
}

/// Rejects topologies whose core could bottleneck an access link.
pub fn check_topology(topology: &Topology) -> Result<(), CliError> {
    let report = validate_no_core_bottleneck(topology);
    if report.passed() {
        return Ok(());
    }
    Err(CliError::Validation(format!(
        "{} core link(s) slower than the fastest access link ({} bit/s)",
        report.violations.len(),
        report.max_access_bandwidth
    )))
}

fn write_file(path: &Path, write: impl FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = io::BufWriter::new(file);
    write(&mut out).and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))
}

fn write_outputs(dir: &Path, cfg: &ScenarioConfig, sim: &Simulation, stats: &RunStats) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_file(&dir.join(&cfg.csv), |out| write_csv(&sim.records, out))?;
    write_file(&dir.join(&cfg.stats), |out| {
        serde_json::to_writer_pretty(&mut *out, stats)?;
        writeln!(out)
    })
}

/// Loads or generates the topology, validates it and derives the network.
pub fn prepare(cfg: &ScenarioConfig) -> Result<Arc<Network>, CliError> {
    let topology = build_topology(&cfg.topology)?;
    check_topology(&topology)?;
    Ok(Arc::new(Network::from_topology(&topology)))
}

fn run_size(network: &Arc<Network>, cfg: &ScenarioConfig, size: u64) -> Result<(Simulation, RunStats), CliError> {
    let workload = random_workload(network.hosts(), cfg.flow_count, size, cfg.arrival, cfg.seed)?;
    let sim = simulate_workload(Arc::clone(network), cfg.model, cfg.setup_delay, &workload)?;
    let stats = RunStats::new(cfg.model, cfg.seed, size, &sim)?;
    Ok((sim, stats))
}

/// The `run` command: one workload, CSV and stats JSON in `out_dir`.
pub fn cmd_run(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunStats, CliError> {
    let size = cfg.flow_size()?;
    let network = prepare(cfg)?;
    let (sim, stats) = run_size(&network, cfg, size)?;
    write_outputs(out_dir, cfg, &sim, &stats)?;
    Ok(stats)
}

pub const SWEEP_HEADER: &str =
    "size_bytes,flows,mean_duration_s,median_duration_s,p95_duration_s,max_duration_s,events,wall_clock_s";

/// The `sweep` command: one run per size on the same topology and the same
/// workload seed, so runs differ only in flow size. Each run's files go to
/// `out_dir/run_<index>_<size>/`; the summary table goes to
/// `out_dir/sweep.csv`.
pub fn cmd_sweep(cfg: &ScenarioConfig, sizes: &[u64], out_dir: &Path) -> Result<Vec<RunStats>, CliError> {
    if sizes.len() < 2 {
        return Err(CliError::Usage("sweep needs at least two sizes".into()));
    }
    if sizes.contains(&0) {
        return Err(CliError::Usage("flow sizes must be positive".into()));
    }
    let network = prepare(cfg)?;
    let mut rows = Vec::with_capacity(sizes.len());
    for (i, &size) in sizes.iter().enumerate() {
        let (sim, stats) = run_size(&network, cfg, size)?;
        write_outputs(&out_dir.join(format!("run_{i:02}_{size}")), cfg, &sim, &stats)?;
        rows.push(stats);
    }
    write_file(&out_dir.join("sweep.csv"), |out| write_sweep(&rows, out))?;
    Ok(rows)
}

pub fn write_sweep(rows: &[RunStats], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        let d = &r.duration_s;
        writeln!(
            out,
            "{},{},{:.9},{:.9},{:.9},{:.9},{},{:.6}",
            r.flow_size_bytes, d.count, d.mean, d.median, d.p95, d.max, r.events, r.wall_clock_s
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use flowsim::topology::Latency;
    use flowsim::SimTime;

    #[test]
    fn csv_rows() {
        let rec = FlowRecord { flow_id: 3, src: NodeId(4), dst: NodeId(9), size: 125_000, start: 0.5, delivered: 1.55 };
        let mut out = Vec::new();
        write_csv(&[rec], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, format!("{CSV_HEADER}\n3,4,9,125000,0.500000000,1.550000000,1.050000000\n"));
    }

    #[test]
    fn transport_round_trip() {
        let net = Arc::new(Network::uniform(&[1e6, 10e6, 1e6], Latency::from_millis(50)).unwrap());
        let w = vec![
            WorkloadFlow { start: SimTime::ZERO, src: NodeId(0), dst: NodeId(1), size: 125_000 },
            WorkloadFlow { start: SimTime::from_secs(0.25), src: NodeId(2), dst: NodeId(1), size: 125_000 },
        ];
        let sim = simulate_workload(net, ModelKind::BandwidthShare, 0.0, &w).unwrap();
        assert_eq!(sim.records.len(), 2);
        assert!((sim.records[0].duration() - 1.05).abs() < 1e-12);
        assert_eq!(sim.records[1].start, 0.25);
        let stats = RunStats::new(ModelKind::BandwidthShare, 0, 125_000, &sim).unwrap();
        assert_eq!(stats.duration_s.count, 2);
        let json = deterministic_part(serde_json::to_value(&stats).unwrap());
        assert!(json.get("wall_clock_s").is_none() && json.get("events").is_some());
    }
}
