use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{self, Event, EventQueue, Handler, RunSummary};
use crate::time::SimTime;
use crate::topology::{Latency, NodeId};

use super::{build_model, DeliveryRecord, FlowModel, FlowSpec, ModelError, ModelKind, ModelStats, Network, Payload};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioFlow {
    pub start: SimTime,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u64,
}

/// A fixed set of flows over a network, driven straight through a model.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub network: Arc<Network>,
    pub flows: Vec<ScenarioFlow>,
}

impl Scenario {
    /// A small random scenario for fuzzing: 2 to `max_hosts` hosts with
    /// bandwidths between 0.5 and 10 Mbps, 1 to `max_flows` flows of 1 to
    /// 100 kB, arriving either all at once or as a Poisson process.
    pub fn random(seed: u64, max_hosts: usize, max_flows: usize) -> Scenario {
        assert!(max_hosts >= 2 && max_flows >= 1);
        const CLASSES: [f64; 6] = [0.5e6, 1e6, 1.5e6, 2e6, 5e6, 10e6];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hosts = rng.random_range(2..=max_hosts);
        let bandwidths: Vec<(NodeId, f64)> = (0..hosts)
            .map(|h| {
                // mostly shared classes so that ties between shares are common
                let bw = if rng.random_bool(0.7) {
                    CLASSES[rng.random_range(0..CLASSES.len())]
                } else {
                    rng.random_range(0.5e6..10e6)
                };
                (NodeId(h as u32), bw)
            })
            .collect();
        let mut lat = vec![vec![Latency::ZERO; hosts]; hosts];
        for i in 0..hosts {
            for j in (i + 1)..hosts {
                let l = Latency::from_nanos(rng.random_range(0..50_000_000));
                lat[i][j] = l;
                lat[j][i] = l;
            }
        }
        let network = Network::new(&bandwidths, |i, j| lat[i][j]).expect("valid random network");

        let count = rng.random_range(1..=max_flows);
        let poisson = rng.random_bool(0.5);
        let rate = rng.random_range(5.0..50.0);
        let mut clock = 0.0f64;
        let flows = (0..count)
            .map(|_| {
                if poisson {
                    clock += -(1.0 - rng.random::<f64>()).ln() / rate;
                }
                let src = rng.random_range(0..hosts);
                let dst = (src + rng.random_range(1..hosts)) % hosts;
                ScenarioFlow {
                    start: SimTime::from_secs(clock),
                    src: NodeId(src as u32),
                    dst: NodeId(dst as u32),
                    size: rng.random_range(1_000..=100_000),
                }
            })
            .collect();
        Scenario { network: Arc::new(network), flows }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    /// One record per scenario flow, in scenario order.
    pub records: Vec<DeliveryRecord>,
    pub summary: RunSummary,
    pub stats: ModelStats,
}

struct Driver<'a, F> {
    model: &'a mut dyn FlowModel,
    records: Vec<Option<DeliveryRecord>>,
    observer: F,
}

impl<F> Handler<Payload> for Driver<'_, F>
where
    F: FnMut(&dyn FlowModel, &Event<Payload>) -> Result<(), String>,
{
    type Error = ModelError;

    fn handle(&mut self, event: Event<Payload>, queue: &mut EventQueue<Payload>) -> Result<(), ModelError> {
        match event.payload {
            Payload::FlowStart(id) => self.model.start_flow(id, queue)?,
            Payload::FlowCompletion { flow, version } => {
                if let Some(record) = self.model.on_completion(flow, version, queue)? {
                    self.records[record.tag as usize] = Some(record);
                }
            }
            // deliveries are read off the completion records directly
            Payload::Delivery(_) => {}
        }
        (self.observer)(&*self.model, &event).map_err(ModelError::InvariantViolated)
    }
}

pub fn simulate(scenario: &Scenario, kind: ModelKind) -> Result<Outcome, ModelError> {
    simulate_observed(scenario, kind, |_, _| Ok(()))
}

/// Like [`simulate`], calling `observer` after every dispatched event. An
/// observer error aborts the run.
pub fn simulate_observed<F>(scenario: &Scenario, kind: ModelKind, observer: F) -> Result<Outcome, ModelError>
where
    F: FnMut(&dyn FlowModel, &Event<Payload>) -> Result<(), String>,
{
    let mut model = build_model(kind, scenario.network.clone());
    let mut queue = EventQueue::new();
    for (i, f) in scenario.flows.iter().enumerate() {
        let spec = FlowSpec { src: f.src, dst: f.dst, size: f.size, tag: i as u64 };
        let id = model.open_flow(spec, f.start)?;
        queue.schedule(f.start, Payload::FlowStart(id))?;
    }
    let mut driver = Driver { model: model.as_mut(), records: vec![None; scenario.flows.len()], observer };
    let summary = engine::run(&mut queue, &mut driver).map_err(|e| e.source)?;
    let records = driver.records.into_iter().map(|r| r.expect("every started flow completes")).collect();
    Ok(Outcome { records, summary, stats: model.stats() })
}
