//! Flow-level network models.
//!
//! A flow is one application-level transfer: a chunk of bytes from one end
//! host to another, simulated as a single fluid stream instead of packets.
//! Only end-host access links are contended; the core never limits a flow.
//!
//! Two interchangeable models are provided:
//!
//! * [`BandwidthShareModel`] gives every flow the minimum of its per-endpoint
//!   shares, where an endpoint's share is its access bandwidth divided by the
//!   number of flows it currently sends or receives. A flow starting or
//!   finishing only changes the shares at its two endpoints, so only flows
//!   incident to those endpoints are touched.
//! * [`NaiveModel`] ignores cross traffic: every flow runs at the smaller of
//!   its endpoints' access bandwidths.
//!
//! A flow's bandwidth is held at both endpoints until its last byte has been
//! transmitted. Delivery happens one one-way path latency later.

mod flow;
mod naive;
mod network;
pub mod oracle;
mod scenario;
mod share;

use thiserror::Error;

use crate::engine::{EngineError, EventQueue};
use crate::time::{InvalidTime, SimTime};
use crate::topology::NodeId;

pub use flow::{Flow, FlowState, CLAMP_TOLERANCE};
pub use naive::{naive_duration, NaiveModel};
pub use network::Network;
pub use scenario::{simulate, simulate_observed, Outcome, Scenario, ScenarioFlow};
pub use share::{min_share_rate, BandwidthShareModel, NodeLoad};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId(pub u64);

impl FlowId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for FlowId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ModelKind {
    Naive,
    #[default]
    BandwidthShare,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(ModelKind::Naive),
            "bandwidth-share" | "bandwidth_share" => Ok(ModelKind::BandwidthShare),
            other => Err(format!("unknown model {other:?}, expected `naive` or `bandwidth-share`")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Naive => "naive",
            ModelKind::BandwidthShare => "bandwidth-share",
        })
    }
}

/// Event payloads of a flow simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    /// A previously opened flow begins transmitting.
    FlowStart(FlowId),
    /// The flow's last byte leaves the sender, unless `version` is stale.
    FlowCompletion { flow: FlowId, version: u64 },
    /// The flow has fully arrived at its destination.
    Delivery(FlowId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSpec {
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u64,
    /// Opaque to the model; copied into the delivery record.
    pub tag: u64,
}

/// A completed flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeliveryRecord {
    pub flow: FlowId,
    pub tag: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u64,
    /// When the flow was requested.
    pub start: SimTime,
    /// When the last byte was transmitted by the sender.
    pub transmitted: SimTime,
    /// When the last byte arrived at the receiver.
    pub delivered: SimTime,
}

impl DeliveryRecord {
    /// Simulated completion time in seconds.
    pub fn duration(&self) -> f64 {
        self.delivered.since(self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown end host {0}")]
    UnknownHost(NodeId),
    #[error("flow source and destination are both {0}")]
    SameEndpoints(NodeId),
    #[error("flows must carry at least one byte")]
    ZeroSize,
    #[error("unknown flow {0}")]
    UnknownFlow(FlowId),
    #[error("flow {0} was already started")]
    AlreadyStarted(FlowId),
    #[error("flow {0} has no load at one of its endpoints")]
    NoLoad(FlowId),
    #[error("flow {flow} settled at {now} but was last settled at {last}")]
    TimeRegression { flow: FlowId, now: SimTime, last: SimTime },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Time(#[from] InvalidTime),
}

/// Counters kept by a model over one run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModelStats {
    pub flows_started: u64,
    pub flows_delivered: u64,
    /// Evaluations of the rate formula.
    pub rate_recomputations: u64,
    /// Flows whose rate changed and whose completion was rescheduled.
    pub reschedules: u64,
    pub stale_completions: u64,
    /// Settlements that drained more than [`CLAMP_TOLERANCE`] of a flow
    /// beyond its remaining bytes.
    pub clamp_firings: u64,
    /// Rates that decreased while reallocating after a completion.
    pub monotonicity_violations: u64,
    /// Largest `|bytes drained - size| / size` seen at delivery.
    pub max_byte_error: f64,
}

/// Common interface of the interchangeable network models.
pub trait FlowModel {
    fn kind(&self) -> ModelKind;

    fn network(&self) -> &Network;

    /// Registers a flow requested at `requested` without starting it.
    fn open_flow(&mut self, spec: FlowSpec, requested: SimTime) -> Result<FlowId, ModelError>;

    /// Starts transmitting an opened flow at the queue's current time.
    fn start_flow(&mut self, id: FlowId, queue: &mut EventQueue<Payload>) -> Result<(), ModelError>;

    /// Handles a popped completion event. Stale events yield `None`.
    fn on_completion(
        &mut self,
        id: FlowId,
        version: u64,
        queue: &mut EventQueue<Payload>,
    ) -> Result<Option<DeliveryRecord>, ModelError>;

    fn flow(&self, id: FlowId) -> Option<&Flow>;

    fn stats(&self) -> ModelStats;

    /// Full consistency check of the model state; meant for tests.
    fn check_invariants(&self) -> Result<(), String> {
        Ok(())
    }
}

pub fn build_model(kind: ModelKind, network: std::sync::Arc<Network>) -> Box<dyn FlowModel> {
    match kind {
        ModelKind::Naive => Box::new(NaiveModel::new(network)),
        ModelKind::BandwidthShare => Box::new(BandwidthShareModel::new(network)),
    }
}
