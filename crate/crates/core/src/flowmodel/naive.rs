use std::sync::Arc;

use crate::engine::EventQueue;
use crate::time::SimTime;
use crate::topology::NodeId;

use super::share::{delivery, open};
use super::{
    DeliveryRecord, Flow, FlowId, FlowModel, FlowSpec, FlowState, ModelError, ModelKind, ModelStats, Network, Payload,
};

/// Seconds from request to delivery of `size` bytes when cross traffic is
/// ignored.
pub fn naive_duration(network: &Network, src: NodeId, dst: NodeId, size: u64) -> Result<f64, ModelError> {
    if size == 0 {
        return Err(ModelError::ZeroSize);
    }
    let (s, d) = (network.host_index(src)?, network.host_index(dst)?);
    let rate = network.bandwidth_at(s).min(network.bandwidth_at(d));
    Ok(network.latency_at(s, d).as_secs_f64() + 8.0 * size as f64 / rate)
}

/// Contention-free model: every flow gets the smaller endpoint bandwidth for
/// its whole lifetime.
pub struct NaiveModel {
    network: Arc<Network>,
    flows: Vec<Flow>,
    stats: ModelStats,
}

impl NaiveModel {
    pub fn new(network: Arc<Network>) -> Self {
        NaiveModel { network, flows: Vec::new(), stats: ModelStats::default() }
    }
}

impl FlowModel for NaiveModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Naive
    }

    fn network(&self) -> &Network {
        &self.network
    }

    fn open_flow(&mut self, spec: FlowSpec, requested: SimTime) -> Result<FlowId, ModelError> {
        open(&self.network, &mut self.flows, spec, requested)
    }

    fn start_flow(&mut self, id: FlowId, queue: &mut EventQueue<Payload>) -> Result<(), ModelError> {
        let now = queue.now();
        let flow = self.flows.get_mut(id.index()).ok_or(ModelError::UnknownFlow(id))?;
        if flow.state != FlowState::Pending {
            return Err(ModelError::AlreadyStarted(id));
        }
        flow.state = FlowState::Transmitting;
        flow.last_settle = now;
        flow.rate = self.network.bandwidth_at(flow.src_ix).min(self.network.bandwidth_at(flow.dst_ix));
        flow.version = 1;
        self.stats.flows_started += 1;
        self.stats.rate_recomputations += 1;
        queue.schedule(now.after(flow.time_to_finish())?, Payload::FlowCompletion { flow: id, version: 1 })?;
        Ok(())
    }

    fn on_completion(
        &mut self,
        id: FlowId,
        version: u64,
        queue: &mut EventQueue<Payload>,
    ) -> Result<Option<DeliveryRecord>, ModelError> {
        let flow = self.flows.get_mut(id.index()).ok_or(ModelError::UnknownFlow(id))?;
        if flow.state != FlowState::Transmitting || flow.version != version {
            self.stats.stale_completions += 1;
            return Ok(None);
        }
        let settled = flow.settle(queue.now())?;
        if flow.is_clamp(settled.overdrain) {
            self.stats.clamp_firings += 1;
        }
        flow.remaining = 0.0;
        flow.state = FlowState::Delivered;
        self.stats.max_byte_error = self.stats.max_byte_error.max(flow.byte_error());
        self.stats.flows_delivered += 1;
        delivery(&self.network, flow, queue.now()).map(Some)
    }

    fn flow(&self, id: FlowId) -> Option<&Flow> {
        self.flows.get(id.index())
    }

    fn stats(&self) -> ModelStats {
        self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Latency;

    #[test]
    fn duration_formula() {
        let net = Network::uniform(&[1e6, 10e6], Latency::from_millis(50)).unwrap();
        let d = naive_duration(&net, NodeId(0), NodeId(1), 125_000).unwrap();
        assert!((d - 1.05).abs() < 1e-12);
        let net = Network::uniform(&[8.0, 8.0], Latency::ZERO).unwrap();
        assert_eq!(naive_duration(&net, NodeId(0), NodeId(1), 1).unwrap(), 1.0);
        assert_eq!(naive_duration(&net, NodeId(0), NodeId(5), 1), Err(ModelError::UnknownHost(NodeId(5))));
        assert_eq!(naive_duration(&net, NodeId(0), NodeId(1), 0), Err(ModelError::ZeroSize));
    }
}
