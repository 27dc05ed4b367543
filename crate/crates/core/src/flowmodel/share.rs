use std::sync::Arc;

use crate::engine::EventQueue;
use crate::time::SimTime;
use crate::topology::NodeId;

use super::{
    DeliveryRecord, Flow, FlowId, FlowModel, FlowSpec, FlowState, ModelError, ModelKind, ModelStats, Network, Payload,
};

/// Number of active flows sent or received by each end host, indexed by host
/// position in the [`Network`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeLoad {
    counts: Vec<u32>,
}

impl NodeLoad {
    pub fn new(hosts: usize) -> Self {
        NodeLoad { counts: vec![0; hosts] }
    }

    pub fn at(&self, ix: usize) -> u32 {
        self.counts[ix]
    }

    pub fn get(&self, network: &Network, host: NodeId) -> Result<u32, ModelError> {
        Ok(self.counts[network.host_index(host)?])
    }

    fn add(&mut self, ix: usize) {
        self.counts[ix] += 1;
    }

    fn remove(&mut self, ix: usize) {
        self.counts[ix] -= 1;
    }
}

#[inline]
fn share(bandwidth: f64, load: u32) -> f64 {
    bandwidth / load as f64
}

/// Minimum of the flow's shares at its source and destination.
pub fn min_share_rate(flow: &Flow, loads: &NodeLoad, network: &Network) -> Result<f64, ModelError> {
    let src = network.host_index(flow.src)?;
    let dst = network.host_index(flow.dst)?;
    let (ls, ld) = (loads.at(src), loads.at(dst));
    if ls == 0 || ld == 0 {
        return Err(ModelError::NoLoad(flow.id));
    }
    Ok(share(network.bandwidth_at(src), ls).min(share(network.bandwidth_at(dst), ld)))
}

/// Minimum-share allocation with reallocation restricted to the endpoints of
/// the flow that started or finished.
pub struct BandwidthShareModel {
    network: Arc<Network>,
    flows: Vec<Flow>,
    loads: NodeLoad,
    /// Transmitting flows per host position, ascending by id.
    incident: Vec<Vec<FlowId>>,
    affected: Vec<FlowId>,
    stats: ModelStats,
}

impl BandwidthShareModel {
    pub fn new(network: Arc<Network>) -> Self {
        let hosts = network.host_count();
        BandwidthShareModel {
            network,
            flows: Vec::new(),
            loads: NodeLoad::new(hosts),
            incident: vec![Vec::new(); hosts],
            affected: Vec::new(),
            stats: ModelStats::default(),
        }
    }

    pub fn loads(&self) -> &NodeLoad {
        &self.loads
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    fn attach(&mut self, id: FlowId, host: usize) {
        let list = &mut self.incident[host];
        if let Err(pos) = list.binary_search(&id) {
            list.insert(pos, id);
            self.loads.add(host);
        }
    }

    fn detach(&mut self, id: FlowId, host: usize) {
        let list = &mut self.incident[host];
        if let Ok(pos) = list.binary_search(&id) {
            list.remove(pos);
            self.loads.remove(host);
        }
    }

    /// Recomputes the rate of every flow incident to `a` or `b`. Flows whose
    /// rate changes are settled at the old rate, get a new version and a new
    /// completion event. Everything else is left untouched.
    fn reallocate(
        &mut self,
        a: usize,
        b: usize,
        after_completion: bool,
        queue: &mut EventQueue<Payload>,
    ) -> Result<(), ModelError> {
        let now = queue.now();
        let mut affected = std::mem::take(&mut self.affected);
        affected.clear();
        merge_sorted(&self.incident[a], &self.incident[b], &mut affected);

        for &id in &affected {
            let flow = &mut self.flows[id.index()];
            let rate = share(self.network.bandwidth_at(flow.src_ix), self.loads.at(flow.src_ix))
                .min(share(self.network.bandwidth_at(flow.dst_ix), self.loads.at(flow.dst_ix)));
            self.stats.rate_recomputations += 1;
            if rate == flow.rate {
                continue;
            }
            if after_completion && rate < flow.rate {
                self.stats.monotonicity_violations += 1;
            }
            let settled = flow.settle(now)?;
            if flow.is_clamp(settled.overdrain) {
                self.stats.clamp_firings += 1;
            }
            flow.rate = rate;
            flow.version += 1;
            let at = now.after(flow.time_to_finish())?;
            queue.schedule(at, Payload::FlowCompletion { flow: id, version: flow.version })?;
            self.stats.reschedules += 1;
        }
        self.affected = affected;
        Ok(())
    }
}

/// Union of two ascending id lists, ascending and without duplicates.
fn merge_sorted(x: &[FlowId], y: &[FlowId], out: &mut Vec<FlowId>) {
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => {
                out.push(x[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(y[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(x[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&x[i..]);
    out.extend_from_slice(&y[j..]);
}

pub(crate) fn open(
    network: &Network,
    flows: &mut Vec<Flow>,
    spec: FlowSpec,
    requested: SimTime,
) -> Result<FlowId, ModelError> {
    let src = network.host_index(spec.src)?;
    let dst = network.host_index(spec.dst)?;
    if src == dst {
        return Err(ModelError::SameEndpoints(spec.src));
    }
    if spec.size == 0 {
        return Err(ModelError::ZeroSize);
    }
    let id = FlowId(flows.len() as u64);
    flows.push(Flow::new(id, spec, src, dst, requested));
    Ok(id)
}

pub(crate) fn delivery(network: &Network, flow: &Flow, transmitted: SimTime) -> Result<DeliveryRecord, ModelError> {
    let latency = network.latency_at(flow.src_ix, flow.dst_ix);
    Ok(DeliveryRecord {
        flow: flow.id,
        tag: flow.tag,
        src: flow.src,
        dst: flow.dst,
        size: flow.size,
        start: flow.requested,
        transmitted,
        delivered: transmitted.after(latency.as_secs_f64())?,
    })
}

impl FlowModel for BandwidthShareModel {
    fn kind(&self) -> ModelKind {
        ModelKind::BandwidthShare
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
        let (src, dst) = (flow.src_ix, flow.dst_ix);
        self.attach(id, src);
        self.attach(id, dst);
        self.stats.flows_started += 1;
        self.reallocate(src, dst, false, queue)
    }

    fn on_completion(
        &mut self,
        id: FlowId,
        version: u64,
        queue: &mut EventQueue<Payload>,
    ) -> Result<Option<DeliveryRecord>, ModelError> {
        let now = queue.now();
        let flow = self.flows.get_mut(id.index()).ok_or(ModelError::UnknownFlow(id))?;
        if flow.state != FlowState::Transmitting || flow.version != version {
            self.stats.stale_completions += 1;
            return Ok(None);
        }
        let settled = flow.settle(now)?;
        if flow.is_clamp(settled.overdrain) {
            self.stats.clamp_firings += 1;
        }
        flow.remaining = 0.0;
        flow.state = FlowState::Delivered;
        self.stats.max_byte_error = self.stats.max_byte_error.max(flow.byte_error());
        self.stats.flows_delivered += 1;
        let (src, dst) = (flow.src_ix, flow.dst_ix);
        self.detach(id, src);
        self.detach(id, dst);
        self.reallocate(src, dst, true, queue)?;
        delivery(&self.network, &self.flows[id.index()], now).map(Some)
    }

    fn flow(&self, id: FlowId) -> Option<&Flow> {
        self.flows.get(id.index())
    }

    fn stats(&self) -> ModelStats {
        self.stats
    }

    fn check_invariants(&self) -> Result<(), String> {
        let hosts = self.network.host_count();
        let mut counts = vec![0u32; hosts];
        let mut used = vec![0.0f64; hosts];
        let active = self.flows.iter().filter(|f| f.state == FlowState::Transmitting);
        for f in active.clone() {
            counts[f.src_ix] += 1;
            counts[f.dst_ix] += 1;
            used[f.src_ix] += f.rate;
            used[f.dst_ix] += f.rate;
        }
        for h in 0..hosts {
            if counts[h] != self.loads.at(h) || counts[h] as usize != self.incident[h].len() {
                return Err(format!(
                    "host position {h}: {} active flows, load {}, incident list {}",
                    counts[h],
                    self.loads.at(h),
                    self.incident[h].len()
                ));
            }
            let bw = self.network.bandwidth_at(h);
            if used[h] > bw * (1.0 + 1e-12) {
                return Err(format!("host position {h}: incident rates sum to {} > capacity {bw}", used[h]));
            }
        }
        for f in active {
            let expected = min_share_rate(f, &self.loads, &self.network).map_err(|e| e.to_string())?;
            if f.rate != expected {
                return Err(format!("flow {}: rate {} but minimum share is {expected}", f.id, f.rate));
            }
            if !(f.rate > 0.0) || !(0.0..=f.size as f64).contains(&f.remaining) {
                return Err(format!("flow {}: rate {} remaining {}", f.id, f.rate, f.remaining));
            }
        }
        Ok(())
    }
}
