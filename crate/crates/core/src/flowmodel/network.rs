use crate::topology::{build_latency_table, Latency, LatencyTable, NodeId, Topology};

use super::ModelError;

/// What the flow models see of a topology: each end host's access bandwidth
/// and the one-way latency between every pair of hosts.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    latency: LatencyTable,
    bandwidth: Vec<f64>,
}

impl Network {
    pub fn from_topology(topology: &Topology) -> Self {
        let latency = build_latency_table(topology);
        let bandwidth = latency
            .hosts()
            .iter()
            .map(|&h| topology.nodes()[h.index()].access_bandwidth.expect("hosts carry a bandwidth"))
            .collect();
        Network { latency, bandwidth }
    }

    /// Builds a network directly from `(host, bits/s)` pairs and a latency
    /// function over host positions.
    pub fn new(hosts: &[(NodeId, f64)], latency: impl FnMut(usize, usize) -> Latency) -> Result<Self, ModelError> {
        if let Some((h, _)) = hosts.iter().find(|(_, bw)| !(bw.is_finite() && *bw > 0.0)) {
            return Err(ModelError::InvalidNetwork(format!("host {h} needs a positive bandwidth")));
        }
        let ids = hosts.iter().map(|(h, _)| *h).collect();
        let latency = LatencyTable::from_fn(ids, latency).map_err(|e| ModelError::InvalidNetwork(e.to_string()))?;
        Ok(Network { latency, bandwidth: hosts.iter().map(|(_, bw)| *bw).collect() })
    }

    /// Hosts `0..n` with the given bandwidths, all pairs `latency` apart.
    pub fn uniform(bandwidths: &[f64], latency: Latency) -> Result<Self, ModelError> {
        let hosts: Vec<_> = bandwidths.iter().enumerate().map(|(i, bw)| (NodeId(i as u32), *bw)).collect();
        Self::new(&hosts, |i, j| if i == j { Latency::ZERO } else { latency })
    }

    pub fn hosts(&self) -> &[NodeId] {
        self.latency.hosts()
    }

    pub fn host_count(&self) -> usize {
        self.bandwidth.len()
    }

    pub fn host_index(&self, host: NodeId) -> Result<usize, ModelError> {
        self.latency.host_index(host).ok_or(ModelError::UnknownHost(host))
    }

    /// Access bandwidth of the host at position `ix`, bits/s.
    pub fn bandwidth_at(&self, ix: usize) -> f64 {
        self.bandwidth[ix]
    }

    pub fn bandwidth(&self, host: NodeId) -> Result<f64, ModelError> {
        Ok(self.bandwidth[self.host_index(host)?])
    }

    pub fn latency_at(&self, src: usize, dst: usize) -> Latency {
        self.latency.by_index(src, dst)
    }

    pub fn latency(&self, src: NodeId, dst: NodeId) -> Result<Latency, ModelError> {
        Ok(self.latency_at(self.host_index(src)?, self.host_index(dst)?))
    }

    pub fn latency_table(&self) -> &LatencyTable {
        &self.latency
    }
}
