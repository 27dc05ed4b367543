use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Latency, NodeId, Topology, TopologyError};

/// Single-source shortest-path latencies from `src` to every node, indexed by
/// node id. Link latency is the edge weight.
pub fn shortest_path_latency(topology: &Topology, src: NodeId) -> Result<Vec<Latency>, TopologyError> {
    topology.node(src)?;
    let n = topology.node_count();
    let mut dist = vec![u64::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[src.index()] = 0;
    heap.push(Reverse((0u64, src)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u.index()] {
            continue;
        }
        for &(v, lat) in topology.neighbors(u) {
            let candidate = d + lat.0;
            if candidate < dist[v.index()] {
                dist[v.index()] = candidate;
                heap.push(Reverse((candidate, v)));
            }
        }
    }
    // a validated topology is connected, so every entry was reached
    Ok(dist.into_iter().map(Latency).collect())
}

/// One-way latencies between every pair of end hosts, one row per host.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyTable {
    hosts: Vec<NodeId>,
    index: Vec<Option<u32>>,
    rows: Vec<Latency>,
}

impl LatencyTable {
    /// Builds a table from an explicit latency function over host indices.
    /// The function must be symmetric with a zero diagonal.
    pub fn from_fn(
        hosts: Vec<NodeId>,
        mut latency: impl FnMut(usize, usize) -> Latency,
    ) -> Result<Self, TopologyError> {
        let n = hosts.len();
        let mut rows = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                rows.push(latency(i, j));
            }
        }
        let mut index = vec![None; hosts.iter().map(|h| h.index() + 1).max().unwrap_or(0)];
        for (i, h) in hosts.iter().enumerate() {
            if index[h.index()].replace(i as u32).is_some() {
                return Err(TopologyError::InvariantViolation(format!("host {h} listed twice")));
            }
        }
        let table = LatencyTable { hosts, index, rows };
        for i in 0..n {
            if table.rows[i * n + i] != Latency::ZERO {
                return Err(TopologyError::InvariantViolation("latency table diagonal must be zero".into()));
            }
            for j in (i + 1)..n {
                if table.rows[i * n + j] != table.rows[j * n + i] {
                    return Err(TopologyError::InvariantViolation("latency table must be symmetric".into()));
                }
            }
        }
        Ok(table)
    }

    pub fn hosts(&self) -> &[NodeId] {
        &self.hosts
    }

    pub fn len(&self) -> usize {
        self.hosts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hosts.is_empty()
    }

    /// Position of `host` in [`hosts`](Self::hosts).
    pub fn host_index(&self, host: NodeId) -> Option<usize> {
        self.index.get(host.index()).copied().flatten().map(|i| i as usize)
    }

    pub fn by_index(&self, i: usize, j: usize) -> Latency {
        self.rows[i * self.hosts.len() + j]
    }

    pub fn row(&self, i: usize) -> &[Latency] {
        let n = self.hosts.len();
        &self.rows[i * n..(i + 1) * n]
    }

    pub fn one_way(&self, src: NodeId, dst: NodeId) -> Result<Latency, TopologyError> {
        let i = self.host_index(src).ok_or(TopologyError::UnknownNode(src))?;
        let j = self.host_index(dst).ok_or(TopologyError::UnknownNode(dst))?;
        Ok(self.by_index(i, j))
    }
}

/// Host-to-host latency table from one shortest-path run per end host.
pub fn build_latency_table(topology: &Topology) -> LatencyTable {
    let hosts: Vec<NodeId> = topology.hosts().map(|h| h.id).collect();
    let mut rows = Vec::with_capacity(hosts.len() * hosts.len());
    for &h in &hosts {
        let dist = shortest_path_latency(topology, h).expect("host ids come from the topology");
        rows.extend(hosts.iter().map(|other| dist[other.index()]));
    }
    let n = hosts.len();
    LatencyTable::from_fn(hosts, |i, j| rows[i * n + j]).expect("shortest paths on an undirected graph are symmetric")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyStats {
    /// Seconds.
    pub avg_rtt: f64,
    /// Seconds.
    pub max_rtt: f64,
    pub host_count: usize,
}

/// Round-trip statistics over distinct unordered host pairs. Needs at least
/// two hosts.
pub fn topology_stats(table: &LatencyTable) -> Result<TopologyStats, TopologyError> {
    let n = table.len();
    if n < 2 {
        return Err(TopologyError::InvariantViolation("latency table has no host pairs".into()));
    }
    let mut sum: u128 = 0;
    let mut max = 0u64;
    for i in 0..n {
        for lat in &table.row(i)[i + 1..] {
            sum += lat.0 as u128;
            max = max.max(lat.0);
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(TopologyStats { avg_rtt: 2.0 * (sum as f64 / pairs) / 1e9, max_rtt: 2.0 * max as f64 / 1e9, host_count: n })
}

/// All-pairs shortest-path latencies by Floyd-Warshall, indexed by node id.
/// Cubic in the node count; a reference for checking
/// [`shortest_path_latency`].
pub fn floyd_warshall(topology: &Topology) -> Vec<Vec<Option<Latency>>> {
    let n = topology.node_count();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0u64);
    }
    for l in topology.links() {
        let (a, b) = (l.a.index(), l.b.index());
        d[a][b] = Some(d[a][b].map_or(l.latency.0, |v: u64| v.min(l.latency.0)));
        d[b][a] = d[a][b];
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i][k] else { continue };
            for j in 0..n {
                if let Some(kj) = d[k][j] {
                    if d[i][j].is_none_or(|ij| ik + kj < ij) {
                        d[i][j] = Some(ik + kj);
                    }
                }
            }
        }
    }
    d.into_iter().map(|row| row.into_iter().map(|v| v.map(Latency)).collect()).collect()
}
