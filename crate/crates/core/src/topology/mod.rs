//! Hierarchical network topologies.
//!
//! A [`Topology`] is an undirected graph of transit routers, stub routers and
//! end hosts. Every end host hangs off a stub router by exactly one access
//! link, and that link's bandwidth is the host's access bandwidth. Only the
//! access links matter for bandwidth sharing; core link bandwidths exist so
//! [`validate_no_core_bottleneck`] can check that they never constrain a flow.

mod generate;
mod io;
mod routing;

use std::collections::{HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

pub use generate::{generate_transit_stub, random_graph, AccessClass, LatencyRange, TSParams};
pub use io::{load_topology, parse_topology, save_topology, write_topology, ParseError, TopologyFileError};
pub use routing::{
    build_latency_table, floyd_warshall, shortest_path_latency, topology_stats, LatencyTable, TopologyStats,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    TransitRouter,
    StubRouter,
    EndHost,
}

impl NodeKind {
    pub fn is_router(self) -> bool {
        !matches!(self, NodeKind::EndHost)
    }
}

/// One-way link latency, held as integer nanoseconds so that path sums are
/// exact and independent of summation order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Latency(pub u64);

impl Latency {
    pub const ZERO: Latency = Latency(0);

    pub fn from_nanos(nanos: u64) -> Self {
        Latency(nanos)
    }

    pub fn from_millis(ms: u64) -> Self {
        Latency(ms * 1_000_000)
    }

    /// Rounds to the nearest nanosecond. Negative or non-finite input is
    /// rejected.
    pub fn from_secs_f64(secs: f64) -> Option<Self> {
        let nanos = (secs * 1e9).round();
        (nanos.is_finite() && nanos >= 0.0 && nanos < u64::MAX as f64).then_some(Latency(nanos as u64))
    }

    pub fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }
}

impl fmt::Display for Latency {
    /// Seconds with nanosecond precision.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:09}", self.0 / 1_000_000_000, self.0 % 1_000_000_000)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Bits per second of the host's first-hop link. `None` for routers.
    pub access_bandwidth: Option<f64>,
}

impl Node {
    pub fn router(id: u32, kind: NodeKind) -> Self {
        Node { id: NodeId(id), kind, access_bandwidth: None }
    }

    pub fn host(id: u32, bandwidth: f64) -> Self {
        Node { id: NodeId(id), kind: NodeKind::EndHost, access_bandwidth: Some(bandwidth) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    /// Bits per second.
    pub bandwidth: f64,
    pub latency: Latency,
}

impl Link {
    pub fn new(a: u32, b: u32, bandwidth: f64, latency: Latency) -> Self {
        Link { a: NodeId(a), b: NodeId(b), bandwidth, latency }
    }

    fn canonical_key(&self) -> (NodeId, NodeId) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

fn violation(msg: impl Into<String>) -> TopologyError {
    TopologyError::InvariantViolation(msg.into())
}

/// Immutable validated topology.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    adjacency: Vec<Vec<(NodeId, Latency)>>,
    seed: u64,
}

impl Topology {
    /// Validates and canonicalises a node/link set. Nodes must carry the dense
    /// ids `0..n`; links are stored with `a < b` in ascending `(a, b)` order.
    pub fn new(mut nodes: Vec<Node>, links: Vec<Link>, seed: u64) -> Result<Self, TopologyError> {
        nodes.sort_by_key(|n| n.id);
        for (i, node) in nodes.iter().enumerate() {
            if node.id.index() != i {
                return Err(violation(format!("node ids must be dense from 0, expected {i} found {}", node.id)));
            }
            match (node.kind, node.access_bandwidth) {
                (NodeKind::EndHost, Some(bw)) if bw.is_finite() && bw > 0.0 => {}
                (NodeKind::EndHost, _) => {
                    return Err(violation(format!("end host {} needs a positive access bandwidth", node.id)))
                }
                (_, Some(_)) => {
                    return Err(violation(format!("router {} must not carry an access bandwidth", node.id)))
                }
                (_, None) => {}
            }
        }

        let n = nodes.len();
        let mut seen = HashSet::new();
        let mut links: Vec<Link> = links
            .into_iter()
            .map(|l| {
                let (a, b) = l.canonical_key();
                Link { a, b, ..l }
            })
            .collect();
        links.sort_by_key(|l| (l.a, l.b));

        let mut adjacency = vec![Vec::new(); n];
        for link in &links {
            for end in [link.a, link.b] {
                if end.index() >= n {
                    return Err(TopologyError::UnknownNode(end));
                }
            }
            if link.a == link.b {
                return Err(violation(format!("self-loop at node {}", link.a)));
            }
            if !(link.bandwidth.is_finite() && link.bandwidth > 0.0) {
                return Err(violation(format!("link {}-{} needs a positive bandwidth", link.a, link.b)));
            }
            if link.latency == Latency::ZERO {
                return Err(violation(format!("link {}-{} needs a positive latency", link.a, link.b)));
            }
            if !seen.insert((link.a, link.b)) {
                return Err(violation(format!("duplicate link {}-{}", link.a, link.b)));
            }
            adjacency[link.a.index()].push((link.b, link.latency));
            adjacency[link.b.index()].push((link.a, link.latency));
        }

        for node in nodes.iter().filter(|n| n.kind == NodeKind::EndHost) {
            let adj = &adjacency[node.id.index()];
            if adj.len() != 1 {
                return Err(violation(format!("end host {} has {} links, expected exactly one", node.id, adj.len())));
            }
            let (peer, _) = adj[0];
            if nodes[peer.index()].kind != NodeKind::StubRouter {
                return Err(violation(format!("end host {} must attach to a stub router, not node {peer}", node.id)));
            }
            let key = (node.id.min(peer), node.id.max(peer));
            let access = links.iter().find(|l| (l.a, l.b) == key).expect("adjacent link exists");
            if Some(access.bandwidth) != node.access_bandwidth {
                return Err(violation(format!(
                    "access link of host {} has bandwidth {} but the host declares {:?}",
                    node.id, access.bandwidth, node.access_bandwidth
                )));
            }
        }

        let topo = Topology { nodes, links, adjacency, seed };
        if !topo.is_connected() {
            return Err(violation("topology is not connected"));
        }
        Ok(topo)
    }

    fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut visited = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([NodeId(0)]);
        visited[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u.index()] {
                if !visited[v.index()] {
                    visited[v.index()] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, TopologyError> {
        self.nodes.get(id.index()).ok_or(TopologyError::UnknownNode(id))
    }

    pub fn neighbors(&self, id: NodeId) -> &[(NodeId, Latency)] {
        &self.adjacency[id.index()]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn hosts(&self) -> impl Iterator<Item = &Node> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::EndHost)
    }

    pub fn host_count(&self) -> usize {
        self.hosts().count()
    }

    pub fn is_access_link(&self, link: &Link) -> bool {
        self.nodes[link.a.index()].kind == NodeKind::EndHost || self.nodes[link.b.index()].kind == NodeKind::EndHost
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub max_access_bandwidth: f64,
    /// Core links slower than the fastest access link.
    pub violations: Vec<Link>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that no core link is slower than the fastest access link, a
/// sufficient condition for the core never being the bottleneck of a flow.
pub fn validate_no_core_bottleneck(topology: &Topology) -> ValidationReport {
    let max_access = topology.hosts().filter_map(|h| h.access_bandwidth).fold(0.0, f64::max);
    let violations =
        topology.links().iter().filter(|l| !topology.is_access_link(l) && l.bandwidth < max_access).cloned().collect();
    ValidationReport { max_access_bandwidth: max_access, violations }
}
