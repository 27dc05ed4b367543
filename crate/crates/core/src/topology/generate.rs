use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Latency, Link, Node, NodeKind, Topology, TopologyError};

/// Uniform one-way latency range for a link class, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyRange {
    pub min: Latency,
    pub max: Latency,
}

impl LatencyRange {
    pub fn millis(min: u64, max: u64) -> Self {
        LatencyRange { min: Latency::from_millis(min), max: Latency::from_millis(max) }
    }

    fn sample(&self, rng: &mut impl Rng) -> Latency {
        Latency(rng.random_range(self.min.0..=self.max.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessClass {
    pub bandwidth: f64,
    pub probability: f64,
}

/// Parameters of the transit-stub generator.
///
/// `transit_domains` domains of `transit_nodes_per_domain` routers each form
/// the backbone. Every transit router owns `stub_domains_per_transit_node`
/// stub domains of `stub_routers_per_stub` routers, and every stub router
/// serves `hosts_per_stub_router` end hosts.
#[derive(Debug, Clone, PartialEq)]
pub struct TSParams {
    pub transit_domains: u32,
    pub transit_nodes_per_domain: u32,
    pub stub_domains_per_transit_node: u32,
    pub stub_routers_per_stub: u32,
    pub hosts_per_stub_router: u32,
    pub transit_transit_latency: LatencyRange,
    pub transit_stub_latency: LatencyRange,
    pub stub_stub_latency: LatencyRange,
    pub access_latency: LatencyRange,
    pub transit_transit_bandwidth: f64,
    pub transit_stub_bandwidth: f64,
    pub stub_stub_bandwidth: f64,
    pub access_mix: Vec<AccessClass>,
    pub seed: u64,
}

impl Default for TSParams {
    /// 1 transit domain of 6 routers, 3 stubs per transit router, 3 routers
    /// per stub and 10 hosts per stub router: 60 routers, 540 hosts.
    fn default() -> Self {
        TSParams {
            transit_domains: 1,
            transit_nodes_per_domain: 6,
            stub_domains_per_transit_node: 3,
            stub_routers_per_stub: 3,
            hosts_per_stub_router: 10,
            transit_transit_latency: LatencyRange::millis(10, 20),
            transit_stub_latency: LatencyRange::millis(5, 12),
            stub_stub_latency: LatencyRange::millis(1, 4),
            access_latency: LatencyRange::millis(1, 5),
            transit_transit_bandwidth: 10e9,
            transit_stub_bandwidth: 1e9,
            stub_stub_bandwidth: 100e6,
            access_mix: vec![
                AccessClass { bandwidth: 1.5e6, probability: 0.5 },
                AccessClass { bandwidth: 10e6, probability: 0.35 },
                AccessClass { bandwidth: 45e6, probability: 0.15 },
            ],
            seed: 1,
        }
    }
}

impl TSParams {
    /// Smallest instance: one transit router, one stub router, one host.
    pub fn minimal() -> Self {
        TSParams {
            transit_domains: 1,
            transit_nodes_per_domain: 1,
            stub_domains_per_transit_node: 1,
            stub_routers_per_stub: 1,
            hosts_per_stub_router: 1,
            ..TSParams::default()
        }
    }

    pub fn router_count(&self) -> u64 {
        let transit = self.transit_domains as u64 * self.transit_nodes_per_domain as u64;
        transit * (1 + self.stub_domains_per_transit_node as u64 * self.stub_routers_per_stub as u64)
    }

    pub fn host_count(&self) -> u64 {
        self.transit_domains as u64
            * self.transit_nodes_per_domain as u64
            * self.stub_domains_per_transit_node as u64
            * self.stub_routers_per_stub as u64
            * self.hosts_per_stub_router as u64
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let bad = |m: &str| Err(TopologyError::InvariantViolation(format!("invalid generator parameters: {m}")));
        let counts = [
            self.transit_domains,
            self.transit_nodes_per_domain,
            self.stub_domains_per_transit_node,
            self.stub_routers_per_stub,
            self.hosts_per_stub_router,
        ];
        if counts.contains(&0) {
            return bad("all counts must be at least 1");
        }
        if self.router_count() + self.host_count() > u32::MAX as u64 {
            return bad("too many nodes");
        }
        for range in
            [self.transit_transit_latency, self.transit_stub_latency, self.stub_stub_latency, self.access_latency]
        {
            if range.min > range.max {
                return bad("latency range has min > max");
            }
            if range.min == Latency::ZERO {
                return bad("latencies must be positive");
            }
        }
        for bw in [self.transit_transit_bandwidth, self.transit_stub_bandwidth, self.stub_stub_bandwidth] {
            if !(bw.is_finite() && bw > 0.0) {
                return bad("link bandwidths must be positive");
            }
        }
        if self.access_mix.is_empty() {
            return bad("access mix is empty");
        }
        if self.access_mix.iter().any(|c| !(c.bandwidth.is_finite() && c.bandwidth > 0.0) || !(c.probability >= 0.0)) {
            return bad("access classes need positive bandwidth and non-negative probability");
        }
        let total: f64 = self.access_mix.iter().map(|c| c.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad("access probabilities must sum to 1");
        }
        Ok(())
    }
}

struct Builder {
    nodes: Vec<Node>,
    links: Vec<Link>,
}

impl Builder {
    fn add_router(&mut self, kind: NodeKind) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node::router(id, kind));
        id
    }

    fn link(&mut self, a: u32, b: u32, bandwidth: f64, latency: Latency) {
        self.links.push(Link::new(a, b, bandwidth, latency));
    }

    /// Ring over `members` plus `members.len() / 4` random chords.
    fn ring_with_chords(&mut self, members: &[u32], bandwidth: f64, range: LatencyRange, rng: &mut ChaCha8Rng) {
        let n = members.len();
        if n < 2 {
            return;
        }
        let ring_edges = if n == 2 { 1 } else { n };
        let mut present = std::collections::HashSet::new();
        for i in 0..ring_edges {
            let (a, b) = (members[i], members[(i + 1) % n]);
            present.insert((a.min(b), a.max(b)));
            self.link(a, b, bandwidth, range.sample(rng));
        }
        let max_edges = n * (n - 1) / 2;
        let chords = (n / 4).min(max_edges - present.len());
        let mut added = 0;
        while added < chords {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            let (a, b) = (members[i].min(members[j]), members[i].max(members[j]));
            if a != b && present.insert((a, b)) {
                self.link(a, b, bandwidth, range.sample(rng));
                added += 1;
            }
        }
    }
}

/// Builds a transit-stub topology. Deterministic for a fixed `params.seed`.
pub fn generate_transit_stub(params: &TSParams) -> Result<Topology, TopologyError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut b = Builder { nodes: Vec::new(), links: Vec::new() };

    let domains: Vec<Vec<u32>> = (0..params.transit_domains)
        .map(|_| (0..params.transit_nodes_per_domain).map(|_| b.add_router(NodeKind::TransitRouter)).collect())
        .collect();
    for domain in &domains {
        b.ring_with_chords(domain, params.transit_transit_bandwidth, params.transit_transit_latency, &mut rng);
    }
    // inter-domain backbone: a ring of domains through randomly chosen gateways
    let gateways: Vec<u32> = domains.iter().map(|d| *d.choose(&mut rng).expect("non-empty domain")).collect();
    b.ring_with_chords(&gateways, params.transit_transit_bandwidth, params.transit_transit_latency, &mut rng);

    let mut stub_routers = Vec::new();
    for &transit in domains.iter().flatten() {
        for _ in 0..params.stub_domains_per_transit_node {
            let stub: Vec<u32> =
                (0..params.stub_routers_per_stub).map(|_| b.add_router(NodeKind::StubRouter)).collect();
            b.ring_with_chords(&stub, params.stub_stub_bandwidth, params.stub_stub_latency, &mut rng);
            let gateway = *stub.choose(&mut rng).expect("non-empty stub");
            b.link(transit, gateway, params.transit_stub_bandwidth, params.transit_stub_latency.sample(&mut rng));
            stub_routers.extend(stub);
        }
    }

    let weights: Vec<f64> = params.access_mix.iter().map(|c| c.probability).collect();
    let dist = rand::distr::weighted::WeightedIndex::new(&weights)
        .map_err(|e| TopologyError::InvariantViolation(format!("invalid access mix: {e}")))?;
    for &router in &stub_routers {
        for _ in 0..params.hosts_per_stub_router {
            let id = b.nodes.len() as u32;
            let bw = params.access_mix[rng.sample(&dist)].bandwidth;
            b.nodes.push(Node::host(id, bw));
            b.link(router, id, bw, params.access_latency.sample(&mut rng));
        }
    }

    Topology::new(b.nodes, b.links, params.seed)
}

/// Random connected graph of `routers` stub routers and `hosts` end hosts,
/// for exercising routing. Routers form a random spanning tree plus about
/// `routers / 2` extra links; each host hangs off a random router. Latencies
/// are uniform in 1..=50 ms at nanosecond resolution.
pub fn random_graph(seed: u64, routers: u32, hosts: u32) -> Result<Topology, TopologyError> {
    if routers == 0 {
        return Err(TopologyError::InvariantViolation("random graph needs a router".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder { nodes: Vec::new(), links: Vec::new() };
    let latency = LatencyRange::millis(1, 50);
    for i in 0..routers {
        b.add_router(NodeKind::StubRouter);
        if i > 0 {
            let j = rng.random_range(0..i);
            b.link(j, i, 1e9, latency.sample(&mut rng));
        }
    }
    let mut linked: HashSet<(u32, u32)> = b.links.iter().map(|l| (l.a.0.min(l.b.0), l.a.0.max(l.b.0))).collect();
    for _ in 0..routers / 2 {
        let (x, y) = (rng.random_range(0..routers), rng.random_range(0..routers));
        if x != y && linked.insert((x.min(y), x.max(y))) {
            b.link(x, y, 1e9, latency.sample(&mut rng));
        }
    }
    for _ in 0..hosts {
        let id = b.nodes.len() as u32;
        let bw = [1.5e6, 10e6, 45e6][rng.random_range(0..3)];
        b.nodes.push(Node::host(id, bw));
        b.link(rng.random_range(0..routers), id, bw, latency.sample(&mut rng));
    }
    Topology::new(b.nodes, b.links, seed)
}
