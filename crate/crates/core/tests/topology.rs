use flowsim::topology::{
    build_latency_table, floyd_warshall, generate_transit_stub, parse_topology, random_graph, shortest_path_latency,
    topology_stats, validate_no_core_bottleneck, write_topology, Latency, NodeId, TSParams,
};
use proptest::prelude::*;

#[test]
fn dijkstra_matches_floyd_warshall() {
    for seed in 0..20 {
        let t = random_graph(seed, 2 + (seed as u32 * 7) % 40, 8).unwrap();
        assert!(t.node_count() <= 50);
        let all = floyd_warshall(&t);
        for src in 0..t.node_count() {
            let d = shortest_path_latency(&t, NodeId(src as u32)).unwrap();
            let expected: Vec<Latency> = all[src].iter().map(|v| v.unwrap()).collect();
            assert_eq!(d, expected, "seed {seed} src {src}");
        }
        let table = build_latency_table(&t);
        for (i, a) in table.hosts().iter().enumerate() {
            for (j, b) in table.hosts().iter().enumerate() {
                assert_eq!(Some(table.by_index(i, j)), all[a.index()][b.index()]);
            }
        }
    }
}

#[test]
fn generated_topologies_validate() {
    for seed in 0..5 {
        for p in [
            TSParams { seed, ..TSParams::default() },
            TSParams {
                seed,
                transit_domains: 3,
                transit_nodes_per_domain: 3,
                hosts_per_stub_router: 2,
                ..TSParams::default()
            },
        ] {
            let t = generate_transit_stub(&p).unwrap();
            assert_eq!(t.node_count() as u64, p.router_count() + p.host_count());
            assert!(validate_no_core_bottleneck(&t).passed());
            let table = build_latency_table(&t);
            for i in 0..table.len() {
                assert_eq!(table.by_index(i, i), Latency::ZERO);
                for j in 0..i {
                    assert_eq!(table.by_index(i, j), table.by_index(j, i));
                }
            }
            let stats = topology_stats(&table).unwrap();
            assert!(stats.max_rtt >= stats.avg_rtt && stats.avg_rtt > 0.0);
        }
    }
}

#[test]
fn slow_core_link_fails_validation() {
    let p = TSParams { stub_stub_bandwidth: 10e6, ..TSParams::default() };
    let t = generate_transit_stub(&p).unwrap();
    let report = validate_no_core_bottleneck(&t);
    assert!(!report.passed());
    assert_eq!(report.max_access_bandwidth, 45e6);
    assert!(report.violations.iter().all(|l| l.bandwidth == 10e6));
}

proptest! {
    #[test]
    fn text_format_round_trips(seed in any::<u64>(), routers in 1u32..30, hosts in 0u32..20) {
        let t = random_graph(seed, routers, hosts).unwrap();
        let text = write_topology(&t);
        let back = parse_topology(&text).unwrap();
        prop_assert_eq!(back.nodes(), t.nodes());
        prop_assert_eq!(back.links(), t.links());
        prop_assert_eq!(write_topology(&back), text);
    }

    #[test]
    fn shortest_paths_obey_triangle_inequality(seed in any::<u64>(), routers in 2u32..25) {
        let t = random_graph(seed, routers, 0).unwrap();
        let rows: Vec<Vec<Latency>> =
            (0..routers).map(|s| shortest_path_latency(&t, NodeId(s)).unwrap()).collect();
        for l in t.links() {
            for row in &rows {
                prop_assert!(row[l.b.index()].0 <= row[l.a.index()].0 + l.latency.0);
                prop_assert!(row[l.a.index()].0 <= row[l.b.index()].0 + l.latency.0);
            }
        }
    }
}
