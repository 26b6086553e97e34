mod common;

use proptest::prelude::*;
use ridepool::network::{
    EdgeSpec, Metric, Node, NodeId, PathError, RoadNetwork, UNREACHABLE_DIST, UNREACHABLE_TIME,
};

use common::{floyd_warshall, random_network};

#[test]
fn fastest_routes_match_floyd_warshall() {
    for seed in 0..20 {
        let net = random_network(seed, 12, 20);
        let fw = floyd_warshall(&net);
        for a in net.node_ids() {
            for b in net.node_ids() {
                let (t, d) = fw[a.index()][b.index()];
                assert_eq!(net.time(a, b), t, "seed {seed} {a:?}->{b:?}");
                assert_eq!(net.dist(a, b), d, "seed {seed} {a:?}->{b:?}");
            }
        }
    }
}

#[test]
fn path_edges_add_up() {
    let net = random_network(3, 15, 30);
    for a in net.node_ids() {
        for b in net.node_ids() {
            let p = net.shortest_path(a, b, Metric::Time).unwrap();
            let len: u64 = p.edges.iter().map(|e| net.edge(*e).length).sum();
            let time: i64 = p.edges.iter().map(|e| net.edge(*e).travel_time).sum();
            assert_eq!((p.distance, p.duration), (len, time));
            assert_eq!(p.duration, net.time(a, b));
            assert_eq!(p.nodes.first(), Some(&a));
            assert_eq!(p.nodes.last(), Some(&b));
            let route = net.route_edges(a, b).unwrap();
            assert_eq!(route, p.edges);
        }
    }
}

#[test]
fn distance_metric_is_no_longer_than_time_metric() {
    let net = random_network(9, 12, 25);
    for a in net.node_ids() {
        for b in net.node_ids() {
            let by_time = net.shortest_path(a, b, Metric::Time).unwrap();
            let by_dist = net.shortest_path(a, b, Metric::Distance).unwrap();
            assert!(by_dist.distance <= by_time.distance);
            assert!(by_dist.duration >= by_time.duration);
        }
    }
}

#[test]
fn travel_matrix_matches_point_queries() {
    let net = random_network(5, 10, 10);
    let nodes: Vec<NodeId> = vec![NodeId(0), NodeId(4), NodeId(9), NodeId(4)];
    let m = net.travel_matrix(&nodes).unwrap();
    assert_eq!(m.len(), 4);
    for (i, &a) in nodes.iter().enumerate() {
        for (j, &b) in nodes.iter().enumerate() {
            assert_eq!(m.get(i, j), Some((net.time(a, b), net.dist(a, b))));
        }
    }
    assert_eq!(
        net.travel_matrix(&[NodeId(99)]).unwrap_err(),
        PathError::BadNode(99)
    );
}

#[test]
fn one_way_street_is_unreachable_backwards() {
    let nodes = (1..=2)
        .map(|id| Node {
            id,
            lat: 0.0,
            lon: 0.0,
        })
        .collect();
    let edges = vec![EdgeSpec {
        from: 1,
        to: 2,
        length_m: 50.0,
        speed_kmh: Some(36.0),
        class: "residential".into(),
    }];
    let net = RoadNetwork::new(nodes, edges).unwrap();
    assert_eq!(net.time(NodeId(0), NodeId(1)), 5);
    assert_eq!(net.time(NodeId(1), NodeId(0)), UNREACHABLE_TIME);
    assert_eq!(net.dist(NodeId(1), NodeId(0)), UNREACHABLE_DIST);
    assert!(matches!(
        net.shortest_path(NodeId(1), NodeId(0), Metric::Time),
        Err(PathError::Unreachable { .. })
    ));
    let m = net.travel_matrix(&[NodeId(0), NodeId(1)]).unwrap();
    assert_eq!(m.get(1, 0), None);
}

#[test]
fn save_and_load_round_trip() {
    let net = random_network(11, 8, 6);
    let dir = tempfile::tempdir().unwrap();
    net.save(dir.path()).unwrap();
    let back = RoadNetwork::load(dir.path()).unwrap();
    assert_eq!(back.node_count(), net.node_count());
    assert_eq!(back.edges(), net.edges());
    for a in net.node_ids() {
        assert_eq!(back.external_id(a), net.external_id(a));
    }
}

#[test]
fn load_reports_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("nodes.csv"), "id,lat,lon\n1,0,0\n2,0,0\n").unwrap();
    std::fs::write(
        dir.path().join("edges.csv"),
        "from,to,length_m,speed_kmh,class\n1,3,10,,residential\n",
    )
    .unwrap();
    assert!(RoadNetwork::load(dir.path()).is_err());
    std::fs::write(
        dir.path().join("edges.csv"),
        "from,to,length_m,speed_kmh,class\n1,2,ten,,residential\n",
    )
    .unwrap();
    assert!(RoadNetwork::load(dir.path()).is_err());
    std::fs::write(
        dir.path().join("edges.csv"),
        "from,to,length_m,speed_kmh,class\n1,2,10,,living_street\n",
    )
    .unwrap();
    let net = RoadNetwork::load(dir.path()).unwrap();
    assert_eq!(net.edge_count(), 1);
    assert_eq!(net.edges()[0].speed_kmh, 20.0);
    assert_eq!(net.edges()[0].travel_time, 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn travel_times_obey_triangle_inequality(seed in 0u64..1000, a in 0u32..10, b in 0u32..10, c in 0u32..10) {
        let net = random_network(seed, 10, 8);
        let (a, b, c) = (NodeId(a), NodeId(b), NodeId(c));
        prop_assert!(net.time(a, c) <= net.time(a, b) + net.time(b, c));
        prop_assert_eq!(net.time(a, a), 0);
    }

    #[test]
    fn grid_distance_is_manhattan(cols in 2u32..7, rows in 1u32..7, a in 0u32..49, b in 0u32..49) {
        let net = RoadNetwork::grid(cols, rows, 100.0, 36.0);
        let n = cols * rows;
        let (a, b) = (a % n, b % n);
        let manhattan = (a % cols).abs_diff(b % cols) + (a / cols).abs_diff(b / cols);
        prop_assert_eq!(net.dist(NodeId(a), NodeId(b)), manhattan as u64 * 100_000);
        prop_assert_eq!(net.time(NodeId(a), NodeId(b)), manhattan as i64 * 10);
    }
}
