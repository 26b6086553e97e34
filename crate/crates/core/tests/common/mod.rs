//! Independent reference implementations used by the integration tests.
//!
//! Everything here is deliberately naive: Floyd–Warshall instead of Dijkstra,
//! label-setting over visited sets instead of depth-first search, full
//! enumeration instead of branch and bound.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ridepool::dispatch::{FleetSnapshot, StationStock};
use ridepool::model::{Request, RequestId, StationId, Stop, VehicleId, VehicleState};
use ridepool::network::{Millimetres, NodeId, RoadNetwork, Seconds, UNREACHABLE_TIME};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn req(net: &RoadNetwork, id: u64, t: Seconds, o: u32, d: u32) -> Request {
    Request::new(net, RequestId(id), t, NodeId(o), NodeId(d)).unwrap()
}

/// All-pairs (time, distance), minimising time and then distance.
pub fn floyd_warshall(net: &RoadNetwork) -> Vec<Vec<(Seconds, Millimetres)>> {
    let n = net.node_count();
    let inf = (i64::MAX / 4, u64::MAX / 4);
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = (0, 0);
    }
    for e in net.edges() {
        let c = (e.travel_time, e.length);
        let cell = &mut d[e.from.index()][e.to.index()];
        if c < *cell {
            *cell = c;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let ik = d[i][k];
            if ik == inf {
                continue;
            }
            for j in 0..n {
                let kj = d[k][j];
                if kj == inf {
                    continue;
                }
                let via = (ik.0 + kj.0, ik.1 + kj.1);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Random strongly connected graph: a bidirectional ring plus random chords.
pub fn random_network(seed: u64, n: u32, chords: usize) -> RoadNetwork {
    use ridepool::network::{EdgeSpec, Node};
    let mut r = rng(seed);
    let nodes = (0..n)
        .map(|i| Node {
            id: i as u64 * 10 + 1,
            lat: 0.0,
            lon: 0.0,
        })
        .collect();
    let mut edges = Vec::new();
    let mut add = |f: u32, t: u32, r: &mut ChaCha8Rng| {
        edges.push(EdgeSpec {
            from: f as u64 * 10 + 1,
            to: t as u64 * 10 + 1,
            length_m: r.random_range(20..400) as f64,
            speed_kmh: Some([20.0, 30.0, 50.0, 80.0][r.random_range(0..4)]),
            class: "residential".into(),
        });
    };
    for i in 0..n {
        let j = (i + 1) % n;
        add(i, j, &mut r);
        add(j, i, &mut r);
    }
    for _ in 0..chords {
        let a = r.random_range(0..n);
        let b = r.random_range(0..n);
        if a != b {
            add(a, b, &mut r);
        }
    }
    RoadNetwork::new(nodes, edges).unwrap()
}

/// Cheapest plan cost for `vehicle` serving `group` plus its onboard
/// passengers, by label setting over (picked, dropped, position) with
/// Pareto-optimal (time, distance) labels. `None` if infeasible.
pub fn oracle_plan_cost(
    net: &RoadNetwork,
    vehicle: &VehicleState,
    group: &[Request],
    now: Seconds,
    q_max: Seconds,
) -> Option<Millimetres> {
    let reqs: Vec<(Request, bool)> = vehicle
        .onboard
        .iter()
        .map(|r| (*r, true))
        .chain(group.iter().map(|r| (*r, false)))
        .collect();
    let n = reqs.len();
    let onboard_mask: u32 = (0..n).filter(|&i| reqs[i].1).fold(0, |m, i| m | 1 << i);
    let full = (1u32 << n) - 1;
    // state: (picked mask, dropped mask, position) -> Pareto front of (time, dist)
    type Key = (u32, u32, NodeId);
    let mut labels: HashMap<Key, Vec<(Seconds, Millimetres)>> = HashMap::new();
    let start = (onboard_mask, 0u32, vehicle.position);
    labels.insert(start, vec![(vehicle.ready_at.max(now), 0)]);
    // process states in order of number of stops made
    let mut frontier = vec![start];
    let mut best: Option<Millimetres> = None;
    for _ in 0..=2 * n {
        let mut next: Vec<Key> = Vec::new();
        for key in frontier {
            let (picked, dropped, pos) = key;
            let front = labels[&key].clone();
            if dropped == full {
                for &(_, d) in &front {
                    best = Some(best.map_or(d, |b| b.min(d)));
                }
                continue;
            }
            let load = (picked & !dropped).count_ones();
            for i in 0..n {
                let bit = 1 << i;
                let r = reqs[i].0;
                let (loc, np, nd) = if picked & bit == 0 {
                    if load + 1 > vehicle.capacity {
                        continue;
                    }
                    (r.origin, picked | bit, dropped)
                } else if dropped & bit == 0 {
                    (r.destination, picked, dropped | bit)
                } else {
                    continue;
                };
                let leg = net.time(pos, loc);
                if leg >= UNREACHABLE_TIME {
                    continue;
                }
                let dist = net.dist(pos, loc);
                let nk = (np, nd, loc);
                for &(t, d) in &front {
                    let mut t2 = t + leg;
                    if picked & bit == 0 {
                        t2 = t2.max(r.announce);
                    } else if t2 - r.announce - r.baseline > q_max {
                        continue;
                    }
                    let lab = (t2, d + dist);
                    let entry = labels.entry(nk).or_default();
                    if entry.iter().any(|&(a, b)| a <= lab.0 && b <= lab.1) {
                        continue;
                    }
                    entry.retain(|&(a, b)| !(lab.0 <= a && lab.1 <= b));
                    entry.push(lab);
                    if !next.contains(&nk) {
                        next.push(nk);
                    }
                }
            }
        }
        frontier = next;
    }
    best
}

/// Walk a stop sequence with no shortcuts. Returns (cost, feasible).
pub fn walk(
    net: &RoadNetwork,
    vehicle: &VehicleState,
    stops: &[Stop],
    now: Seconds,
    q_max: Seconds,
) -> Option<Millimetres> {
    use ridepool::model::StopKind;
    let mut t = vehicle.ready_at.max(now);
    let mut pos = vehicle.position;
    let mut load = vehicle.onboard.len() as u32;
    let mut cost = 0;
    for s in stops {
        let loc = s.location();
        t += net.time(pos, loc);
        cost += net.dist(pos, loc);
        pos = loc;
        match s.kind {
            StopKind::Pickup => {
                t = t.max(s.request.announce);
                load += 1;
                if load > vehicle.capacity {
                    return None;
                }
            }
            StopKind::Dropoff => {
                if t - s.request.announce - s.request.baseline > q_max {
                    return None;
                }
                load -= 1;
            }
        }
    }
    Some(cost)
}

/// Every precedence-respecting stop order, with no pruning at all.
pub fn all_orders(vehicle: &VehicleState, group: &[Request]) -> Vec<Vec<Stop>> {
    fn rec(pending: &mut Vec<Stop>, cur: &mut Vec<Stop>, out: &mut Vec<Vec<Stop>>) {
        if pending.is_empty() {
            out.push(cur.clone());
            return;
        }
        for i in 0..pending.len() {
            let s = pending.remove(i);
            cur.push(s);
            let follow =
                (s.kind == ridepool::model::StopKind::Pickup).then(|| Stop::dropoff(s.request));
            if let Some(f) = follow {
                pending.push(f);
            }
            rec(pending, cur, out);
            if follow.is_some() {
                pending.pop();
            }
            cur.pop();
            pending.insert(i, s);
        }
    }
    let mut pending: Vec<Stop> = vehicle.onboard.iter().map(|r| Stop::dropoff(*r)).collect();
    pending.extend(group.iter().map(|r| Stop::pickup(*r)));
    let mut out = Vec::new();
    rec(&mut pending, &mut Vec::new(), &mut out);
    out
}

/// Minimum over [`all_orders`] evaluated with [`walk`].
pub fn brute_plan_cost(
    net: &RoadNetwork,
    vehicle: &VehicleState,
    group: &[Request],
    now: Seconds,
    q_max: Seconds,
) -> Option<Millimetres> {
    all_orders(vehicle, group)
        .iter()
        .filter_map(|o| walk(net, vehicle, o, now, q_max))
        .min()
}

/// Every subset of `waiting` feasible for `vehicle`, with its optimal cost.
/// The empty set maps to the onboard-only plan when feasible.
pub fn power_set_groups(
    net: &RoadNetwork,
    vehicle: &VehicleState,
    waiting: &[Request],
    now: Seconds,
    q_max: Seconds,
) -> BTreeMap<Vec<RequestId>, Millimetres> {
    let mut out = BTreeMap::new();
    for mask in 0u32..(1 << waiting.len()) {
        let group: Vec<Request> = (0..waiting.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| waiting[i])
            .collect();
        if let Some(c) = oracle_plan_cost(net, vehicle, &group, now, q_max) {
            let mut ids: Vec<RequestId> = group.iter().map(|r| r.id).collect();
            ids.sort();
            out.insert(ids, c);
        }
    }
    out
}

/// Every vehicle of the snapshot as an individual: active vehicles first,
/// then each parked vehicle at its station node.
pub fn individual_vehicles(fleet: &FleetSnapshot) -> Vec<VehicleState> {
    let mut out = fleet.active.clone();
    for s in &fleet.stations {
        for &id in &s.parked {
            let mut v = VehicleState::idle(id, s.node, fleet.now, fleet.capacity);
            v.station = Some(s.station);
            out.push(v);
        }
    }
    out
}

/// Optimal system cost by assigning every waiting request to one individual
/// vehicle in every possible way. Unused parked vehicles cost nothing; active
/// vehicles always pay for their onboard passengers. `None` if no complete
/// assignment exists.
pub fn exhaustive_assignment(
    net: &RoadNetwork,
    fleet: &FleetSnapshot,
    waiting: &[Request],
    q_max: Seconds,
) -> Option<Millimetres> {
    let vehicles = individual_vehicles(fleet);
    let nv = vehicles.len();
    let nr = waiting.len();
    let mut cache: HashMap<(usize, u32), Option<Millimetres>> = HashMap::new();
    let mut cost_of = |vi: usize, mask: u32| -> Option<Millimetres> {
        *cache.entry((vi, mask)).or_insert_with(|| {
            let v = &vehicles[vi];
            if mask == 0 && v.onboard.is_empty() {
                return Some(0);
            }
            let group: Vec<Request> = (0..nr)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| waiting[i])
                .collect();
            oracle_plan_cost(net, v, &group, fleet.now, q_max)
        })
    };
    if nv == 0 {
        return (nr == 0).then_some(0);
    }
    let total = (nv as u64).pow(nr as u32);
    let mut best: Option<Millimetres> = None;
    for code in 0..total {
        let mut masks = vec![0u32; nv];
        let mut c = code;
        for i in 0..nr {
            masks[(c % nv as u64) as usize] |= 1 << i;
            c /= nv as u64;
        }
        let mut sum = 0;
        let mut ok = true;
        for (vi, &m) in masks.iter().enumerate() {
            match cost_of(vi, m) {
                Some(x) => sum += x,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            best = Some(best.map_or(sum, |b| b.min(sum)));
        }
    }
    best
}

/// Cheapest integer transportation plan by enumerating every flow matrix
/// that ships min(total supply, total demand).
pub fn brute_transport(supply: &[usize], demand: &[usize], cost: &[Vec<i64>]) -> i64 {
    let target = supply.iter().sum::<usize>().min(demand.iter().sum());
    let (m, n) = (supply.len(), demand.len());
    let mut best = i64::MAX;
    let mut flow = vec![vec![0usize; n]; m];
    fn rec(
        cell: usize,
        m: usize,
        n: usize,
        flow: &mut Vec<Vec<usize>>,
        supply: &[usize],
        demand: &[usize],
        cost: &[Vec<i64>],
        target: usize,
        best: &mut i64,
    ) {
        if cell == m * n {
            let shipped: usize = flow.iter().flatten().sum();
            if shipped == target {
                let c: i64 = (0..m)
                    .flat_map(|a| (0..n).map(move |b| (a, b)))
                    .map(|(a, b)| flow[a][b] as i64 * cost[a][b])
                    .sum();
                *best = (*best).min(c);
            }
            return;
        }
        let (a, b) = (cell / n, cell % n);
        let out_a: usize = flow[a].iter().sum();
        let in_b: usize = (0..m).map(|x| flow[x][b]).sum();
        let cap = (supply[a] - out_a).min(demand[b] - in_b);
        for k in 0..=cap {
            flow[a][b] = k;
            rec(cell + 1, m, n, flow, supply, demand, cost, target, best);
        }
        flow[a][b] = 0;
    }
    rec(0, m, n, &mut flow, supply, demand, cost, target, &mut best);
    best
}

/// Smallest subset of `candidates` covering every serviced node within
/// `reach`, by enumerating subsets in order of size.
pub fn brute_set_cover(
    net: &RoadNetwork,
    serviced: &[NodeId],
    candidates: &[NodeId],
    reach: Seconds,
) -> Option<usize> {
    let n = candidates.len();
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let covers = serviced
            .iter()
            .all(|&s| (0..n).any(|j| mask & (1 << j) != 0 && net.time(candidates[j], s) <= reach));
        if covers {
            best = Some(size);
        }
    }
    best
}

/// A random snapshot with `n_active` vehicles on the street (some carrying
/// an onboard passenger) and `stocks` parked vehicles per station.
pub fn random_snapshot(
    r: &mut ChaCha8Rng,
    net: &RoadNetwork,
    now: Seconds,
    capacity: u32,
    n_active: usize,
    stocks: &[usize],
    first_request_id: u64,
) -> FleetSnapshot {
    let n = net.node_count() as u32;
    let mut next_id = 0u32;
    let mut active = Vec::new();
    let mut rid = first_request_id;
    for _ in 0..n_active {
        let pos = NodeId(r.random_range(0..n));
        let mut v = VehicleState::idle(VehicleId(next_id), pos, now, capacity);
        next_id += 1;
        if r.random_bool(0.5) {
            let dest = loop {
                let d = NodeId(r.random_range(0..n));
                if d != pos {
                    break d;
                }
            };
            // picked up at `pos` just now
            let o = loop {
                let o = NodeId(r.random_range(0..n));
                if o != dest {
                    break o;
                }
            };
            let onboard = Request::new(
                net,
                RequestId(rid),
                now - net.time(o, pos).min(now),
                o,
                dest,
            )
            .unwrap();
            rid += 1;
            v.onboard.push(onboard);
            v.plan.push(Stop::dropoff(onboard));
        }
        active.push(v);
    }
    let mut stations = Vec::new();
    for (i, &k) in stocks.iter().enumerate() {
        let parked = (0..k)
            .map(|_| {
                let id = VehicleId(next_id);
                next_id += 1;
                id
            })
            .collect();
        stations.push(StationStock {
            station: StationId(i as u32),
            node: NodeId(r.random_range(0..n)),
            parked,
        });
    }
    FleetSnapshot {
        now,
        capacity,
        active,
        stations,
    }
}

/// `count` random requests announced in `[t0, t1]` with ids from `first_id`.
pub fn random_requests(
    r: &mut ChaCha8Rng,
    net: &RoadNetwork,
    count: usize,
    t0: Seconds,
    t1: Seconds,
    first_id: u64,
) -> Vec<Request> {
    let n = net.node_count() as u32;
    (0..count)
        .map(|i| loop {
            let o = r.random_range(0..n);
            let d = r.random_range(0..n);
            if o != d {
                break Request::new(
                    net,
                    RequestId(first_id + i as u64),
                    r.random_range(t0..=t1),
                    NodeId(o),
                    NodeId(d),
                )
                .unwrap();
            }
        })
        .collect()
}

/// Per-edge vehicle-seconds replayed from a traversal trace.
pub fn replay_vehicle_seconds(
    edge_count: usize,
    trace: &[ridepool::simulator::Traversal],
    window: (Seconds, Seconds),
) -> Vec<f64> {
    let mut out = vec![0.0; edge_count];
    for t in trace {
        let lo = t.enter.max(window.0);
        let hi = t.exit.min(window.1);
        if hi > lo {
            out[t.edge] += (hi - lo) as f64;
        }
    }
    out
}

/// The scripted grid scenario: two cars on the street, one station, three
/// requests over two batches.
pub mod grid_story {
    use super::*;
    use ridepool::fleet::Station;
    use ridepool::model::{DispatcherKind, ScenarioConfig};
    use ridepool::simulator::{run, RunOptions, SimulationResult};

    pub const SEGMENT_MM: u64 = 100_000;

    pub fn network() -> RoadNetwork {
        // 6 x 3 grid, 100 m blocks, 6 s per block
        RoadNetwork::grid(6, 3, 100.0, 60.0)
    }

    pub fn requests(net: &RoadNetwork) -> Vec<Request> {
        vec![
            req(net, 1, 0, 11, 16),
            req(net, 2, 0, 15, 1),
            req(net, 3, 30, 7, 16),
        ]
    }

    pub fn simulate(kind: DispatcherKind) -> SimulationResult {
        let net = network();
        let stations = vec![Station::new(StationId(0), NodeId(8), 5, 0.85)];
        let cfg = ScenarioConfig {
            warmup_s: 0,
            q_max_s: 30,
            capacity: 2,
            ..ScenarioConfig::for_dispatcher(kind)
        };
        let opts = RunOptions {
            free_vehicles: vec![NodeId(14), NodeId(15)],
            record_trace: true,
            ..Default::default()
        };
        run(&cfg, &net, &requests(&net), &stations, &opts).unwrap()
    }

    /// Segments driven while serving passengers, i.e. excluding the empty
    /// trip back to the station.
    pub fn service_segments(res: &SimulationResult) -> u64 {
        let m = &res.metrics;
        let ret = (m.return_distance_km * 1e6).round() as u64;
        let reb = (m.rebalancing_distance_km * 1e6).round() as u64;
        (m.total_distance_mm - ret - reb) / SEGMENT_MM
    }
}
