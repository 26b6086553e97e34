//! Batch simulation of a station-based fleet.
//!
//! Requests are collected for one batch period and handed to the dispatcher
//! at the batch boundary. Vehicles drive their plans along fastest routes;
//! a vehicle already on an edge at a boundary finishes that edge before a
//! new plan takes effect. Idle vehicles return to the nearest station and
//! stations exchange vehicles at every rebalancing period.

mod demand;
mod metrics;
mod output;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::Instant;

use thiserror::Error;

pub use demand::generate_synthetic_demand;
pub use metrics::{
    density_metrics, BatchRecord, DelayRecord, DensitySummary, MetricsReport, TimingReport,
    Traversal, CRITICAL_DENSITY, DELAY_BIN_S, HEAVY_DENSITY,
};
pub use output::{write_outputs, OutputSelection};

use crate::assignment::AssignmentError;
use crate::dispatch::{Assignment, FleetSnapshot, StationStock};
use crate::fleet::{nearest_station, rebalance, Station};
use crate::ih::dispatch_batch_ih;
use crate::model::{
    ConfigError, DispatcherKind, Request, RequestId, ScenarioConfig, StationId, Stop, StopKind,
    VehicleId, VehicleState,
};
use crate::network::{mm_to_metres, EdgeId, Millimetres, NodeId, RoadNetwork, Seconds};
use crate::vga::{dispatch_batch_vga, VgaOptions};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid input: {0}")]
    Data(String),
    #[error("dispatch failed at t={t}: {source}")]
    Dispatch { t: Seconds, source: AssignmentError },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Keep every edge traversal in the result.
    pub record_trace: bool,
    /// Override the dispatcher options derived from the config.
    pub vga: Option<VgaOptions>,
    /// Vehicles that start on the street, idle, at these nodes. They take
    /// the lowest vehicle ids.
    pub free_vehicles: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub metrics: MetricsReport,
    pub timing: TimingReport,
    pub delays: Vec<DelayRecord>,
    /// Completed traversals per edge inside the window.
    pub edge_traversals: Vec<u64>,
    /// Vehicle-seconds per edge inside the window.
    pub edge_vehicle_seconds: Vec<f64>,
    pub density: DensitySummary,
    pub batches: Vec<BatchRecord>,
    pub trace: Vec<Traversal>,
    pub rejected: Vec<RequestId>,
    /// Per-vehicle distance inside the window, indexed by vehicle id.
    pub odometers: Vec<Millimetres>,
}

#[derive(Debug, Clone)]
struct SimVehicle {
    id: VehicleId,
    pos: NodeId,
    /// Time the vehicle is at `pos`, or entered the first edge of `route`.
    clock: Seconds,
    route: VecDeque<EdgeId>,
    onboard: Vec<Request>,
    plan: Vec<Stop>,
    heading: Option<usize>,
    rebalancing: bool,
    parked: Option<usize>,
    private: bool,
    retired: bool,
}

impl SimVehicle {
    fn new(id: VehicleId, pos: NodeId, clock: Seconds) -> Self {
        Self {
            id,
            pos,
            clock,
            route: VecDeque::new(),
            onboard: Vec::new(),
            plan: Vec::new(),
            heading: None,
            rebalancing: false,
            parked: None,
            private: false,
            retired: false,
        }
    }

    fn settled(&self) -> bool {
        self.retired
            || self.parked.is_some()
            || (self.plan.is_empty()
                && self.onboard.is_empty()
                && self.heading.is_none()
                && self.route.is_empty())
    }
}

struct Sim<'a> {
    net: &'a RoadNetwork,
    cfg: &'a ScenarioConfig,
    window_start: Seconds,
    window_end: Option<Seconds>,
    vehicles: Vec<SimVehicle>,
    fleet_size: usize,
    stations: Vec<Station>,
    parked: Vec<BTreeSet<VehicleId>>,
    waiting: BTreeMap<RequestId, Request>,
    pickups: BTreeMap<RequestId, Seconds>,
    served: usize,
    rejected: Vec<RequestId>,
    delays: Vec<DelayRecord>,
    odometer: Vec<Millimetres>,
    edge_traversals: Vec<u64>,
    edge_vehicle_seconds: Vec<f64>,
    occupancy_mm: Vec<Millimetres>,
    rebalancing_mm: Millimetres,
    return_mm: Millimetres,
    rebalancing_trips: usize,
    used: BTreeSet<VehicleId>,
    qmax_violations: usize,
    capacity_violations: usize,
    trace: Option<Vec<Traversal>>,
}

impl Sim<'_> {
    fn traverse(&mut self, vi: usize, e: EdgeId) {
        let edge = self.net.edge(e);
        let v = &mut self.vehicles[vi];
        let enter = v.clock;
        let exit = enter + edge.travel_time;
        let onboard = v.onboard.len();
        v.clock = exit;
        v.pos = edge.to;
        let (vid, rebalancing) = (v.id, v.rebalancing);
        let returning = !rebalancing && v.plan.is_empty() && v.heading.is_some();
        if onboard > self.cfg.capacity as usize && !v.private {
            self.capacity_violations += 1;
        }
        let lo = enter.max(self.window_start);
        let hi = self.window_end.map_or(exit, |w| exit.min(w));
        if hi > lo {
            self.edge_vehicle_seconds[e.index()] += (hi - lo) as f64;
        }
        if enter >= self.window_start {
            let idx = vid.0 as usize;
            if self.odometer.len() <= idx {
                self.odometer.resize(idx + 1, 0);
            }
            self.odometer[idx] += edge.length;
            self.edge_traversals[e.index()] += 1;
            if self.occupancy_mm.len() <= onboard {
                self.occupancy_mm.resize(onboard + 1, 0);
            }
            self.occupancy_mm[onboard] += edge.length;
            if rebalancing {
                self.rebalancing_mm += edge.length;
            }
            if returning {
                self.return_mm += edge.length;
            }
        }
        if let Some(trace) = &mut self.trace {
            trace.push(Traversal {
                vehicle: vid.0,
                edge: e.index(),
                enter,
                exit,
                onboard,
            });
        }
    }

    fn handle_stop(&mut self, vi: usize, stop: Stop) {
        let r = stop.request;
        let v = &mut self.vehicles[vi];
        match stop.kind {
            StopKind::Pickup => {
                v.clock = v.clock.max(r.announce);
                v.onboard.push(r);
                self.waiting.remove(&r.id);
                self.pickups.insert(r.id, v.clock);
                if v.clock >= self.window_start {
                    self.used.insert(v.id);
                }
            }
            StopKind::Dropoff => {
                v.onboard.retain(|o| o.id != r.id);
                let delay = v.clock - r.announce - r.baseline;
                if delay > self.cfg.q_max_s && !v.private {
                    self.qmax_violations += 1;
                }
                self.served += 1;
                self.delays.push(DelayRecord {
                    request: r.id.0,
                    announce_s: r.announce,
                    pickup_s: self.pickups.get(&r.id).copied().unwrap_or(v.clock),
                    dropoff_s: v.clock,
                    delay_s: delay,
                    vehicle: v.id.0,
                });
            }
        }
    }

    fn park(&mut self, vi: usize, s: usize) {
        let v = &mut self.vehicles[vi];
        v.parked = Some(s);
        v.heading = None;
        v.rebalancing = false;
        v.route.clear();
        self.stations[s].stock += 1;
        self.parked[s].insert(v.id);
    }

    fn unpark(&mut self, vi: usize, now: Seconds) {
        let v = &mut self.vehicles[vi];
        if let Some(s) = v.parked.take() {
            self.stations[s].stock -= 1;
            self.parked[s].remove(&v.id);
            v.pos = self.stations[s].node;
            v.clock = v.clock.max(now);
            v.route.clear();
        }
    }

    fn station_nodes(&self) -> Vec<NodeId> {
        self.stations.iter().map(|s| s.node).collect()
    }

    /// Move vehicle `vi` forward until `until` or until it has nothing to do.
    fn advance(&mut self, vi: usize, until: Seconds) {
        loop {
            let v = &self.vehicles[vi];
            if v.parked.is_some() || v.retired {
                return;
            }
            if v.route.is_empty() {
                while let Some(stop) = self.vehicles[vi].plan.first().copied() {
                    if stop.location() != self.vehicles[vi].pos {
                        break;
                    }
                    self.vehicles[vi].plan.remove(0);
                    self.handle_stop(vi, stop);
                }
                let v = &self.vehicles[vi];
                let target = match (v.plan.first(), v.heading) {
                    (Some(s), _) => s.location(),
                    (None, Some(s)) => self.stations[s].node,
                    (None, None) => {
                        if v.private {
                            self.vehicles[vi].retired = true;
                            return;
                        }
                        match nearest_station(self.net, &self.station_nodes(), v.pos) {
                            Some(s)
                                if self.net.time(v.pos, self.stations[s].node)
                                    < crate::network::UNREACHABLE_TIME =>
                            {
                                self.vehicles[vi].heading = Some(s);
                                continue;
                            }
                            _ => return,
                        }
                    }
                };
                let v = &self.vehicles[vi];
                if target == v.pos {
                    let s = v
                        .heading
                        .expect("only a station target can remain at the current node");
                    self.park(vi, s);
                    return;
                }
                match self.net.route_edges(v.pos, target) {
                    Some(edges) => self.vehicles[vi].route = edges.into(),
                    None => {
                        // stranded; treat as idle
                        let v = &mut self.vehicles[vi];
                        v.heading = None;
                        v.plan.clear();
                        return;
                    }
                }
            }
            let v = &self.vehicles[vi];
            let e = *v.route.front().expect("route is non-empty here");
            if v.clock + self.net.edge(e).travel_time > until {
                return;
            }
            self.vehicles[vi].route.pop_front();
            self.traverse(vi, e);
        }
    }

    fn departed(&self, v: &SimVehicle, now: Seconds) -> Option<EdgeId> {
        if v.clock < now {
            v.route.front().copied()
        } else {
            None
        }
    }

    fn snapshot(&self, now: Seconds) -> FleetSnapshot {
        let mut active = Vec::new();
        for v in &self.vehicles {
            if v.parked.is_some() || v.retired || v.private {
                continue;
            }
            let (position, ready_at) = match self.departed(v, now) {
                Some(e) => {
                    let edge = self.net.edge(e);
                    (edge.to, v.clock + edge.travel_time)
                }
                None => (v.pos, v.clock.max(now)),
            };
            active.push(VehicleState {
                id: v.id,
                position,
                ready_at,
                onboard: v.onboard.clone(),
                plan: v.plan.clone(),
                capacity: self.cfg.capacity,
                station: None,
            });
        }
        let stations = self
            .stations
            .iter()
            .zip(&self.parked)
            .map(|(s, p)| StationStock {
                station: s.id,
                node: s.node,
                parked: p.iter().copied().collect(),
            })
            .collect();
        FleetSnapshot {
            now,
            capacity: self.cfg.capacity,
            active,
            stations,
        }
    }

    fn apply(&mut self, a: &Assignment, now: Seconds) {
        let vi = a.vehicle.0 as usize;
        if a.from_station.is_some() {
            self.unpark(vi, now);
        }
        let committed = self.departed(&self.vehicles[vi], now);
        let v = &mut self.vehicles[vi];
        if v.plan == a.plan.stops && a.from_station.is_none() {
            return;
        }
        v.route.clear();
        match committed {
            Some(e) => v.route.push_back(e),
            None => v.clock = v.clock.max(now),
        }
        v.plan = a.plan.stops.clone();
        v.heading = None;
        v.rebalancing = false;
    }

    fn reject(&mut self, ids: &[RequestId]) {
        for id in ids {
            self.waiting.remove(id);
            self.rejected.push(*id);
        }
        for v in &mut self.vehicles {
            v.plan.retain(|s| !ids.contains(&s.request.id));
        }
    }

    /// Run the dispatcher for the batch ending at `t`.
    fn dispatch(
        &mut self,
        t: Seconds,
        new: &[Request],
        vga_opts: &VgaOptions,
    ) -> Result<BatchRecord, SimError> {
        let started = Instant::now();
        let mut record = BatchRecord {
            t_s: t,
            new: new.len(),
            waiting: self.waiting.len(),
            active_vehicles: 0,
            rejected: 0,
            max_group_size: 0,
            groupgen_ms: 0.0,
            solver_ms: 0.0,
            dispatch_ms: 0.0,
            gap: 0.0,
            objective_m: 0.0,
        };
        let mut fleet = self.snapshot(t);
        record.active_vehicles = fleet.active.len();
        match self.cfg.dispatcher {
            DispatcherKind::Ih if !new.is_empty() => {
                let out = dispatch_batch_ih(self.net, &mut fleet, new, self.cfg.q_max_s);
                for a in &out.assignments {
                    self.apply(a, t);
                }
                record.rejected = out.rejected.len();
                record.objective_m = out.total_increment as f64 / 1000.0;
                self.reject(&out.rejected);
            }
            DispatcherKind::Vga | DispatcherKind::VgaLimited | DispatcherKind::VgaPnas
                if !self.waiting.is_empty() =>
            {
                let waiting: Vec<Request> = self.waiting.values().copied().collect();
                let out = dispatch_batch_vga(self.net, &fleet, &waiting, vga_opts)
                    .map_err(|source| SimError::Dispatch { t, source })?;
                self.reject(&out.rejected);
                for a in &out.assignments {
                    self.apply(a, t);
                }
                record.rejected = out.rejected.len();
                record.max_group_size = out.max_group_size;
                record.groupgen_ms = out.groupgen_ms;
                record.solver_ms = out.solver_ms;
                record.gap = out.gap;
                record.objective_m = mm_to_metres(out.objective);
            }
            _ => {}
        }
        record.dispatch_ms = started.elapsed().as_secs_f64() * 1000.0;
        Ok(record)
    }

    fn rebalance(&mut self, now: Seconds) {
        let orders = rebalance(self.net, &self.stations, self.cfg.surplus_fraction);
        for o in orders {
            let from = self
                .stations
                .iter()
                .position(|s| s.id == o.from)
                .expect("known station");
            let to = self
                .stations
                .iter()
                .position(|s| s.id == o.to)
                .expect("known station");
            let ids: Vec<VehicleId> = self.parked[from].iter().take(o.count).copied().collect();
            for id in ids {
                let vi = id.0 as usize;
                self.unpark(vi, now);
                let v = &mut self.vehicles[vi];
                v.heading = Some(to);
                v.rebalancing = true;
                if now >= self.window_start {
                    self.rebalancing_trips += 1;
                }
            }
        }
    }
}

fn mean_max(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut sum, mut max) = (0usize, 0.0, 0.0f64);
    for x in xs {
        n += 1;
        sum += x;
        max = max.max(x);
    }
    (if n > 0 { sum / n as f64 } else { 0.0 }, max)
}

/// Simulate `requests` served by a fleet parked at `stations`.
pub fn run(
    cfg: &ScenarioConfig,
    net: &RoadNetwork,
    requests: &[Request],
    stations: &[Station],
    opts: &RunOptions,
) -> Result<SimulationResult, SimError> {
    cfg.validate()?;
    let started = Instant::now();
    let mut requests = requests.to_vec();
    requests.sort_by_key(|r| (r.announce, r.id));
    let ids: BTreeSet<RequestId> = requests.iter().map(|r| r.id).collect();
    if ids.len() != requests.len() {
        return Err(SimError::Data("duplicate request ids".into()));
    }
    let station_ids: BTreeSet<StationId> = stations.iter().map(|s| s.id).collect();
    if station_ids.len() != stations.len() {
        return Err(SimError::Data("duplicate station ids".into()));
    }
    if let Some(r) = requests.iter().find(|r| r.announce < 0) {
        return Err(SimError::Data(format!(
            "request {} announced before time 0",
            r.id
        )));
    }

    let mut sim = Sim {
        net,
        cfg,
        window_start: cfg.warmup_s,
        window_end: cfg.horizon_s,
        vehicles: Vec::new(),
        fleet_size: 0,
        stations: Vec::new(),
        parked: Vec::new(),
        waiting: BTreeMap::new(),
        pickups: BTreeMap::new(),
        served: 0,
        rejected: Vec::new(),
        delays: Vec::new(),
        odometer: Vec::new(),
        edge_traversals: vec![0; net.edge_count()],
        edge_vehicle_seconds: vec![0.0; net.edge_count()],
        occupancy_mm: vec![0; cfg.capacity as usize + 1],
        rebalancing_mm: 0,
        return_mm: 0,
        rebalancing_trips: 0,
        used: BTreeSet::new(),
        qmax_violations: 0,
        capacity_violations: 0,
        trace: opts.record_trace.then(Vec::new),
    };
    let private = cfg.dispatcher == DispatcherKind::None;
    if !private {
        for &node in &opts.free_vehicles {
            let id = VehicleId(sim.vehicles.len() as u32);
            sim.vehicles.push(SimVehicle::new(id, node, 0));
        }
    }
    for (si, s) in stations.iter().enumerate() {
        sim.stations.push(Station {
            stock: 0,
            ..s.clone()
        });
        sim.parked.push(BTreeSet::new());
        if private {
            continue;
        }
        for _ in 0..s.initial_stock {
            let id = VehicleId(sim.vehicles.len() as u32);
            sim.vehicles.push(SimVehicle::new(id, s.node, 0));
            sim.park(id.0 as usize, si);
        }
    }
    sim.fleet_size = sim.vehicles.len();
    let vga_opts = opts
        .vga
        .clone()
        .unwrap_or_else(|| VgaOptions::from_config(cfg));

    let batch = cfg.batch_s;
    let last_announce = requests.last().map_or(0, |r| r.announce);
    let cap = last_announce + 86_400;
    let mut next_request = 0usize;
    let mut t: Seconds = 0;
    let mut batches: Vec<BatchRecord> = Vec::new();
    let mut max_gap = 0.0f64;
    loop {
        if !private {
            let first_new = next_request;
            while next_request < requests.len() && requests[next_request].announce <= t {
                let r = requests[next_request];
                sim.waiting.insert(r.id, r);
                next_request += 1;
            }
            let new = &requests[first_new..next_request];
            let record = sim.dispatch(t, new, &vga_opts)?;
            max_gap = max_gap.max(record.gap);
            batches.push(record);
            if !sim.stations.is_empty() && t > 0 && t % cfg.rebalance_period_s == 0 {
                sim.rebalance(t);
            }
        }

        let done = next_request >= requests.len()
            && sim.waiting.is_empty()
            && sim.vehicles.iter().all(|v| v.settled());
        match cfg.horizon_s {
            Some(h) if t >= h => break,
            None if done || t > cap => break,
            _ => {}
        }

        let next = cfg.horizon_s.map_or(t + batch, |h| (t + batch).min(h));
        if private {
            while next_request < requests.len() && requests[next_request].announce <= next {
                let r = requests[next_request];
                next_request += 1;
                let id = VehicleId(sim.vehicles.len() as u32);
                let mut v = SimVehicle::new(id, r.origin, r.announce);
                v.private = true;
                v.plan = vec![Stop::pickup(r), Stop::dropoff(r)];
                sim.vehicles.push(v);
                sim.waiting.insert(r.id, r);
            }
        }
        for vi in 0..sim.vehicles.len() {
            sim.advance(vi, next);
        }
        t = next;
    }

    sim.window_end = Some(cfg.horizon_s.unwrap_or(t));
    let window_end = t;
    let announced = next_request;
    let active_at_end =
        sim.waiting.len() + sim.vehicles.iter().map(|v| v.onboard.len()).sum::<usize>();
    let window = (window_end - sim.window_start).max(0);
    let density = density_metrics(&sim.edge_vehicle_seconds, window, net);
    let total_mm: Millimetres = sim.odometer.iter().sum();
    let edge_mm: Millimetres = sim
        .edge_traversals
        .iter()
        .enumerate()
        .map(|(e, &n)| n * net.edge(EdgeId(e as u32)).length)
        .sum();

    let in_window: Vec<&DelayRecord> = sim
        .delays
        .iter()
        .filter(|d| d.announce_s >= sim.window_start)
        .collect();
    let max_delay = in_window.iter().map(|d| d.delay_s).max().unwrap_or(0);
    let bins = (max_delay.max(cfg.q_max_s) / DELAY_BIN_S + 1) as usize;
    let mut delay_histogram = vec![0u64; bins];
    for d in &in_window {
        delay_histogram[(d.delay_s.max(0) / DELAY_BIN_S) as usize] += 1;
    }
    let avg_delay = if in_window.is_empty() {
        0.0
    } else {
        in_window.iter().map(|d| d.delay_s as f64).sum::<f64>() / in_window.len() as f64
    };
    let occ_total: Millimetres = sim.occupancy_mm.iter().sum();
    let mean_occupancy = if occ_total > 0 {
        sim.occupancy_mm
            .iter()
            .enumerate()
            .map(|(k, &mm)| k as f64 * mm as f64)
            .sum::<f64>()
            / occ_total as f64
    } else {
        0.0
    };
    let group_sizes: Vec<usize> = batches
        .iter()
        .filter(|b| b.t_s >= sim.window_start && b.waiting > 0)
        .map(|b| b.max_group_size)
        .collect();
    let metrics = MetricsReport {
        dispatcher: cfg.dispatcher.as_str().to_string(),
        window_start_s: sim.window_start,
        window_end_s: window_end,
        fleet_size: sim.fleet_size,
        announced,
        served: sim.served,
        rejected: sim.rejected.len(),
        active_at_end,
        total_distance_km: total_mm as f64 / 1e6,
        total_distance_mm: total_mm,
        edge_distance_mm: edge_mm,
        rebalancing_distance_km: sim.rebalancing_mm as f64 / 1e6,
        return_distance_km: sim.return_mm as f64 / 1e6,
        rebalancing_trips: sim.rebalancing_trips,
        window_served: in_window.len(),
        avg_delay_s: avg_delay,
        max_delay_s: max_delay,
        delay_bin_s: DELAY_BIN_S,
        delay_histogram,
        occupancy_km: sim.occupancy_mm.iter().map(|&mm| mm as f64 / 1e6).collect(),
        mean_occupancy,
        avg_density_veh_per_km: density.avg_density_veh_per_km,
        congested_segments: density.congested_segments,
        heavy_segments: density.heavy_segments,
        used_vehicles: sim.used.len(),
        qmax_violations: sim.qmax_violations,
        capacity_violations: sim.capacity_violations,
        batches: batches.len(),
        max_group_size: group_sizes.iter().copied().max().unwrap_or(0),
        mean_max_group_size: if group_sizes.is_empty() {
            0.0
        } else {
            group_sizes.iter().sum::<usize>() as f64 / group_sizes.len() as f64
        },
        max_gap,
    };
    let (dispatch_ms_mean, dispatch_ms_max) = mean_max(batches.iter().map(|b| b.dispatch_ms));
    let (groupgen_ms_mean, groupgen_ms_max) = mean_max(batches.iter().map(|b| b.groupgen_ms));
    let (solver_ms_mean, solver_ms_max) = mean_max(batches.iter().map(|b| b.solver_ms));
    let timing = TimingReport {
        total_ms: started.elapsed().as_secs_f64() * 1000.0,
        dispatch_ms_mean,
        dispatch_ms_max,
        groupgen_ms_mean,
        groupgen_ms_max,
        solver_ms_mean,
        solver_ms_max,
    };
    let mut odometers = sim.odometer.clone();
    odometers.resize(sim.vehicles.len(), 0);
    Ok(SimulationResult {
        metrics,
        timing,
        delays: sim.delays,
        edge_traversals: sim.edge_traversals,
        edge_vehicle_seconds: sim.edge_vehicle_seconds,
        density,
        batches,
        trace: sim.trace.unwrap_or_default(),
        rejected: sim.rejected,
        odometers,
    })
}

/// Rejections of a simulation without ridesharing (unit capacity, insertion
/// dispatcher) with the given station stocks. Used as the fleet-sizing oracle.
pub fn no_ridesharing_shortages(
    cfg: &ScenarioConfig,
    net: &RoadNetwork,
    requests: &[Request],
    stations: &[NodeId],
    stocks: &[usize],
) -> Result<usize, SimError> {
    let cfg = ScenarioConfig {
        capacity: 1,
        dispatcher: DispatcherKind::Ih,
        warmup_s: 0,
        horizon_s: None,
        ..cfg.clone()
    };
    let stations: Vec<Station> = stations
        .iter()
        .zip(stocks)
        .enumerate()
        .map(|(i, (&node, &k))| Station::new(StationId(i as u32), node, k, cfg.tau_fraction))
        .collect();
    let res = run(&cfg, net, requests, &stations, &RunOptions::default())?;
    Ok(res.metrics.rejected)
}
