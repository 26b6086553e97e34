//! Station placement, fleet sizing and periodic rebalancing.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bnb::{self, BinaryProgram, BnbOptions, BnbStatus, Row, RowSense};
use crate::model::{Request, StationId};
use crate::network::{Millimetres, NetworkError, NodeId, RoadNetwork, Seconds, UNREACHABLE_DIST};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Station {
    pub id: StationId,
    pub node: NodeId,
    pub initial_stock: usize,
    pub stock: usize,
    /// Below this stock the station asks for vehicles.
    pub tau: usize,
}

impl Station {
    pub fn new(id: StationId, node: NodeId, initial_stock: usize, tau_fraction: f64) -> Self {
        Self {
            id,
            node,
            initial_stock,
            stock: initial_stock,
            tau: (tau_fraction * initial_stock as f64 + 1e-9).floor() as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RebalancingOrder {
    pub from: StationId,
    pub to: StationId,
    pub count: usize,
    /// Length of one trip.
    pub distance: Millimetres,
}

#[derive(Debug, Error)]
pub enum FleetError {
    #[error("nodes not reachable from any candidate station within the limit: {0:?}")]
    Uncoverable(Vec<u64>),
    #[error("station set-cover program could not be solved")]
    Solver,
    #[error("reduction step must lie in (0, 1), got {0}")]
    BadStep(f64),
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Smallest set of station nodes from `candidates` such that every serviced
/// node can be reached from some station within `reach` seconds.
pub fn position_stations(
    net: &RoadNetwork,
    serviced: &[NodeId],
    candidates: &[NodeId],
    reach: Seconds,
) -> Result<Vec<NodeId>, FleetError> {
    let serviced: BTreeSet<NodeId> = serviced.iter().copied().collect();
    let candidates: Vec<NodeId> = candidates
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for &n in &serviced {
        let cols: Vec<usize> = candidates
            .iter()
            .enumerate()
            .filter(|(_, &c)| net.time(c, n) <= reach)
            .map(|(j, _)| j)
            .collect();
        if cols.is_empty() {
            missing.push(net.external_id(n));
        }
        rows.push(Row {
            cols,
            sense: RowSense::Ge,
            rhs: 1.0,
        });
    }
    if !missing.is_empty() {
        return Err(FleetError::Uncoverable(missing));
    }
    if serviced.is_empty() {
        return Ok(Vec::new());
    }
    let program = BinaryProgram {
        costs: vec![1.0; candidates.len()],
        rows,
    };
    let res = bnb::solve(&program, &BnbOptions::default(), None);
    if res.status != BnbStatus::Optimal {
        return Err(FleetError::Solver);
    }
    let mut out: Vec<NodeId> = res.selection.iter().map(|&j| candidates[j]).collect();
    out.sort();
    Ok(out)
}

/// Index of the station nearest (by travel time) to `node`; ties go to the
/// lower index.
pub fn nearest_station(net: &RoadNetwork, stations: &[NodeId], node: NodeId) -> Option<usize> {
    stations
        .iter()
        .enumerate()
        .min_by_key(|(i, &s)| (net.time(s, node), *i))
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizingResult {
    pub stocks: Vec<usize>,
    /// Shortages of the first reduction that failed, if one was tried.
    pub next_shortages: Option<usize>,
    pub iterations: usize,
}

/// Start with one vehicle per request at the station nearest to its origin,
/// then shrink every station by `step` until `shortages` first reports a
/// vehicle shortage. Each step removes at least one vehicle from every
/// non-empty station.
pub fn size_fleet<F>(
    net: &RoadNetwork,
    stations: &[NodeId],
    requests: &[Request],
    step: f64,
    mut shortages: F,
) -> Result<SizingResult, FleetError>
where
    F: FnMut(&[usize]) -> usize,
{
    if !(step > 0.0 && step < 1.0) {
        return Err(FleetError::BadStep(step));
    }
    let mut stocks = vec![0usize; stations.len()];
    for r in requests {
        if let Some(i) = nearest_station(net, stations, r.origin) {
            stocks[i] += 1;
        }
    }
    let mut iterations = 0;
    loop {
        let next: Vec<usize> = stocks
            .iter()
            .map(|&s| {
                if s == 0 {
                    0
                } else {
                    let shrunk = (s as f64 * (1.0 - step) - 1e-9).ceil() as usize;
                    shrunk.min(s - 1)
                }
            })
            .collect();
        if next == stocks {
            return Ok(SizingResult {
                stocks,
                next_shortages: None,
                iterations,
            });
        }
        iterations += 1;
        let missed = shortages(&next);
        if missed > 0 {
            return Ok(SizingResult {
                stocks,
                next_shortages: Some(missed),
                iterations,
            });
        }
        stocks = next;
    }
}

/// Ship idle vehicles from stations holding at least `1 + surplus_fraction`
/// times their initial stock to stations below their threshold, minimising
/// total trip length.
pub fn rebalance(
    net: &RoadNetwork,
    stations: &[Station],
    surplus_fraction: f64,
) -> Vec<RebalancingOrder> {
    let sources: Vec<(usize, usize)> = stations
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            s.stock > s.initial_stock
                && s.stock as f64 >= (1.0 + surplus_fraction) * s.initial_stock as f64 - 1e-9
        })
        .map(|(i, s)| (i, s.stock - s.initial_stock))
        .collect();
    let sinks: Vec<(usize, usize)> = stations
        .iter()
        .enumerate()
        .filter(|(_, s)| s.stock < s.tau)
        .map(|(i, s)| (i, s.tau - s.stock))
        .collect();
    if sources.is_empty() || sinks.is_empty() {
        return Vec::new();
    }
    let cost: Vec<Vec<Option<i64>>> = sources
        .iter()
        .map(|&(i, _)| {
            sinks
                .iter()
                .map(|&(j, _)| {
                    let d = net.dist(stations[i].node, stations[j].node);
                    (d < UNREACHABLE_DIST).then_some(d as i64)
                })
                .collect()
        })
        .collect();
    let supply: Vec<usize> = sources.iter().map(|s| s.1).collect();
    let demand: Vec<usize> = sinks.iter().map(|s| s.1).collect();
    let flow = transport(&supply, &demand, &cost);
    let mut out = Vec::new();
    for (a, row) in flow.iter().enumerate() {
        for (b, &count) in row.iter().enumerate() {
            if count > 0 {
                let (from, to) = (&stations[sources[a].0], &stations[sinks[b].0]);
                out.push(RebalancingOrder {
                    from: from.id,
                    to: to.id,
                    count,
                    distance: net.dist(from.node, to.node),
                });
            }
        }
    }
    out
}

/// Min-cost transportation by successive shortest paths. `cost[a][b]` is
/// `None` where no route exists. Ships as much as the routes allow, up to
/// min(total supply, total demand).
pub fn transport(supply: &[usize], demand: &[usize], cost: &[Vec<Option<i64>>]) -> Vec<Vec<usize>> {
    let (m, n) = (supply.len(), demand.len());
    // nodes: 0 = source, 1..=m supplies, m+1..=m+n demands, m+n+1 = sink
    let sink = m + n + 1;
    let mut g = FlowGraph::new(sink + 1);
    for (a, &s) in supply.iter().enumerate() {
        g.add(0, 1 + a, s as i64, 0);
    }
    let mut pair_edge = vec![vec![None; n]; m];
    for a in 0..m {
        for b in 0..n {
            if let Some(c) = cost[a][b] {
                pair_edge[a][b] = Some(g.add(1 + a, 1 + m + b, i64::MAX / 4, c));
            }
        }
    }
    for (b, &d) in demand.iter().enumerate() {
        g.add(1 + m + b, sink, d as i64, 0);
    }
    g.min_cost_max_flow(0, sink);
    pair_edge
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| e.map_or(0, |e| g.flow(e) as usize))
                .collect()
        })
        .collect()
}

struct FlowEdge {
    to: usize,
    cap: i64,
    cost: i64,
    flow: i64,
}

struct FlowGraph {
    edges: Vec<FlowEdge>,
    adj: Vec<Vec<usize>>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
        let id = self.edges.len();
        self.edges.push(FlowEdge {
            to,
            cap,
            cost,
            flow: 0,
        });
        self.adj[from].push(id);
        self.edges.push(FlowEdge {
            to: from,
            cap: 0,
            cost: -cost,
            flow: 0,
        });
        self.adj[to].push(id + 1);
        id
    }

    fn flow(&self, e: usize) -> i64 {
        self.edges[e].flow
    }

    fn residual(&self, e: usize) -> i64 {
        self.edges[e].cap - self.edges[e].flow
    }

    /// Bellman-Ford augmentation; fine for the handful of stations involved.
    fn min_cost_max_flow(&mut self, s: usize, t: usize) {
        let n = self.adj.len();
        loop {
            let mut dist = vec![i64::MAX; n];
            let mut via = vec![usize::MAX; n];
            dist[s] = 0;
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    if dist[u] == i64::MAX {
                        continue;
                    }
                    for &e in &self.adj[u] {
                        let v = self.edges[e].to;
                        if self.residual(e) > 0 && dist[u] + self.edges[e].cost < dist[v] {
                            dist[v] = dist[u] + self.edges[e].cost;
                            via[v] = e;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[t] == i64::MAX {
                return;
            }
            let mut push = i64::MAX;
            let mut v = t;
            while v != s {
                let e = via[v];
                push = push.min(self.residual(e));
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let e = via[v];
                self.edges[e].flow += push;
                self.edges[e ^ 1].flow -= push;
                v = self.edges[e ^ 1].to;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationRecord {
    pub id: u32,
    pub node: u64,
    pub initial_stock: usize,
}

/// Read a stations CSV (`id,node,initial_stock`).
pub fn load_stations(path: &Path) -> Result<Vec<StationRecord>, FleetError> {
    let file = std::fs::File::open(path).map_err(|source| FleetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut out = Vec::new();
    for row in rdr.deserialize::<StationRecord>() {
        out.push(row.map_err(|e| FleetError::Parse {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_stations<W: std::io::Write>(records: &[StationRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
