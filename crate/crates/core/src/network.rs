//! Road network loading and shortest-path queries.
//!
//! Distances are kept in whole millimetres and travel times in whole seconds
//! so every downstream feasibility check is exact integer arithmetic.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::Deserialize;
use thiserror::Error;

/// Simulation time and durations, in seconds.
pub type Seconds = i64;
/// Lengths and costs, in millimetres.
pub type Millimetres = u64;

/// Sentinel duration for unreachable pairs; large enough to fail every
/// feasibility check while leaving headroom for additions.
pub const UNREACHABLE_TIME: Seconds = i64::MAX / 4;
pub const UNREACHABLE_DIST: Millimetres = u64::MAX / 4;

pub const HIGHWAY_KMH: f64 = 130.0;
pub const LIVING_STREET_KMH: f64 = 20.0;
pub const DEFAULT_KMH: f64 = 50.0;

/// Dense internal node index. External ids from the input files are kept in
/// [`Node::id`]; indices follow ascending external id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: u64,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub length: Millimetres,
    pub speed_kmh: f64,
    pub travel_time: Seconds,
    pub class: String,
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: u64,
        msg: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("edge {from}->{to} references unknown node {missing}")]
    DanglingEndpoint { from: u64, to: u64, missing: u64 },
    #[error("edge {from}->{to} has non-positive length {length_m}")]
    NonPositiveLength { from: u64, to: u64, length_m: f64 },
    #[error("edge {from}->{to} has non-positive speed {speed_kmh}")]
    NonPositiveSpeed { from: u64, to: u64, speed_kmh: f64 },
    #[error("duplicate node id {0}")]
    DuplicateNode(u64),
    #[error("unknown node id {0}")]
    UnknownNode(u64),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("node index {0} is not part of the network")]
    BadNode(u32),
    #[error("{to} is unreachable from {from}")]
    Unreachable { from: NodeId, to: NodeId },
}

/// Which quantity a shortest-path query minimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Time,
    Distance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathResult {
    pub distance: Millimetres,
    pub duration: Seconds,
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

/// An immutable directed road graph.
#[derive(Debug)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<EdgeId>>,
    by_external: HashMap<u64, NodeId>,
    routes: OnceLock<RouteTable>,
}

/// Default speed for a road class when the input has no explicit value.
pub fn default_speed(class: &str) -> f64 {
    let class = class.trim().to_ascii_lowercase().replace(['_', '-'], " ");
    match class.as_str() {
        "highway" | "motorway" => HIGHWAY_KMH,
        "living street" => LIVING_STREET_KMH,
        _ => DEFAULT_KMH,
    }
}

/// Whole seconds needed to drive `length` at `speed_kmh`, rounded up.
pub fn edge_travel_time(length: Millimetres, speed_kmh: f64) -> Seconds {
    let metres_per_second = speed_kmh / 3.6;
    let secs = (length as f64 / 1000.0) / metres_per_second;
    // absorb representation error so exact multiples do not round up
    (secs - 1e-9).ceil().max(0.0) as Seconds
}

pub fn metres_to_mm(m: f64) -> Millimetres {
    (m * 1000.0).round() as Millimetres
}

pub fn mm_to_metres(mm: Millimetres) -> f64 {
    mm as f64 / 1000.0
}

/// Input description of one edge, before validation.
#[derive(Debug, Clone)]
pub struct EdgeSpec {
    pub from: u64,
    pub to: u64,
    pub length_m: f64,
    pub speed_kmh: Option<f64>,
    pub class: String,
}

impl RoadNetwork {
    /// Build and validate a network from node and edge descriptions.
    pub fn new(mut nodes: Vec<Node>, edges: Vec<EdgeSpec>) -> Result<Self, NetworkError> {
        nodes.sort_by_key(|n| n.id);
        let mut by_external = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if by_external.insert(n.id, NodeId(i as u32)).is_some() {
                return Err(NetworkError::DuplicateNode(n.id));
            }
        }
        let mut built = Vec::with_capacity(edges.len());
        for spec in edges {
            let from = *by_external
                .get(&spec.from)
                .ok_or(NetworkError::DanglingEndpoint {
                    from: spec.from,
                    to: spec.to,
                    missing: spec.from,
                })?;
            let to = *by_external
                .get(&spec.to)
                .ok_or(NetworkError::DanglingEndpoint {
                    from: spec.from,
                    to: spec.to,
                    missing: spec.to,
                })?;
            if !(spec.length_m > 0.0) {
                return Err(NetworkError::NonPositiveLength {
                    from: spec.from,
                    to: spec.to,
                    length_m: spec.length_m,
                });
            }
            let speed = spec.speed_kmh.unwrap_or_else(|| default_speed(&spec.class));
            if !(speed > 0.0) {
                return Err(NetworkError::NonPositiveSpeed {
                    from: spec.from,
                    to: spec.to,
                    speed_kmh: speed,
                });
            }
            let length = metres_to_mm(spec.length_m).max(1);
            built.push(Edge {
                from,
                to,
                length,
                speed_kmh: speed,
                travel_time: edge_travel_time(length, speed),
                class: spec.class,
            });
        }
        let mut outgoing = vec![Vec::new(); nodes.len()];
        for (i, e) in built.iter().enumerate() {
            outgoing[e.from.index()].push(EdgeId(i as u32));
        }
        for out in &mut outgoing {
            out.sort_by_key(|e| built[e.index()].to);
        }
        Ok(Self {
            nodes,
            edges: built,
            outgoing,
            by_external,
            routes: OnceLock::new(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.index()]
    }

    pub fn outgoing(&self, id: NodeId) -> &[EdgeId] {
        &self.outgoing[id.index()]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// Map an external node id to its internal index.
    pub fn resolve(&self, external: u64) -> Result<NodeId, NetworkError> {
        self.by_external
            .get(&external)
            .copied()
            .ok_or(NetworkError::UnknownNode(external))
    }

    pub fn external_id(&self, id: NodeId) -> u64 {
        self.nodes[id.index()].id
    }

    /// Lazily built fastest-route cache shared by all dispatchers.
    pub fn routes(&self) -> &RouteTable {
        self.routes
            .get_or_init(|| RouteTable::new(self.nodes.len()))
    }

    /// Shortest travel time between two nodes, or [`UNREACHABLE_TIME`].
    #[inline]
    pub fn time(&self, from: NodeId, to: NodeId) -> Seconds {
        self.routes().tree(self, from).time[to.index()]
    }

    /// Length of the fastest route between two nodes, or [`UNREACHABLE_DIST`].
    #[inline]
    pub fn dist(&self, from: NodeId, to: NodeId) -> Millimetres {
        self.routes().tree(self, from).dist[to.index()]
    }

    /// Edge sequence of the fastest route; `None` if unreachable.
    pub fn route_edges(&self, from: NodeId, to: NodeId) -> Option<Vec<EdgeId>> {
        self.routes().tree(self, from).edges_to(self, to)
    }

    fn check(&self, id: NodeId) -> Result<(), PathError> {
        if id.index() < self.nodes.len() {
            Ok(())
        } else {
            Err(PathError::BadNode(id.0))
        }
    }

    /// Shortest path under `metric`. The other quantity breaks ties, then the
    /// smaller predecessor node id.
    pub fn shortest_path(
        &self,
        from: NodeId,
        to: NodeId,
        metric: Metric,
    ) -> Result<PathResult, PathError> {
        self.check(from)?;
        self.check(to)?;
        let tree = match metric {
            Metric::Time => std::borrow::Cow::Borrowed(self.routes().tree(self, from)),
            Metric::Distance => {
                std::borrow::Cow::Owned(SourceTree::build(self, from, Metric::Distance))
            }
        };
        let edges = tree
            .edges_to(self, to)
            .ok_or(PathError::Unreachable { from, to })?;
        let mut nodes = Vec::with_capacity(edges.len() + 1);
        nodes.push(from);
        nodes.extend(edges.iter().map(|e| self.edge(*e).to));
        Ok(PathResult {
            distance: tree.dist[to.index()],
            duration: tree.time[to.index()],
            nodes,
            edges,
        })
    }

    /// Pairwise (duration, distance) over the fastest routes between `nodes`.
    pub fn travel_matrix(&self, nodes: &[NodeId]) -> Result<TravelMatrix, PathError> {
        for n in nodes {
            self.check(*n)?;
        }
        let mut entries = Vec::with_capacity(nodes.len() * nodes.len());
        for &a in nodes {
            let tree = self.routes().tree(self, a);
            for &b in nodes {
                let t = tree.time[b.index()];
                entries.push((t < UNREACHABLE_TIME).then(|| (t, tree.dist[b.index()])));
            }
        }
        Ok(TravelMatrix {
            nodes: nodes.to_vec(),
            entries,
        })
    }

    /// Load `nodes.csv` and `edges.csv` from a directory.
    pub fn load(dir: &Path) -> Result<Self, NetworkError> {
        let nodes = read_nodes(&dir.join("nodes.csv"))?;
        let edges = read_edges(&dir.join("edges.csv"))?;
        Self::new(nodes, edges)
    }

    /// Write the network in the same two-file CSV layout [`load`](Self::load) reads.
    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("nodes.csv"))?;
        w.write_record(["id", "lat", "lon"])?;
        for n in &self.nodes {
            w.write_record([n.id.to_string(), n.lat.to_string(), n.lon.to_string()])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("edges.csv"))?;
        w.write_record(["from", "to", "length_m", "speed_kmh", "class"])?;
        for e in &self.edges {
            w.write_record([
                self.external_id(e.from).to_string(),
                self.external_id(e.to).to_string(),
                mm_to_metres(e.length).to_string(),
                e.speed_kmh.to_string(),
                e.class.clone(),
            ])?;
        }
        w.flush()
    }

    /// A bidirectional `cols x rows` grid with uniform spacing and speed.
    /// Node ids are `row * cols + col`.
    pub fn grid(cols: u32, rows: u32, spacing_m: f64, speed_kmh: f64) -> Self {
        let mut nodes = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                nodes.push(Node {
                    id: (r * cols + c) as u64,
                    lat: r as f64 * spacing_m / 111_320.0,
                    lon: c as f64 * spacing_m / 111_320.0,
                });
            }
        }
        let mut edges = Vec::new();
        let mut link = |a: u32, b: u32| {
            for (f, t) in [(a, b), (b, a)] {
                edges.push(EdgeSpec {
                    from: f as u64,
                    to: t as u64,
                    length_m: spacing_m,
                    speed_kmh: Some(speed_kmh),
                    class: "residential".into(),
                });
            }
        };
        for r in 0..rows {
            for c in 0..cols {
                let id = r * cols + c;
                if c + 1 < cols {
                    link(id, id + 1);
                }
                if r + 1 < rows {
                    link(id, id + cols);
                }
            }
        }
        Self::new(nodes, edges).expect("grid construction is valid")
    }
}

/// Result of [`RoadNetwork::travel_matrix`]; `None` marks unreachable pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelMatrix {
    pub nodes: Vec<NodeId>,
    entries: Vec<Option<(Seconds, Millimetres)>>,
}

impl TravelMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<(Seconds, Millimetres)> {
        self.entries[i * self.nodes.len() + j]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Per-source fastest-route trees, computed on first use. Safe to share
/// between threads.
#[derive(Debug)]
pub struct RouteTable {
    trees: Vec<OnceLock<SourceTree>>,
}

impl RouteTable {
    fn new(n: usize) -> Self {
        Self {
            trees: (0..n).map(|_| OnceLock::new()).collect(),
        }
    }

    #[inline]
    fn tree(&self, net: &RoadNetwork, source: NodeId) -> &SourceTree {
        self.trees[source.index()].get_or_init(|| SourceTree::build(net, source, Metric::Time))
    }
}

#[derive(Debug, Clone)]
struct SourceTree {
    time: Vec<Seconds>,
    dist: Vec<Millimetres>,
    pred: Vec<u32>,
}

const NO_PRED: u32 = u32::MAX;

impl SourceTree {
    fn build(net: &RoadNetwork, source: NodeId, metric: Metric) -> Self {
        let n = net.node_count();
        let mut time = vec![UNREACHABLE_TIME; n];
        let mut dist = vec![UNREACHABLE_DIST; n];
        let mut pred = vec![NO_PRED; n];
        let mut done = vec![false; n];
        let key = |t: Seconds, d: Millimetres| match metric {
            Metric::Time => (t as u64, d),
            Metric::Distance => (d, t as u64),
        };
        time[source.index()] = 0;
        dist[source.index()] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((key(0, 0), source.0)));
        while let Some(Reverse((k, u))) = heap.pop() {
            let ui = u as usize;
            if done[ui] || k != key(time[ui], dist[ui]) {
                continue;
            }
            done[ui] = true;
            for &eid in net.outgoing(NodeId(u)) {
                let e = net.edge(eid);
                let vi = e.to.index();
                if done[vi] {
                    continue;
                }
                let nt = time[ui] + e.travel_time;
                let nd = dist[ui] + e.length;
                let nk = key(nt, nd);
                let old = key(time[vi], dist[vi]);
                let better = nk < old
                    || (nk == old && pred[vi] != NO_PRED && u < net.edge(EdgeId(pred[vi])).from.0);
                if better {
                    time[vi] = nt;
                    dist[vi] = nd;
                    pred[vi] = eid.0;
                    heap.push(Reverse((nk, e.to.0)));
                }
            }
        }
        Self { time, dist, pred }
    }

    fn edges_to(&self, net: &RoadNetwork, to: NodeId) -> Option<Vec<EdgeId>> {
        if self.time[to.index()] >= UNREACHABLE_TIME {
            return None;
        }
        let mut out = Vec::new();
        let mut cur = to;
        while self.pred[cur.index()] != NO_PRED {
            let e = EdgeId(self.pred[cur.index()]);
            out.push(e);
            cur = net.edge(e).from;
        }
        out.reverse();
        Some(out)
    }
}

#[derive(Debug, Deserialize)]
struct NodeRow {
    id: u64,
    lat: f64,
    lon: f64,
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    from: u64,
    to: u64,
    length_m: f64,
    speed_kmh: Option<f64>,
    #[serde(default)]
    class: String,
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>, NetworkError> {
    let file = std::fs::File::open(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_error(path: &Path, err: csv::Error) -> NetworkError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    NetworkError::Parse {
        file: path.display().to_string(),
        line,
        msg: err.to_string(),
    }
}

fn read_nodes(path: &Path) -> Result<Vec<Node>, NetworkError> {
    let mut rdr = open_csv(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<NodeRow>() {
        let row = row.map_err(|e| parse_error(path, e))?;
        out.push(Node {
            id: row.id,
            lat: row.lat,
            lon: row.lon,
        });
    }
    Ok(out)
}

fn read_edges(path: &Path) -> Result<Vec<EdgeSpec>, NetworkError> {
    let mut rdr = open_csv(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<EdgeRow>() {
        let row = row.map_err(|e| parse_error(path, e))?;
        out.push(EdgeSpec {
            from: row.from,
            to: row.to,
            length_m: row.length_m,
            speed_kmh: row.speed_kmh,
            class: row.class,
        });
    }
    Ok(out)
}
