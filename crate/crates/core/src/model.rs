//! Requests, stops, plans, vehicles and plan evaluation.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Millimetres, NetworkError, NodeId, RoadNetwork, Seconds, UNREACHABLE_TIME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RequestId(pub u64);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StationId(pub u32);

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// A travel request. `baseline` is the direct fastest travel time from
/// origin to destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Request {
    pub id: RequestId,
    pub announce: Seconds,
    pub origin: NodeId,
    pub destination: NodeId,
    pub baseline: Seconds,
}

#[derive(Debug, Error)]
pub enum RequestError {
    #[error("request {0} has identical origin and destination")]
    SameEndpoints(RequestId),
    #[error("request {0} has negative announcement time")]
    NegativeTime(RequestId),
    #[error("request {0}: destination unreachable from origin")]
    Unreachable(RequestId),
    #[error(transparent)]
    Network(#[from] NetworkError),
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
}

impl Request {
    pub fn new(
        net: &RoadNetwork,
        id: RequestId,
        announce: Seconds,
        origin: NodeId,
        destination: NodeId,
    ) -> Result<Self, RequestError> {
        if origin == destination {
            return Err(RequestError::SameEndpoints(id));
        }
        if announce < 0 {
            return Err(RequestError::NegativeTime(id));
        }
        let baseline = net.time(origin, destination);
        if baseline >= UNREACHABLE_TIME {
            return Err(RequestError::Unreachable(id));
        }
        Ok(Self {
            id,
            announce,
            origin,
            destination,
            baseline,
        })
    }

    /// Latest admissible drop-off time under the delay bound.
    #[inline]
    pub fn latest_dropoff(&self, q_max: Seconds) -> Seconds {
        self.announce + self.baseline + q_max
    }

    /// Latest pickup that still allows a direct ride to meet the drop-off deadline.
    #[inline]
    pub fn latest_pickup(&self, q_max: Seconds) -> Seconds {
        self.announce + q_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StopKind {
    Pickup,
    Dropoff,
}

/// One stop of a plan. Carries the full request so plans can be evaluated
/// without a lookup table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stop {
    pub kind: StopKind,
    pub request: Request,
}

impl Stop {
    pub fn pickup(request: Request) -> Self {
        Self {
            kind: StopKind::Pickup,
            request,
        }
    }

    pub fn dropoff(request: Request) -> Self {
        Self {
            kind: StopKind::Dropoff,
            request,
        }
    }

    #[inline]
    pub fn location(&self) -> NodeId {
        match self.kind {
            StopKind::Pickup => self.request.origin,
            StopKind::Dropoff => self.request.destination,
        }
    }

    /// Deterministic ordering key: request id, then pickup before drop-off.
    #[inline]
    pub fn sort_key(&self) -> (RequestId, StopKind) {
        (self.request.id, self.kind)
    }
}

/// An evaluated, feasible stop sequence for one vehicle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub vehicle: VehicleId,
    pub start: NodeId,
    pub start_time: Seconds,
    pub stops: Vec<Stop>,
    pub cost: Millimetres,
    /// Delay of every request dropped off by the plan, in stop order.
    pub delays: Vec<(RequestId, Seconds)>,
    pub required_capacity: u32,
    pub finish_time: Seconds,
}

impl Plan {
    pub fn empty(vehicle: &VehicleState, now: Seconds) -> Self {
        Self {
            vehicle: vehicle.id,
            start: vehicle.position,
            start_time: vehicle.ready_at.max(now),
            stops: Vec::new(),
            cost: 0,
            delays: Vec::new(),
            required_capacity: vehicle.onboard.len() as u32,
            finish_time: vehicle.ready_at.max(now),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    /// Requests picked up by this plan (i.e. not already onboard).
    pub fn picked_up(&self) -> impl Iterator<Item = &Request> + '_ {
        self.stops
            .iter()
            .filter(|s| s.kind == StopKind::Pickup)
            .map(|s| &s.request)
    }

    pub fn max_delay(&self) -> Seconds {
        self.delays.iter().map(|(_, d)| *d).max().unwrap_or(0)
    }
}

/// Dispatch-time view of one vehicle. `position` is the node the vehicle
/// occupies (or will reach next) and `ready_at` when it is there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VehicleState {
    pub id: VehicleId,
    pub position: NodeId,
    pub ready_at: Seconds,
    pub onboard: Vec<Request>,
    pub plan: Vec<Stop>,
    pub capacity: u32,
    pub station: Option<StationId>,
}

impl VehicleState {
    pub fn idle(id: VehicleId, position: NodeId, ready_at: Seconds, capacity: u32) -> Self {
        Self {
            id,
            position,
            ready_at,
            onboard: Vec::new(),
            plan: Vec::new(),
            capacity,
            station: None,
        }
    }
}

/// Why a stop sequence cannot be executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Infeasibility {
    #[error("request {request} would be delayed {delay} s")]
    Delay { request: RequestId, delay: Seconds },
    #[error("load {load} exceeds capacity when serving {request}")]
    Capacity { request: RequestId, load: u32 },
    #[error("stop order invalid for request {request}")]
    Ordering { request: RequestId },
    #[error("stop for {request} is unreachable")]
    Unreachable { request: RequestId },
}

/// Which dispatcher drives the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispatcherKind {
    /// Private cars: every request is driven directly, no fleet involved.
    None,
    Ih,
    Vga,
    VgaLimited,
    VgaPnas,
}

impl DispatcherKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DispatcherKind::None => "none",
            DispatcherKind::Ih => "ih",
            DispatcherKind::Vga => "vga",
            DispatcherKind::VgaLimited => "vga-limited",
            DispatcherKind::VgaPnas => "vga-pnas",
        }
    }
}

impl std::str::FromStr for DispatcherKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "ih" => Ok(Self::Ih),
            "vga" => Ok(Self::Vga),
            "vga-limited" => Ok(Self::VgaLimited),
            "vga-pnas" => Ok(Self::VgaPnas),
            other => Err(format!("unknown dispatcher '{other}'")),
        }
    }
}

/// Scenario parameters. Serialized as a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub q_max_s: Seconds,
    pub capacity: u32,
    pub batch_s: Seconds,
    /// Relative optimality gap accepted by the assignment solver.
    pub gap: f64,
    pub group_budget_ms: Option<u64>,
    pub solver_budget_ms: Option<u64>,
    pub dispatcher: DispatcherKind,
    pub warmup_s: Seconds,
    pub rebalance_period_s: Seconds,
    pub tau_fraction: f64,
    pub surplus_fraction: f64,
    /// Candidate vehicles per request in the PNAS variant.
    pub pnas_nearest: usize,
    /// Group size above which the PNAS variant builds plans by insertion.
    pub pnas_exact_limit: usize,
    /// Hard ceiling on requests per single-vehicle search.
    pub search_ceiling: usize,
    pub seed: u64,
    /// Stop the clock here. By default the simulation runs until every
    /// request is resolved and the fleet is parked again.
    pub horizon_s: Option<Seconds>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            q_max_s: 240,
            capacity: 5,
            batch_s: 30,
            gap: 0.0002,
            group_budget_ms: None,
            solver_budget_ms: None,
            dispatcher: DispatcherKind::Vga,
            warmup_s: 1800,
            rebalance_period_s: 60,
            tau_fraction: 0.85,
            surplus_fraction: 0.05,
            pnas_nearest: 30,
            pnas_exact_limit: 4,
            search_ceiling: 14,
            seed: 0,
            horizon_s: None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

impl ScenarioConfig {
    /// Defaults appropriate for a dispatcher variant: 0.02 % gap for the
    /// exact variant, 0.5 % gap and a 60 ms per-vehicle group budget for
    /// the limited variant, and unit capacity is left to the caller.
    pub fn for_dispatcher(dispatcher: DispatcherKind) -> Self {
        let mut cfg = Self {
            dispatcher,
            ..Self::default()
        };
        if dispatcher == DispatcherKind::VgaLimited {
            cfg.gap = 0.005;
            cfg.group_budget_ms = Some(60);
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.q_max_s <= 0 {
            return Err(ConfigError("q_max_s must be positive".into()));
        }
        if !(self.gap >= 0.0) {
            return Err(ConfigError("gap must be non-negative".into()));
        }
        if self.batch_s <= 0 {
            return Err(ConfigError("batch_s must be positive".into()));
        }
        if self.capacity == 0 {
            return Err(ConfigError("capacity must be at least 1".into()));
        }
        if self.rebalance_period_s <= 0 {
            return Err(ConfigError("rebalance_period_s must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.tau_fraction) {
            return Err(ConfigError("tau_fraction must be within [0, 1]".into()));
        }
        if !(self.surplus_fraction >= 0.0) {
            return Err(ConfigError("surplus_fraction must be non-negative".into()));
        }
        if self.horizon_s.is_some_and(|h| h <= self.warmup_s) {
            return Err(ConfigError("horizon_s must lie after the warm-up".into()));
        }
        if self.warmup_s < 0 {
            return Err(ConfigError("warmup_s must be non-negative".into()));
        }
        if self.pnas_nearest == 0 {
            return Err(ConfigError("pnas_nearest must be at least 1".into()));
        }
        if self.search_ceiling == 0 {
            return Err(ConfigError("search_ceiling must be at least 1".into()));
        }
        Ok(())
    }
}

/// Simulate `stops` for `vehicle` starting at `now` and return the evaluated
/// plan, or the first violated constraint.
///
/// Vehicles wait at a pickup announced later than their arrival. Service
/// time at stops is zero.
pub fn evaluate_plan(
    net: &RoadNetwork,
    vehicle: &VehicleState,
    stops: &[Stop],
    now: Seconds,
    q_max: Seconds,
) -> Result<Plan, Infeasibility> {
    check_ordering(vehicle, stops)?;
    let mut t = vehicle.ready_at.max(now);
    let start_time = t;
    let mut pos = vehicle.position;
    let mut load = vehicle.onboard.len() as u32;
    let mut peak = load;
    let mut cost: Millimetres = 0;
    let mut delays = Vec::new();
    for stop in stops {
        let loc = stop.location();
        let leg = net.time(pos, loc);
        if leg >= UNREACHABLE_TIME {
            return Err(Infeasibility::Unreachable {
                request: stop.request.id,
            });
        }
        t += leg;
        cost += net.dist(pos, loc);
        pos = loc;
        match stop.kind {
            StopKind::Pickup => {
                t = t.max(stop.request.announce);
                load += 1;
                peak = peak.max(load);
                if load > vehicle.capacity {
                    return Err(Infeasibility::Capacity {
                        request: stop.request.id,
                        load,
                    });
                }
            }
            StopKind::Dropoff => {
                let delay = t - stop.request.announce - stop.request.baseline;
                if delay > q_max {
                    return Err(Infeasibility::Delay {
                        request: stop.request.id,
                        delay,
                    });
                }
                delays.push((stop.request.id, delay));
                load -= 1;
            }
        }
    }
    Ok(Plan {
        vehicle: vehicle.id,
        start: vehicle.position,
        start_time,
        stops: stops.to_vec(),
        cost,
        delays,
        required_capacity: peak,
        finish_time: t,
    })
}

/// Pickup precedes drop-off for every new request, onboard requests are only
/// dropped off, and every onboard request is dropped off.
fn check_ordering(vehicle: &VehicleState, stops: &[Stop]) -> Result<(), Infeasibility> {
    // 0 = unseen, 1 = picked up / onboard, 2 = dropped off
    let mut state: HashMap<RequestId, u8> = HashMap::with_capacity(stops.len());
    for r in &vehicle.onboard {
        state.insert(r.id, 1);
    }
    for stop in stops {
        let id = stop.request.id;
        let cur = state.get(&id).copied().unwrap_or(0);
        let next = match (stop.kind, cur) {
            (StopKind::Pickup, 0) => 1,
            (StopKind::Dropoff, 1) => 2,
            _ => return Err(Infeasibility::Ordering { request: id }),
        };
        state.insert(id, next);
    }
    if let Some((id, _)) = state
        .iter()
        .filter(|(_, s)| **s == 1)
        .min_by_key(|(id, _)| **id)
    {
        return Err(Infeasibility::Ordering { request: *id });
    }
    Ok(())
}

/// Total driven length of a plan, from its start node through every stop.
pub fn plan_distance(net: &RoadNetwork, plan: &Plan) -> Millimetres {
    let mut pos = plan.start;
    let mut total = 0;
    for stop in &plan.stops {
        total += net.dist(pos, stop.location());
        pos = stop.location();
    }
    total
}

#[derive(Debug, Deserialize)]
struct RequestRow {
    id: u64,
    t_announce_s: Seconds,
    origin_node: u64,
    dest_node: u64,
}

/// Read a requests CSV (`id,t_announce_s,origin_node,dest_node`), resolving
/// node ids against `net`. Output is sorted by (announcement, id).
pub fn load_requests(net: &RoadNetwork, path: &Path) -> Result<Vec<Request>, RequestError> {
    let file = std::fs::File::open(path).map_err(|source| RequestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut out = Vec::new();
    for row in rdr.deserialize::<RequestRow>() {
        let row = row.map_err(|e| RequestError::Parse {
            file: path.display().to_string(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let origin = net.resolve(row.origin_node)?;
        let destination = net.resolve(row.dest_node)?;
        out.push(Request::new(
            net,
            RequestId(row.id),
            row.t_announce_s,
            origin,
            destination,
        )?);
    }
    out.sort_by_key(|r| (r.announce, r.id));
    Ok(out)
}

pub fn write_requests<W: std::io::Write>(
    net: &RoadNetwork,
    requests: &[Request],
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "t_announce_s", "origin_node", "dest_node"])?;
    for r in requests {
        w.write_record([
            r.id.0.to_string(),
            r.announce.to_string(),
            net.external_id(r.origin).to_string(),
            net.external_id(r.destination).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
