//! Exact single-vehicle dial-a-ride search.
//!
//! Decides whether one vehicle can serve a group of requests (on top of its
//! onboard passengers) and returns the minimum-distance plan. The search
//! extends a stop sequence in place, depth first, and discards a partial
//! sequence as soon as any stop still to be visited can no longer meet its
//! deadline.

use thiserror::Error;

use crate::ih::cheapest_insertion;
use crate::model::{evaluate_plan, Plan, Request, Stop, StopKind, VehicleState};
use crate::network::{Millimetres, RoadNetwork, Seconds};

/// How plans are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exact,
    /// Exact search on the `exact_limit` lowest-id requests of the group, then
    /// sequential cheapest insertion of the rest.
    InsertionFallback {
        exact_limit: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    pub q_max: Seconds,
    pub mode: SearchMode,
    /// Maximum number of requests (group plus onboard) handed to the exact search.
    pub ceiling: usize,
}

impl SearchParams {
    pub fn exact(q_max: Seconds) -> Self {
        Self {
            q_max,
            mode: SearchMode::Exact,
            ceiling: 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPlanResult {
    /// Optimal plan when the group is feasible.
    pub plan: Option<Plan>,
    /// Search nodes expanded.
    pub explored: u64,
}

impl GroupPlanResult {
    pub fn feasible(&self) -> bool {
        self.plan.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("group of {size} requests exceeds the search ceiling of {ceiling}")]
    CeilingExceeded { size: usize, ceiling: usize },
}

/// Feasibility test and optimal plan for serving `group` with `vehicle`.
///
/// `group` holds the waiting requests only; the vehicle's onboard passengers
/// are always included.
pub fn feasible_and_optimal(
    net: &RoadNetwork,
    vehicle: &VehicleState,
    group: &[Request],
    now: Seconds,
    params: &SearchParams,
) -> Result<GroupPlanResult, SearchError> {
    match params.mode {
        SearchMode::Exact => exact(net, vehicle, group, now, params),
        SearchMode::InsertionFallback { exact_limit } => {
            if group.len() <= exact_limit {
                return exact(net, vehicle, group, now, params);
            }
            let mut sorted = group.to_vec();
            sorted.sort_by_key(|r| r.id);
            let (head, tail) = sorted.split_at(exact_limit);
            let mut result = exact(net, vehicle, head, now, params)?;
            let Some(mut plan) = result.plan.take() else {
                return Ok(result);
            };
            for r in tail {
                match cheapest_insertion(net, vehicle, &plan.stops, r, now, params.q_max) {
                    Some((p, _)) => plan = p,
                    None => return Ok(result),
                }
            }
            result.plan = Some(plan);
            Ok(result)
        }
    }
}

fn exact(
    net: &RoadNetwork,
    vehicle: &VehicleState,
    group: &[Request],
    now: Seconds,
    params: &SearchParams,
) -> Result<GroupPlanResult, SearchError> {
    let size = group.len() + vehicle.onboard.len();
    if size > params.ceiling {
        return Err(SearchError::CeilingExceeded {
            size,
            ceiling: params.ceiling,
        });
    }
    let mut search = Search::new(net, vehicle, group, params.q_max);
    let start = vehicle.ready_at.max(now);
    search.run(start);
    let explored = search.explored;
    let plan = search.best_sequence().map(|stops| {
        evaluate_plan(net, vehicle, &stops, now, params.q_max)
            .expect("search only accepts feasible sequences")
    });
    Ok(GroupPlanResult { plan, explored })
}

struct Search<'a> {
    net: &'a RoadNetwork,
    capacity: u32,
    stops: Vec<Stop>,
    latest: Vec<Seconds>,
    /// For a drop-off, the index of its pickup (if it is part of the search).
    pickup_of: Vec<Option<usize>>,
    done: Vec<bool>,
    seq: Vec<usize>,
    best: Vec<usize>,
    best_cost: Millimetres,
    found: bool,
    explored: u64,
    start_pos: crate::network::NodeId,
    start_load: u32,
}

impl<'a> Search<'a> {
    fn new(
        net: &'a RoadNetwork,
        vehicle: &VehicleState,
        group: &[Request],
        q_max: Seconds,
    ) -> Self {
        let mut stops: Vec<Stop> = vehicle.onboard.iter().map(|r| Stop::dropoff(*r)).collect();
        for r in group {
            stops.push(Stop::pickup(*r));
            stops.push(Stop::dropoff(*r));
        }
        stops.sort_by_key(|s| s.sort_key());
        let latest = stops
            .iter()
            .map(|s| match s.kind {
                StopKind::Pickup => s.request.latest_pickup(q_max),
                StopKind::Dropoff => s.request.latest_dropoff(q_max),
            })
            .collect();
        let pickup_of = stops
            .iter()
            .map(|s| match s.kind {
                StopKind::Pickup => None,
                StopKind::Dropoff => stops
                    .iter()
                    .position(|p| p.kind == StopKind::Pickup && p.request.id == s.request.id),
            })
            .collect();
        let n = stops.len();
        Self {
            net,
            capacity: vehicle.capacity,
            stops,
            latest,
            pickup_of,
            done: vec![false; n],
            seq: Vec::with_capacity(n),
            best: Vec::with_capacity(n),
            best_cost: Millimetres::MAX,
            found: false,
            explored: 0,
            start_pos: vehicle.position,
            start_load: vehicle.onboard.len() as u32,
        }
    }

    fn run(&mut self, start: Seconds) {
        if self.start_load > self.capacity {
            return;
        }
        // the start itself must leave every stop reachable in time
        if !self.lookahead(self.start_pos, start) {
            return;
        }
        self.extend(self.start_pos, start, 0, self.start_load);
    }

    /// Every pending stop can still be reached before its deadline.
    #[inline]
    fn lookahead(&self, pos: crate::network::NodeId, t: Seconds) -> bool {
        self.stops
            .iter()
            .zip(&self.done)
            .zip(&self.latest)
            .all(|((s, &done), &latest)| done || t + self.net.time(pos, s.location()) <= latest)
    }

    fn extend(&mut self, pos: crate::network::NodeId, t: Seconds, cost: Millimetres, load: u32) {
        self.explored += 1;
        if self.seq.len() == self.stops.len() {
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best.clear();
                self.best.extend_from_slice(&self.seq);
                self.found = true;
            }
            return;
        }
        for i in 0..self.stops.len() {
            if self.done[i] {
                continue;
            }
            let stop = self.stops[i];
            let next_load = match stop.kind {
                StopKind::Pickup => {
                    if load >= self.capacity {
                        continue;
                    }
                    load + 1
                }
                StopKind::Dropoff => {
                    if let Some(p) = self.pickup_of[i] {
                        if !self.done[p] {
                            continue;
                        }
                    }
                    load - 1
                }
            };
            let loc = stop.location();
            let next_cost = cost + self.net.dist(pos, loc);
            // equal cost cannot win: later sequences are lexicographically larger
            if next_cost >= self.best_cost {
                continue;
            }
            let mut arrive = t + self.net.time(pos, loc);
            if stop.kind == StopKind::Pickup {
                arrive = arrive.max(stop.request.announce);
            }
            if arrive > self.latest[i] {
                continue;
            }
            self.done[i] = true;
            if self.lookahead(loc, arrive) {
                self.seq.push(i);
                self.extend(loc, arrive, next_cost, next_load);
                self.seq.pop();
            }
            self.done[i] = false;
        }
    }

    fn best_sequence(&self) -> Option<Vec<Stop>> {
        self.found
            .then(|| self.best.iter().map(|&i| self.stops[i]).collect())
    }
}
