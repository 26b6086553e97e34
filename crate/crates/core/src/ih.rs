//! Insertion heuristic dispatcher.
//!
//! Each new request is placed into the existing plan of some vehicle at the
//! pickup/drop-off positions that increase the plan length the least. Stops
//! already in a plan keep their relative order.

use crate::dispatch::{Assignment, FleetSnapshot};
use crate::model::{evaluate_plan, Plan, Request, RequestId, Stop, VehicleId, VehicleState};
use crate::network::{Millimetres, RoadNetwork, Seconds};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsertionResult {
    pub vehicle: VehicleId,
    pub plan: Plan,
    /// Plan length after insertion minus plan length before, in millimetres.
    pub increment: i64,
}

/// Length of driving through `stops` from the vehicle's position.
pub fn stops_distance(net: &RoadNetwork, vehicle: &VehicleState, stops: &[Stop]) -> Millimetres {
    let mut pos = vehicle.position;
    let mut total = 0;
    for s in stops {
        total += net.dist(pos, s.location());
        pos = s.location();
    }
    total
}

/// Cheapest feasible insertion of `request` into `base` for one vehicle.
/// Ties go to the smallest (pickup index, drop-off index).
pub fn cheapest_insertion(
    net: &RoadNetwork,
    vehicle: &VehicleState,
    base: &[Stop],
    request: &Request,
    now: Seconds,
    q_max: Seconds,
) -> Option<(Plan, i64)> {
    let base_cost = stops_distance(net, vehicle, base) as i64;
    let mut best: Option<(Plan, i64)> = None;
    let mut candidate = Vec::with_capacity(base.len() + 2);
    // pickup lands at index i, drop-off at index j of the new sequence
    for i in 0..=base.len() {
        for j in (i + 1)..=(base.len() + 1) {
            candidate.clear();
            candidate.extend_from_slice(&base[..i]);
            candidate.push(Stop::pickup(*request));
            candidate.extend_from_slice(&base[i..j - 1]);
            candidate.push(Stop::dropoff(*request));
            candidate.extend_from_slice(&base[j - 1..]);
            let Ok(plan) = evaluate_plan(net, vehicle, &candidate, now, q_max) else {
                continue;
            };
            let inc = plan.cost as i64 - base_cost;
            if best.as_ref().is_none_or(|(_, b)| inc < *b) {
                best = Some((plan, inc));
            }
        }
    }
    best
}

/// Scan every candidate vehicle and return the cheapest feasible insertion.
/// Ties go to the lowest vehicle id.
pub fn insert_request(
    net: &RoadNetwork,
    vehicles: &[VehicleState],
    request: &Request,
    now: Seconds,
    q_max: Seconds,
) -> Option<InsertionResult> {
    let mut order: Vec<&VehicleState> = vehicles.iter().collect();
    order.sort_by_key(|v| v.id);
    let mut best: Option<InsertionResult> = None;
    for v in order {
        if let Some((plan, increment)) = cheapest_insertion(net, v, &v.plan, request, now, q_max) {
            if best.as_ref().is_none_or(|b| increment < b.increment) {
                best = Some(InsertionResult {
                    vehicle: v.id,
                    plan,
                    increment,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IhBatchOutcome {
    /// Final plan of every vehicle touched in this batch.
    pub assignments: Vec<Assignment>,
    pub rejected: Vec<RequestId>,
    pub total_increment: i64,
}

/// Insert the batch's new requests one by one, ordered by (announcement, id).
/// Each insertion sees the plans produced by the previous ones. Station
/// vehicles enter the active set when they receive a request.
pub fn dispatch_batch_ih(
    net: &RoadNetwork,
    fleet: &mut FleetSnapshot,
    new_requests: &[Request],
    q_max: Seconds,
) -> IhBatchOutcome {
    let now = fleet.now;
    let mut requests = new_requests.to_vec();
    requests.sort_by_key(|r| (r.announce, r.id));
    let mut out = IhBatchOutcome::default();
    let mut touched: Vec<(VehicleId, Option<crate::model::StationId>)> = Vec::new();
    for r in &requests {
        let candidates = fleet.candidates();
        match insert_request(net, &candidates, r, now, q_max) {
            Some(res) => {
                out.total_increment += res.increment;
                let from_station = fleet.activate(res.vehicle);
                let v = fleet
                    .active
                    .iter_mut()
                    .find(|v| v.id == res.vehicle)
                    .expect("activated vehicle is active");
                v.plan = res.plan.stops.clone();
                match touched.iter_mut().find(|(id, _)| *id == res.vehicle) {
                    Some(_) => {}
                    None => touched.push((res.vehicle, from_station)),
                }
            }
            None => out.rejected.push(r.id),
        }
    }
    for (id, from_station) in touched {
        let v = fleet
            .active
            .iter()
            .find(|v| v.id == id)
            .expect("touched vehicle");
        let plan = evaluate_plan(net, v, &v.plan, now, q_max).expect("inserted plans are feasible");
        out.assignments.push(Assignment {
            vehicle: id,
            plan,
            from_station,
        });
    }
    out.assignments.sort_by_key(|a| a.vehicle);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::StationStock;
    use crate::model::{RequestId, StationId, StopKind};
    use crate::network::NodeId;

    fn req(net: &RoadNetwork, id: u64, t: Seconds, o: u32, d: u32) -> Request {
        Request::new(net, RequestId(id), t, NodeId(o), NodeId(d)).unwrap()
    }

    #[test]
    fn idle_vehicle_gets_direct_plan() {
        let net = RoadNetwork::grid(5, 1, 100.0, 36.0);
        let v = VehicleState::idle(VehicleId(3), NodeId(0), 0, 4);
        let r = req(&net, 1, 0, 0, 4);
        let res = insert_request(&net, &[v], &r, 0, 60).unwrap();
        assert_eq!(res.vehicle, VehicleId(3));
        assert_eq!(res.increment, 400_000);
        assert_eq!(res.plan.stops, vec![Stop::pickup(r), Stop::dropoff(r)]);
    }

    #[test]
    fn keeps_relative_order_of_existing_stops() {
        let net = RoadNetwork::grid(6, 1, 100.0, 36.0);
        let a = req(&net, 1, 0, 1, 5);
        let mut v = VehicleState::idle(VehicleId(0), NodeId(0), 0, 4);
        v.plan = vec![Stop::pickup(a), Stop::dropoff(a)];
        let b = req(&net, 2, 0, 2, 3);
        let res = insert_request(&net, &[v], &b, 0, 100).unwrap();
        let kinds: Vec<(u64, StopKind)> = res
            .plan
            .stops
            .iter()
            .map(|s| (s.request.id.0, s.kind))
            .collect();
        assert_eq!(
            kinds,
            vec![
                (1, StopKind::Pickup),
                (2, StopKind::Pickup),
                (2, StopKind::Dropoff),
                (1, StopKind::Dropoff)
            ]
        );
        assert_eq!(res.increment, 0);
    }

    #[test]
    fn ties_go_to_lowest_vehicle() {
        let net = RoadNetwork::grid(5, 1, 100.0, 36.0);
        let v1 = VehicleState::idle(VehicleId(7), NodeId(0), 0, 4);
        let v2 = VehicleState::idle(VehicleId(2), NodeId(4), 0, 4);
        let r = req(&net, 1, 0, 2, 3);
        // v7 needs 200 m to reach the origin, v2 needs 200 m as well
        let res = insert_request(&net, &[v1, v2], &r, 0, 100).unwrap();
        assert_eq!(res.vehicle, VehicleId(2));
    }

    #[test]
    fn unit_capacity_second_request_uses_station() {
        let net = RoadNetwork::grid(5, 1, 100.0, 36.0);
        let a = req(&net, 1, 0, 0, 4);
        let b = req(&net, 2, 0, 0, 4);
        let mut fleet = FleetSnapshot {
            now: 0,
            capacity: 1,
            active: vec![VehicleState::idle(VehicleId(0), NodeId(0), 0, 1)],
            stations: vec![StationStock {
                station: StationId(0),
                node: NodeId(0),
                parked: vec![VehicleId(5)],
            }],
        };
        let out = dispatch_batch_ih(&net, &mut fleet, &[a, b], 50);
        assert!(out.rejected.is_empty());
        assert_eq!(out.assignments.len(), 2);
        assert_eq!(out.assignments[1].vehicle, VehicleId(5));
        assert_eq!(out.assignments[1].from_station, Some(StationId(0)));
        assert!(fleet.stations[0].parked.is_empty());
        // without the station vehicle the second request cannot be served in time
        let mut fleet = FleetSnapshot {
            now: 0,
            capacity: 1,
            active: vec![VehicleState::idle(VehicleId(0), NodeId(0), 0, 1)],
            stations: vec![],
        };
        let out = dispatch_batch_ih(&net, &mut fleet, &[a, b], 50);
        assert_eq!(out.rejected, vec![b.id]);
    }

    #[test]
    fn empty_batch_changes_nothing() {
        let net = RoadNetwork::grid(3, 1, 100.0, 36.0);
        let mut fleet = FleetSnapshot {
            now: 0,
            capacity: 2,
            active: vec![VehicleState::idle(VehicleId(0), NodeId(0), 0, 2)],
            stations: vec![],
        };
        let before = fleet.clone();
        let out = dispatch_batch_ih(&net, &mut fleet, &[], 50);
        assert!(out.assignments.is_empty());
        assert_eq!(fleet, before);
    }
}
