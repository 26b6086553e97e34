//! Per-vehicle enumeration of feasible request groups.
//!
//! Groups are built level by level. A candidate of size k+1 is formed by
//! adding one feasible single request to a stored group of size k, and it is
//! only handed to the single-vehicle search if every one of its size-k
//! sub-groups was itself feasible. Groups always implicitly contain the
//! vehicle's onboard passengers; keys list the waiting requests only.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::model::{Plan, Request, RequestId, VehicleId, VehicleState};
use crate::network::{RoadNetwork, Seconds};
use crate::svdarp::{feasible_and_optimal, SearchParams};

/// Canonical group key: waiting request ids in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GroupKey(pub Vec<RequestId>);

impl GroupKey {
    pub fn new(mut ids: Vec<RequestId>) -> Self {
        ids.sort();
        ids.dedup();
        Self(ids)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: RequestId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    fn with(&self, id: RequestId) -> Self {
        let mut ids = self.0.clone();
        let pos = ids.binary_search(&id).unwrap_or_else(|p| p);
        ids.insert(pos, id);
        Self(ids)
    }

    fn without(&self, idx: usize) -> Self {
        let mut ids = self.0.clone();
        ids.remove(idx);
        Self(ids)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleGroupSet {
    pub vehicle: VehicleId,
    pub groups: BTreeMap<GroupKey, Plan>,
    /// Largest number of requests (waiting plus onboard) in a stored group.
    pub max_group_size: usize,
    pub elapsed_ms: f64,
    pub truncated: bool,
    /// Number of single-vehicle searches run.
    pub feasibility_tests: usize,
    /// The onboard-only group violated the delay bound and was added anyway
    /// so the vehicle keeps a valid assignment.
    pub forced_base: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct GroupGenOptions {
    pub search: SearchParams,
    pub budget: Option<Duration>,
}

/// Enumerate every feasible group of `waiting` for `vehicle`.
pub fn generate_groups(
    net: &RoadNetwork,
    vehicle: &VehicleState,
    waiting: &[Request],
    now: Seconds,
    opts: &GroupGenOptions,
) -> FeasibleGroupSet {
    let started = Instant::now();
    let over_budget = || opts.budget.is_some_and(|b| started.elapsed() >= b);
    let mut waiting = waiting.to_vec();
    waiting.sort_by_key(|r| r.id);
    waiting.dedup_by_key(|r| r.id);

    let mut out = FeasibleGroupSet {
        vehicle: vehicle.id,
        groups: BTreeMap::new(),
        max_group_size: 0,
        elapsed_ms: 0.0,
        truncated: false,
        feasibility_tests: 0,
        forced_base: false,
    };
    let test = |group: &[Request], out: &mut FeasibleGroupSet| -> Option<Plan> {
        out.feasibility_tests += 1;
        feasible_and_optimal(net, vehicle, group, now, &opts.search)
            .ok()
            .and_then(|r| r.plan)
    };

    // the onboard-only group
    let base = match test(&[], &mut out) {
        Some(p) => p,
        None => {
            out.forced_base = true;
            let relaxed = SearchParams {
                q_max: Seconds::MAX / 8,
                ..opts.search
            };
            feasible_and_optimal(net, vehicle, &[], now, &relaxed)
                .ok()
                .and_then(|r| r.plan)
                .unwrap_or_else(|| Plan::empty(vehicle, now))
        }
    };
    out.groups.insert(GroupKey::default(), base);

    let mut singles: Vec<Request> = Vec::new();
    let mut level: BTreeSet<GroupKey> = BTreeSet::new();
    for r in &waiting {
        if over_budget() {
            out.truncated = true;
            break;
        }
        if let Some(plan) = test(std::slice::from_ref(r), &mut out) {
            singles.push(*r);
            let key = GroupKey(vec![r.id]);
            level.insert(key.clone());
            out.groups.insert(key, plan);
        }
    }

    let by_id: BTreeMap<RequestId, Request> = singles.iter().map(|r| (r.id, *r)).collect();
    'levels: while !level.is_empty() && !out.truncated {
        let mut next: BTreeSet<GroupKey> = BTreeSet::new();
        let mut checked: HashSet<GroupKey> = HashSet::new();
        for g in &level {
            for r in &singles {
                if g.contains(r.id) {
                    continue;
                }
                let cand = g.with(r.id);
                if !checked.insert(cand.clone()) {
                    continue;
                }
                let subsets_present = (0..cand.len()).all(|i| level.contains(&cand.without(i)));
                if !subsets_present {
                    continue;
                }
                if over_budget() {
                    out.truncated = true;
                    break 'levels;
                }
                let members: Vec<Request> = cand.0.iter().map(|id| by_id[id]).collect();
                if let Some(plan) = test(&members, &mut out) {
                    out.groups.insert(cand.clone(), plan);
                    next.insert(cand);
                }
            }
        }
        level = next;
    }
    out.max_group_size =
        out.groups.keys().map(|g| g.len()).max().unwrap_or(0) + vehicle.onboard.len();
    out.elapsed_ms = started.elapsed().as_secs_f64() * 1000.0;
    out
}

/// The `limit` vehicles closest (by travel time) to the request origin.
/// Ties go to the lower vehicle id.
pub fn candidate_vehicles(
    net: &RoadNetwork,
    vehicles: &[VehicleState],
    request: &Request,
    limit: usize,
) -> Vec<VehicleId> {
    let mut scored: Vec<(Seconds, VehicleId)> = vehicles
        .iter()
        .map(|v| (net.time(v.position, request.origin), v.id))
        .collect();
    scored.sort();
    scored
        .into_iter()
        .take(limit.max(1))
        .map(|(_, id)| id)
        .collect()
}

/// Generate groups for every vehicle in parallel; output follows the order
/// of `vehicles`. `waiting_for` restricts each vehicle's candidate requests.
pub fn generate_all(
    net: &RoadNetwork,
    vehicles: &[VehicleState],
    waiting_for: &[Vec<Request>],
    now: Seconds,
    opts: &GroupGenOptions,
    threads: Option<usize>,
) -> Vec<FeasibleGroupSet> {
    assert_eq!(vehicles.len(), waiting_for.len());
    let work = || {
        vehicles
            .par_iter()
            .zip(waiting_for.par_iter())
            .map(|(v, w)| generate_groups(net, v, w, now, opts))
            .collect::<Vec<_>>()
    };
    match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
        {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    }
}

/// Thread cap from `VGA_DISPATCH_THREADS`, if set to a positive integer.
pub fn thread_cap_from_env() -> Option<usize> {
    std::env::var("VGA_DISPATCH_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NodeId;

    fn opts(q_max: Seconds) -> GroupGenOptions {
        GroupGenOptions {
            search: SearchParams::exact(q_max),
            budget: None,
        }
    }

    fn req(net: &RoadNetwork, id: u64, o: u32, d: u32) -> Request {
        Request::new(net, RequestId(id), 0, NodeId(o), NodeId(d)).unwrap()
    }

    #[test]
    fn empty_inputs_give_only_the_empty_group() {
        let net = RoadNetwork::grid(3, 3, 100.0, 36.0);
        let v = VehicleState::idle(VehicleId(0), NodeId(0), 0, 4);
        let gs = generate_groups(&net, &v, &[], 0, &opts(60));
        assert_eq!(gs.groups.len(), 1);
        assert!(gs.groups.contains_key(&GroupKey::default()));
        assert_eq!(gs.max_group_size, 0);
    }

    #[test]
    fn onboard_passengers_are_in_every_group() {
        let net = RoadNetwork::grid(5, 1, 100.0, 36.0);
        let a = req(&net, 1, 0, 4);
        let mut v = VehicleState::idle(VehicleId(0), NodeId(1), 10, 3);
        v.onboard.push(a);
        let b = req(&net, 2, 2, 3);
        let far = req(&net, 3, 4, 0);
        let gs = generate_groups(&net, &v, &[b, far], 10, &opts(30));
        let keys: Vec<&GroupKey> = gs.groups.keys().collect();
        assert_eq!(keys, vec![&GroupKey::default(), &GroupKey(vec![b.id])]);
        for plan in gs.groups.values() {
            assert!(plan.delays.iter().any(|(id, _)| *id == a.id));
        }
        assert_eq!(gs.max_group_size, 2);
    }

    #[test]
    fn zero_budget_truncates() {
        let net = RoadNetwork::grid(3, 3, 100.0, 36.0);
        let v = VehicleState::idle(VehicleId(0), NodeId(0), 0, 4);
        let o = GroupGenOptions {
            budget: Some(Duration::ZERO),
            ..opts(60)
        };
        let gs = generate_groups(&net, &v, &[req(&net, 1, 1, 2)], 0, &o);
        assert!(gs.truncated);
        assert_eq!(gs.groups.len(), 1);
    }

    #[test]
    fn nearest_vehicles_with_tie_break() {
        let net = RoadNetwork::grid(5, 1, 100.0, 36.0);
        let vs: Vec<VehicleState> = [(4u32, 0u32), (1, 4), (2, 1), (3, 3), (0, 2)]
            .iter()
            .map(|&(id, node)| VehicleState::idle(VehicleId(id), NodeId(node), 0, 2))
            .collect();
        let r = req(&net, 1, 2, 0);
        assert_eq!(candidate_vehicles(&net, &vs, &r, 1), vec![VehicleId(0)]);
        // v2 (node 1) and v3 (node 3) are both 10 s away
        assert_eq!(
            candidate_vehicles(&net, &vs, &r, 2),
            vec![VehicleId(0), VehicleId(2)]
        );
        assert_eq!(candidate_vehicles(&net, &vs, &r, 10).len(), 5);
    }
}
