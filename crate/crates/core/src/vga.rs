//! Vehicle-group assignment dispatcher: enumerate feasible groups for every
//! vehicle, then choose one group per vehicle with the set-partitioning
//! program. All requests not yet picked up are replanned every batch.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use crate::assignment::{
    build_problem, extract_plans, solve, AssignmentError, AssignmentProblem, ColumnOwner,
    SolveOptions,
};
use crate::bnb::BnbStatus;
use crate::dispatch::{Assignment, FleetSnapshot};
use crate::groupgen::{
    candidate_vehicles, generate_all, FeasibleGroupSet, GroupGenOptions, GroupKey,
};
use crate::ih::dispatch_batch_ih;
use crate::model::{
    evaluate_plan, DispatcherKind, Request, RequestId, ScenarioConfig, StopKind, VehicleId,
    VehicleState,
};
use crate::network::{Millimetres, RoadNetwork, Seconds};
use crate::svdarp::{SearchMode, SearchParams};

/// Cost of leaving a request unserved when no full assignment exists.
pub const REJECT_PENALTY: Millimetres = 1_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct VgaOptions {
    pub q_max: Seconds,
    pub gap: f64,
    pub group_budget: Option<Duration>,
    pub solver_budget: Option<Duration>,
    /// Restrict each request to this many nearest vehicles.
    pub nearest: Option<usize>,
    pub mode: SearchMode,
    pub ceiling: usize,
    pub threads: Option<usize>,
    /// Seed the solver with the insertion heuristic's assignment.
    pub ih_hint: bool,
}

impl VgaOptions {
    pub fn optimal(q_max: Seconds) -> Self {
        Self {
            q_max,
            gap: 0.0002,
            group_budget: None,
            solver_budget: None,
            nearest: None,
            mode: SearchMode::Exact,
            ceiling: 14,
            threads: None,
            ih_hint: true,
        }
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let mut o = Self {
            q_max: cfg.q_max_s,
            gap: cfg.gap,
            group_budget: cfg.group_budget_ms.map(Duration::from_millis),
            solver_budget: cfg.solver_budget_ms.map(Duration::from_millis),
            ceiling: cfg.search_ceiling,
            threads: crate::groupgen::thread_cap_from_env(),
            ..Self::optimal(cfg.q_max_s)
        };
        if cfg.dispatcher == DispatcherKind::VgaPnas {
            o.nearest = Some(cfg.pnas_nearest);
            o.mode = SearchMode::InsertionFallback {
                exact_limit: cfg.pnas_exact_limit,
            };
        }
        o
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VgaOutcome {
    /// New plan for every active vehicle and every dispatched parked vehicle.
    pub assignments: Vec<Assignment>,
    pub rejected: Vec<RequestId>,
    pub objective: Millimetres,
    pub lower_bound: f64,
    pub gap: f64,
    pub status: BnbStatus,
    pub nodes: u64,
    pub max_group_size: usize,
    pub groupgen_ms: f64,
    pub solver_ms: f64,
    pub truncated_vehicles: usize,
    pub columns: usize,
}

/// Requests scheduled for pickup in a vehicle's current plan.
fn planned_pickups(v: &VehicleState) -> Vec<RequestId> {
    v.plan
        .iter()
        .filter(|s| s.kind == StopKind::Pickup)
        .map(|s| s.request.id)
        .collect()
}

/// Make sure every active vehicle can keep its current plan.
fn add_current_plans(
    net: &RoadNetwork,
    fleet: &FleetSnapshot,
    waiting: &BTreeSet<RequestId>,
    groupsets: &mut [FeasibleGroupSet],
    q_max: Seconds,
) {
    for (v, gs) in fleet.active.iter().zip(groupsets.iter_mut()) {
        let key = GroupKey::new(planned_pickups(v));
        if gs.groups.contains_key(&key) || !key.0.iter().all(|r| waiting.contains(r)) {
            continue;
        }
        if let Ok(plan) = evaluate_plan(net, v, &v.plan, fleet.now, q_max) {
            gs.groups.insert(key, plan);
        }
    }
}

/// Columns reproducing the insertion heuristic's answer, if all exist.
fn ih_hint(
    net: &RoadNetwork,
    fleet: &FleetSnapshot,
    waiting: &[Request],
    problem: &AssignmentProblem,
    q_max: Seconds,
) -> Option<Vec<usize>> {
    let planned: BTreeSet<RequestId> = fleet.active.iter().flat_map(planned_pickups).collect();
    let new: Vec<Request> = waiting
        .iter()
        .filter(|r| !planned.contains(&r.id))
        .copied()
        .collect();
    let mut scratch = fleet.clone();
    let out = dispatch_batch_ih(net, &mut scratch, &new, q_max);
    if !out.rejected.is_empty() {
        return None;
    }
    let mut hint = Vec::new();
    let mut from_station: BTreeMap<VehicleId, crate::model::StationId> = BTreeMap::new();
    for a in &out.assignments {
        if let Some(s) = a.from_station {
            from_station.insert(a.vehicle, s);
        }
    }
    for v in &scratch.active {
        let key = GroupKey::new(planned_pickups(v));
        let owner = match from_station.get(&v.id) {
            Some(&station) => {
                let rep = fleet
                    .stations
                    .iter()
                    .find(|s| s.station == station)?
                    .parked
                    .first()
                    .copied()?;
                ColumnOwner::Station { station, rep }
            }
            None => ColumnOwner::Vehicle(v.id),
        };
        hint.push(problem.column(owner, &key)?);
    }
    Some(hint)
}

/// Dispatch one batch. `waiting` holds every request not yet picked up,
/// including those already promised to a vehicle.
pub fn dispatch_batch_vga(
    net: &RoadNetwork,
    fleet: &FleetSnapshot,
    waiting: &[Request],
    opts: &VgaOptions,
) -> Result<VgaOutcome, AssignmentError> {
    let now = fleet.now;
    let vehicles = fleet.candidates();
    let waiting_ids: BTreeSet<RequestId> = waiting.iter().map(|r| r.id).collect();

    let waiting_for: Vec<Vec<Request>> = match opts.nearest {
        None => vec![waiting.to_vec(); vehicles.len()],
        Some(limit) => {
            let mut per: BTreeMap<VehicleId, Vec<Request>> = BTreeMap::new();
            for r in waiting {
                for v in candidate_vehicles(net, &vehicles, r, limit) {
                    per.entry(v).or_default().push(*r);
                }
            }
            let by_id: BTreeMap<RequestId, Request> = waiting.iter().map(|r| (r.id, *r)).collect();
            vehicles
                .iter()
                .map(|v| {
                    let mut list = per.remove(&v.id).unwrap_or_default();
                    for id in planned_pickups(v) {
                        if let Some(r) = by_id.get(&id) {
                            list.push(*r);
                        }
                    }
                    list.sort_by_key(|r| r.id);
                    list.dedup_by_key(|r| r.id);
                    list
                })
                .collect()
        }
    };

    let gen_started = Instant::now();
    let gen_opts = GroupGenOptions {
        search: SearchParams {
            q_max: opts.q_max,
            mode: opts.mode,
            ceiling: opts.ceiling,
        },
        budget: opts.group_budget,
    };
    let mut groupsets = generate_all(net, &vehicles, &waiting_for, now, &gen_opts, opts.threads);
    add_current_plans(net, fleet, &waiting_ids, &mut groupsets, opts.q_max);
    let groupgen_ms = gen_started.elapsed().as_secs_f64() * 1000.0;

    // requests no vehicle can serve on its own are dropped up front
    let coverable: BTreeSet<RequestId> = groupsets
        .iter()
        .flat_map(|g| g.groups.keys().flat_map(|k| k.0.iter().copied()))
        .collect();
    let mut rejected: Vec<RequestId> = Vec::new();
    let served: Vec<Request> = waiting
        .iter()
        .filter(|r| {
            let ok = coverable.contains(&r.id);
            if !ok {
                rejected.push(r.id);
            }
            ok
        })
        .copied()
        .collect();

    let solve_opts = SolveOptions {
        gap: opts.gap,
        time_budget: opts.solver_budget,
    };
    let solver_started = Instant::now();
    let strict = build_problem(&groupsets, fleet, &served, None).and_then(|p| {
        let hint = if opts.ih_hint {
            ih_hint(net, fleet, &served, &p, opts.q_max)
        } else {
            None
        };
        let s = solve(&p, &solve_opts, hint.as_deref())?;
        Ok((p, s))
    });
    let (problem, solution) = match strict {
        Ok(ps) => ps,
        Err(AssignmentError::Infeasible) => {
            let p = build_problem(&groupsets, fleet, &served, Some(REJECT_PENALTY))?;
            let s = solve(&p, &solve_opts, None)?;
            (p, s)
        }
        Err(e) => return Err(e),
    };
    let solver_ms = solver_started.elapsed().as_secs_f64() * 1000.0;

    let (assignments, dropped) = extract_plans(&problem, &solution, &groupsets, fleet);
    rejected.extend(dropped);
    rejected.sort();
    let penalty = rejected
        .iter()
        .filter(|r| {
            problem
                .column(ColumnOwner::Reject(**r), &GroupKey(vec![**r]))
                .is_some()
        })
        .count() as Millimetres
        * REJECT_PENALTY;
    let max_group_size = assignments
        .iter()
        .map(|a| a.plan.delays.len())
        .max()
        .unwrap_or(0);
    Ok(VgaOutcome {
        assignments,
        rejected,
        objective: solution.objective - penalty,
        lower_bound: solution.lower_bound - penalty as f64,
        gap: solution.gap,
        status: solution.status,
        nodes: solution.nodes,
        max_group_size,
        groupgen_ms,
        solver_ms,
        truncated_vehicles: groupsets.iter().filter(|g| g.truncated).count(),
        columns: problem.columns.len(),
    })
}
