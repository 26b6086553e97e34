//! Vehicle-group assignment as a set-partitioning program.
//!
//! One binary column per (vehicle, feasible group). Active vehicles take
//! exactly one column. Parked vehicles at a station are interchangeable, so
//! each station contributes the groups of a single representative and may
//! use them up to its stock count. Every waiting request is covered exactly
//! once.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bnb::{self, BinaryProgram, BnbOptions, BnbStatus, Row, RowSense};
use crate::dispatch::{Assignment, FleetSnapshot};
use crate::groupgen::{FeasibleGroupSet, GroupKey};
use crate::model::{Plan, Request, RequestId, StationId, VehicleId};
use crate::network::Millimetres;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ColumnOwner {
    Vehicle(VehicleId),
    /// Groups of a station representative; `rep` is the vehicle whose groups
    /// were generated.
    Station {
        station: StationId,
        rep: VehicleId,
    },
    /// Leave the request unserved, at a penalty.
    Reject(RequestId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub owner: ColumnOwner,
    pub key: GroupKey,
    pub cost: Millimetres,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentProblem {
    pub columns: Vec<Column>,
    /// Active vehicles, each with an equality row.
    pub vehicles: Vec<VehicleId>,
    /// Stations with their stock (right-hand side of the row).
    pub stations: Vec<(StationId, usize)>,
    /// Waiting requests, each with a coverage row.
    pub requests: Vec<RequestId>,
    pub program: BinaryProgram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSolution {
    pub chosen: Vec<usize>,
    pub objective: Millimetres,
    pub lower_bound: f64,
    pub gap: f64,
    pub status: BnbStatus,
    pub nodes: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssignmentError {
    #[error("request {0} is not covered by any feasible group")]
    Uncoverable(RequestId),
    #[error("no assignment covers every waiting request")]
    Infeasible,
    #[error("group set for vehicle {0} belongs to neither an active vehicle nor a station")]
    UnknownVehicle(VehicleId),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    pub gap: f64,
    pub time_budget: Option<Duration>,
}

/// Assemble the program. `reject_penalty` adds one column per request that
/// leaves it unserved at the given cost.
pub fn build_problem(
    groupsets: &[FeasibleGroupSet],
    fleet: &FleetSnapshot,
    waiting: &[Request],
    reject_penalty: Option<Millimetres>,
) -> Result<AssignmentProblem, AssignmentError> {
    let reps: BTreeMap<VehicleId, (StationId, usize)> = fleet
        .stations
        .iter()
        .filter_map(|s| s.parked.first().map(|&v| (v, (s.station, s.parked.len()))))
        .collect();
    let active: BTreeSet<VehicleId> = fleet.active.iter().map(|v| v.id).collect();

    let mut sets: Vec<&FeasibleGroupSet> = groupsets.iter().collect();
    sets.sort_by_key(|g| g.vehicle);

    let mut columns = Vec::new();
    let mut vehicles = Vec::new();
    let mut stations = Vec::new();
    for gs in sets {
        let owner = if active.contains(&gs.vehicle) {
            vehicles.push(gs.vehicle);
            ColumnOwner::Vehicle(gs.vehicle)
        } else if let Some(&(station, stock)) = reps.get(&gs.vehicle) {
            stations.push((station, stock));
            ColumnOwner::Station {
                station,
                rep: gs.vehicle,
            }
        } else {
            return Err(AssignmentError::UnknownVehicle(gs.vehicle));
        };
        for (key, plan) in &gs.groups {
            // an unused station vehicle simply stays parked
            if key.is_empty() && matches!(owner, ColumnOwner::Station { .. }) {
                continue;
            }
            columns.push(Column {
                owner,
                key: key.clone(),
                cost: plan.cost,
            });
        }
    }

    let mut requests: Vec<RequestId> = waiting.iter().map(|r| r.id).collect();
    requests.sort();
    requests.dedup();
    if let Some(penalty) = reject_penalty {
        for &r in &requests {
            columns.push(Column {
                owner: ColumnOwner::Reject(r),
                key: GroupKey(vec![r]),
                cost: penalty,
            });
        }
    }

    let row_of: BTreeMap<RequestId, usize> =
        requests.iter().enumerate().map(|(i, r)| (*r, i)).collect();
    let mut cover: Vec<Vec<usize>> = vec![Vec::new(); requests.len()];
    let mut by_vehicle: BTreeMap<VehicleId, Vec<usize>> = BTreeMap::new();
    let mut by_station: BTreeMap<StationId, Vec<usize>> = BTreeMap::new();
    for (j, col) in columns.iter().enumerate() {
        for id in &col.key.0 {
            if let Some(&i) = row_of.get(id) {
                cover[i].push(j);
            }
        }
        match col.owner {
            ColumnOwner::Vehicle(v) => by_vehicle.entry(v).or_default().push(j),
            ColumnOwner::Station { station, .. } => by_station.entry(station).or_default().push(j),
            ColumnOwner::Reject(_) => {}
        }
    }
    if let Some(i) = cover.iter().position(|c| c.is_empty()) {
        return Err(AssignmentError::Uncoverable(requests[i]));
    }

    let mut rows = Vec::new();
    for v in &vehicles {
        rows.push(Row {
            cols: by_vehicle.remove(v).unwrap_or_default(),
            sense: RowSense::Eq,
            rhs: 1.0,
        });
    }
    for (s, stock) in &stations {
        rows.push(Row {
            cols: by_station.remove(s).unwrap_or_default(),
            sense: RowSense::Le,
            rhs: *stock as f64,
        });
    }
    for cols in cover {
        rows.push(Row {
            cols,
            sense: RowSense::Eq,
            rhs: 1.0,
        });
    }
    let program = BinaryProgram {
        costs: columns.iter().map(|c| c.cost as f64).collect(),
        rows,
    };
    Ok(AssignmentProblem {
        columns,
        vehicles,
        stations,
        requests,
        program,
    })
}

impl AssignmentProblem {
    /// Index of the column for `owner` and `key`, if present.
    pub fn column(&self, owner: ColumnOwner, key: &GroupKey) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.owner == owner && &c.key == key)
    }

    /// Write the program in CPLEX LP format.
    pub fn write_lp<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "\\ vehicle-group assignment")?;
        writeln!(w, "Minimize")?;
        write!(w, " obj:")?;
        for (j, c) in self.columns.iter().enumerate() {
            write!(w, " + {} x{}", c.cost, j)?;
        }
        writeln!(w)?;
        writeln!(w, "Subject To")?;
        let names = self
            .vehicles
            .iter()
            .map(|v| format!("veh_{}", v.0))
            .chain(self.stations.iter().map(|(s, _)| format!("stn_{}", s.0)))
            .chain(self.requests.iter().map(|r| format!("req_{}", r.0)));
        for (row, name) in self.program.rows.iter().zip(names) {
            write!(w, " {name}:")?;
            for j in &row.cols {
                write!(w, " + x{j}")?;
            }
            let op = match row.sense {
                RowSense::Eq => "=",
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
            };
            writeln!(w, " {op} {}", row.rhs)?;
        }
        writeln!(w, "Binary")?;
        for j in 0..self.columns.len() {
            writeln!(w, " x{j}")?;
        }
        writeln!(w, "End")
    }
}

/// Branch-and-bound over the columns. `hint` is an optional starting
/// selection, e.g. the insertion heuristic's answer.
pub fn solve(
    problem: &AssignmentProblem,
    opts: &SolveOptions,
    hint: Option<&[usize]>,
) -> Result<AssignmentSolution, AssignmentError> {
    let started = Instant::now();
    let res = bnb::solve(
        &problem.program,
        &BnbOptions {
            gap: opts.gap,
            time_budget: opts.time_budget,
            integral_costs: true,
        },
        hint,
    );
    if res.status == BnbStatus::Infeasible {
        return Err(AssignmentError::Infeasible);
    }
    let objective: Millimetres = res.selection.iter().map(|&j| problem.columns[j].cost).sum();
    Ok(AssignmentSolution {
        chosen: res.selection.clone(),
        objective,
        lower_bound: res.bound,
        gap: res.gap(),
        status: res.status,
        nodes: res.nodes,
        wall_ms: started.elapsed().as_secs_f64() * 1000.0,
    })
}

/// Plans selected by the solution: one per active vehicle, one per dispatched
/// parked vehicle, plus the requests left unserved through reject columns.
pub fn extract_plans(
    problem: &AssignmentProblem,
    solution: &AssignmentSolution,
    groupsets: &[FeasibleGroupSet],
    fleet: &FleetSnapshot,
) -> (Vec<Assignment>, Vec<RequestId>) {
    let sets: BTreeMap<VehicleId, &FeasibleGroupSet> =
        groupsets.iter().map(|g| (g.vehicle, g)).collect();
    let plan_of = |v: VehicleId, key: &GroupKey| -> Plan { sets[&v].groups[key].clone() };
    let mut chosen = solution.chosen.clone();
    chosen.sort_by(|&a, &b| {
        let (ca, cb) = (&problem.columns[a], &problem.columns[b]);
        (ca.owner, &ca.key).cmp(&(cb.owner, &cb.key))
    });
    let mut next_parked: BTreeMap<StationId, usize> = BTreeMap::new();
    let mut out = Vec::new();
    let mut rejected = Vec::new();
    for j in chosen {
        let col = &problem.columns[j];
        match col.owner {
            ColumnOwner::Vehicle(v) => out.push(Assignment {
                vehicle: v,
                plan: plan_of(v, &col.key),
                from_station: None,
            }),
            ColumnOwner::Station { station, rep } => {
                let stock = fleet
                    .stations
                    .iter()
                    .find(|s| s.station == station)
                    .expect("station column refers to a known station");
                let k = next_parked.entry(station).or_insert(0);
                let vehicle = stock.parked[*k];
                *k += 1;
                let mut plan = plan_of(rep, &col.key);
                plan.vehicle = vehicle;
                out.push(Assignment {
                    vehicle,
                    plan,
                    from_station: Some(station),
                });
            }
            ColumnOwner::Reject(r) => rejected.push(r),
        }
    }
    out.sort_by_key(|a| a.vehicle);
    rejected.sort();
    (out, rejected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::StationStock;
    use crate::groupgen::{generate_groups, GroupGenOptions};
    use crate::model::VehicleState;
    use crate::network::{NodeId, RoadNetwork};
    use crate::svdarp::SearchParams;

    fn opts() -> GroupGenOptions {
        GroupGenOptions {
            search: SearchParams::exact(120),
            budget: None,
        }
    }

    #[test]
    fn one_vehicle_one_request() {
        let net = RoadNetwork::grid(4, 1, 100.0, 36.0);
        let r = Request::new(&net, RequestId(1), 0, NodeId(1), NodeId(3)).unwrap();
        let v = VehicleState::idle(VehicleId(0), NodeId(0), 0, 2);
        let fleet = FleetSnapshot {
            now: 0,
            capacity: 2,
            active: vec![v.clone()],
            stations: vec![],
        };
        let gs = vec![generate_groups(&net, &v, &[r], 0, &opts())];
        let p = build_problem(&gs, &fleet, &[r], None).unwrap();
        assert_eq!(p.columns.len(), 2);
        assert_eq!(p.program.rows.len(), 2);
        let s = solve(&p, &SolveOptions::default(), None).unwrap();
        assert_eq!(s.objective, 300_000);
        assert_eq!(s.gap, 0.0);
        let (plans, rejected) = extract_plans(&p, &s, &gs, &fleet);
        assert!(rejected.is_empty());
        assert_eq!(plans.len(), 1);
        assert_eq!(plans[0].plan.picked_up().count(), 1);
    }

    #[test]
    fn station_columns_dispatch_distinct_vehicles() {
        let net = RoadNetwork::grid(6, 1, 100.0, 36.0);
        let a = Request::new(&net, RequestId(1), 0, NodeId(0), NodeId(5)).unwrap();
        let b = Request::new(&net, RequestId(2), 0, NodeId(0), NodeId(5)).unwrap();
        let fleet = FleetSnapshot {
            now: 0,
            capacity: 1,
            active: vec![],
            stations: vec![StationStock {
                station: StationId(4),
                node: NodeId(0),
                parked: vec![VehicleId(2), VehicleId(7), VehicleId(9)],
            }],
        };
        let rep = fleet.representative(&fleet.stations[0]).unwrap();
        let gs = vec![generate_groups(&net, &rep, &[a, b], 0, &opts())];
        let p = build_problem(&gs, &fleet, &[a, b], None).unwrap();
        assert_eq!(p.program.rows[0].rhs, 3.0);
        assert!(p.columns.iter().all(|c| !c.key.is_empty()));
        let s = solve(&p, &SolveOptions::default(), None).unwrap();
        let (plans, _) = extract_plans(&p, &s, &gs, &fleet);
        let ids: Vec<VehicleId> = plans.iter().map(|a| a.vehicle).collect();
        assert_eq!(ids, vec![VehicleId(2), VehicleId(7)]);
        assert!(plans.iter().all(|a| a.plan.vehicle == a.vehicle));
    }

    #[test]
    fn uncoverable_request_is_named() {
        let net = RoadNetwork::grid(3, 1, 100.0, 36.0);
        let r = Request::new(&net, RequestId(5), 0, NodeId(1), NodeId(2)).unwrap();
        let fleet = FleetSnapshot {
            now: 0,
            capacity: 2,
            active: vec![],
            stations: vec![],
        };
        assert_eq!(
            build_problem(&[], &fleet, &[r], None),
            Err(AssignmentError::Uncoverable(RequestId(5)))
        );
        let p = build_problem(&[], &fleet, &[r], Some(1_000_000)).unwrap();
        let s = solve(&p, &SolveOptions::default(), None).unwrap();
        let (_, rejected) = extract_plans(&p, &s, &[], &fleet);
        assert_eq!(rejected, vec![RequestId(5)]);
    }

    #[test]
    fn lp_dump_lists_every_row() {
        let net = RoadNetwork::grid(4, 1, 100.0, 36.0);
        let r = Request::new(&net, RequestId(1), 0, NodeId(1), NodeId(3)).unwrap();
        let v = VehicleState::idle(VehicleId(0), NodeId(0), 0, 2);
        let fleet = FleetSnapshot {
            now: 0,
            capacity: 2,
            active: vec![v.clone()],
            stations: vec![],
        };
        let gs = vec![generate_groups(&net, &v, &[r], 0, &opts())];
        let p = build_problem(&gs, &fleet, &[r], None).unwrap();
        let mut buf = Vec::new();
        p.write_lp(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains(" veh_0: + x0 + x1 = 1"));
        assert!(text.contains(" req_1: + x1 = 1"));
        assert!(text.trim_end().ends_with("End"));
    }
}
