//! Fleet snapshot handed to the dispatchers and the plan updates they return.

use crate::model::{Plan, StationId, VehicleId, VehicleState};
use crate::network::{NodeId, Seconds};

/// Vehicles parked at one station, lowest id first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationStock {
    pub station: StationId,
    pub node: NodeId,
    pub parked: Vec<VehicleId>,
}

/// Immutable-by-convention view of the fleet at a batch boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FleetSnapshot {
    pub now: Seconds,
    pub capacity: u32,
    /// Vehicles not parked at a station (serving, returning, or idle en route).
    pub active: Vec<VehicleState>,
    pub stations: Vec<StationStock>,
}

impl FleetSnapshot {
    /// A parked vehicle standing in for every vehicle of its station.
    pub fn representative(&self, stock: &StationStock) -> Option<VehicleState> {
        let id = *stock.parked.first()?;
        Some(VehicleState {
            id,
            position: stock.node,
            ready_at: self.now,
            onboard: Vec::new(),
            plan: Vec::new(),
            capacity: self.capacity,
            station: Some(stock.station),
        })
    }

    /// Active vehicles plus one representative per non-empty station.
    pub fn candidates(&self) -> Vec<VehicleState> {
        let mut out = self.active.clone();
        out.extend(self.stations.iter().filter_map(|s| self.representative(s)));
        out
    }

    /// Move a parked vehicle into the active set. Returns its station, or
    /// `None` if the vehicle was already active.
    pub fn activate(&mut self, id: VehicleId) -> Option<StationId> {
        if self.active.iter().any(|v| v.id == id) {
            return None;
        }
        let stock = self
            .stations
            .iter_mut()
            .find(|s| s.parked.contains(&id))
            .expect("vehicle is either active or parked");
        stock.parked.retain(|v| *v != id);
        let station = stock.station;
        let node = stock.node;
        self.active.push(VehicleState {
            id,
            position: node,
            ready_at: self.now,
            onboard: Vec::new(),
            plan: Vec::new(),
            capacity: self.capacity,
            station: Some(station),
        });
        Some(station)
    }

    pub fn parked_count(&self) -> usize {
        self.stations.iter().map(|s| s.parked.len()).sum()
    }
}

/// New plan for one vehicle. `from_station` is set when a parked vehicle is
/// dispatched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub vehicle: VehicleId,
    pub plan: Plan,
    pub from_station: Option<StationId>,
}
