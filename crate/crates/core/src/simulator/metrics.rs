use serde::{Deserialize, Serialize};

use crate::network::{mm_to_metres, RoadNetwork, Seconds};

/// Density above which a segment counts as congested, vehicles per metre.
pub const CRITICAL_DENSITY: f64 = 0.08;
/// Density above which a segment counts as heavily loaded.
pub const HEAVY_DENSITY: f64 = 0.04;

/// Width of the delay histogram bins.
pub const DELAY_BIN_S: Seconds = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    /// Length-weighted mean over all segments, vehicles per kilometre.
    pub avg_density_veh_per_km: f64,
    pub congested_segments: usize,
    pub heavy_segments: usize,
    /// Per-edge density in vehicles per metre, indexed like the network edges.
    #[serde(skip)]
    pub per_edge: Vec<f64>,
}

/// Per-segment density = vehicle-seconds / (window × length).
pub fn density_metrics(
    vehicle_seconds: &[f64],
    window: Seconds,
    net: &RoadNetwork,
) -> DensitySummary {
    let mut per_edge = Vec::with_capacity(net.edge_count());
    let mut weighted = 0.0;
    let mut total_len = 0.0;
    let mut congested = 0;
    let mut heavy = 0;
    for (i, e) in net.edges().iter().enumerate() {
        let len = mm_to_metres(e.length);
        let vs = vehicle_seconds.get(i).copied().unwrap_or(0.0);
        let d = if window > 0 {
            vs / (window as f64 * len)
        } else {
            0.0
        };
        if d > CRITICAL_DENSITY {
            congested += 1;
        }
        if d > HEAVY_DENSITY {
            heavy += 1;
        }
        weighted += d * len;
        total_len += len;
        per_edge.push(d);
    }
    DensitySummary {
        avg_density_veh_per_km: if total_len > 0.0 {
            weighted / total_len * 1000.0
        } else {
            0.0
        },
        congested_segments: congested,
        heavy_segments: heavy,
        per_edge,
    }
}

/// Deterministic simulation summary over the analysis window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dispatcher: String,
    pub window_start_s: Seconds,
    pub window_end_s: Seconds,
    pub fleet_size: usize,
    pub announced: usize,
    pub served: usize,
    pub rejected: usize,
    pub active_at_end: usize,
    pub total_distance_km: f64,
    /// Per-vehicle odometer sum.
    pub total_distance_mm: u64,
    /// Per-edge traversal counts times edge length.
    pub edge_distance_mm: u64,
    pub rebalancing_distance_km: f64,
    /// Empty driving back to a station after the last drop-off.
    pub return_distance_km: f64,
    pub rebalancing_trips: usize,
    /// Requests served whose announcement falls in the window.
    pub window_served: usize,
    pub avg_delay_s: f64,
    pub max_delay_s: Seconds,
    pub delay_bin_s: Seconds,
    pub delay_histogram: Vec<u64>,
    /// Kilometres driven with 0, 1, 2, … passengers aboard.
    pub occupancy_km: Vec<f64>,
    /// Distance-weighted passengers aboard, empty driving included.
    pub mean_occupancy: f64,
    pub avg_density_veh_per_km: f64,
    pub congested_segments: usize,
    pub heavy_segments: usize,
    pub used_vehicles: usize,
    pub qmax_violations: usize,
    pub capacity_violations: usize,
    pub batches: usize,
    pub max_group_size: usize,
    pub mean_max_group_size: f64,
    pub max_gap: f64,
}

/// Wall-clock measurements, kept apart from the metrics so repeated runs
/// produce identical metrics files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub total_ms: f64,
    pub dispatch_ms_mean: f64,
    pub dispatch_ms_max: f64,
    pub groupgen_ms_mean: f64,
    pub groupgen_ms_max: f64,
    pub solver_ms_mean: f64,
    pub solver_ms_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayRecord {
    pub request: u64,
    pub announce_s: Seconds,
    pub pickup_s: Seconds,
    pub dropoff_s: Seconds,
    pub delay_s: Seconds,
    pub vehicle: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub t_s: Seconds,
    pub new: usize,
    pub waiting: usize,
    pub active_vehicles: usize,
    pub rejected: usize,
    pub max_group_size: usize,
    pub groupgen_ms: f64,
    pub solver_ms: f64,
    pub dispatch_ms: f64,
    pub gap: f64,
    pub objective_m: f64,
}

/// One completed edge traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Traversal {
    pub vehicle: u32,
    pub edge: usize,
    pub enter: Seconds,
    pub exit: Seconds,
    pub onboard: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_traffic() {
        let net = RoadNetwork::grid(3, 3, 100.0, 36.0);
        let d = density_metrics(&[], 3600, &net);
        assert_eq!(d.avg_density_veh_per_km, 0.0);
        assert_eq!(d.congested_segments + d.heavy_segments, 0);
    }

    #[test]
    fn one_vehicle_on_one_segment() {
        let net = RoadNetwork::grid(2, 1, 100.0, 36.0);
        let d = density_metrics(&[3600.0, 0.0], 3600, &net);
        assert!((d.per_edge[0] - 0.01).abs() < 1e-12);
        assert_eq!(d.congested_segments, 0);
        // two equal-length edges
        assert!((d.avg_density_veh_per_km - 5.0).abs() < 1e-9);
    }

    #[test]
    fn thresholds_are_strict() {
        let net = RoadNetwork::grid(2, 1, 100.0, 36.0);
        let d = density_metrics(&[8.0 * 100.0 + 1.0, 4.0 * 100.0], 100, &net);
        assert_eq!(d.congested_segments, 1);
        assert_eq!(d.heavy_segments, 1);
    }
}
