use std::fs;
use std::io;
use std::path::Path;

use crate::network::{mm_to_metres, RoadNetwork};

use super::SimulationResult;

/// Which files `write_outputs` produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputSelection {
    pub delays: bool,
    pub occupancy: bool,
    pub edge_density: bool,
    pub batch_log: bool,
}

impl Default for OutputSelection {
    fn default() -> Self {
        Self {
            delays: true,
            occupancy: true,
            edge_density: true,
            batch_log: true,
        }
    }
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Write `metrics.json`, `timing.json` and the selected CSV files into `dir`.
pub fn write_outputs(
    dir: &Path,
    net: &RoadNetwork,
    res: &SimulationResult,
    which: OutputSelection,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(&res.metrics).map_err(io::Error::other)?;
    fs::write(dir.join("metrics.json"), json + "\n")?;
    let json = serde_json::to_string_pretty(&res.timing).map_err(io::Error::other)?;
    fs::write(dir.join("timing.json"), json + "\n")?;

    if which.delays {
        let mut w = csv::Writer::from_path(dir.join("delays.csv")).map_err(csv_err)?;
        let mut rows = res.delays.clone();
        rows.sort_by_key(|d| d.request);
        for d in &rows {
            w.serialize(d).map_err(csv_err)?;
        }
        w.flush()?;
    }
    if which.occupancy {
        let mut w = csv::Writer::from_path(dir.join("occupancy.csv")).map_err(csv_err)?;
        w.write_record(["occupancy", "distance_km", "share"])
            .map_err(csv_err)?;
        let total: f64 = res.metrics.occupancy_km.iter().sum();
        for (k, km) in res.metrics.occupancy_km.iter().enumerate() {
            let share = if total > 0.0 { km / total } else { 0.0 };
            w.write_record([k.to_string(), km.to_string(), share.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
    }
    if which.edge_density {
        let mut w = csv::Writer::from_path(dir.join("edge_density.csv")).map_err(csv_err)?;
        w.write_record([
            "from",
            "to",
            "length_m",
            "traversals",
            "vehicle_seconds",
            "density_veh_per_m",
            "heavy",
            "congested",
        ])
        .map_err(csv_err)?;
        for (i, e) in net.edges().iter().enumerate() {
            let d = res.density.per_edge.get(i).copied().unwrap_or(0.0);
            w.write_record([
                net.external_id(e.from).to_string(),
                net.external_id(e.to).to_string(),
                mm_to_metres(e.length).to_string(),
                res.edge_traversals[i].to_string(),
                res.edge_vehicle_seconds[i].to_string(),
                d.to_string(),
                (d > super::HEAVY_DENSITY).to_string(),
                (d > super::CRITICAL_DENSITY).to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
    }
    if which.batch_log {
        let mut w = csv::Writer::from_path(dir.join("batch_log.csv")).map_err(csv_err)?;
        for b in &res.batches {
            w.serialize(b).map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(())
}
