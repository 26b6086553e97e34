//! Merging finished runs into comparison tables and plot-ready CSV files.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ridepool::simulator::{MetricsReport, TimingReport};
use serde::Deserialize;

use crate::commands::RunManifest;
use crate::{CliError, CliResult, ReportArgs};

struct RunData {
    label: String,
    dir: PathBuf,
    metrics: MetricsReport,
    timing: Option<TimingReport>,
    capacity: Option<u32>,
    /// Configured horizon; unknown when the run has no manifest.
    horizon: Option<Option<i64>>,
    edges: Option<Vec<EdgeRow>>,
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    from: u64,
    to: u64,
    length_m: f64,
    density_veh_per_m: f64,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_optional_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Option<T>> {
    if path.exists() {
        read_json(path).map(Some)
    } else {
        Ok(None)
    }
}

fn load_run(dir: &Path) -> CliResult<RunData> {
    let metrics: MetricsReport = read_json(&dir.join("metrics.json"))?;
    let timing = read_optional_json(&dir.join("timing.json"))?;
    let manifest: Option<RunManifest> = read_optional_json(&dir.join("manifest.json"))?;
    let edge_path = dir.join("edge_density.csv");
    let edges = if edge_path.exists() {
        let mut rdr = csv::Reader::from_path(&edge_path)
            .map_err(|e| CliError::Data(format!("{}: {e}", edge_path.display())))?;
        let rows = rdr
            .deserialize()
            .collect::<Result<Vec<EdgeRow>, _>>()
            .map_err(|e| CliError::Data(format!("{}: {e}", edge_path.display())))?;
        Some(rows)
    } else {
        None
    };
    let label = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| metrics.dispatcher.clone());
    Ok(RunData {
        label,
        dir: dir.to_path_buf(),
        metrics,
        timing,
        capacity: manifest.as_ref().map(|m| m.config.capacity),
        horizon: manifest.as_ref().map(|m| m.config.horizon_s),
        edges,
    })
}

/// Percentage by which `x` undercuts `base`; `None` when the base is zero.
pub fn reduction_pct(base: f64, x: f64) -> Option<f64> {
    (base != 0.0).then(|| (base - x) / base * 100.0)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?)
}

fn finish(mut w: csv::Writer<fs::File>, name: &str) -> CliResult<()> {
    w.flush().with_context(|| format!("writing {name}"))?;
    Ok(())
}

fn private_cars(r: &RunData) -> bool {
    r.metrics.dispatcher == "none"
}

fn optimal_cell(r: &RunData) -> &'static str {
    if private_cars(r) || r.capacity == Some(1) {
        "-"
    } else if r.metrics.dispatcher == "vga" {
        "yes"
    } else {
        "no"
    }
}

pub fn report(args: &ReportArgs) -> CliResult<()> {
    if args.runs.is_empty() {
        return Err(CliError::Config(
            "report needs at least one run directory".into(),
        ));
    }
    let mut runs = args
        .runs
        .iter()
        .map(|d| load_run(d))
        .collect::<CliResult<Vec<_>>>()?;

    // Runs without a horizon end when the last vehicle parks, so only the
    // configured window (warm-up and horizon) has to agree.
    let first = &runs[0];
    let describe = |r: &RunData| match r.horizon {
        Some(Some(h)) => format!("[{}, {}] s", r.metrics.window_start_s, h),
        Some(None) => format!("[{}, end of service]", r.metrics.window_start_s),
        None => format!("[{}, ?]", r.metrics.window_start_s),
    };
    for r in &runs[1..] {
        let horizons_differ = matches!((first.horizon, r.horizon), (Some(a), Some(b)) if a != b);
        if r.metrics.window_start_s != first.metrics.window_start_s || horizons_differ {
            return Err(CliError::Config(format!(
                "mismatched scenario windows: {} covers {} but {} covers {}",
                first.dir.display(),
                describe(first),
                r.dir.display(),
                describe(r)
            )));
        }
    }
    let bins: BTreeSet<i64> = runs.iter().map(|r| r.metrics.delay_bin_s).collect();
    if bins.len() > 1 {
        return Err(CliError::Config(format!(
            "runs use different delay bin widths: {bins:?}"
        )));
    }
    // repeated directory names get a numeric suffix
    let mut seen = BTreeSet::new();
    for (i, r) in runs.iter_mut().enumerate() {
        if !seen.insert(r.label.clone()) {
            r.label = format!("{}#{}", r.label, i + 1);
            seen.insert(r.label.clone());
        }
    }

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_table(&runs, &args.out.join("table.csv"))?;
    write_comparison(&runs, &args.out.join("comparison.csv"))?;
    write_delay_histogram(&runs, &args.out.join("delay_histogram.csv"))?;
    write_occupancy(&runs, &args.out.join("occupancy.csv"))?;
    write_density_map(&runs, &args.out.join("edge_density.csv"))?;
    println!("merged {} run(s) into {}", runs.len(), args.out.display());
    Ok(())
}

/// Metrics as rows, runs as columns.
fn write_table(runs: &[RunData], path: &Path) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["metric".to_string()];
    header.extend(runs.iter().map(|r| r.label.clone()));
    w.write_record(&header).context("writing table.csv")?;
    type Cell = fn(&RunData) -> String;
    let rows: [(&str, Cell); 8] = [
        ("Optimal", |r| optimal_cell(r).to_string()),
        ("Total veh. dist. (km)", |r| {
            format!("{:.3}", r.metrics.total_distance_km)
        }),
        ("Avg. delay (s)", |r| {
            if private_cars(r) {
                "-".into()
            } else {
                format!("{:.1}", r.metrics.avg_delay_s)
            }
        }),
        ("Avg. density (veh/km)", |r| {
            format!("{:.4}", r.metrics.avg_density_veh_per_km)
        }),
        ("Congested seg.", |r| {
            r.metrics.congested_segments.to_string()
        }),
        ("Heavily loaded seg.", |r| {
            r.metrics.heavy_segments.to_string()
        }),
        ("Used Vehicles", |r| {
            if private_cars(r) {
                "-".into()
            } else {
                r.metrics.used_vehicles.to_string()
            }
        }),
        ("Avg. comp. time (ms)", |r| match &r.timing {
            Some(t) if !private_cars(r) => format!("{:.1}", t.dispatch_ms_mean),
            _ => "-".into(),
        }),
    ];
    for (name, cell) in rows {
        let mut rec = vec![name.to_string()];
        rec.extend(runs.iter().map(cell));
        w.write_record(&rec).context("writing table.csv")?;
    }
    finish(w, "table.csv")
}

/// One row per run. Reductions are relative to the first run listed and
/// use the full-precision values from each metrics file.
fn write_comparison(runs: &[RunData], path: &Path) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "run",
        "dispatcher",
        "window_start_s",
        "window_end_s",
        "announced",
        "served",
        "rejected",
        "total_distance_km",
        "distance_reduction_pct",
        "avg_delay_s",
        "avg_delay_reduction_pct",
        "avg_density_veh_per_km",
        "congested_segments",
        "heavy_segments",
        "used_vehicles",
        "mean_occupancy",
        "dispatch_ms_mean",
    ])
    .context("writing comparison.csv")?;
    let base = &runs[0].metrics;
    for r in runs {
        let m = &r.metrics;
        w.write_record([
            r.label.clone(),
            m.dispatcher.clone(),
            m.window_start_s.to_string(),
            m.window_end_s.to_string(),
            m.announced.to_string(),
            m.served.to_string(),
            m.rejected.to_string(),
            m.total_distance_km.to_string(),
            opt(reduction_pct(base.total_distance_km, m.total_distance_km)),
            m.avg_delay_s.to_string(),
            opt(reduction_pct(base.avg_delay_s, m.avg_delay_s)),
            m.avg_density_veh_per_km.to_string(),
            m.congested_segments.to_string(),
            m.heavy_segments.to_string(),
            m.used_vehicles.to_string(),
            m.mean_occupancy.to_string(),
            opt(r.timing.as_ref().map(|t| t.dispatch_ms_mean)),
        ])
        .context("writing comparison.csv")?;
    }
    finish(w, "comparison.csv")
}

fn write_delay_histogram(runs: &[RunData], path: &Path) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["run", "bin_start_s", "bin_end_s", "count", "share"])
        .context("writing delay_histogram.csv")?;
    for r in runs {
        let width = r.metrics.delay_bin_s;
        let total: u64 = r.metrics.delay_histogram.iter().sum();
        for (i, &c) in r.metrics.delay_histogram.iter().enumerate() {
            let share = if total > 0 {
                c as f64 / total as f64
            } else {
                0.0
            };
            w.write_record([
                r.label.clone(),
                (i as i64 * width).to_string(),
                ((i as i64 + 1) * width).to_string(),
                c.to_string(),
                share.to_string(),
            ])
            .context("writing delay_histogram.csv")?;
        }
    }
    finish(w, "delay_histogram.csv")
}

fn write_occupancy(runs: &[RunData], path: &Path) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["run", "occupancy", "distance_km", "share"])
        .context("writing occupancy.csv")?;
    for r in runs {
        let total: f64 = r.metrics.occupancy_km.iter().sum();
        for (k, &km) in r.metrics.occupancy_km.iter().enumerate() {
            let share = if total > 0.0 { km / total } else { 0.0 };
            w.write_record([
                r.label.clone(),
                k.to_string(),
                km.to_string(),
                share.to_string(),
            ])
            .context("writing occupancy.csv")?;
        }
    }
    finish(w, "occupancy.csv")
}

/// Density per edge, one column per run that wrote edge densities.
fn write_density_map(runs: &[RunData], path: &Path) -> CliResult<()> {
    let with_edges: Vec<(&RunData, &Vec<EdgeRow>)> = runs
        .iter()
        .filter_map(|r| r.edges.as_ref().map(|e| (r, e)))
        .collect();
    let Some(&(first, reference)) = with_edges.first() else {
        return Ok(());
    };
    for &(r, edges) in &with_edges[1..] {
        let same = edges.len() == reference.len()
            && edges
                .iter()
                .zip(reference)
                .all(|(a, b)| (a.from, a.to) == (b.from, b.to));
        if !same {
            return Err(CliError::Config(format!(
                "{} and {} were run on different networks",
                first.dir.display(),
                r.dir.display()
            )));
        }
    }
    let mut w = csv_writer(path)?;
    let mut header = vec!["from".to_string(), "to".to_string(), "length_m".to_string()];
    header.extend(with_edges.iter().map(|(r, _)| r.label.clone()));
    w.write_record(&header)
        .context("writing edge_density.csv")?;
    for (i, e) in reference.iter().enumerate() {
        let mut rec = vec![e.from.to_string(), e.to.to_string(), e.length_m.to_string()];
        rec.extend(
            with_edges
                .iter()
                .map(|(_, edges)| edges[i].density_veh_per_m.to_string()),
        );
        w.write_record(&rec).context("writing edge_density.csv")?;
    }
    finish(w, "edge_density.csv")
}

#[cfg(test)]
mod tests {
    use super::reduction_pct;

    #[test]
    fn reduction_against_base() {
        assert_eq!(reduction_pct(200.0, 150.0), Some(25.0));
        assert_eq!(reduction_pct(100.0, 120.0), Some(-20.0));
        assert_eq!(reduction_pct(0.0, 5.0), None);
    }
}
