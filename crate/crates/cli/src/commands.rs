use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Context;
use ridepool::fleet::{
    load_stations, position_stations, size_fleet, write_stations, FleetError, Station,
    StationRecord,
};
use ridepool::model::{load_requests, write_requests, DispatcherKind, ScenarioConfig, StationId};
use ridepool::network::{NodeId, RoadNetwork};
use ridepool::simulator::{
    self, generate_synthetic_demand, no_ridesharing_shortages, OutputSelection, RunOptions,
    SimError,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult, DesignArgs, GenDemandArgs, GenGridArgs, RunArgs};

pub const VERSION: &str = concat!("ridepool-v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a command's outputs. Carries no
/// timestamps so identical invocations write identical manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub inputs: BTreeMap<String, InputFile>,
    #[serde(default)]
    pub options: BTreeMap<String, serde_json::Value>,
    pub out: String,
}

fn sha256_file(path: &Path) -> CliResult<InputFile> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    Ok(InputFile {
        path: path.display().to_string(),
        sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
    })
}

fn network_inputs(dir: &Path, inputs: &mut BTreeMap<String, InputFile>) -> CliResult<()> {
    inputs.insert("nodes".into(), sha256_file(&dir.join("nodes.csv"))?);
    inputs.insert("edges".into(), sha256_file(&dir.join("edges.csv"))?);
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).context("serialising json")?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Dispatcher defaults, overlaid with the keys present in `path`. The
/// dispatcher itself always comes from `kind`.
pub fn load_config(path: Option<&Path>, kind: DispatcherKind) -> CliResult<ScenarioConfig> {
    let mut merged = serde_json::to_value(ScenarioConfig::for_dispatcher(kind))
        .context("serialising defaults")?;
    if let Some(path) = path {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let overlay: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let serde_json::Value::Object(keys) = overlay else {
            return Err(CliError::Config(format!(
                "{}: expected a JSON object",
                path.display()
            )));
        };
        let base = merged
            .as_object_mut()
            .expect("config serialises as an object");
        for (k, v) in keys {
            base.insert(k, v);
        }
    }
    let mut cfg: ScenarioConfig = serde_json::from_value(merged).map_err(|e| {
        let file = path.map(|p| p.display().to_string()).unwrap_or_default();
        CliError::Config(format!("{file}: {e}"))
    })?;
    cfg.dispatcher = kind;
    cfg.validate().map_err(|e| CliError::Config(e.0))?;
    Ok(cfg)
}

fn load_network(dir: &Path) -> CliResult<RoadNetwork> {
    RoadNetwork::load(dir).map_err(|e| CliError::Data(e.to_string()))
}

fn load_request_file(net: &RoadNetwork, path: &Path) -> CliResult<Vec<ridepool::model::Request>> {
    load_requests(net, path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::Config(c) => CliError::Config(c.0),
        SimError::Data(m) => CliError::Data(m),
        other => CliError::Internal(other.into()),
    }
}

pub fn run(args: &RunArgs) -> CliResult<()> {
    let kind: DispatcherKind = args.dispatcher.into();
    let cfg = load_config(args.config.as_deref(), kind)?;
    let net = load_network(&args.network)?;
    let requests = load_request_file(&net, &args.requests)?;
    let records = load_stations(&args.stations).map_err(|e| CliError::Data(e.to_string()))?;
    let mut stations = Vec::with_capacity(records.len());
    for r in &records {
        let node = net.resolve(r.node).map_err(|e| {
            CliError::Data(format!(
                "{}: station {}: {e}",
                args.stations.display(),
                r.id
            ))
        })?;
        stations.push(Station::new(
            StationId(r.id),
            node,
            r.initial_stock,
            cfg.tau_fraction,
        ));
    }

    let res = simulator::run(&cfg, &net, &requests, &stations, &RunOptions::default())
        .map_err(sim_error)?;
    let which = OutputSelection {
        delays: !args.no_delays,
        occupancy: !args.no_occupancy,
        edge_density: !args.no_edge_density,
        batch_log: !args.no_batch_log,
    };
    simulator::write_outputs(&args.out, &net, &res, which)
        .with_context(|| format!("writing outputs to {}", args.out.display()))?;

    let mut inputs = BTreeMap::new();
    network_inputs(&args.network, &mut inputs)?;
    inputs.insert("requests".into(), sha256_file(&args.requests)?);
    inputs.insert("stations".into(), sha256_file(&args.stations)?);
    if let Some(c) = &args.config {
        inputs.insert("config".into(), sha256_file(c)?);
    }
    let options = [
        ("delays", which.delays),
        ("occupancy", which.occupancy),
        ("edge_density", which.edge_density),
        ("batch_log", which.batch_log),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.into()))
    .collect();
    let manifest = RunManifest {
        version: VERSION.into(),
        command: "run".into(),
        seed: cfg.seed,
        config: cfg,
        inputs,
        options,
        out: args.out.display().to_string(),
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    let m = &res.metrics;
    println!(
        "{}: {} requests, {} served, {} rejected, {:.3} km, avg delay {:.1} s",
        m.dispatcher, m.announced, m.served, m.rejected, m.total_distance_km, m.avg_delay_s
    );
    Ok(())
}

#[derive(Deserialize)]
struct CandidateRow {
    node: u64,
}

fn load_candidates(net: &RoadNetwork, path: &Path) -> CliResult<Vec<NodeId>> {
    let data = |e: String| CliError::Data(format!("{}: {e}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data(e.to_string()))?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<CandidateRow>() {
        let row = row.map_err(|e| data(e.to_string()))?;
        out.push(net.resolve(row.node).map_err(|e| data(e.to_string()))?);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct DesignSummary {
    reach_s: i64,
    step: f64,
    requests: usize,
    stations: usize,
    fleet_size: usize,
    /// Rejections one reduction step below the chosen fleet.
    next_shortages: Option<usize>,
    iterations: usize,
}

pub fn design(args: &DesignArgs) -> CliResult<()> {
    if args.reach_s < 0 {
        return Err(CliError::Config("--reach-s must be non-negative".into()));
    }
    let cfg = load_config(args.config.as_deref(), DispatcherKind::Ih)?;
    let net = load_network(&args.network)?;
    let requests = load_request_file(&net, &args.requests)?;
    let nodes: Vec<NodeId> = net.node_ids().collect();
    let candidates = match &args.candidates {
        Some(path) => load_candidates(&net, path)?,
        None => nodes.clone(),
    };
    let stations =
        position_stations(&net, &nodes, &candidates, args.reach_s).map_err(|e| match e {
            FleetError::Uncoverable(ids) => CliError::Uncoverable(format!(
                "{} node(s) not reachable from any station within {} s: {}",
                ids.len(),
                args.reach_s,
                ids.iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            )),
            other => CliError::Internal(other.into()),
        })?;

    let mut failure = None;
    let sizing =
        size_fleet(
            &net,
            &stations,
            &requests,
            args.step,
            |stocks| match no_ridesharing_shortages(&cfg, &net, &requests, &stations, stocks) {
                Ok(n) => n,
                Err(e) => {
                    failure.get_or_insert(e);
                    1
                }
            },
        )
        .map_err(|e| match e {
            FleetError::BadStep(_) => CliError::Config(e.to_string()),
            other => CliError::Internal(other.into()),
        })?;
    if let Some(e) = failure {
        return Err(sim_error(e));
    }

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let records: Vec<StationRecord> = stations
        .iter()
        .zip(&sizing.stocks)
        .enumerate()
        .map(|(i, (&node, &k))| StationRecord {
            id: i as u32,
            node: net.external_id(node),
            initial_stock: k,
        })
        .collect();
    let path = args.out.join("stations.csv");
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_stations(&records, file).context("writing stations.csv")?;

    let summary = DesignSummary {
        reach_s: args.reach_s,
        step: args.step,
        requests: requests.len(),
        stations: records.len(),
        fleet_size: sizing.stocks.iter().sum(),
        next_shortages: sizing.next_shortages,
        iterations: sizing.iterations,
    };
    write_json(&args.out.join("design.json"), &summary)?;

    let mut inputs = BTreeMap::new();
    network_inputs(&args.network, &mut inputs)?;
    inputs.insert("requests".into(), sha256_file(&args.requests)?);
    if let Some(c) = &args.candidates {
        inputs.insert("candidates".into(), sha256_file(c)?);
    }
    if let Some(c) = &args.config {
        inputs.insert("config".into(), sha256_file(c)?);
    }
    let options = BTreeMap::from([
        ("reach_s".to_string(), args.reach_s.into()),
        ("step".to_string(), args.step.into()),
    ]);
    let manifest = RunManifest {
        version: VERSION.into(),
        command: "design".into(),
        seed: cfg.seed,
        config: cfg,
        inputs,
        options,
        out: args.out.display().to_string(),
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    println!(
        "{} stations, {} vehicles",
        summary.stations, summary.fleet_size
    );
    Ok(())
}

pub fn gen_grid(args: &GenGridArgs) -> CliResult<()> {
    if args.cols == 0 || args.rows == 0 {
        return Err(CliError::Config(
            "grid needs at least one row and column".into(),
        ));
    }
    if !(args.spacing_m > 0.0) || !(args.speed_kmh > 0.0) {
        return Err(CliError::Config(
            "spacing and speed must be positive".into(),
        ));
    }
    let net = RoadNetwork::grid(args.cols, args.rows, args.spacing_m, args.speed_kmh);
    net.save(&args.out)
        .with_context(|| format!("writing network to {}", args.out.display()))?;
    Ok(())
}

pub fn gen_demand(args: &GenDemandArgs) -> CliResult<()> {
    if !(args.rate_per_hour >= 0.0) || args.duration_s < 0 {
        return Err(CliError::Config(
            "rate and duration must be non-negative".into(),
        ));
    }
    let net = load_network(&args.network)?;
    let requests =
        generate_synthetic_demand(&net, args.seed, args.rate_per_hour, args.duration_s, None);
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file =
        fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_requests(&net, &requests, file).context("writing requests")?;
    Ok(())
}
