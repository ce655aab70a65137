//! `dmimo` — command-line front end for the D-MIMO indoor radio simulator.
//!
//! Subcommands:
//! - `scene validate` checks a configuration file
//! - `trace` builds the ray-traced channel database (plus coherence report)
//! - `synth` derives the Rayleigh database from the RT database
//! - `eval` runs a scenario and exports result tables
//! - `report` re-aggregates an existing metrics CSV into distributions
//!
//! Exit codes: 0 success, 1 configuration/usage error, 2 runtime error.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use dmimo_core::chanmodel::{load_database, save_database, ChannelModel};
use dmimo_core::harness::{
    self, database_path, ensure_rt_database, export_results, run_scenario, ScenarioConfig,
};
use dmimo_core::metrics::aggregate;
use dmimo_core::scene::{load_config, SceneError, SimConfig};

#[derive(Parser)]
#[command(
    name = "dmimo",
    version,
    about = "Distributed-MIMO indoor radio simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scene and deployment utilities
    Scene {
        #[command(subcommand)]
        action: SceneAction,
    },
    /// Build the ray-traced channel database and coherence report
    Trace(TraceArgs),
    /// Synthesize the Rayleigh database from an existing RT database
    Synth(TraceArgs),
    /// Run a scenario and export metrics, distributions, and the capacity map
    Eval(EvalArgs),
    /// Aggregate an existing metrics CSV into distribution tables
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum SceneAction {
    /// Parse and validate a configuration file
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    config: PathBuf,
    /// Global seed (defaults to the config's run.seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for databases and reports
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Named deployment set from the config (e.g. "3ap")
    #[arg(long)]
    deployment: Option<String>,
    /// Transmit power strategy: per-ap | network
    #[arg(long, value_parser = ["per-ap", "network"])]
    tx_model: Option<String>,
    /// Transmit power level in dBm (reinterprets the config level)
    #[arg(long)]
    tx_power_dbm: Option<f64>,
    /// Channel model: rt | rayleigh
    #[arg(long, value_parser = ["rt", "rayleigh"])]
    channel: Option<String>,
    /// Link direction for the capacity map: dl | ul
    #[arg(long, value_parser = ["dl", "ul"])]
    link: Option<String>,
    /// DL precoder: zf | svd
    #[arg(long, value_parser = ["zf", "svd"])]
    precoder: Option<String>,
    /// Number of spatial layers
    #[arg(long)]
    layers: Option<usize>,
    /// Cooperation pair "a,b": b APs serve among a candidates
    #[arg(long, value_parser = parse_coop)]
    coop: Option<(usize, usize)>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Existing metrics CSV produced by `eval`
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_coop(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected \"a,b\"".into());
    }
    let a: usize = parts[0]
        .trim()
        .parse()
        .map_err(|_| "a must be an integer".to_string())?;
    let b: usize = parts[1]
        .trim()
        .parse()
        .map_err(|_| "b must be an integer".to_string())?;
    Ok((a, b))
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::Scene { action } => scene_command(action),
        Command::Trace(args) => trace_command(args),
        Command::Synth(args) => synth_command(args),
        Command::Eval(args) => eval_command(args),
        Command::Report(args) => report_command(args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            1
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<dmimo_core::harness::HarnessError> for CliError {
    fn from(e: dmimo_core::harness::HarnessError) -> Self {
        use dmimo_core::harness::HarnessError as H;
        match e {
            H::Config(msg) => CliError::Config(msg),
            H::Scene(e) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<dmimo_core::chanmodel::ChanError> for CliError {
    fn from(e: dmimo_core::chanmodel::ChanError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn scene_command(action: SceneAction) -> Result<(), CliError> {
    match action {
        SceneAction::Validate { config } => {
            let sim = load_config(&config)?;
            let scene = &sim.scene;
            println!("scene '{}' is valid", scene.name);
            println!(
                "  bounds: {:.1} x {:.1} x {:.1} m, {} obstacles",
                scene.bounds.max.x - scene.bounds.min.x,
                scene.bounds.max.y - scene.bounds.min.y,
                scene.bounds.max.z - scene.bounds.min.z,
                scene.obstacles.len()
            );
            println!(
                "  radio: {:.3} GHz, {:.1} MHz, {} RBs x {} subcarriers",
                scene.carrier_hz / 1e9,
                scene.bandwidth_hz / 1e6,
                scene.rb_count,
                scene.subcarriers_per_rb
            );
            println!(
                "  deployment: {} APs, {} UE positions, sets: {}",
                sim.deployment.aps.len(),
                sim.deployment.ue_grid.len(),
                sim.deployment_sets
                    .keys()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            Ok(())
        }
    }
}

fn trace_command(args: TraceArgs) -> Result<(), CliError> {
    let sim = load_config(&args.config)?;
    let seed = args.seed.unwrap_or(sim.run.seed);
    let db = ensure_rt_database(&sim, seed, &args.out)?;
    let report = args.out.join("coherence.csv");
    harness::write_coherence_report(&db, 0.9, &report)?;
    println!(
        "traced {} links into {}",
        db.entries.len(),
        database_path(&args.out, ChannelModel::Rt, seed).display()
    );
    println!("coherence report: {}", report.display());
    Ok(())
}

fn synth_command(args: TraceArgs) -> Result<(), CliError> {
    let sim = load_config(&args.config)?;
    let seed = args.seed.unwrap_or(sim.run.seed);
    let rt_path = database_path(&args.out, ChannelModel::Rt, seed);
    if !rt_path.exists() {
        return Err(CliError::Runtime(format!(
            "RT database {} not found; run `dmimo trace` first",
            rt_path.display()
        )));
    }
    let rt = load_database(&rt_path, Some(&sim.scene))?;
    let ray = harness::synthesize_database(&rt, seed);
    let out_path = database_path(&args.out, ChannelModel::Rayleigh, seed);
    save_database(&ray, &out_path)?;
    println!(
        "synthesized {} Rayleigh links into {}",
        ray.entries.len(),
        out_path.display()
    );
    Ok(())
}

fn apply_overrides(mut sim: SimConfig, args: &EvalArgs) -> Result<SimConfig, CliError> {
    if let Some(seed) = args.seed {
        sim.run.seed = seed;
    }
    if let Some(d) = &args.deployment {
        sim.run.deployment = Some(d.clone());
    }
    if let Some(ch) = &args.channel {
        sim.run.channel = ch.clone();
    }
    if let Some(l) = &args.link {
        sim.run.link = l.clone();
    }
    if let Some(p) = &args.precoder {
        sim.run.precoder = p.clone();
    }
    if let Some(layers) = args.layers {
        sim.run.layers = layers;
    }
    if let Some(coop) = args.coop {
        sim.run.coop = Some(coop);
    }
    use dmimo_core::scene::TxPowerModel;
    let level = args.tx_power_dbm.unwrap_or(match sim.tx_power {
        TxPowerModel::ConstantPerAp { level_dbm } => level_dbm,
        TxPowerModel::ConstantNetwork { level_dbm } => level_dbm,
    });
    sim.tx_power = match args.tx_model.as_deref() {
        Some("per-ap") => TxPowerModel::ConstantPerAp { level_dbm: level },
        Some("network") => TxPowerModel::ConstantNetwork { level_dbm: level },
        Some(other) => return Err(CliError::Config(format!("unknown tx model '{other}'"))),
        None => match sim.tx_power {
            TxPowerModel::ConstantPerAp { .. } => TxPowerModel::ConstantPerAp { level_dbm: level },
            TxPowerModel::ConstantNetwork { .. } => {
                TxPowerModel::ConstantNetwork { level_dbm: level }
            }
        },
    };
    Ok(sim)
}

fn eval_command(args: EvalArgs) -> Result<(), CliError> {
    let sim = apply_overrides(load_config(&args.config)?, &args)?;
    let cfg = ScenarioConfig::from_sim(sim)?;
    let db = ensure_rt_database(&cfg.sim, cfg.seed, &args.out)?;
    let result = run_scenario(&cfg, &db)?;
    export_results(&result, &args.out)?;
    println!(
        "evaluated {} UEs ({} candidate APs, {} serving), results in {}",
        result.rows.len(),
        cfg.candidate_aps.len(),
        cfg.serving_count.unwrap_or(cfg.candidate_aps.len()),
        args.out.display()
    );
    println!("config digest: {}", result.config_digest);
    Ok(())
}

fn report_command(args: ReportArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.metrics)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", args.metrics.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Runtime("metrics file is empty".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    let numeric = [
        "rsrp_best_dbm",
        "los_count",
        "detected_count",
        "rel2_db",
        "rel3_db",
        "rank",
        "cap_dl_zf",
        "cap_dl_svd",
        "cap_ul",
    ];
    let mut values: Vec<(usize, &str, Vec<f64>)> = numeric
        .iter()
        .filter_map(|name| {
            columns
                .iter()
                .position(|c| c == name)
                .map(|i| (i, *name, vec![]))
        })
        .collect();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        for (idx, name, vals) in &mut values {
            let field = fields.get(*idx).ok_or_else(|| {
                CliError::Runtime(format!("line {}: missing column {name}", lineno + 2))
            })?;
            let v: f64 = field.parse().map_err(|_| {
                CliError::Runtime(format!(
                    "line {}: bad value '{field}' for {name}",
                    lineno + 2
                ))
            })?;
            vals.push(v);
        }
    }
    std::fs::create_dir_all(&args.out)?;
    for (_, name, vals) in &values {
        let table =
            aggregate(vals).map_err(|e| CliError::Runtime(format!("column {name}: {e}")))?;
        let mut out = String::from("value,cdf,ccdf\n");
        for (v, cdf, ccdf) in table.points() {
            out.push_str(&format!("{v:.6},{cdf:.6},{ccdf:.6}\n"));
        }
        write(&args.out.join(format!("dist_{name}.csv")), out.as_bytes())?;
        println!(
            "dist_{name}.csv: n = {}, median = {:.6}",
            table.len(),
            table.median()
        );
    }
    Ok(())
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)?;
    Ok(())
}
