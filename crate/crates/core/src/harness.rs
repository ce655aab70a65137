//! Scenario orchestration: builds channel databases, sweeps deployments,
//! evaluates per-UE metrics and capacities, and exports result tables.
//!
//! Per-UE work fans out to a rayon pool (capped by the `DMIMO_THREADS`
//! environment variable); rows are collected and sorted by UE id before
//! aggregation, so output bytes are independent of the worker count.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::chanmodel::assemble_rt_channel;
use crate::chanmodel::{
    coherence_bandwidth, save_database, stack_links, synthesize_rayleigh, ChanError,
    ChannelDatabase, ChannelModel, LinkChannel,
};
use crate::metrics::{
    aggregate, detection_stats, los_count, rsrp, select_aps, DistributionTable, MetricsError,
    UeMetricsRow,
};
use crate::mimo::{
    dl_capacity, stream_rank, ul_zf_capacity, ul_zf_capacity_waterfilled, MimoError, PrecoderKind,
};
use crate::rng::derive_key;
use crate::scene::{SceneError, SimConfig};
use crate::tracer::Tracer;
use crate::units::{dbm_to_mw, power_to_db, DB_FLOOR};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scenario configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("channel error for AP set {aps:?} / UE {ue}: {source}")]
    Channel {
        aps: Vec<u32>,
        ue: u32,
        #[source]
        source: ChanError,
    },
    #[error("MIMO processing failed for UE {ue}: {source}")]
    Mimo {
        ue: u32,
        #[source]
        source: MimoError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Uplink or downlink evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkDirection {
    Dl,
    Ul,
}

/// A fully resolved scenario: which APs compete, how many serve each UE,
/// and how the capacity column of the map is computed.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub sim: SimConfig,
    pub seed: u64,
    pub channel: ChannelModel,
    pub link: LinkDirection,
    pub precoder: PrecoderKind,
    pub layers: usize,
    /// Candidate AP ids (the deployment set under study).
    pub candidate_aps: Vec<u32>,
    /// Cooperation (a, b): `b` APs serve each UE among the `a` candidates.
    /// `None` means all candidates serve.
    pub serving_count: Option<usize>,
    /// UE transmit power per antenna over the whole band, dBm (UL).
    pub ue_tx_dbm_per_antenna: f64,
    /// Water-fill the UE sum power over the UL post-processing gains
    /// instead of the default uniform per-antenna split.
    pub ul_waterfill: bool,
    /// Per-antenna AP power for the stream-rank metric, dBm over the band.
    pub rank_power_dbm_per_antenna: f64,
    /// Stream-rank threshold, dBm per RB.
    pub rank_threshold_dbm_per_rb: f64,
    /// AP detection threshold on RSRP, dBm.
    pub detection_threshold_dbm: f64,
}

impl ScenarioConfig {
    /// Resolve a scenario from a parsed config file plus overrides.
    pub fn from_sim(sim: SimConfig) -> Result<ScenarioConfig, HarnessError> {
        let deployment_name = sim.run.deployment.clone();
        let candidate_aps = match &deployment_name {
            Some(name) => sim
                .deployment_sets
                .get(name)
                .cloned()
                .ok_or_else(|| HarnessError::Config(format!("unknown deployment '{name}'")))?,
            None => sim.deployment.aps.iter().map(|a| a.id).collect(),
        };
        let channel = match sim.run.channel.as_str() {
            "rt" => ChannelModel::Rt,
            "rayleigh" => ChannelModel::Rayleigh,
            other => {
                return Err(HarnessError::Config(format!(
                    "channel must be 'rt' or 'rayleigh', got '{other}'"
                )))
            }
        };
        let link = match sim.run.link.as_str() {
            "dl" => LinkDirection::Dl,
            "ul" => LinkDirection::Ul,
            other => {
                return Err(HarnessError::Config(format!(
                    "link must be 'dl' or 'ul', got '{other}'"
                )))
            }
        };
        let precoder = match sim.run.precoder.as_str() {
            "zf" => PrecoderKind::Zf,
            "svd" => PrecoderKind::Svd,
            other => {
                return Err(HarnessError::Config(format!(
                    "precoder must be 'zf' or 'svd', got '{other}'"
                )))
            }
        };
        let mut cfg = ScenarioConfig {
            seed: sim.run.seed,
            channel,
            link,
            precoder,
            layers: sim.run.layers,
            candidate_aps,
            serving_count: None,
            ue_tx_dbm_per_antenna: 17.0,
            ul_waterfill: false,
            rank_power_dbm_per_antenna: 17.0,
            rank_threshold_dbm_per_rb: -100.0,
            detection_threshold_dbm: -100.0,
            sim,
        };
        if let Some((a, b)) = cfg.sim.run.coop {
            cfg = cfg.with_coop(a, b)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply a cooperation pair (a, b): the candidate set is truncated to
    /// the first `a` deployed APs and `b` of them serve each UE.
    pub fn with_coop(mut self, a: usize, b: usize) -> Result<ScenarioConfig, HarnessError> {
        if b > a {
            return Err(HarnessError::Config(format!(
                "cooperation pair ({a},{b}): cannot activate more APs than available"
            )));
        }
        if a > self.candidate_aps.len() {
            return Err(HarnessError::Config(format!(
                "cooperation pair ({a},{b}): deployment has only {} APs",
                self.candidate_aps.len()
            )));
        }
        self.candidate_aps.truncate(a);
        self.serving_count = Some(b);
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.candidate_aps.is_empty() {
            return Err(HarnessError::Config("no candidate APs".into()));
        }
        for id in &self.candidate_aps {
            if self.sim.deployment.ap(*id).is_none() {
                return Err(HarnessError::Config(format!("AP id {id} is not deployed")));
            }
        }
        if let Some(b) = self.serving_count {
            if b == 0 || b > self.candidate_aps.len() {
                return Err(HarnessError::Config(format!(
                    "serving count {b} outside 1..={}",
                    self.candidate_aps.len()
                )));
            }
        }
        if self.layers == 0 {
            return Err(HarnessError::Config(
                "layer count must be at least 1".into(),
            ));
        }
        let ue_antennas = self
            .sim
            .deployment
            .ue_grid
            .first()
            .map(|u| u.array.element_count())
            .unwrap_or(0);
        if self.layers > ue_antennas {
            return Err(HarnessError::Config(format!(
                "{} layers exceed the {ue_antennas} UE antennas",
                self.layers
            )));
        }
        Ok(())
    }

    /// Canonical digest of the scenario (SHA-256 hex of the config echo).
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let echo = self.echo();
        let json = serde_json::to_string(&echo).expect("config echo serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        hex(&h.finalize())
    }

    /// Serializable summary of everything that affects the output.
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            scene: self.sim.scene.name.clone(),
            scene_digest: hex(&self.sim.scene.digest()),
            seed: self.seed,
            channel: match self.channel {
                ChannelModel::Rt => "rt",
                ChannelModel::Rayleigh => "rayleigh",
            }
            .into(),
            link: match self.link {
                LinkDirection::Dl => "dl",
                LinkDirection::Ul => "ul",
            }
            .into(),
            precoder: match self.precoder {
                PrecoderKind::Zf => "zf",
                PrecoderKind::Svd => "svd",
            }
            .into(),
            layers: self.layers,
            candidate_aps: self.candidate_aps.clone(),
            serving_count: self.serving_count,
            tx_power: format!("{:?}", self.sim.tx_power),
            noise_n0_dbm_per_rb: self.sim.noise.n0_dbm_per_rb,
            ue_tx_dbm_per_antenna: self.ue_tx_dbm_per_antenna,
            detection_threshold_dbm: self.detection_threshold_dbm,
            rank_threshold_dbm_per_rb: self.rank_threshold_dbm_per_rb,
            ul_waterfill: self.ul_waterfill,
            xpr_factor: self.sim.xpr.factor,
            xpr_offset_db: self.sim.xpr.offset,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub scene: String,
    pub scene_digest: String,
    pub seed: u64,
    pub channel: String,
    pub link: String,
    pub precoder: String,
    pub layers: usize,
    pub candidate_aps: Vec<u32>,
    pub serving_count: Option<usize>,
    pub tx_power: String,
    pub noise_n0_dbm_per_rb: f64,
    pub ue_tx_dbm_per_antenna: f64,
    pub detection_threshold_dbm: f64,
    pub rank_threshold_dbm_per_rb: f64,
    pub ul_waterfill: bool,
    pub xpr_factor: f64,
    pub xpr_offset_db: f64,
}

/// Everything a scenario run produces.
#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub config_digest: String,
    pub echo: ConfigEcho,
    pub rows: Vec<UeMetricsRow>,
    pub tables: BTreeMap<String, DistributionTable>,
    /// (x, y, bits/s/Hz) for the configured link/precoder.
    pub capacity_map: Vec<(f64, f64, f64)>,
}

/// Build a rayon pool sized by `DMIMO_THREADS` (unset or 0 = default).
fn worker_pool() -> rayon::ThreadPool {
    let threads = std::env::var("DMIMO_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("worker pool")
}

/// Trace every (deployed AP, UE) link of the configured scene and store
/// the single-AP RT channels. The database is keyed by the scene digest
/// and seed so sweeps across deployments and channel models reuse it.
pub fn build_rt_database(sim: &SimConfig, seed: u64) -> ChannelDatabase {
    use rayon::prelude::*;
    let tracer = Tracer::new(&sim.scene, sim.budget, sim.xpr, sim.prune_loss_db);
    let freqs = sim.scene.rb_center_frequencies();
    let jobs: Vec<(&crate::scene::ApNode, &crate::scene::UeNode)> = sim
        .deployment
        .aps
        .iter()
        .flat_map(|ap| sim.deployment.ue_grid.iter().map(move |ue| (ap, ue)))
        .collect();
    let entries: Vec<((u32, u32), LinkChannel)> = worker_pool().install(|| {
        jobs.par_iter()
            .map(|&(ap, ue)| {
                let link_seed = derive_key(seed, &[ap.id as u64, ue.id as u64]);
                let paths = tracer.trace_link(ap.position, ue.position, link_seed);
                let link = assemble_rt_channel(
                    &paths,
                    &ap.array,
                    &ue.array,
                    sim.scene.carrier_hz,
                    &freqs,
                    ap.id,
                    ue.id,
                );
                ((ap.id, ue.id), link)
            })
            .collect()
    });
    ChannelDatabase {
        scene_digest: sim.scene.digest(),
        model: ChannelModel::Rt,
        seed,
        carrier_hz: sim.scene.carrier_hz,
        entries: entries.into_iter().collect(),
    }
}

/// Derive the Rayleigh database from an RT database entry-by-entry.
pub fn synthesize_database(rt: &ChannelDatabase, seed: u64) -> ChannelDatabase {
    let entries = rt
        .entries
        .iter()
        .map(|(&k, link)| (k, synthesize_rayleigh(link, seed)))
        .collect();
    ChannelDatabase {
        scene_digest: rt.scene_digest,
        model: ChannelModel::Rayleigh,
        seed,
        carrier_hz: rt.carrier_hz,
        entries,
    }
}

/// Run a scenario against a channel database (RT model; Rayleigh links are
/// synthesized on the fly from the RT entries with the scenario seed).
pub fn run_scenario(
    cfg: &ScenarioConfig,
    db: &ChannelDatabase,
) -> Result<ScenarioResult, HarnessError> {
    use rayon::prelude::*;
    cfg.validate()?;
    if db.model != ChannelModel::Rt {
        return Err(HarnessError::Config(
            "run_scenario expects an RT database; Rayleigh is synthesized per run".into(),
        ));
    }
    db.check_scene(&cfg.sim.scene)
        .map_err(|e| HarnessError::Channel {
            aps: cfg.candidate_aps.clone(),
            ue: 0,
            source: e,
        })?;

    let ues = &cfg.sim.deployment.ue_grid;
    if ues.is_empty() {
        return Err(HarnessError::Metrics(MetricsError::EmptyInput));
    }
    let rb_count = cfg.sim.scene.rb_count as f64;
    // per-RB shares of wideband powers
    let ue_tx_mw_per_rb = dbm_to_mw(cfg.ue_tx_dbm_per_antenna) / rb_count;
    let rank_dbm_per_rb = cfg.rank_power_dbm_per_antenna - power_to_db(rb_count);

    let mut rows: Vec<UeMetricsRow> = worker_pool().install(|| {
        ues.par_iter()
            .map(|ue| evaluate_ue(cfg, db, ue, ue_tx_mw_per_rb, rank_dbm_per_rb))
            .collect::<Result<Vec<_>, HarnessError>>()
    })?;
    rows.sort_by_key(|r| r.ue_id);

    let mut tables = BTreeMap::new();
    let metric = |sel: fn(&UeMetricsRow) -> f64, rows: &[UeMetricsRow]| -> Vec<f64> {
        rows.iter().map(sel).collect()
    };
    tables.insert(
        "rsrp_best_dbm".into(),
        aggregate(&metric(|r| r.rsrp_best_dbm, &rows))?,
    );
    tables.insert(
        "los_count".into(),
        aggregate(&metric(|r| r.los_ap_count as f64, &rows))?,
    );
    tables.insert(
        "detected_count".into(),
        aggregate(&metric(|r| r.detected_ap_count as f64, &rows))?,
    );
    tables.insert(
        "rel2_db".into(),
        aggregate(&metric(|r| r.relative_rsrp_2nd_db, &rows))?,
    );
    tables.insert(
        "rel3_db".into(),
        aggregate(&metric(|r| r.relative_rsrp_3rd_db, &rows))?,
    );
    tables.insert("rank".into(), aggregate(&metric(|r| r.rank as f64, &rows))?);
    tables.insert(
        "cap_dl_zf".into(),
        aggregate(&metric(|r| r.dl_capacity_zf, &rows))?,
    );
    tables.insert(
        "cap_dl_svd".into(),
        aggregate(&metric(|r| r.dl_capacity_svd, &rows))?,
    );
    tables.insert(
        "cap_ul".into(),
        aggregate(&metric(|r| r.ul_capacity, &rows))?,
    );

    let capacity_map = rows
        .iter()
        .map(|r| {
            let v = match (cfg.link, cfg.precoder) {
                (LinkDirection::Ul, _) => r.ul_capacity,
                (LinkDirection::Dl, PrecoderKind::Zf) => r.dl_capacity_zf,
                (LinkDirection::Dl, PrecoderKind::Svd) => r.dl_capacity_svd,
            };
            (r.x, r.y, v)
        })
        .collect();

    Ok(ScenarioResult {
        config_digest: cfg.digest(),
        echo: cfg.echo(),
        rows,
        tables,
        capacity_map,
    })
}

fn evaluate_ue(
    cfg: &ScenarioConfig,
    db: &ChannelDatabase,
    ue: &crate::scene::UeNode,
    ue_tx_mw_per_rb: f64,
    rank_dbm_per_rb: f64,
) -> Result<UeMetricsRow, HarnessError> {
    let ue_id = ue.id;
    let chan_err = |source: ChanError, aps: Vec<u32>| HarnessError::Channel {
        aps,
        ue: ue_id,
        source,
    };

    // single-AP links under the configured channel model
    let mut links: Vec<(u32, LinkChannel)> = Vec::with_capacity(cfg.candidate_aps.len());
    for &ap in &cfg.candidate_aps {
        let rt = db
            .entries
            .get(&(ap, ue_id))
            .ok_or_else(|| chan_err(ChanError::MissingEntry { ap, ue: ue_id }, vec![ap]))?;
        let link = match cfg.channel {
            ChannelModel::Rt => rt.clone(),
            ChannelModel::Rayleigh => synthesize_rayleigh(rt, cfg.seed),
        };
        links.push((ap, link));
    }

    // RSRP under the scenario Tx model with the candidate set active
    let active = cfg.candidate_aps.len();
    let rsrp_per_ap: Vec<(u32, f64)> = links
        .iter()
        .map(|(ap, l)| (*ap, rsrp(l, &cfg.sim.tx_power, active)))
        .collect();
    let det = detection_stats(&rsrp_per_ap, cfg.detection_threshold_dbm);
    let los = los_count(
        &cfg.sim.scene,
        &cfg.sim.deployment,
        &cfg.candidate_aps,
        ue.position,
    );

    // AP selection by received power strength
    let b = cfg.serving_count.unwrap_or(active);
    let serving = select_aps(&rsrp_per_ap, b);
    let serving_links: Vec<&LinkChannel> = serving
        .iter()
        .map(|id| &links.iter().find(|(ap, _)| ap == id).unwrap().1)
        .collect();
    let stacked = stack_links(&serving_links).map_err(|e| chan_err(e, serving.clone()))?;

    // stream rank of the best server, median across RBs
    let best_link = &links
        .iter()
        .find(|(ap, _)| *ap == det.best_server)
        .unwrap()
        .1;
    let rank = {
        let mut per_rb: Vec<usize> = best_link
            .per_rb
            .iter()
            .map(|h| stream_rank(h, rank_dbm_per_rb, cfg.rank_threshold_dbm_per_rb))
            .collect();
        per_rb.sort_unstable();
        per_rb[(per_rb.len() - 1) / 2]
    };

    // capacities on the stacked serving set
    let noise = cfg.sim.noise;
    let layers = cfg.layers.min(stacked.cols());
    let dl_zf = dl_capacity(
        &stacked,
        PrecoderKind::Zf,
        layers,
        &cfg.sim.tx_power,
        &noise,
    )
    .map_err(|source| HarnessError::Mimo { ue: ue_id, source })?;
    let dl_svd = dl_capacity(
        &stacked,
        PrecoderKind::Svd,
        layers,
        &cfg.sim.tx_power,
        &noise,
    )
    .map_err(|source| HarnessError::Mimo { ue: ue_id, source })?;
    let ul = if cfg.ul_waterfill {
        let total = ue_tx_mw_per_rb * stacked.cols() as f64;
        ul_zf_capacity_waterfilled(&stacked, total, &noise)
    } else {
        ul_zf_capacity(&stacked, ue_tx_mw_per_rb, &noise)
    };

    Ok(UeMetricsRow {
        ue_id,
        x: ue.position.x,
        y: ue.position.y,
        best_server_ap: det.best_server,
        rsrp_best_dbm: rsrp_per_ap
            .iter()
            .find(|(ap, _)| *ap == det.best_server)
            .map(|(_, r)| *r)
            .unwrap_or(DB_FLOOR),
        rsrp_per_ap,
        los_ap_count: los,
        detected_ap_count: det.detected_count,
        relative_rsrp_2nd_db: det.relative_2nd_db,
        relative_rsrp_3rd_db: det.relative_3rd_db,
        rank,
        dl_capacity_zf: dl_zf.mean_bits_per_hz,
        dl_capacity_svd: dl_svd.mean_bits_per_hz,
        ul_capacity: ul.mean_bits_per_hz,
    })
}

/// Fixed metrics CSV header (documented in the README).
pub const METRICS_HEADER: &str = "ue_id,x,y,best_ap,rsrp_best_dbm,los_count,detected_count,rel2_db,rel3_db,rank,cap_dl_zf,cap_dl_svd,cap_ul";

/// Render the metrics CSV deterministically (fixed float formatting).
pub fn metrics_csv(rows: &[UeMetricsRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 96 + 128);
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:.3},{:.3},{},{:.6},{},{},{:.6},{:.6},{},{:.6},{:.6},{:.6}\n",
            r.ue_id,
            r.x,
            r.y,
            r.best_server_ap,
            r.rsrp_best_dbm,
            r.los_ap_count,
            r.detected_ap_count,
            r.relative_rsrp_2nd_db,
            r.relative_rsrp_3rd_db,
            r.rank,
            r.dl_capacity_zf,
            r.dl_capacity_svd,
            r.ul_capacity
        ));
    }
    out
}

/// Write metrics CSV, per-metric distribution CSVs, the capacity map, and
/// a JSON manifest into `out_dir`. Re-exporting the same result produces
/// byte-identical files.
pub fn export_results(result: &ScenarioResult, out_dir: &Path) -> Result<(), HarnessError> {
    if result.rows.is_empty() {
        return Err(HarnessError::Metrics(MetricsError::EmptyInput));
    }
    std::fs::create_dir_all(out_dir)?;

    let metrics = metrics_csv(&result.rows);
    write_file(&out_dir.join("metrics.csv"), metrics.as_bytes())?;

    for (name, table) in &result.tables {
        let mut out = String::from("value,cdf,ccdf\n");
        for (v, cdf, ccdf) in table.points() {
            out.push_str(&format!("{v:.6},{cdf:.6},{ccdf:.6}\n"));
        }
        write_file(&out_dir.join(format!("dist_{name}.csv")), out.as_bytes())?;
    }

    let mut map = String::from("x_m,y_m,bits_per_s_per_hz\n");
    for &(x, y, v) in &result.capacity_map {
        map.push_str(&format!("{x:.3},{y:.3},{v:.6}\n"));
    }
    write_file(&out_dir.join("capacity_map.csv"), map.as_bytes())?;

    let manifest = Manifest {
        config_digest: result.config_digest.clone(),
        config: result.echo.clone(),
        ue_count: result.rows.len(),
        metrics_digest: {
            use sha2::{Digest, Sha256};
            let mut h = Sha256::new();
            h.update(metrics.as_bytes());
            hex(&h.finalize())
        },
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&out_dir.join("manifest.json"), json.as_bytes())?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
struct Manifest {
    config_digest: String,
    config: ConfigEcho,
    ue_count: usize,
    metrics_digest: String,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// Persist a channel database under the canonical name for its model/seed.
pub fn database_path(out_dir: &Path, model: ChannelModel, seed: u64) -> std::path::PathBuf {
    let tag = match model {
        ChannelModel::Rt => "rt",
        ChannelModel::Rayleigh => "rayleigh",
    };
    out_dir.join(format!("channels_{tag}_seed{seed}.dmch"))
}

/// Write the per-link coherence report CSV
/// (`ap_id,ue_id,coherence_hz,pathloss_db`), coherence at the given
/// correlation threshold. All-zero links report a 0 Hz coherence and the
/// path-loss floor.
pub fn write_coherence_report(
    db: &ChannelDatabase,
    threshold: f64,
    path: &Path,
) -> Result<(), HarnessError> {
    let mut out = String::from("ap_id,ue_id,coherence_hz,pathloss_db\n");
    for ((ap, ue), link) in &db.entries {
        let (coh, pl) = match coherence_bandwidth(link, threshold) {
            Ok(c) => (c, -power_to_db(link.mean_power_gain())),
            Err(_) => (0.0, -DB_FLOOR),
        };
        out.push_str(&format!("{ap},{ue},{coh:.1},{pl:.3}\n"));
    }
    write_file(path, out.as_bytes())?;
    Ok(())
}

/// Dump traced paths for one link as documented columnar text
/// (`path_id kind_seq length_m delay_s vv_re vv_im vh_re vh_im hv_re hv_im hh_re hh_im`).
pub fn write_path_dump(paths: &[crate::tracer::RayPath], path: &Path) -> Result<(), HarnessError> {
    let mut out = String::from(
        "path_id kind_seq length_m delay_s vv_re vv_im vh_re vh_im hv_re hv_im hh_re hh_im\n",
    );
    for (i, p) in paths.iter().enumerate() {
        let kinds: String = if p.interactions.is_empty() {
            "LOS".into()
        } else {
            p.interactions
                .iter()
                .map(|it| match it.kind {
                    crate::tracer::InteractionKind::Reflection { .. } => 'R',
                    crate::tracer::InteractionKind::Diffraction { .. } => 'D',
                })
                .collect()
        };
        let g = &p.pol_gain.0;
        out.push_str(&format!(
            "{} {} {:.9} {:.6e} {:.6e} {:.6e} {:.6e} {:.6e} {:.6e} {:.6e} {:.6e} {:.6e}\n",
            i,
            kinds,
            p.length,
            p.delay,
            g[0][0].re,
            g[0][0].im,
            g[0][1].re,
            g[0][1].im,
            g[1][0].re,
            g[1][0].im,
            g[1][1].re,
            g[1][1].im
        ));
    }
    write_file(path, out.as_bytes())?;
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Convenience: build (or load from `out_dir` if present) the RT database
/// for a config, caching it under the canonical name.
pub fn ensure_rt_database(
    sim: &SimConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<ChannelDatabase, HarnessError> {
    let path = database_path(out_dir, ChannelModel::Rt, seed);
    if path.exists() {
        match crate::chanmodel::load_database(&path, Some(&sim.scene)) {
            Ok(db) if db.seed == seed => return Ok(db),
            // stale or mismatched cache: rebuild
            _ => {}
        }
    }
    let db = build_rt_database(sim, seed);
    std::fs::create_dir_all(out_dir)?;
    save_database(&db, &path).map_err(|e| HarnessError::Channel {
        aps: vec![],
        ue: 0,
        source: e,
    })?;
    Ok(db)
}
