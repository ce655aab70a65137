//! Configuration file loading.
//!
//! Scenes, deployments, and run defaults are described in one TOML file.
//! All lengths are meters, frequencies Hz, powers dBm. See the repository
//! README for the full schema and a commented example.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{
    ApNode, ArrayConfig, Deployment, Material, NoiseModel, Obstacle, Polarization, Scene,
    SceneError, TxPowerModel, UeNode,
};
use crate::geom::{Aabb, Vec3};
use crate::tracer::{InteractionBudget, XprCalibration};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scene: RawScene,
    #[serde(default)]
    arrays: BTreeMap<String, RawArray>,
    deployment: RawDeployment,
    /// Named AP id lists, e.g. `"3ap" = [1, 2, 3]`.
    #[serde(default)]
    deployments: BTreeMap<String, Vec<u32>>,
    radio: RawRadio,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    tracer: RawTracer,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    name: String,
    bounds_min: [f64; 3],
    bounds_max: [f64; 3],
    carrier_hz: f64,
    bandwidth_hz: f64,
    rb_count: usize,
    subcarriers_per_rb: usize,
    #[serde(default = "default_scs")]
    subcarrier_spacing_hz: f64,
    #[serde(default)]
    materials: BTreeMap<String, RawMaterial>,
    #[serde(default)]
    surfaces: RawSurfaces,
    #[serde(default)]
    obstacles: Vec<RawObstacle>,
}

fn default_scs() -> f64 {
    30e3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    #[serde(default = "one")]
    relative_permittivity: f64,
    #[serde(default)]
    conductivity: f64,
    #[serde(default)]
    perfect_conductor: bool,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurfaces {
    walls: Option<String>,
    floor: Option<String>,
    ceiling: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObstacle {
    name: String,
    min: [f64; 3],
    max: [f64; 3],
    material: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArray {
    /// Element polarizations in order, entries "V" or "H".
    elements: Vec<String>,
    #[serde(default = "default_spacing")]
    co_pol_spacing_wavelengths: f64,
    #[serde(default = "default_xpd")]
    xpd_db: f64,
    #[serde(default = "default_orientation")]
    orientation: [f64; 3],
}

fn default_spacing() -> f64 {
    0.5
}
fn default_xpd() -> f64 {
    20.0
}
fn default_orientation() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDeployment {
    #[serde(default)]
    aps: Vec<RawAp>,
    ue_grid: RawUeGrid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAp {
    id: u32,
    position: [f64; 3],
    array: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUeGrid {
    resolution_m: f64,
    height_m: f64,
    array: String,
    /// Edge margin; defaults to half the resolution.
    margin_m: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadio {
    tx_power: RawTxPower,
    noise_n0_dbm_per_rb: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTxPower {
    /// "per-ap" or "network".
    kind: String,
    level_dbm: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: Option<u64>,
    /// "rt" or "rayleigh".
    channel: Option<String>,
    /// "dl" or "ul".
    link: Option<String>,
    /// "zf" or "svd".
    precoder: Option<String>,
    layers: Option<usize>,
    deployment: Option<String>,
    /// Cooperation pair [a, b]: b APs active among a possible.
    coop: Option<[usize; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTracer {
    max_reflections: Option<usize>,
    max_diffractions: Option<usize>,
    prune_loss_db: Option<f64>,
    xpr_factor: Option<f64>,
    xpr_offset: Option<f64>,
    xpr_mean_los_db: Option<f64>,
    xpr_mean_nlos_db: Option<f64>,
    xpr_std_db: Option<f64>,
}

/// Run defaults carried by the config file; CLI flags override these.
#[derive(Clone, Debug)]
pub struct RunDefaults {
    pub seed: u64,
    pub channel: String,
    pub link: String,
    pub precoder: String,
    pub layers: usize,
    pub deployment: Option<String>,
    pub coop: Option<(usize, usize)>,
}

/// A fully resolved configuration: validated scene, deployment, named AP
/// sets, radio models, tracer settings, and run defaults.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub scene: Scene,
    pub deployment: Deployment,
    pub deployment_sets: BTreeMap<String, Vec<u32>>,
    pub tx_power: TxPowerModel,
    pub noise: NoiseModel,
    pub budget: InteractionBudget,
    pub prune_loss_db: f64,
    pub xpr: XprCalibration,
    pub run: RunDefaults,
}

/// Parse and validate a configuration from TOML text.
pub fn parse_config(text: &str) -> Result<SimConfig, SceneError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| SceneError::Config(format!("config parse: {e}")))?;
    resolve(raw)
}

/// Load a configuration file from disk.
pub fn load_config(path: &Path) -> Result<SimConfig, SceneError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SceneError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn resolve(raw: RawConfig) -> Result<SimConfig, SceneError> {
    let mut materials: BTreeMap<String, Material> = BTreeMap::new();
    materials.insert("concrete".into(), Material::concrete());
    materials.insert("metal".into(), Material::metal());
    for (name, m) in &raw.scene.materials {
        materials.insert(
            name.clone(),
            Material {
                name: name.clone(),
                relative_permittivity: m.relative_permittivity,
                conductivity: m.conductivity,
                is_perfect_conductor: m.perfect_conductor,
            },
        );
    }
    let lookup = |name: &str| -> Result<Material, SceneError> {
        materials
            .get(name)
            .cloned()
            .ok_or_else(|| SceneError::Config(format!("unknown material '{name}'")))
    };

    let wall = lookup(raw.scene.surfaces.walls.as_deref().unwrap_or("concrete"))?;
    let floor = lookup(raw.scene.surfaces.floor.as_deref().unwrap_or("concrete"))?;
    let ceiling = lookup(raw.scene.surfaces.ceiling.as_deref().unwrap_or("concrete"))?;

    let obstacles = raw
        .scene
        .obstacles
        .iter()
        .map(|o| {
            Ok(Obstacle {
                name: o.name.clone(),
                shape: Aabb::new(vec3(o.min), vec3(o.max)),
                material: lookup(&o.material)?,
            })
        })
        .collect::<Result<Vec<_>, SceneError>>()?;

    let scene = Scene::build(Scene {
        name: raw.scene.name.clone(),
        bounds: Aabb::new(vec3(raw.scene.bounds_min), vec3(raw.scene.bounds_max)),
        wall_material: wall,
        floor_material: floor,
        ceiling_material: ceiling,
        obstacles,
        carrier_hz: raw.scene.carrier_hz,
        bandwidth_hz: raw.scene.bandwidth_hz,
        rb_count: raw.scene.rb_count,
        subcarriers_per_rb: raw.scene.subcarriers_per_rb,
        subcarrier_spacing_hz: raw.scene.subcarrier_spacing_hz,
    })?;

    let mut arrays: BTreeMap<String, ArrayConfig> = BTreeMap::new();
    for (name, a) in &raw.arrays {
        let polarizations = a
            .elements
            .iter()
            .map(|p| match p.as_str() {
                "V" | "v" => Ok(Polarization::V),
                "H" | "h" => Ok(Polarization::H),
                other => Err(SceneError::Config(format!(
                    "array '{name}': unknown polarization '{other}'"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = ArrayConfig {
            polarizations,
            co_pol_spacing: a.co_pol_spacing_wavelengths,
            xpd_db: a.xpd_db,
            orientation: vec3(a.orientation),
        };
        cfg.validate()?;
        arrays.insert(name.clone(), cfg);
    }
    let array_lookup = |name: &str| -> Result<ArrayConfig, SceneError> {
        arrays
            .get(name)
            .cloned()
            .ok_or_else(|| SceneError::Config(format!("unknown array '{name}'")))
    };

    let aps = raw
        .deployment
        .aps
        .iter()
        .map(|a| {
            Ok(ApNode {
                id: a.id,
                position: vec3(a.position),
                array: array_lookup(&a.array)?,
            })
        })
        .collect::<Result<Vec<_>, SceneError>>()?;

    let ue_array = array_lookup(&raw.deployment.ue_grid.array)?;
    let margin = raw
        .deployment
        .ue_grid
        .margin_m
        .unwrap_or(raw.deployment.ue_grid.resolution_m / 2.0);
    let ue_positions = scene.place_ue_grid_with_margin(
        raw.deployment.ue_grid.resolution_m,
        raw.deployment.ue_grid.height_m,
        margin,
    )?;
    let ue_grid = ue_positions
        .into_iter()
        .enumerate()
        .map(|(i, position)| UeNode {
            id: i as u32,
            position,
            array: ue_array.clone(),
        })
        .collect();

    let deployment = Deployment {
        active_ap_ids: aps.iter().map(|a| a.id).collect(),
        aps,
        ue_grid,
    };
    deployment.validate(&scene)?;

    for (name, ids) in &raw.deployments {
        for id in ids {
            if deployment.ap(*id).is_none() {
                return Err(SceneError::Config(format!(
                    "deployment set '{name}' references unknown AP id {id}"
                )));
            }
        }
    }

    let tx_power = match raw.radio.tx_power.kind.as_str() {
        "per-ap" => TxPowerModel::ConstantPerAp {
            level_dbm: raw.radio.tx_power.level_dbm,
        },
        "network" => TxPowerModel::ConstantNetwork {
            level_dbm: raw.radio.tx_power.level_dbm,
        },
        other => {
            return Err(SceneError::Config(format!(
                "tx_power kind must be 'per-ap' or 'network', got '{other}'"
            )))
        }
    };

    let budget = InteractionBudget {
        max_reflections: raw.tracer.max_reflections.unwrap_or(2),
        max_diffractions: raw.tracer.max_diffractions.unwrap_or(1),
    };
    if budget.max_reflections > 2 || budget.max_diffractions > 1 {
        return Err(SceneError::Config(
            "tracer budget is capped at 2 reflections and 1 diffraction".into(),
        ));
    }

    let xpr = XprCalibration {
        factor: raw.tracer.xpr_factor.unwrap_or(1.0),
        offset: raw.tracer.xpr_offset.unwrap_or(0.0),
        target_mean_los_db: raw.tracer.xpr_mean_los_db.unwrap_or(12.0),
        target_mean_nlos_db: raw.tracer.xpr_mean_nlos_db.unwrap_or(11.0),
        target_std_db: raw.tracer.xpr_std_db.unwrap_or(6.0),
    };
    if xpr.target_mean_los_db <= 0.0 || xpr.target_mean_nlos_db <= 0.0 || xpr.target_std_db <= 0.0 {
        return Err(SceneError::Config("XPR targets must be positive".into()));
    }
    if !raw.radio.noise_n0_dbm_per_rb.is_finite() {
        return Err(SceneError::Config("noise level must be finite".into()));
    }

    let run = RunDefaults {
        seed: raw.run.seed.unwrap_or(1),
        channel: raw.run.channel.unwrap_or_else(|| "rt".into()),
        link: raw.run.link.unwrap_or_else(|| "dl".into()),
        precoder: raw.run.precoder.unwrap_or_else(|| "svd".into()),
        layers: raw.run.layers.unwrap_or(4),
        deployment: raw.run.deployment,
        coop: raw.run.coop.map(|[a, b]| (a, b)),
    };

    Ok(SimConfig {
        scene,
        deployment,
        deployment_sets: raw.deployments,
        tx_power,
        noise: NoiseModel {
            n0_dbm_per_rb: raw.radio.noise_n0_dbm_per_rb,
        },
        budget,
        prune_loss_db: raw.tracer.prune_loss_db.unwrap_or(170.0),
        xpr,
        run,
    })
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// The default desk scene shipped with the repository: a 40×20×5 m hall
/// with three metal rack rows and eight wall-mounted APs, small enough for
/// the full evaluation pipeline to run in seconds.
pub fn desk_config_toml() -> &'static str {
    include_str!("desk.toml")
}
