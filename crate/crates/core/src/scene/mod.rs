//! 3D environment, AP/UE deployments, antenna arrays, and radio constants.
//!
//! A [`Scene`] is a rectangular room bounded by six planar facets (walls,
//! floor, ceiling) containing axis-aligned box obstacles (racks). Scenes and
//! deployments are immutable after construction and safe to share across
//! workers.

mod config;

pub use config::{desk_config_toml, load_config, parse_config, RunDefaults, SimConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Aabb, Vec3};
use crate::units::{wavelength, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("obstacle '{0}' extends outside the scene bounds")]
    Overlap(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Surface material for Fresnel reflection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Relative permittivity ε_r (≥ 1 unless a perfect conductor).
    pub relative_permittivity: f64,
    /// Conductivity in S/m.
    pub conductivity: f64,
    pub is_perfect_conductor: bool,
}

impl Material {
    /// ITU-style concrete defaults used for walls, floor, and ceiling.
    pub fn concrete() -> Material {
        Material {
            name: "concrete".into(),
            relative_permittivity: 5.31,
            conductivity: 0.0326,
            is_perfect_conductor: false,
        }
    }

    /// Perfect electric conductor, the default for metal racks.
    pub fn metal() -> Material {
        Material {
            name: "metal".into(),
            relative_permittivity: 1.0,
            conductivity: 0.0,
            is_perfect_conductor: true,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !self.is_perfect_conductor && self.relative_permittivity < 1.0 {
            return Err(SceneError::Config(format!(
                "material '{}': relative permittivity {} < 1",
                self.name, self.relative_permittivity
            )));
        }
        if self.conductivity < 0.0 {
            return Err(SceneError::Config(format!(
                "material '{}': negative conductivity",
                self.name
            )));
        }
        Ok(())
    }
}

/// An axis-aligned box obstacle with a surface material.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub name: String,
    pub shape: Aabb,
    pub material: Material,
}

/// Antenna polarization in the fixed (V, H) basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    V,
    H,
}

/// Uniform linear array of single-polarized elements. Co-polarized elements
/// are spaced `co_pol_spacing` wavelengths apart along `orientation`;
/// elements of the other polarization share positions with their co-located
/// counterparts (dual-polar radiators).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    /// Per-element polarization, in element order.
    pub polarizations: Vec<Polarization>,
    /// Spacing between consecutive co-polarized elements, in wavelengths.
    pub co_pol_spacing: f64,
    /// Antenna cross-polar discrimination in dB (leakage into the
    /// orthogonal polarization).
    pub xpd_db: f64,
    /// Array axis (unit vector).
    pub orientation: Vec3,
}

impl ArrayConfig {
    /// Dual-polar 4-element array (V,H,V,H) at half-wavelength co-pol
    /// spacing with 20 dB XPD, axis along x.
    pub fn default_quad() -> ArrayConfig {
        ArrayConfig {
            polarizations: vec![
                Polarization::V,
                Polarization::H,
                Polarization::V,
                Polarization::H,
            ],
            co_pol_spacing: 0.5,
            xpd_db: 20.0,
            orientation: Vec3::new(1.0, 0.0, 0.0),
        }
    }

    pub fn element_count(&self) -> usize {
        self.polarizations.len()
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.polarizations.is_empty() {
            return Err(SceneError::Config("array has no elements".into()));
        }
        if self.co_pol_spacing <= 0.0 {
            return Err(SceneError::Config("co-pol spacing must be positive".into()));
        }
        let axis_norm = self.orientation.norm();
        if !axis_norm.is_finite() || axis_norm <= 0.0 {
            return Err(SceneError::Config(
                "array orientation must be non-zero".into(),
            ));
        }
        Ok(())
    }
}

/// One physical antenna element: a position offset from the array reference
/// point and a unit Jones vector in the (V, H) basis. The Jones vector
/// carries the antenna XPD leakage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrayElement {
    pub offset: Vec3,
    /// (V component, H component), unit norm.
    pub jones: (f64, f64),
}

/// Element positions and polarization responses for an array at a carrier
/// frequency. The i-th co-polarized element sits `i · spacing · λ` along the
/// array axis; element order matches the config order.
pub fn array_elements(config: &ArrayConfig, carrier_hz: f64) -> Vec<ArrayElement> {
    assert!(carrier_hz > 0.0, "carrier frequency must be positive");
    let lambda = wavelength(carrier_hz);
    let step = config.co_pol_spacing * lambda;
    let axis = config.orientation.normalized();
    let rho = 10f64.powf(-config.xpd_db / 20.0);
    let unit = 1.0 / (1.0 + rho * rho).sqrt();
    let mut seen_v = 0usize;
    let mut seen_h = 0usize;
    config
        .polarizations
        .iter()
        .map(|&p| {
            let (rank, jones) = match p {
                Polarization::V => {
                    let r = seen_v;
                    seen_v += 1;
                    (r, (unit, rho * unit))
                }
                Polarization::H => {
                    let r = seen_h;
                    seen_h += 1;
                    (r, (rho * unit, unit))
                }
            };
            ArrayElement {
                offset: axis * (rank as f64 * step),
                jones,
            }
        })
        .collect()
}

/// A network access point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApNode {
    pub id: u32,
    pub position: Vec3,
    pub array: ArrayConfig,
}

/// A user terminal position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UeNode {
    pub id: u32,
    pub position: Vec3,
    pub array: ArrayConfig,
}

/// AP and UE placements for a scene, with the subset of APs that is active.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub aps: Vec<ApNode>,
    pub ue_grid: Vec<UeNode>,
    pub active_ap_ids: Vec<u32>,
}

impl Deployment {
    pub fn ap(&self, id: u32) -> Option<&ApNode> {
        self.aps.iter().find(|a| a.id == id)
    }

    pub fn validate(&self, scene: &Scene) -> Result<(), SceneError> {
        let mut ids = std::collections::HashSet::new();
        for ap in &self.aps {
            if !ids.insert(ap.id) {
                return Err(SceneError::Config(format!("duplicate AP id {}", ap.id)));
            }
            scene.check_position(ap.position, &format!("AP {}", ap.id))?;
            ap.array.validate()?;
        }
        let mut ue_ids = std::collections::HashSet::new();
        for ue in &self.ue_grid {
            if !ue_ids.insert(ue.id) {
                return Err(SceneError::Config(format!("duplicate UE id {}", ue.id)));
            }
            scene.check_position(ue.position, &format!("UE {}", ue.id))?;
            ue.array.validate()?;
        }
        for id in &self.active_ap_ids {
            if self.ap(*id).is_none() {
                return Err(SceneError::Config(format!(
                    "active AP id {id} is not deployed"
                )));
            }
        }
        Ok(())
    }
}

/// Downlink transmit-power strategy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TxPowerModel {
    /// Each active AP radiates `level_dbm` total.
    ConstantPerAp { level_dbm: f64 },
    /// `level_dbm` is split equally across the active APs.
    ConstantNetwork { level_dbm: f64 },
}

impl TxPowerModel {
    /// Total power radiated by one AP when `active_aps` APs are active, dBm.
    pub fn per_ap_dbm(&self, active_aps: usize) -> f64 {
        match *self {
            TxPowerModel::ConstantPerAp { level_dbm } => level_dbm,
            TxPowerModel::ConstantNetwork { level_dbm } => {
                level_dbm - 10.0 * (active_aps.max(1) as f64).log10()
            }
        }
    }

    /// Network-wide sum power across `active_aps` APs, dBm.
    pub fn network_total_dbm(&self, active_aps: usize) -> f64 {
        match *self {
            TxPowerModel::ConstantPerAp { level_dbm } => {
                level_dbm + 10.0 * (active_aps.max(1) as f64).log10()
            }
            TxPowerModel::ConstantNetwork { level_dbm } => level_dbm,
        }
    }
}

/// Receiver noise floor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub n0_dbm_per_rb: f64,
}

impl NoiseModel {
    pub fn n0_mw_per_rb(&self) -> f64 {
        crate::units::dbm_to_mw(self.n0_dbm_per_rb)
    }
}

/// The validated 3D environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    pub bounds: Aabb,
    pub wall_material: Material,
    pub floor_material: Material,
    pub ceiling_material: Material,
    pub obstacles: Vec<Obstacle>,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub rb_count: usize,
    pub subcarriers_per_rb: usize,
    pub subcarrier_spacing_hz: f64,
}

impl Scene {
    /// Validate and finalize a scene description.
    pub fn build(scene: Scene) -> Result<Scene, SceneError> {
        if !scene.bounds.is_valid() {
            return Err(SceneError::Config(
                "scene bounds have non-positive extent".into(),
            ));
        }
        if scene.carrier_hz <= 0.0 {
            return Err(SceneError::Config(
                "carrier frequency must be positive".into(),
            ));
        }
        if scene.bandwidth_hz <= 0.0 {
            return Err(SceneError::Config("bandwidth must be positive".into()));
        }
        if scene.rb_count == 0 || scene.subcarriers_per_rb == 0 {
            return Err(SceneError::Config("RB grid must be non-empty".into()));
        }
        if scene.subcarrier_spacing_hz <= 0.0 {
            return Err(SceneError::Config(
                "subcarrier spacing must be positive".into(),
            ));
        }
        let span =
            scene.rb_count as f64 * scene.subcarriers_per_rb as f64 * scene.subcarrier_spacing_hz;
        if span > scene.bandwidth_hz * (1.0 + 1e-9) {
            return Err(SceneError::Config(format!(
                "RB grid spans {span:.0} Hz, more than the {:.0} Hz bandwidth",
                scene.bandwidth_hz
            )));
        }
        scene.wall_material.validate()?;
        scene.floor_material.validate()?;
        scene.ceiling_material.validate()?;
        for ob in &scene.obstacles {
            if !ob.shape.is_valid() {
                return Err(SceneError::Config(format!(
                    "obstacle '{}' has non-positive extent",
                    ob.name
                )));
            }
            if !scene.bounds.encloses(&ob.shape) {
                return Err(SceneError::Overlap(ob.name.clone()));
            }
            ob.material.validate()?;
        }
        Ok(scene)
    }

    /// Bandwidth covered by one resource block, Hz.
    pub fn rb_bandwidth_hz(&self) -> f64 {
        self.subcarriers_per_rb as f64 * self.subcarrier_spacing_hz
    }

    /// Center frequency of each resource block. The RB grid is centered on
    /// the carrier.
    pub fn rb_center_frequencies(&self) -> Vec<f64> {
        let rb_bw = self.rb_bandwidth_hz();
        let start = self.carrier_hz - 0.5 * self.rb_count as f64 * rb_bw;
        (0..self.rb_count)
            .map(|k| start + (k as f64 + 0.5) * rb_bw)
            .collect()
    }

    /// Whether a point sits inside any obstacle (closed test).
    pub fn point_in_obstacle(&self, p: Vec3) -> bool {
        self.obstacles.iter().any(|o| o.shape.contains(p))
    }

    fn check_position(&self, p: Vec3, what: &str) -> Result<(), SceneError> {
        if !self.bounds.contains(p) {
            return Err(SceneError::Config(format!(
                "{what} is outside the scene bounds"
            )));
        }
        if self.point_in_obstacle(p) {
            return Err(SceneError::Config(format!("{what} is inside an obstacle")));
        }
        Ok(())
    }

    /// True iff the open segment a→b passes through an obstacle interior.
    /// Wall facets bound the room, so a segment between two interior points
    /// can only be blocked by obstacles.
    pub fn los_blocked(&self, a: Vec3, b: Vec3) -> bool {
        self.obstacles
            .iter()
            .any(|o| o.shape.segment_crosses_interior(a, b))
    }

    /// Uniform UE grid at `height`, starting at `bounds.min + margin` in x
    /// and y with the default margin of `resolution / 2`. Positions inside
    /// obstacles are discarded; ordering is row-major (y-major, then x).
    pub fn place_ue_grid(&self, resolution: f64, height: f64) -> Result<Vec<Vec3>, SceneError> {
        self.place_ue_grid_with_margin(resolution, height, resolution / 2.0)
    }

    /// As [`Scene::place_ue_grid`] with an explicit edge margin.
    pub fn place_ue_grid_with_margin(
        &self,
        resolution: f64,
        height: f64,
        margin: f64,
    ) -> Result<Vec<Vec3>, SceneError> {
        if resolution <= 0.0 {
            return Err(SceneError::Config(
                "grid resolution must be positive".into(),
            ));
        }
        if height < self.bounds.min.z || height > self.bounds.max.z {
            return Err(SceneError::Config(format!(
                "grid height {height} is outside the scene bounds"
            )));
        }
        let nx = grid_count(self.bounds.max.x - self.bounds.min.x, resolution, margin);
        let ny = grid_count(self.bounds.max.y - self.bounds.min.y, resolution, margin);
        let mut out = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let p = Vec3::new(
                    self.bounds.min.x + margin + ix as f64 * resolution,
                    self.bounds.min.y + margin + iy as f64 * resolution,
                    height,
                );
                if !self.point_in_obstacle(p) {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }

    /// SHA-256 digest of the scene's canonical JSON serialization. Channel
    /// databases record this to guard against mismatched scenes.
    pub fn digest(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("scene serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        h.finalize().into()
    }
}

fn grid_count(extent: f64, resolution: f64, margin: f64) -> usize {
    let usable = extent - 2.0 * margin;
    if usable < 0.0 {
        // degenerate: a single point at the margin start
        return 1;
    }
    (usable / resolution).floor() as usize + 1
}

/// Speed-of-light delay for a path length in meters.
pub fn propagation_delay(length_m: f64) -> f64 {
    length_m / SPEED_OF_LIGHT
}
