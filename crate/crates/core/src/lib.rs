//! Distributed-MIMO indoor radio simulator.
//!
//! The crate synthesizes dual-polarized per-resource-block MIMO channels for
//! AP–UE links in a configurable indoor scene, using either a deterministic
//! polarimetric image-method ray tracer or a magnitude-matched stochastic
//! Rayleigh generator, and evaluates coverage statistics and single-user
//! UL/DL capacity under ZF and SVD processing.
//!
//! Module map:
//! - [`scene`]: 3D environment, AP/UE deployments, antenna arrays, radio constants
//! - [`tracer`]: polarimetric ray paths (LoS, reflections, edge diffraction)
//! - [`chanmodel`]: per-RB channel assembly, Rayleigh synthesis, channel database
//! - [`numerics`]: small dense complex linear algebra (SVD, pseudo-inverse)
//! - [`mimo`]: water-filling, ZF/SVD precoding, UL/DL capacity, stream rank
//! - [`metrics`]: RSRP, AP detection, LoS counts, distribution tables
//! - [`harness`]: scenario orchestration and result export
//!
//! All randomness flows through counter-based streams ([`rng`]) keyed by the
//! global seed plus structural tags, so results are bit-identical regardless
//! of evaluation order or worker count.
//!
//! # Example
//!
//! Trace one AP–UE link in a small empty hall and evaluate the 2-layer SVD
//! capacity of the resulting per-RB channel:
//!
//! ```
//! use dmimo_core::chanmodel::assemble_rt_channel;
//! use dmimo_core::geom::{Aabb, Vec3};
//! use dmimo_core::mimo::{dl_capacity, PrecoderKind};
//! use dmimo_core::scene::{ArrayConfig, Material, NoiseModel, Scene, TxPowerModel};
//! use dmimo_core::tracer::{trace_link, InteractionBudget};
//!
//! let scene = Scene::build(Scene {
//!     name: "hall".into(),
//!     bounds: Aabb::new(Vec3::ZERO, Vec3::new(20.0, 12.0, 4.0)),
//!     wall_material: Material::concrete(),
//!     floor_material: Material::concrete(),
//!     ceiling_material: Material::concrete(),
//!     obstacles: vec![],
//!     carrier_hz: 3.7e9,
//!     bandwidth_hz: 20e6,
//!     rb_count: 16,
//!     subcarriers_per_rb: 12,
//!     subcarrier_spacing_hz: 30e3,
//! })
//! .unwrap();
//!
//! let ap = Vec3::new(1.0, 1.0, 3.5);
//! let ue = Vec3::new(15.0, 9.0, 1.5);
//! let paths = trace_link(&scene, ap, ue, InteractionBudget::default(), 7);
//! assert!(paths.iter().any(|p| p.is_los));
//!
//! let array = ArrayConfig::default_quad();
//! let link = assemble_rt_channel(
//!     &paths,
//!     &array,
//!     &array,
//!     scene.carrier_hz,
//!     &scene.rb_center_frequencies(),
//!     1,
//!     0,
//! );
//! let cap = dl_capacity(
//!     &link,
//!     PrecoderKind::Svd,
//!     2,
//!     &TxPowerModel::ConstantPerAp { level_dbm: 23.0 },
//!     &NoiseModel { n0_dbm_per_rb: -118.0 },
//! )
//! .unwrap();
//! assert!(cap.mean_bits_per_hz > 0.0);
//! ```

pub mod chanmodel;
pub mod geom;
pub mod harness;
pub mod metrics;
pub mod mimo;
pub mod numerics;
pub mod rng;
pub mod scene;
pub mod tracer;
pub mod units;

pub use chanmodel::{ChannelDatabase, ChannelModel, LinkChannel};
pub use geom::{Aabb, Vec3};
pub use metrics::{DistributionTable, UeMetricsRow};
pub use mimo::{CapacityResult, PrecoderKind, PrecodingSolution};
pub use numerics::ComplexMatrix;
pub use scene::{ArrayConfig, Deployment, Material, NoiseModel, Scene, TxPowerModel};
pub use tracer::{InteractionBudget, RayPath, XprCalibration};
