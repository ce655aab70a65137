//! Per-interaction depolarization: Fresnel/diffraction diagonals combined
//! with random XPR leakage, plus the calibration routine that fits the
//! correction factor and offset against target XPR statistics.

use num_complex::Complex64;

use super::{
    fresnel::fresnel_coefficients, knife_edge::knife_edge_coefficient, path_signature, Interaction,
    InteractionBudget, InteractionKind, SceneGeometry, Tracer, XprCalibration,
};
use crate::rng::RandomStream;
use crate::scene::{Deployment, Scene};

/// 2×2 complex polarization matrix over the (V, H) basis, row = output
/// polarization, column = input polarization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolGain(pub [[Complex64; 2]; 2]);

impl PolGain {
    pub const IDENTITY: PolGain = PolGain([
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ]);

    pub fn diagonal(v: Complex64, h: Complex64) -> PolGain {
        PolGain([[v, Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), h]])
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &PolGain) -> PolGain {
        let a = &self.0;
        let b = &other.0;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        PolGain(out)
    }

    pub fn scale(&self, z: Complex64) -> PolGain {
        let mut out = self.0;
        for row in &mut out {
            for e in row {
                *e *= z;
            }
        }
        PolGain(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Co-polar power `|g_vv|² + |g_hh|²`.
    pub fn co_power(&self) -> f64 {
        self.0[0][0].norm_sqr() + self.0[1][1].norm_sqr()
    }

    /// Cross-polar power `|g_vh|² + |g_hv|²`.
    pub fn cross_power(&self) -> f64 {
        self.0[0][1].norm_sqr() + self.0[1][0].norm_sqr()
    }
}

/// XPR leakage mixing with row-wise normalization: each output
/// polarization keeps unit power while leaking amplitude `ρ` from the
/// orthogonal one, with independent uniform phases.
fn leakage_matrix(rho: f64, phi_v: f64, phi_h: f64) -> PolGain {
    let norm = 1.0 / (1.0 + rho * rho).sqrt();
    PolGain([
        [
            Complex64::new(norm, 0.0),
            Complex64::from_polar(rho * norm, phi_v),
        ],
        [
            Complex64::from_polar(rho * norm, phi_h),
            Complex64::new(norm, 0.0),
        ],
    ])
}

/// Accumulate the polarization gain of a path: per interaction, the
/// Fresnel or diffraction diagonal times an XPR leakage draw. The XPR draw
/// for interaction `i` comes from the stream keyed by
/// `(link_seed, path signature, i)`, so it is independent of evaluation
/// order. LoS paths (no interactions) return the identity.
pub(crate) fn path_polarization(
    geometry: &SceneGeometry,
    interactions: &[Interaction],
    link_is_los: bool,
    cal: &XprCalibration,
    link_seed: u64,
    path_sig: u64,
    carrier_hz: f64,
) -> PolGain {
    let mean_db = if link_is_los {
        cal.target_mean_los_db
    } else {
        cal.target_mean_nlos_db
    };
    let mut total = PolGain::IDENTITY;
    for (i, inter) in interactions.iter().enumerate() {
        let diag = match inter.kind {
            InteractionKind::Reflection { facet, incidence } => {
                let f = &geometry.facets[facet];
                let (par, perp) = fresnel_coefficients(&f.material, incidence, carrier_hz);
                // Horizontal facets (floor/ceiling/box tops) put the
                // vertical field in the plane of incidence; vertical facets
                // the horizontal field.
                if f.axis == 2 {
                    PolGain::diagonal(par, perp)
                } else {
                    PolGain::diagonal(perp, par)
                }
            }
            InteractionKind::Diffraction { nu, .. } => {
                let f = knife_edge_coefficient(nu);
                PolGain::diagonal(f, f)
            }
        };
        let mut stream = RandomStream::new(link_seed, &[path_sig, i as u64]);
        let draw_db = mean_db + cal.target_std_db * stream.normal();
        let corrected_db = cal.factor * draw_db + cal.offset;
        let rho = 10f64.powf(-corrected_db / 20.0);
        let leak = leakage_matrix(rho, stream.phase(), stream.phase());
        total = diag.mul(&leak).mul(&total);
    }
    total
}

/// Per-ray XPR in dB: co-polar over cross-polar power of the accumulated
/// polarization matrix. `None` when the ray carries no cross-polar energy
/// (e.g. pure LoS).
pub fn measured_xpr_db(gain: &PolGain) -> Option<f64> {
    let cross = gain.cross_power();
    if cross <= 0.0 {
        return None;
    }
    Some(10.0 * (gain.co_power() / cross).log10())
}

struct CachedRay {
    interactions: Vec<Interaction>,
    link_seed: u64,
    sig: u64,
}

/// Fit the XPR correction factor and offset so the empirical per-ray XPR
/// over NLoS-class rays of the given scene matches the calibration targets
/// (mean `target_mean_nlos_db`, standard deviation `target_std_db`).
///
/// Rays are collected from the deployment's links in deterministic order
/// until `min_rays` NLoS-class rays with at least one interaction are
/// available; the same counter-based draws are then re-weighted under each
/// candidate correction, so the fit itself is deterministic.
pub fn fit_xpr_calibration(
    scene: &Scene,
    deployment: &Deployment,
    budget: InteractionBudget,
    prune_loss_db: f64,
    seed: u64,
    targets: XprCalibration,
    min_rays: usize,
) -> XprCalibration {
    let tracer = Tracer::new(scene, budget, targets, prune_loss_db);
    let mut rays: Vec<CachedRay> = Vec::new();
    'collect: for ue in &deployment.ue_grid {
        for ap in &deployment.aps {
            if tracer.geometry.blocked(ap.position, ue.position) {
                // NLoS link: its rays carry the NLoS class mean
                let link_seed = crate::rng::derive_key(seed, &[ap.id as u64, ue.id as u64]);
                for path in tracer.trace_link(ap.position, ue.position, link_seed) {
                    if path.interactions.is_empty() {
                        continue;
                    }
                    let sig = path_signature(&path.interactions);
                    rays.push(CachedRay {
                        interactions: path.interactions,
                        link_seed,
                        sig,
                    });
                }
            }
            if rays.len() >= min_rays {
                break 'collect;
            }
        }
    }
    assert!(
        !rays.is_empty(),
        "XPR calibration needs at least one NLoS ray; scene has no shadowed links"
    );

    let measure = |cal: &XprCalibration| -> (f64, f64) {
        let mut xs = Vec::with_capacity(rays.len());
        for ray in &rays {
            let g = path_polarization(
                &tracer.geometry,
                &ray.interactions,
                false,
                cal,
                ray.link_seed,
                ray.sig,
                scene.carrier_hz,
            );
            if let Some(x) = measured_xpr_db(&g) {
                xs.push(x);
            }
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    };

    let mut cal = targets;
    cal.factor = 1.0;
    cal.offset = 0.0;
    for _ in 0..12 {
        let (mean, std) = measure(&cal);
        if (mean - targets.target_mean_nlos_db).abs() < 0.05
            && (std - targets.target_std_db).abs() < 0.05
        {
            break;
        }
        cal.factor *= (targets.target_std_db / std).clamp(0.25, 4.0);
        let (mean2, _) = measure(&cal);
        cal.offset += targets.target_mean_nlos_db - mean2;
        let _ = mean;
    }
    cal
}
