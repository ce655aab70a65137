//! Polarimetric ray tracer: LoS, specular reflections up to second order,
//! and single knife-edge diffraction around vertical obstacle edges, with
//! calibrated per-interaction XPR depolarization.
//!
//! Reflections use the image method against axis-aligned facets, so path
//! geometry is exact: the length of every reflected path equals the
//! distance from the iterated mirror image of the source to the receiver.
//! Diffraction paths are generated only where the connecting segment is
//! shadowed by the edge's owning obstacle; the lit-side diffracted residue
//! is omitted so line-of-sight energy is never double counted.

mod fresnel;
mod knife_edge;
mod xpr;

pub use fresnel::fresnel_coefficients;
pub use knife_edge::{
    fresnel_parameter, geometric_fresnel_parameter, knife_edge_coefficient, knife_edge_diffraction,
    knife_edge_loss_db,
};
pub use xpr::{fit_xpr_calibration, measured_xpr_db, PolGain};

use crate::geom::Vec3;
use crate::rng::derive_key;
use crate::scene::{Material, Scene};
use crate::units::{wavelength, SPEED_OF_LIGHT};

const GEOM_EPS: f64 = 1e-9;

/// Interaction limits for path enumeration. Hard-capped at two reflections
/// and one diffraction per path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InteractionBudget {
    pub max_reflections: usize,
    pub max_diffractions: usize,
}

impl Default for InteractionBudget {
    fn default() -> Self {
        InteractionBudget {
            max_reflections: 2,
            max_diffractions: 1,
        }
    }
}

impl InteractionBudget {
    pub fn los_only() -> Self {
        InteractionBudget {
            max_reflections: 0,
            max_diffractions: 0,
        }
    }
}

/// XPR correction parameters and calibration targets. The corrected
/// per-interaction cross-polarization ratio in dB is
/// `factor · draw + offset` with `draw ~ N(mean_class, std)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XprCalibration {
    pub factor: f64,
    pub offset: f64,
    pub target_mean_los_db: f64,
    pub target_mean_nlos_db: f64,
    pub target_std_db: f64,
}

impl Default for XprCalibration {
    fn default() -> Self {
        XprCalibration {
            factor: 1.0,
            offset: 0.0,
            target_mean_los_db: 12.0,
            target_mean_nlos_db: 11.0,
            target_std_db: 6.0,
        }
    }
}

impl XprCalibration {
    /// Effectively disables depolarization: the corrected XPR is +∞ dB.
    pub fn disabled() -> Self {
        XprCalibration {
            factor: 0.0,
            offset: f64::INFINITY,
            ..Default::default()
        }
    }
}

/// One interaction along a ray path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InteractionKind {
    /// Specular reflection off the referenced facet; `incidence` is the
    /// angle from the facet normal in radians.
    Reflection { facet: usize, incidence: f64 },
    /// Knife-edge diffraction around the referenced vertical edge with
    /// Fresnel parameter `nu`.
    Diffraction { edge: usize, nu: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interaction {
    pub kind: InteractionKind,
    pub point: Vec3,
}

/// One propagation path between an AP and a UE reference point.
#[derive(Clone, Debug)]
pub struct RayPath {
    pub interactions: Vec<Interaction>,
    /// Total polyline length, meters.
    pub length: f64,
    /// Propagation delay `length / c`, seconds.
    pub delay: f64,
    /// 2×2 complex polarization gain over the (V, H) basis; excludes
    /// free-space spreading and the frequency phase (see [`path_field`]).
    pub pol_gain: PolGain,
    pub is_los: bool,
    /// Unit departure direction at the transmitter.
    pub departure: Vec3,
    /// Unit incoming direction at the receiver.
    pub arrival: Vec3,
}

impl RayPath {
    /// Stable identifier for RNG stream keying: folds the interaction kinds
    /// and facet/edge references.
    pub fn signature(&self) -> u64 {
        path_signature(&self.interactions)
    }
}

pub(crate) fn path_signature(interactions: &[Interaction]) -> u64 {
    let mut tags = Vec::with_capacity(interactions.len() * 2 + 1);
    tags.push(interactions.len() as u64);
    for i in interactions {
        match i.kind {
            InteractionKind::Reflection { facet, .. } => {
                tags.push(1);
                tags.push(facet as u64);
            }
            InteractionKind::Diffraction { edge, .. } => {
                tags.push(2);
                tags.push(edge as u64);
            }
        }
    }
    derive_key(0x7061_7468, &tags)
}

/// Per-frequency field of a path: polarization gain times the free-space
/// spreading amplitude `λ/(4π·length)` and the phase `e^{−j2πf·delay}`.
pub fn path_field(path: &RayPath, frequency_hz: f64) -> PolGain {
    let amp = wavelength(frequency_hz) / (4.0 * std::f64::consts::PI * path.length);
    let phase =
        num_complex::Complex64::from_polar(amp, -std::f64::consts::TAU * frequency_hz * path.delay);
    path.pol_gain.scale(phase)
}

/// A planar axis-aligned reflecting facet.
#[derive(Clone, Debug)]
pub(crate) struct Facet {
    /// Normal axis: 0 = x, 1 = y, 2 = z.
    pub axis: usize,
    pub coord: f64,
    /// Outward normal sign along `axis` (into the propagation volume).
    pub normal: f64,
    /// Rectangle bounds on axes `(axis+1)%3` and `(axis+2)%3`.
    pub umin: f64,
    pub umax: f64,
    pub vmin: f64,
    pub vmax: f64,
    pub material: Material,
}

impl Facet {
    /// Mirror a point across the facet plane.
    pub fn mirror(&self, p: Vec3) -> Vec3 {
        p.with_axis(self.axis, 2.0 * self.coord - p.axis(self.axis))
    }

    /// Signed distance along the outward normal.
    fn side(&self, p: Vec3) -> f64 {
        self.normal * (p.axis(self.axis) - self.coord)
    }

    fn in_rect(&self, p: Vec3) -> bool {
        let u = p.axis((self.axis + 1) % 3);
        let v = p.axis((self.axis + 2) % 3);
        u >= self.umin - GEOM_EPS
            && u <= self.umax + GEOM_EPS
            && v >= self.vmin - GEOM_EPS
            && v <= self.vmax + GEOM_EPS
    }

    /// Intersection of the open segment a→b with the facet rectangle, when
    /// the segment strictly straddles the plane.
    fn intersect_segment(&self, a: Vec3, b: Vec3) -> Option<Vec3> {
        let pa = a.axis(self.axis) - self.coord;
        let pb = b.axis(self.axis) - self.coord;
        if pa * pb >= 0.0 {
            return None;
        }
        let t = pa / (pa - pb);
        if !(GEOM_EPS..=1.0 - GEOM_EPS).contains(&t) {
            return None;
        }
        let p = (a + (b - a) * t).with_axis(self.axis, self.coord);
        if self.in_rect(p) {
            Some(p)
        } else {
            None
        }
    }
}

/// A diffracting obstacle edge (a straight segment).
#[derive(Clone, Debug)]
pub(crate) struct Edge {
    pub a: Vec3,
    pub b: Vec3,
    /// Index of the owning obstacle in the scene.
    pub obstacle: usize,
}

/// Precomputed reflective facets and diffracting edges for a scene.
#[derive(Clone, Debug)]
pub(crate) struct SceneGeometry {
    pub facets: Vec<Facet>,
    pub edges: Vec<Edge>,
    pub obstacles: Vec<crate::geom::Aabb>,
}

impl SceneGeometry {
    pub fn new(scene: &Scene, include_horizontal_edges: bool) -> Self {
        let b = scene.bounds;
        let mut facets = Vec::new();
        let mut push =
            |axis: usize, coord: f64, normal: f64, lo: Vec3, hi: Vec3, material: &Material| {
                let u = (axis + 1) % 3;
                let v = (axis + 2) % 3;
                facets.push(Facet {
                    axis,
                    coord,
                    normal,
                    umin: lo.axis(u),
                    umax: hi.axis(u),
                    vmin: lo.axis(v),
                    vmax: hi.axis(v),
                    material: material.clone(),
                });
            };
        // room boundary: four walls, floor, ceiling (normals point inward)
        push(0, b.min.x, 1.0, b.min, b.max, &scene.wall_material);
        push(0, b.max.x, -1.0, b.min, b.max, &scene.wall_material);
        push(1, b.min.y, 1.0, b.min, b.max, &scene.wall_material);
        push(1, b.max.y, -1.0, b.min, b.max, &scene.wall_material);
        push(2, b.min.z, 1.0, b.min, b.max, &scene.floor_material);
        push(2, b.max.z, -1.0, b.min, b.max, &scene.ceiling_material);
        // obstacle faces (normals point away from the box)
        for ob in &scene.obstacles {
            let s = ob.shape;
            push(0, s.min.x, -1.0, s.min, s.max, &ob.material);
            push(0, s.max.x, 1.0, s.min, s.max, &ob.material);
            push(1, s.min.y, -1.0, s.min, s.max, &ob.material);
            push(1, s.max.y, 1.0, s.min, s.max, &ob.material);
            push(2, s.min.z, -1.0, s.min, s.max, &ob.material);
            push(2, s.max.z, 1.0, s.min, s.max, &ob.material);
        }

        let mut edges = Vec::new();
        for (oi, ob) in scene.obstacles.iter().enumerate() {
            let s = ob.shape;
            // vertical edges
            for (x, y) in [
                (s.min.x, s.min.y),
                (s.min.x, s.max.y),
                (s.max.x, s.min.y),
                (s.max.x, s.max.y),
            ] {
                edges.push(Edge {
                    a: Vec3::new(x, y, s.min.z),
                    b: Vec3::new(x, y, s.max.z),
                    obstacle: oi,
                });
            }
            if include_horizontal_edges {
                // rooftop edges along the top face borders
                let z = s.max.z;
                edges.push(Edge {
                    a: Vec3::new(s.min.x, s.min.y, z),
                    b: Vec3::new(s.max.x, s.min.y, z),
                    obstacle: oi,
                });
                edges.push(Edge {
                    a: Vec3::new(s.min.x, s.max.y, z),
                    b: Vec3::new(s.max.x, s.max.y, z),
                    obstacle: oi,
                });
                edges.push(Edge {
                    a: Vec3::new(s.min.x, s.min.y, z),
                    b: Vec3::new(s.min.x, s.max.y, z),
                    obstacle: oi,
                });
                edges.push(Edge {
                    a: Vec3::new(s.max.x, s.min.y, z),
                    b: Vec3::new(s.max.x, s.max.y, z),
                    obstacle: oi,
                });
            }
        }

        SceneGeometry {
            facets,
            edges,
            obstacles: scene.obstacles.iter().map(|o| o.shape).collect(),
        }
    }

    fn blocked(&self, a: Vec3, b: Vec3) -> bool {
        self.obstacles
            .iter()
            .any(|o| o.segment_crosses_interior(a, b))
    }

    fn polyline_clear(&self, points: &[Vec3]) -> bool {
        points.windows(2).all(|w| !self.blocked(w[0], w[1]))
    }
}

/// Mirror a point across a facet plane (the image method primitive).
pub fn image_reflect(scene: &Scene, facet_index: usize, point: Vec3) -> Vec3 {
    let geometry = SceneGeometry::new(scene, false);
    geometry.facets[facet_index].mirror(point)
}

/// Reusable tracer for one scene: precomputes facets and edges and carries
/// the interaction budget, pruning threshold, and XPR calibration.
#[derive(Clone, Debug)]
pub struct Tracer {
    pub(crate) geometry: SceneGeometry,
    pub budget: InteractionBudget,
    pub prune_loss_db: f64,
    pub calibration: XprCalibration,
    carrier_hz: f64,
}

/// Convenience wrapper over [`Tracer`] with the default calibration and
/// pruning threshold.
pub fn trace_link(
    scene: &Scene,
    ap_pos: Vec3,
    ue_pos: Vec3,
    budget: InteractionBudget,
    seed: u64,
) -> Vec<RayPath> {
    Tracer::new(scene, budget, XprCalibration::default(), 170.0).trace_link(ap_pos, ue_pos, seed)
}

impl Tracer {
    pub fn new(
        scene: &Scene,
        budget: InteractionBudget,
        calibration: XprCalibration,
        prune_loss_db: f64,
    ) -> Self {
        assert!(
            budget.max_reflections <= 2 && budget.max_diffractions <= 1,
            "interaction budget capped at 2 reflections + 1 diffraction"
        );
        Tracer {
            geometry: SceneGeometry::new(scene, false),
            budget,
            prune_loss_db,
            calibration,
            carrier_hz: scene.carrier_hz,
        }
    }

    pub fn with_horizontal_edges(mut self, scene: &Scene) -> Self {
        self.geometry = SceneGeometry::new(scene, true);
        self
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    /// Enumerate every path between the endpoints within the budget. The
    /// result is deterministic in (scene, endpoints, seed): candidate
    /// enumeration order is fixed and all random XPR draws come from
    /// counter-based streams keyed by the path signature.
    pub fn trace_link(&self, ap: Vec3, ue: Vec3, link_seed: u64) -> Vec<RayPath> {
        let geo = &self.geometry;
        let link_is_los = !geo.blocked(ap, ue);
        let mut candidates: Vec<(Vec<Vec3>, Vec<Interaction>)> = Vec::new();

        if link_is_los {
            candidates.push((vec![ap, ue], Vec::new()));
        }

        // pure reflection chains
        let nf = geo.facets.len();
        if self.budget.max_reflections >= 1 {
            for f in 0..nf {
                if let Some(c) = self.reflection_chain(ap, &[f], ue) {
                    candidates.push(c);
                }
            }
        }
        if self.budget.max_reflections >= 2 {
            for f1 in 0..nf {
                for f2 in 0..nf {
                    if f1 == f2 {
                        continue;
                    }
                    if let Some(c) = self.reflection_chain(ap, &[f1, f2], ue) {
                        candidates.push(c);
                    }
                }
            }
        }

        // chains containing one diffraction
        if self.budget.max_diffractions >= 1 {
            let max_r = self.budget.max_reflections;
            let mut pre_seqs: Vec<Vec<usize>> = vec![vec![]];
            if max_r >= 1 {
                pre_seqs.extend((0..nf).map(|f| vec![f]));
            }
            if max_r >= 2 {
                for f1 in 0..nf {
                    for f2 in 0..nf {
                        if f1 != f2 {
                            pre_seqs.push(vec![f1, f2]);
                        }
                    }
                }
            }
            for pre in &pre_seqs {
                let s_img = pre.iter().fold(ap, |p, &f| geo.facets[f].mirror(p));
                for post in &pre_seqs {
                    if pre.len() + post.len() > max_r {
                        continue;
                    }
                    let t_img = post.iter().rev().fold(ue, |p, &f| geo.facets[f].mirror(p));
                    for ei in 0..geo.edges.len() {
                        if let Some(c) = self.diffraction_chain(ap, pre, s_img, ei, post, t_img, ue)
                        {
                            candidates.push(c);
                        }
                    }
                }
            }
        }

        // deduplicate geometrically identical paths, first occurrence wins
        let mut seen = std::collections::HashSet::new();
        let mut paths = Vec::new();
        for (waypoints, interactions) in candidates {
            let key: Vec<(i64, u8)> = waypoints
                .iter()
                .flat_map(|p| [(quant(p.x), 0u8), (quant(p.y), 1u8), (quant(p.z), 2u8)])
                .collect();
            if !seen.insert(key) {
                continue;
            }
            if let Some(path) = self.finalize(waypoints, interactions, link_is_los, link_seed) {
                paths.push(path);
            }
        }
        paths
    }

    /// Image-method backtrack for a reflection chain. Returns the full
    /// waypoint polyline (endpoints included) and the interactions.
    fn reflection_chain(
        &self,
        source: Vec3,
        seq: &[usize],
        target: Vec3,
    ) -> Option<(Vec<Vec3>, Vec<Interaction>)> {
        let geo = &self.geometry;
        let k = seq.len();
        // images of the source through successive facets
        let mut images = Vec::with_capacity(k + 1);
        images.push(source);
        for &f in seq {
            let last = *images.last().unwrap();
            images.push(geo.facets[f].mirror(last));
        }
        // backtrack reflection points from the target side
        let mut points = vec![Vec3::ZERO; k];
        let mut next = target;
        for i in (0..k).rev() {
            let w = geo.facets[seq[i]].intersect_segment(images[i + 1], next)?;
            points[i] = w;
            next = w;
        }
        // specular validity: adjacent waypoints strictly on the front side
        let mut polyline = Vec::with_capacity(k + 2);
        polyline.push(source);
        polyline.extend_from_slice(&points);
        polyline.push(target);
        for (i, &f) in seq.iter().enumerate() {
            let facet = &geo.facets[f];
            if facet.side(polyline[i]) <= GEOM_EPS || facet.side(polyline[i + 2]) <= GEOM_EPS {
                return None;
            }
        }
        if !geo.polyline_clear(&polyline) {
            return None;
        }
        let interactions = seq
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                let incoming = (polyline[i + 1] - polyline[i]).normalized();
                let cos_i = incoming.axis(geo.facets[f].axis).abs().clamp(0.0, 1.0);
                Interaction {
                    kind: InteractionKind::Reflection {
                        facet: f,
                        incidence: cos_i.acos(),
                    },
                    point: polyline[i + 1],
                }
            })
            .collect();
        Some((polyline, interactions))
    }

    /// A chain of `pre` reflections, one edge diffraction, then `post`
    /// reflections. `s_img`/`t_img` are the endpoint images through the
    /// pre/post facet sequences.
    #[allow(clippy::too_many_arguments)]
    fn diffraction_chain(
        &self,
        source: Vec3,
        pre: &[usize],
        s_img: Vec3,
        edge_index: usize,
        post: &[usize],
        t_img: Vec3,
        target: Vec3,
    ) -> Option<(Vec<Vec3>, Vec<Interaction>)> {
        let geo = &self.geometry;
        let edge = &geo.edges[edge_index];
        // optimal diffraction point on the edge in the unfolded frame
        let axis = (edge.b - edge.a).normalized();
        let len = edge.a.distance(edge.b);
        let sp = (s_img - edge.a).dot(axis);
        let sq = (t_img - edge.a).dot(axis);
        let rho_p = ((s_img - edge.a) - axis * sp).norm();
        let rho_q = ((t_img - edge.a) - axis * sq).norm();
        if rho_p < 1e-9 || rho_q < 1e-9 {
            return None;
        }
        let s_star = sp + (sq - sp) * rho_p / (rho_p + rho_q);
        // require a true edge crossing, not a corner graze
        if s_star <= GEOM_EPS * len || s_star >= len * (1.0 - GEOM_EPS) {
            return None;
        }
        let e = edge.a + axis * s_star;

        // resolve reflection points on both sides of the edge
        let (pre_line, mut interactions) = if pre.is_empty() {
            (vec![source, e], Vec::new())
        } else {
            self.reflection_chain(source, pre, e)?
        };
        let (post_line, post_inters) = if post.is_empty() {
            (vec![e, target], Vec::new())
        } else {
            self.reflection_chain(e, post, target)?
        };

        // local shadow test: the connecting segment must be blocked by the
        // owning obstacle, otherwise this edge does not bend the path
        let a_prev = pre_line[pre_line.len() - 2];
        let b_next = post_line[1];
        if !geo.obstacles[edge.obstacle].segment_crosses_interior(a_prev, b_next) {
            return None;
        }

        if a_prev.distance(e) < 1e-9 || e.distance(b_next) < 1e-9 {
            return None;
        }
        let nu = knife_edge::geometric_fresnel_parameter(a_prev, e, b_next, true, self.carrier_hz);

        let mut polyline = pre_line;
        interactions.push(Interaction {
            kind: InteractionKind::Diffraction {
                edge: edge_index,
                nu,
            },
            point: e,
        });
        polyline.extend_from_slice(&post_line[1..]);
        interactions.extend(post_inters);
        if !geo.polyline_clear(&polyline) {
            return None;
        }
        Some((polyline, interactions))
    }

    /// Attach polarization, length, and pruning to a validated polyline.
    fn finalize(
        &self,
        polyline: Vec<Vec3>,
        interactions: Vec<Interaction>,
        link_is_los: bool,
        link_seed: u64,
    ) -> Option<RayPath> {
        let length: f64 = polyline.windows(2).map(|w| w[0].distance(w[1])).sum();
        if length < 1e-9 {
            return None;
        }
        let sig = path_signature(&interactions);
        let pol_gain = xpr::path_polarization(
            &self.geometry,
            &interactions,
            link_is_los,
            &self.calibration,
            link_seed,
            sig,
            self.carrier_hz,
        );
        if !pol_gain.is_finite() {
            return None;
        }
        // prune on free-space + interaction loss at the carrier
        let spreading = wavelength(self.carrier_hz) / (4.0 * std::f64::consts::PI * length);
        let peak = pol_gain.max_abs() * spreading;
        if crate::units::amplitude_to_db(peak) < -self.prune_loss_db {
            return None;
        }
        let n = polyline.len();
        Some(RayPath {
            departure: (polyline[1] - polyline[0]).normalized(),
            arrival: (polyline[n - 1] - polyline[n - 2]).normalized(),
            interactions,
            length,
            delay: length / SPEED_OF_LIGHT,
            pol_gain,
            is_los: polyline.len() == 2,
        })
    }
}

fn quant(x: f64) -> i64 {
    (x * 1e7).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use crate::scene::{Material, Obstacle};

    fn room(x: f64, y: f64, z: f64, obstacles: Vec<Obstacle>) -> Scene {
        Scene::build(Scene {
            name: "t".into(),
            bounds: Aabb::new(Vec3::ZERO, Vec3::new(x, y, z)),
            wall_material: Material::concrete(),
            floor_material: Material::concrete(),
            ceiling_material: Material::concrete(),
            obstacles,
            carrier_hz: 3.7e9,
            bandwidth_hz: 20e6,
            rb_count: 52,
            subcarriers_per_rb: 12,
            subcarrier_spacing_hz: 30e3,
        })
        .unwrap()
    }

    fn boxed(name: &str, min: Vec3, max: Vec3) -> Obstacle {
        Obstacle {
            name: name.into(),
            shape: Aabb::new(min, max),
            material: Material::metal(),
        }
    }

    #[test]
    fn image_reflect_floor_flips_z() {
        let scene = room(10.0, 10.0, 4.0, vec![]);
        // facet 4 is the floor (z = 0)
        let p = image_reflect(&scene, 4, Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(p, Vec3::new(1.0, 2.0, -3.0));
    }

    #[test]
    fn image_reflect_wall_x() {
        let scene = room(5.0, 10.0, 4.0, vec![]);
        // facet 1 is the x = 5 wall
        let p = image_reflect(&scene, 1, Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(p, Vec3::new(10.0, 0.0, 2.0));
    }

    #[test]
    fn double_reflection_composes_sequentially() {
        // reflect (1,0,0) across x=0 then the result across x=5:
        // first flip → (−1,0,0), then 2·5−(−1) = 11 → (11,0,0)
        let scene = room(5.0, 10.0, 4.0, vec![]);
        let p0 = Vec3::new(1.0, 5.0, 2.0);
        let p1 = image_reflect(&scene, 0, p0);
        assert_eq!(p1.x, -1.0);
        let p2 = image_reflect(&scene, 1, p1);
        assert_eq!(p2.x, 11.0);
    }

    #[test]
    fn empty_room_first_order_count_is_seven() {
        // 1 LoS + one reflection per room facet
        let scene = room(10.0, 8.0, 4.0, vec![]);
        let budget = InteractionBudget {
            max_reflections: 1,
            max_diffractions: 0,
        };
        let paths = trace_link(
            &scene,
            Vec3::new(2.0, 2.0, 2.0),
            Vec3::new(7.0, 5.0, 2.0),
            budget,
            1,
        );
        assert_eq!(paths.len(), 7);
        assert_eq!(paths.iter().filter(|p| p.is_los).count(), 1);

        // oracle: each facet's mirror image must reproduce one path length
        let geo = SceneGeometry::new(&scene, false);
        let ap = Vec3::new(2.0, 2.0, 2.0);
        let ue = Vec3::new(7.0, 5.0, 2.0);
        let mut oracle: Vec<f64> = geo
            .facets
            .iter()
            .map(|f| f.mirror(ap).distance(ue))
            .collect();
        oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut got: Vec<f64> = paths
            .iter()
            .filter(|p| !p.is_los)
            .map(|p| p.length)
            .collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, o) in got.iter().zip(oracle.iter()) {
            assert!((g - o).abs() < 1e-9, "{g} vs oracle {o}");
        }
    }

    #[test]
    fn reflected_length_matches_mirror_distance() {
        // AP (0,0,2) reflecting off the x=5 wall to UE (0,4,2):
        // image at (10,0,2), length √(10² + 4²) = 10.770
        let scene = room(5.0, 6.0, 4.0, vec![]);
        let ap = Vec3::new(0.1, 0.1, 2.0);
        let ue = Vec3::new(0.1, 4.1, 2.0);
        let budget = InteractionBudget {
            max_reflections: 1,
            max_diffractions: 0,
        };
        let paths = trace_link(&scene, ap, ue, budget, 1);
        // find the path reflecting off the x = 5 wall (facet 1)
        let p = paths
            .iter()
            .find(|p| {
                matches!(
                    p.interactions.first().map(|i| i.kind),
                    Some(InteractionKind::Reflection { facet: 1, .. })
                )
            })
            .expect("x=5 reflection present");
        let expect = ((2.0 * (5.0 - 0.1)) * (2.0 * (5.0 - 0.1)) + 16.0f64).sqrt();
        assert!((p.length - expect).abs() < 1e-9, "{} vs {expect}", p.length);
    }

    #[test]
    fn all_reflection_paths_satisfy_image_property() {
        let scene = room(
            12.0,
            9.0,
            4.0,
            vec![boxed(
                "rack",
                Vec3::new(5.0, 3.0, 0.0),
                Vec3::new(7.0, 6.0, 3.0),
            )],
        );
        let ap = Vec3::new(1.0, 1.0, 3.5);
        let ue = Vec3::new(10.5, 7.5, 1.5);
        let paths = trace_link(&scene, ap, ue, InteractionBudget::default(), 9);
        assert!(!paths.is_empty());
        let geo = SceneGeometry::new(&scene, false);
        for p in paths.iter().filter(|p| {
            p.interactions
                .iter()
                .all(|i| matches!(i.kind, InteractionKind::Reflection { .. }))
                && !p.is_los
        }) {
            // iterated mirror image of the source
            let mut img = ap;
            for i in &p.interactions {
                if let InteractionKind::Reflection { facet, .. } = i.kind {
                    img = geo.facets[facet].mirror(img);
                }
            }
            let mirror_len = img.distance(ue);
            assert!(
                (p.length - mirror_len).abs() <= 1e-9 * mirror_len,
                "polyline {} vs image distance {}",
                p.length,
                mirror_len
            );
            // specular law at each bounce
            for (idx, i) in p.interactions.iter().enumerate() {
                if let InteractionKind::Reflection { facet, incidence } = i.kind {
                    let f = &geo.facets[facet];
                    let prev = if idx == 0 {
                        ap
                    } else {
                        p.interactions[idx - 1].point
                    };
                    let next = if idx + 1 == p.interactions.len() {
                        ue
                    } else {
                        p.interactions[idx + 1].point
                    };
                    let din = (i.point - prev).normalized();
                    let dout = (next - i.point).normalized();
                    let cos_in = din.axis(f.axis).abs();
                    let cos_out = dout.axis(f.axis).abs();
                    assert!((cos_in - cos_out).abs() < 1e-9, "specular law violated");
                    assert!((incidence - cos_in.clamp(0.0, 1.0).acos()).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn wall_with_edge_forces_diffraction() {
        // full-height wall splitting the room, one free end at y = 6; the
        // endpoints sit diagonally so a single bend wraps the free corner
        let scene = room(
            10.0,
            10.0,
            4.0,
            vec![boxed(
                "wall",
                Vec3::new(4.9, 0.0, 0.0),
                Vec3::new(5.1, 6.0, 4.0),
            )],
        );
        let ap = Vec3::new(2.0, 3.0, 2.0);
        let ue = Vec3::new(8.0, 6.5, 2.0);
        let budget = InteractionBudget {
            max_reflections: 0,
            max_diffractions: 1,
        };
        let paths = trace_link(&scene, ap, ue, budget, 5);
        assert!(paths.iter().all(|p| !p.is_los), "LoS must be blocked");
        assert!(
            paths
                .iter()
                .any(|p| matches!(p.interactions[0].kind, InteractionKind::Diffraction { .. })),
            "expected a diffraction path around the free edge"
        );
        for p in &paths {
            if let InteractionKind::Diffraction { nu, .. } = p.interactions[0].kind {
                assert!(nu > 0.0, "shadow-side diffraction must have positive ν");
                // bent path is longer than the straight line
                assert!(p.length > ap.distance(ue));
            }
        }
    }

    #[test]
    fn los_path_has_identity_polarization() {
        let scene = room(10.0, 8.0, 4.0, vec![]);
        let paths = trace_link(
            &scene,
            Vec3::new(2.0, 2.0, 2.0),
            Vec3::new(7.0, 5.0, 2.0),
            InteractionBudget::los_only(),
            1,
        );
        assert_eq!(paths.len(), 1);
        let p = &paths[0];
        assert!(p.is_los);
        assert!(p.interactions.is_empty());
        let g = p.pol_gain;
        assert!((g.0[0][0] - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((g.0[1][1] - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(g.0[0][1].norm() < 1e-15 && g.0[1][0].norm() < 1e-15);
        // delay consistency
        assert!((p.delay - p.length / SPEED_OF_LIGHT).abs() <= 1e-15 * p.delay.abs());
    }

    #[test]
    fn trace_is_deterministic() {
        let scene = room(
            12.0,
            9.0,
            4.0,
            vec![boxed(
                "rack",
                Vec3::new(5.0, 3.0, 0.0),
                Vec3::new(7.0, 6.0, 3.0),
            )],
        );
        let ap = Vec3::new(1.0, 1.0, 3.5);
        let ue = Vec3::new(10.5, 7.5, 1.5);
        let a = trace_link(&scene, ap, ue, InteractionBudget::default(), 17);
        let b = trace_link(&scene, ap, ue, InteractionBudget::default(), 17);
        assert_eq!(a.len(), b.len());
        for (pa, pb) in a.iter().zip(b.iter()) {
            assert_eq!(pa.length.to_bits(), pb.length.to_bits());
            for (ga, gb) in pa
                .pol_gain
                .0
                .iter()
                .flatten()
                .zip(pb.pol_gain.0.iter().flatten())
            {
                assert_eq!(ga.re.to_bits(), gb.re.to_bits());
                assert_eq!(ga.im.to_bits(), gb.im.to_bits());
            }
        }
    }

    #[test]
    fn reflection_only_paths_are_passive() {
        // pol gain entries never exceed the free-space amplitude of the
        // same length (interactions only attenuate)
        let scene = room(
            12.0,
            9.0,
            4.0,
            vec![boxed(
                "rack",
                Vec3::new(5.0, 3.0, 0.0),
                Vec3::new(7.0, 6.0, 3.0),
            )],
        );
        let paths = trace_link(
            &scene,
            Vec3::new(1.0, 1.0, 3.5),
            Vec3::new(10.5, 7.5, 1.5),
            InteractionBudget {
                max_reflections: 2,
                max_diffractions: 0,
            },
            23,
        );
        for p in &paths {
            assert!(
                p.pol_gain.max_abs() <= 1.0 + 1e-12,
                "entry {}",
                p.pol_gain.max_abs()
            );
        }
    }

    #[test]
    fn path_field_matches_friis_at_10m() {
        let p = RayPath {
            interactions: vec![],
            length: 10.0,
            delay: 10.0 / SPEED_OF_LIGHT,
            pol_gain: PolGain::IDENTITY,
            is_los: true,
            departure: Vec3::new(1.0, 0.0, 0.0),
            arrival: Vec3::new(1.0, 0.0, 0.0),
        };
        let g = path_field(&p, 3.7e9);
        let loss_db = -crate::units::amplitude_to_db(g.0[0][0].norm());
        assert!((loss_db - 63.81).abs() < 0.01, "Friis 10 m: {loss_db}");

        let p1 = RayPath {
            length: 1.0,
            delay: 1.0 / SPEED_OF_LIGHT,
            ..p
        };
        let loss1 = -crate::units::amplitude_to_db(path_field(&p1, 3.7e9).0[0][0].norm());
        assert!((loss1 - 43.81).abs() < 0.01, "Friis 1 m: {loss1}");
    }

    #[test]
    fn path_field_phase_law_across_frequencies() {
        let p = RayPath {
            interactions: vec![],
            length: 12.3,
            delay: 12.3 / SPEED_OF_LIGHT,
            pol_gain: PolGain::IDENTITY,
            is_los: true,
            departure: Vec3::new(1.0, 0.0, 0.0),
            arrival: Vec3::new(1.0, 0.0, 0.0),
        };
        let f1 = 3.7e9;
        let df = 360e3;
        let g1 = path_field(&p, f1).0[0][0];
        let g2 = path_field(&p, f1 + df).0[0][0];
        let measured = (g2 / g1).arg();
        let expected = -(std::f64::consts::TAU * df * p.delay).rem_euclid(std::f64::consts::TAU);
        let wrapped = (measured - expected).rem_euclid(std::f64::consts::TAU);
        let dist = wrapped.min(std::f64::consts::TAU - wrapped);
        assert!(dist < 1e-6, "phase difference {measured} vs {expected}");
    }

    #[test]
    fn budget_restricts_interaction_counts() {
        let scene = room(
            12.0,
            9.0,
            4.0,
            vec![boxed(
                "rack",
                Vec3::new(5.0, 3.0, 0.0),
                Vec3::new(7.0, 6.0, 3.0),
            )],
        );
        let paths = trace_link(
            &scene,
            Vec3::new(1.0, 1.0, 3.5),
            Vec3::new(10.5, 7.5, 1.5),
            InteractionBudget::default(),
            3,
        );
        for p in &paths {
            let refl = p
                .interactions
                .iter()
                .filter(|i| matches!(i.kind, InteractionKind::Reflection { .. }))
                .count();
            let diff = p.interactions.len() - refl;
            assert!(refl <= 2 && diff <= 1);
            assert_eq!(p.is_los, p.interactions.is_empty());
        }
    }

    #[test]
    fn horizontal_edges_enable_over_the_top_paths() {
        // low box in a tall room; the receiver sits high behind it so a
        // single bend over the near top edge clears the far side
        let scene = room(
            10.0,
            10.0,
            6.0,
            vec![boxed(
                "cabinet",
                Vec3::new(4.0, 4.0, 0.0),
                Vec3::new(6.0, 5.0, 3.0),
            )],
        );
        let ap = Vec3::new(5.0, 2.0, 1.0);
        let ue = Vec3::new(5.0, 8.0, 5.5);
        let budget = InteractionBudget {
            max_reflections: 0,
            max_diffractions: 1,
        };
        assert!(scene.los_blocked(ap, ue));

        let vertical_only =
            Tracer::new(&scene, budget, XprCalibration::default(), 170.0).trace_link(ap, ue, 4);
        let with_tops = Tracer::new(&scene, budget, XprCalibration::default(), 170.0)
            .with_horizontal_edges(&scene)
            .trace_link(ap, ue, 4);
        assert!(with_tops.len() > vertical_only.len());

        // the extra path bends at the top face (z = 3) strictly between the
        // box corners, which no vertical edge can produce
        let over_top = with_tops.iter().any(|p| {
            p.interactions.iter().any(|i| {
                matches!(i.kind, InteractionKind::Diffraction { .. })
                    && (i.point.z - 3.0).abs() < 1e-9
                    && i.point.x > 4.0 + 1e-6
                    && i.point.x < 6.0 - 1e-6
            })
        });
        assert!(over_top, "expected a rooftop diffraction path");
    }
}
