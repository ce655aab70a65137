//! 3D vector and axis-aligned box primitives.
//!
//! Obstacles and room facets are axis-aligned throughout, which keeps
//! image-method reflection and slab intersection exact.

use serde::{Deserialize, Serialize};

/// A 3D point or direction in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        debug_assert!(n > 0.0, "cannot normalize a zero vector");
        self * (1.0 / n)
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Component along the given axis (0 = x, 1 = y, 2 = z).
    pub fn axis(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    /// Copy with the given axis component replaced.
    pub fn with_axis(mut self, axis: usize, value: f64) -> Vec3 {
        match axis {
            0 => self.x = value,
            1 => self.y = value,
            _ => self.z = value,
        }
        self
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned box, `min` componentwise below `max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn is_valid(&self) -> bool {
        self.min.x < self.max.x && self.min.y < self.max.y && self.min.z < self.max.z
    }

    /// Closed containment test (boundary counts as inside).
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Whether `other` lies entirely within this box (touching is allowed).
    pub fn encloses(&self, other: &Aabb) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Open-interior slab test: does the segment `a`→`b` pass through the
    /// strict interior of the box? Grazing a face, edge, or corner at exact
    /// tangency does not count, and neither do the segment endpoints
    /// themselves touching the surface.
    pub fn segment_crosses_interior(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let mut t_enter = 0.0f64;
        let mut t_exit = 1.0f64;
        for axis in 0..3 {
            let da = d.axis(axis);
            let pa = a.axis(axis);
            let (lo, hi) = (self.min.axis(axis), self.max.axis(axis));
            if da.abs() < 1e-15 {
                // parallel to this slab: on or outside the closed slab means
                // no interior crossing along this axis
                if pa <= lo || pa >= hi {
                    return false;
                }
            } else {
                let inv = 1.0 / da;
                let (mut t0, mut t1) = ((lo - pa) * inv, (hi - pa) * inv);
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                t_enter = t_enter.max(t0);
                t_exit = t_exit.min(t1);
                if t_enter >= t_exit {
                    return false;
                }
            }
        }
        // strict inequality makes the interior test open: the overlap
        // interval must have positive length inside (0, 1)
        t_enter < t_exit && t_exit > 1e-12 && t_enter < 1.0 - 1e-12
    }
}

/// Shortest distance from point `p` to the infinite line through `a` and `b`.
pub fn point_line_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let d = b - a;
    let len = d.norm();
    if len < 1e-15 {
        return p.distance(a);
    }
    (p - a).cross(d * (1.0 / len)).norm()
}
