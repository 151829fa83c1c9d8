//! Planar geometry in the bird's-eye-view frame.
//!
//! Angles are in degrees, measured counter-clockwise from +x. A positive
//! bearing therefore means "to the left".

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Direction of the vector in degrees, in (-180, 180].
    pub fn angle_deg(self) -> f64 {
        self.y.atan2(self.x).to_degrees()
    }

    /// Unit vector pointing along `deg`.
    pub fn from_angle_deg(deg: f64) -> Self {
        let r = deg.to_radians();
        Self::new(r.cos(), r.sin())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn midpoint(&self) -> Vec2 {
        (self.a + self.b) * 0.5
    }

    /// Orientation of the undirected line, in [0, 180).
    pub fn orientation_deg(&self) -> f64 {
        let d = (self.b - self.a).angle_deg();
        d.rem_euclid(180.0)
    }

    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        let ab = self.b - self.a;
        let len2 = ab.dot(ab);
        if len2 == 0.0 {
            return p.dist(self.a);
        }
        let t = ((p - self.a).dot(ab) / len2).clamp(0.0, 1.0);
        p.dist(self.a + ab * t)
    }
}

/// Signed difference `to - from` wrapped into (-180, 180].
pub fn wrap_deg(deg: f64) -> f64 {
    let mut d = deg.rem_euclid(360.0);
    if d > 180.0 {
        d -= 360.0;
    }
    d
}

/// Smallest angle between two undirected lines, in [0, 90].
pub fn line_angle_between(a_deg: f64, b_deg: f64) -> f64 {
    let d = (a_deg - b_deg).rem_euclid(180.0);
    d.min(180.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_deg(180.0), 180.0);
        assert_eq!(wrap_deg(-180.0), 180.0);
        assert_eq!(wrap_deg(270.0), -90.0);
        assert_eq!(wrap_deg(30.0), 30.0);
    }

    #[test]
    fn line_angles_ignore_direction() {
        assert!((line_angle_between(10.0, 190.0)).abs() < 1e-12);
        assert!((line_angle_between(0.0, 100.0) - 80.0).abs() < 1e-12);
        let s = Segment::new(Vec2::new(1.0, 1.0), Vec2::new(0.0, 0.0));
        assert!((s.orientation_deg() - 45.0).abs() < 1e-12);
    }

    #[test]
    fn point_segment_distance_clamps_to_ends() {
        let s = Segment::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0));
        assert!((s.distance_to_point(Vec2::new(1.0, 1.0)) - 1.0).abs() < 1e-12);
        assert!((s.distance_to_point(Vec2::new(3.0, 0.0)) - 1.0).abs() < 1e-12);
    }
}
