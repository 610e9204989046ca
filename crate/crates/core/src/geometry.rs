//! Planar rigid motions and poses in pixel space.
//!
//! Pixel coordinates follow image convention: x grows to the right, y grows
//! downward, origin at the top-left pixel. Angles are in radians and are
//! kept in the half-open interval (-π, π].

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Wraps an angle into (-π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Absolute angular difference folded into [0, π].
pub fn angle_distance(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Rotates about the origin.
    pub fn rotated(self, theta: f64) -> Point2 {
        let (s, c) = theta.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// A 3-DoF rigid motion `p ↦ R(theta)·p + t` in pixel space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform2D {
    pub tx: f64,
    pub ty: f64,
    pub theta: f64,
}

impl Default for RigidTransform2D {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform2D {
    pub fn new(tx: f64, ty: f64, theta: f64) -> Self {
        Self {
            tx,
            ty,
            theta: normalize_angle(theta),
        }
    }

    pub const fn identity() -> Self {
        Self {
            tx: 0.0,
            ty: 0.0,
            theta: 0.0,
        }
    }

    /// Rotation by `theta` about `center`, followed by no translation.
    pub fn rotation_about(center: Point2, theta: f64) -> Self {
        let rc = center.rotated(theta);
        Self::new(center.x - rc.x, center.y - rc.y, theta)
    }

    pub fn translation(&self) -> Point2 {
        Point2::new(self.tx, self.ty)
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        p.rotated(self.theta) + self.translation()
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform2D) -> RigidTransform2D {
        let t = other.translation().rotated(self.theta) + self.translation();
        RigidTransform2D::new(t.x, t.y, self.theta + other.theta)
    }

    pub fn inverse(&self) -> RigidTransform2D {
        let t = self.translation().rotated(-self.theta) * -1.0;
        RigidTransform2D::new(t.x, t.y, -self.theta)
    }

    /// Applies the motion to a pose: the centroid is moved and the
    /// orientation is advanced by `theta`.
    pub fn apply_pose(&self, pose: &Pose2D) -> Pose2D {
        let c = self.apply(pose.centroid());
        Pose2D::new(c.x, c.y, pose.theta + self.theta)
    }

    pub fn approx_eq(&self, other: &RigidTransform2D, tol: f64) -> bool {
        (self.tx - other.tx).abs() <= tol
            && (self.ty - other.ty).abs() <= tol
            && angle_distance(self.theta, other.theta) <= tol
    }
}

/// Placement of a canonical mask: its centroid lands at
/// `(centroid_x, centroid_y)` and it is rotated by `theta` about that point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(centroid_x: f64, centroid_y: f64, theta: f64) -> Self {
        Self {
            centroid_x,
            centroid_y,
            theta: normalize_angle(theta),
        }
    }

    pub fn at(c: Point2, theta: f64) -> Self {
        Self::new(c.x, c.y, theta)
    }

    pub fn centroid(&self) -> Point2 {
        Point2::new(self.centroid_x, self.centroid_y)
    }

    /// True when centroids agree within `pos_tol` pixels and orientations
    /// within `angle_tol` radians.
    pub fn approx_eq(&self, other: &Pose2D, pos_tol: f64, angle_tol: f64) -> bool {
        self.centroid().distance(other.centroid()) <= pos_tol
            && angle_distance(self.theta, other.theta) <= angle_tol
    }
}

/// Inclusive pixel rectangle describing the usable workspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: i64,
    pub min_y: i64,
    pub max_x: i64,
    pub max_y: i64,
}

impl Bounds {
    pub fn new(min_x: i64, min_y: i64, max_x: i64, max_y: i64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn width(&self) -> i64 {
        self.max_x - self.min_x + 1
    }

    pub fn height(&self) -> i64 {
        self.max_y - self.min_y + 1
    }

    pub fn area(&self) -> i64 {
        self.width().max(0) * self.height().max(0)
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            (self.min_x + self.max_x) as f64 / 2.0,
            (self.min_y + self.max_y) as f64 / 2.0,
        )
    }

    pub fn contains_point(&self, p: Point2) -> bool {
        p.x >= self.min_x as f64
            && p.x <= self.max_x as f64
            && p.y >= self.min_y as f64
            && p.y <= self.max_y as f64
    }

    pub fn contains_pixel(&self, x: i64, y: i64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}
