//! Planar geometry helpers shared by the world model and the attention grids.

use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

/// A point or vector in the world plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Direction angle in radians, `(-pi, pi]`.
    pub fn angle(self) -> f64 {
        libm::atan2(self.y, self.x)
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

/// Planar rotation by a fixed angle.
///
/// Components within 1e-12 of zero are snapped to exactly zero so that quarter
/// turns map coordinates by exact negation and swap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    cos: f64,
    sin: f64,
}

impl Rotation {
    pub fn new(angle: f64) -> Self {
        let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
        Self {
            cos: snap(libm::cos(angle)),
            sin: snap(libm::sin(angle)),
        }
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        Point2::new(
            p.x * self.cos - p.y * self.sin,
            p.x * self.sin + p.y * self.cos,
        )
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = libm::fmod(a, 2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Absolute angular difference in `[0, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Angle in degrees normalized to `[0, 360)`.
pub fn degrees_0_360(rad: f64) -> f64 {
    let deg = rad.to_degrees();
    let d = libm::fmod(deg, 360.0);
    let d = if d < 0.0 { d + 360.0 } else { d };
    if d >= 360.0 {
        0.0
    } else {
        d
    }
}

/// Closest point on segment `a`-`b` to `p`, with the segment parameter in `[0, 1]`.
pub fn project_on_segment(p: Point2, a: Point2, b: Point2) -> (Point2, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

/// Nearest point of a polyline to `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolylineProjection {
    pub point: Point2,
    pub distance: f64,
    /// Index of the segment holding the nearest point.
    pub segment: usize,
    /// Tangent direction of that segment, radians.
    pub tangent: f64,
}

/// Projects `p` onto a polyline of at least two points. The first segment wins ties.
pub fn project_on_polyline(p: Point2, line: &[Point2]) -> Option<PolylineProjection> {
    let mut best: Option<PolylineProjection> = None;
    for (i, w) in line.windows(2).enumerate() {
        let (q, _) = project_on_segment(p, w[0], w[1]);
        let d = p.distance(q);
        if best.is_none_or(|b| d < b.distance) {
            best = Some(PolylineProjection {
                point: q,
                distance: d,
                segment: i,
                tangent: (w[1] - w[0]).angle(),
            });
        }
    }
    best
}

/// Point-in-polygon test; points on the boundary count as inside.
pub fn polygon_contains(polygon: &[Point2], p: Point2) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    let ab = b - a;
    let ap = p - a;
    if ab.cross(ap).abs() > 1e-9 * (1.0 + ab.norm()) {
        return false;
    }
    let t = ap.dot(ab);
    t >= 0.0 && t <= ab.dot(ab)
}

fn orientation(a: Point2, b: Point2, c: Point2) -> i8 {
    let v = (b - a).cross(c - a);
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let o1 = orientation(p1, p2, q1);
    let o2 = orientation(p1, p2, q2);
    let o3 = orientation(q1, q2, p1);
    let o4 = orientation(q1, q2, p2);
    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && on_segment(q1, p1, p2))
        || (o2 == 0 && on_segment(q2, p1, p2))
        || (o3 == 0 && on_segment(p1, q1, q2))
        || (o4 == 0 && on_segment(p2, q1, q2))
}

/// True when the closed polygon has at least three vertices and no two
/// non-adjacent edges touch.
pub fn polygon_is_simple(polygon: &[Point2]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a1 = polygon[i];
        let a2 = polygon[(i + 1) % n];
        if a1 == a2 {
            return false;
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let b1 = polygon[j];
            let b2 = polygon[(j + 1) % n];
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}
