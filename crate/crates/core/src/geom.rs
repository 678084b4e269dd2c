//! Points, disks, rays, circles and the radius field `Q`.
//!
//! Set-membership tests compare at the boundary with exact floating-point
//! comparisons: an open disk excludes `|z - c| == radius`, a closed disk
//! includes it, and no tolerance is applied anywhere.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub re: f64,
    pub im: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { re: 0.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Point { re, im }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point::new(r * c, r * s)
    }

    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Argument in `[0, 2π)`.
    pub fn arg(self) -> f64 {
        normalize_angle(self.im.atan2(self.re))
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.re * other.re + self.im * other.im
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.re * k, self.im * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.re, -self.im)
    }
}

/// Maps any finite angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// A disk `D(center, radius)` (open) or `D̄(center, radius)` (closed).
/// An open disk of radius zero is the empty set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
    pub closed: bool,
}

impl Disk {
    pub fn open(center: Point, radius: f64) -> Self {
        debug_assert!(radius >= 0.0);
        Disk { center, radius, closed: false }
    }

    pub fn closed(center: Point, radius: f64) -> Self {
        debug_assert!(radius >= 0.0);
        Disk { center, radius, closed: true }
    }

    pub fn is_empty(&self) -> bool {
        !self.closed && self.radius == 0.0
    }

    pub fn contains(&self, z: Point) -> bool {
        disk_contains(self, z)
    }
}

pub fn disk_contains(d: &Disk, z: Point) -> bool {
    let dist = z.dist(d.center);
    if d.closed {
        dist <= d.radius
    } else {
        dist < d.radius
    }
}

/// A ray `{anchor + s·e^{i·angle} : s ≥ 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub anchor: Point,
    angle: f64,
}

impl Ray {
    pub fn new(anchor: Point, angle: f64) -> Self {
        Ray { anchor, angle: normalize_angle(angle) }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn direction(&self) -> Point {
        Point::polar(1.0, self.angle)
    }

    pub fn at(&self, s: f64) -> Point {
        self.anchor + self.direction() * s
    }
}

/// The shrinking radius field `Q(z) = (1+|z|)^{-q}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusFunctionQ {
    q: f64,
}

impl RadiusFunctionQ {
    pub fn new(q: f64) -> crate::Result<Self> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(crate::Error::pre(format!("radius exponent q must be finite and >= 0, got {q}")));
        }
        Ok(RadiusFunctionQ { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn eval(&self, z: Point) -> f64 {
        q_radius(self, z)
    }

    /// `Q` as a function of the modulus `|z|`.
    pub fn at_modulus(&self, modulus: f64) -> f64 {
        if self.q == 0.0 {
            1.0
        } else {
            (1.0 + modulus).powf(-self.q)
        }
    }
}

pub fn q_radius(rq: &RadiusFunctionQ, z: Point) -> f64 {
    rq.at_modulus(z.norm())
}

/// An angular interval `[start, end)` with `start ∈ [0, 2π)` and
/// `end ≤ start + 2π`; `end` may exceed `2π`, in which case the interval
/// wraps through angle zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleInterval {
    pub start: f64,
    pub end: f64,
}

impl AngleInterval {
    pub const FULL: AngleInterval = AngleInterval { start: 0.0, end: TAU };

    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_full(&self) -> bool {
        self.width() >= TAU
    }

    pub fn contains(&self, theta: f64) -> bool {
        let t = normalize_angle(theta);
        (t >= self.start && t < self.end) || (t + TAU >= self.start && t + TAU < self.end)
    }

    /// Splits into at most two non-wrapping pieces inside `[0, 2π]`.
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        if self.is_full() {
            vec![(0.0, TAU)]
        } else if self.end <= TAU {
            vec![(self.start, self.end)]
        } else {
            vec![(self.start, TAU), (0.0, self.end - TAU)]
        }
    }
}

/// Angles `θ` for which `circle_center + R·e^{iθ}` lies in `d`, as at most
/// one (possibly wrapping) interval. The arc length is `R × width`.
pub fn circle_disk_arc(circle_center: Point, radius: f64, d: &Disk) -> Option<AngleInterval> {
    debug_assert!(radius > 0.0);
    if d.is_empty() {
        return None;
    }
    let offset = d.center - circle_center;
    let delta = offset.norm();
    let t = d.radius;
    if delta == 0.0 {
        let inside = if d.closed { radius <= t } else { radius < t };
        return inside.then_some(AngleInterval::FULL);
    }
    // |R e^{iθ} - offset|² = (R - δ)² + 4Rδ sin²((θ - φ)/2) compared with
    // t², which stays accurate for disks much smaller than the circle.
    let gap = radius - delta;
    let num = (t - gap) * (t + gap);
    if num <= 0.0 {
        // Equality for a closed disk is a single tangency point: measure zero.
        return None;
    }
    let s2 = num / (4.0 * radius * delta);
    if s2 >= 1.0 {
        return Some(AngleInterval::FULL);
    }
    let half = 2.0 * s2.sqrt().asin();
    let phi = offset.arg();
    let start = normalize_angle(phi - half);
    Some(AngleInterval { start, end: start + 2.0 * half })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn q_radius_examples() {
        let q0 = RadiusFunctionQ::new(0.0).unwrap();
        assert_eq!(q0.eval(Point::new(123.0, -4.0)), 1.0);
        let q1 = RadiusFunctionQ::new(1.0).unwrap();
        assert_eq!(q1.eval(Point::new(1.0, 0.0)), 0.5);
        let q2 = RadiusFunctionQ::new(2.0).unwrap();
        assert!((q2.eval(Point::new(3.0, 4.0)) - 1.0 / 36.0).abs() < 1e-15);
        assert!(RadiusFunctionQ::new(-1.0).is_err());
    }

    #[test]
    fn q_radius_monotone_and_bounded() {
        let q = RadiusFunctionQ::new(1.7).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let v = q.at_modulus(k as f64 * 0.37);
            assert!(v <= 1.0 && v > 0.0);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn disk_membership_boundaries() {
        let z = Point::new(1.0, 0.0);
        assert!(!Disk::open(Point::ORIGIN, 1.0).contains(z));
        assert!(Disk::closed(Point::ORIGIN, 1.0).contains(z));
        assert!(!Disk::open(Point::ORIGIN, 0.0).contains(Point::ORIGIN));
        assert!(Disk::closed(Point::ORIGIN, 0.0).contains(Point::ORIGIN));
    }

    #[test]
    fn arc_disjoint_and_containing() {
        assert_eq!(circle_disk_arc(Point::ORIGIN, 1.0, &Disk::open(Point::new(3.0, 0.0), 0.5)), None);
        let full = circle_disk_arc(Point::ORIGIN, 1.0, &Disk::open(Point::ORIGIN, 2.0)).unwrap();
        assert!(full.is_full());
        assert_eq!(full.width(), TAU);
    }

    #[test]
    fn arc_width_closed_form() {
        let arc = circle_disk_arc(Point::ORIGIN, 2.0, &Disk::open(Point::new(2.0, 0.0), 0.5)).unwrap();
        let expected = 2.0 * (7.75f64 / 8.0).acos();
        assert!((arc.width() - expected).abs() < 1e-14);
        // Wrapping interval centred on angle 0.
        assert!(arc.end > TAU);
        assert!(arc.contains(0.0));
        assert!(!arc.contains(PI));
    }

    #[test]
    fn arc_matches_angle_sampling() {
        // 10^6 uniform angles; the count in the disk is binomial.
        use rand::Rng;
        let disk = Disk::open(Point::new(2.0, 0.0), 0.5);
        let arc = circle_disk_arc(Point::ORIGIN, 2.0, &disk).unwrap();
        let mut rng = crate::rng::substream(7, 0);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| disk.contains(Point::polar(2.0, rng.random::<f64>() * TAU))).count();
        let p = arc.width() / TAU;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 3.0 * se);
    }

    #[test]
    fn arc_tangent_is_empty_for_both_kinds() {
        let open = Disk::open(Point::new(3.0, 0.0), 1.0);
        let closed = Disk::closed(Point::new(3.0, 0.0), 1.0);
        assert_eq!(circle_disk_arc(Point::ORIGIN, 2.0, &open), None);
        assert_eq!(circle_disk_arc(Point::ORIGIN, 2.0, &closed), None);
    }

    #[test]
    fn ray_angle_normalized() {
        let r = Ray::new(Point::ORIGIN, -PI / 2.0);
        assert!((r.angle() - 1.5 * PI).abs() < 1e-15);
        assert_eq!(Ray::new(Point::ORIGIN, TAU).angle(), 0.0);
    }
}
