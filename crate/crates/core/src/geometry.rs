//! Point-to-segment metrics and limb rectangle membership.
//!
//! All arithmetic is double precision. Differences are always formed as
//! `p - b` and `a - b` before any projection so that mirrored or rotated
//! inputs on an exact lattice produce bit-identical results.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// Segment from `a` (keypoint p_i) to `b` (keypoint p_j). `a == b` is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn reversed(self) -> Self {
        Self::new(self.b, self.a)
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }
}

/// Per-segment quantities reused across every pixel of a raster.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PreparedSegment {
    b: Point2,
    /// a - b
    dir: Point2,
    len_sq: f64,
    len: f64,
}

impl PreparedSegment {
    pub(crate) fn new(s: &Segment) -> Self {
        let dir = s.a.sub(s.b);
        let len_sq = dir.norm_sq();
        Self {
            b: s.b,
            dir,
            len_sq,
            len: len_sq.sqrt(),
        }
    }

    pub(crate) fn distance(&self, p: Point2) -> f64 {
        let w = p.sub(self.b);
        if self.len_sq == 0.0 {
            return w.norm();
        }
        let t = (w.dot(self.dir) / self.len_sq).clamp(0.0, 1.0);
        let d = Point2::new(w.x - t * self.dir.x, w.y - t * self.dir.y);
        d.norm()
    }

    pub(crate) fn in_rectangle(&self, p: Point2, half_width: f64) -> bool {
        let w = p.sub(self.b);
        if self.len_sq == 0.0 {
            return w.norm() <= half_width;
        }
        let along = w.dot(self.dir);
        if !(0.0..=self.len_sq).contains(&along) {
            return false;
        }
        // |w . u_perp| with u_perp = perp(dir) / |dir|
        (self.dir.cross(w) / self.len).abs() <= half_width
    }
}

/// Euclidean distance from `p` to the closest point of `s`.
pub fn point_segment_distance(p: Point2, s: &Segment) -> f64 {
    PreparedSegment::new(s).distance(p)
}

/// Whether `p` lies in the rectangle of half width `half_width` spanning `s`.
///
/// The projection of `p - b` onto `a - b` must land within the segment and
/// the perpendicular offset must not exceed `half_width`. A degenerate
/// segment falls back to a disk of radius `half_width` around the point.
pub fn in_limb_rectangle(p: Point2, s: &Segment, half_width: f64) -> Result<bool> {
    if !(half_width > 0.0) {
        return Err(Error::NonPositiveHalfWidth(half_width));
    }
    Ok(PreparedSegment::new(s).in_rectangle(p, half_width))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment::new(Point2::new(ax, ay), Point2::new(bx, by))
    }

    #[test]
    fn distance_examples() {
        let s = seg(0.0, 0.0, 2.0, 0.0);
        assert_eq!(point_segment_distance(Point2::new(1.0, 0.0), &s), 0.0);
        assert_eq!(point_segment_distance(Point2::new(0.0, 1.0), &s), 1.0);
        let d = point_segment_distance(Point2::new(3.0, 1.0), &s);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_distance_is_point_distance() {
        let s = seg(1.0, 1.0, 1.0, 1.0);
        assert_eq!(point_segment_distance(Point2::new(4.0, 5.0), &s), 5.0);
        assert!(in_limb_rectangle(Point2::new(1.5, 1.0), &s, 0.5).unwrap());
        assert!(!in_limb_rectangle(Point2::new(1.6, 1.0), &s, 0.5).unwrap());
    }

    #[test]
    fn rectangle_examples() {
        let s = seg(0.0, 0.0, 4.0, 2.0);
        assert!(in_limb_rectangle(Point2::new(2.0, 1.0), &s, 0.1).unwrap());

        // perpendicular offset of twice the half width from the midpoint
        let n = Point2::new(-2.0, 4.0);
        let unit = 1.0 / n.norm();
        let off = 2.0 * 0.5;
        let p = Point2::new(2.0 + n.x * unit * off, 1.0 + n.y * unit * off);
        assert!(!in_limb_rectangle(p, &s, 0.5).unwrap());

        // on the line, just past endpoint a
        assert!(!in_limb_rectangle(Point2::new(4.2, 2.1), &s, 5.0).unwrap());
        assert!(!in_limb_rectangle(Point2::new(-0.2, -0.1), &s, 5.0).unwrap());
    }

    #[test]
    fn rejects_non_positive_width() {
        let s = seg(0.0, 0.0, 1.0, 0.0);
        assert!(in_limb_rectangle(Point2::default(), &s, 0.0).is_err());
        assert!(in_limb_rectangle(Point2::default(), &s, -1.0).is_err());
        assert!(in_limb_rectangle(Point2::default(), &s, f64::NAN).is_err());
    }

    fn coord() -> impl Strategy<Value = f64> {
        -50.0..50.0f64
    }

    fn point() -> impl Strategy<Value = Point2> {
        (coord(), coord()).prop_map(|(x, y)| Point2::new(x, y))
    }

    proptest! {
        #[test]
        fn distance_ignores_endpoint_order(p in point(), a in point(), b in point()) {
            let s = Segment::new(a, b);
            let d1 = point_segment_distance(p, &s);
            let d2 = point_segment_distance(p, &s.reversed());
            prop_assert!((d1 - d2).abs() <= 1e-12 * (1.0 + d1));
        }

        #[test]
        fn distance_is_one_lipschitz(p in point(), q in point(), a in point(), b in point()) {
            let s = Segment::new(a, b);
            let gap = (point_segment_distance(p, &s) - point_segment_distance(q, &s)).abs();
            prop_assert!(gap <= p.sub(q).norm() + 1e-9);
        }

        #[test]
        fn distance_not_above_endpoint_distance(p in point(), a in point(), b in point()) {
            let s = Segment::new(a, b);
            let d = point_segment_distance(p, &s);
            prop_assert!(d >= 0.0);
            prop_assert!(d <= p.sub(a).norm() + 1e-12);
            prop_assert!(d <= p.sub(b).norm() + 1e-12);
        }
    }
}
