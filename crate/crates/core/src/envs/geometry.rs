//! Planar primitives used by the navigation tasks.

use crate::math;

pub type Point = [f64; 2];

#[inline]
fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

/// Wall segment from `a` to `b`. Walls have no thickness.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    /// Parameter `t` in `[0, 1]` at which the motion `p + t d` first touches
    /// this segment, or `None` when it misses or runs parallel.
    pub fn hit(&self, p: Point, d: Point) -> Option<f64> {
        let e = sub(self.b, self.a);
        let denom = cross(d, e);
        if denom.abs() < 1e-15 {
            return None;
        }
        let ap = sub(self.a, p);
        let t = cross(ap, e) / denom;
        let u = cross(ap, d) / denom;
        ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some(t)
    }

    /// Signed side of `p` relative to the segment's supporting line.
    pub fn side(&self, p: Point) -> f64 {
        cross(sub(self.b, self.a), sub(p, self.a))
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        self.min[0] <= p[0] && p[0] <= self.max[0] && self.min[1] <= p[1] && p[1] <= self.max[1]
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Disc {
    pub center: Point,
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, p: Point) -> bool {
        let d = sub(p, self.center);
        d[0] * d[0] + d[1] * d[1] <= self.radius * self.radius
    }

    /// Whether the segment from `p` to `q` passes through the disc.
    pub fn touched_by(&self, p: Point, q: Point) -> bool {
        let d = sub(q, p);
        let len_sq = d[0] * d[0] + d[1] * d[1];
        let t = if len_sq > 0.0 {
            let cp = sub(self.center, p);
            ((cp[0] * d[0] + cp[1] * d[1]) / len_sq).clamp(0.0, 1.0)
        } else {
            0.0
        };
        self.contains([p[0] + t * d[0], p[1] + t * d[1]])
    }

    pub fn distance_to_center(&self, p: Point) -> f64 {
        let d = sub(p, self.center);
        math::sqrt(d[0] * d[0] + d[1] * d[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_hits() {
        let wall = Segment::new([1.0, -1.0], [1.0, 1.0]);
        assert_eq!(wall.hit([0.0, 0.0], [2.0, 0.0]), Some(0.5));
        assert_eq!(wall.hit([0.0, 0.0], [0.5, 0.0]), None);
        assert_eq!(wall.hit([0.0, 0.0], [0.0, 2.0]), None);
        assert_eq!(wall.hit([0.0, 2.0], [2.0, 0.0]), None);
        assert_eq!(wall.hit([2.0, 0.0], [1.0, 0.0]), None);
    }

    #[test]
    fn disc_segment_contact() {
        let g = Disc { center: [5.0, 0.0], radius: 0.5 };
        assert!(g.touched_by([0.0, 0.0], [10.0, 0.0]));
        assert!(!g.touched_by([0.0, 0.0], [4.0, 0.0]));
        assert!(!g.touched_by([0.0, 1.0], [10.0, 1.0]));
        assert!(g.touched_by([5.2, 0.1], [5.2, 0.1]));
    }
}
