use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

/// Ordered 3D polyline, optionally closed by a segment from the last point
/// back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolyline", into = "RawPolyline")]
pub struct Polyline3 {
    points: Vec<Vec3>,
    closed: bool,
}

#[derive(Serialize, Deserialize)]
struct RawPolyline {
    points: Vec<[f64; 3]>,
    closed: bool,
}

impl TryFrom<RawPolyline> for Polyline3 {
    type Error = Error;

    fn try_from(raw: RawPolyline) -> Result<Self> {
        Polyline3::new(raw.points.into_iter().map(Vec3::from).collect(), raw.closed)
    }
}

impl From<Polyline3> for RawPolyline {
    fn from(p: Polyline3) -> Self {
        RawPolyline {
            points: p.points.iter().map(|v| [v.x, v.y, v.z]).collect(),
            closed: p.closed,
        }
    }
}

impl Polyline3 {
    pub fn new(points: Vec<Vec3>, closed: bool) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidPolyline(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        for (i, w) in points.windows(2).enumerate() {
            if (w[1] - w[0]).norm() <= 1e-12 {
                return Err(Error::InvalidPolyline(format!(
                    "points {i} and {} coincide",
                    i + 1
                )));
            }
        }
        Ok(Self { points, closed })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Segments in order, including the closing one when closed and the
    /// endpoints differ.
    pub fn segments(&self) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
        let n = self.points.len();
        let closing = self.closed && (self.points[n - 1] - self.points[0]).norm() > 1e-12;
        let count = if closing { n } else { n - 1 };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    /// Closest point on the polyline to `p`.
    pub fn closest_point(&self, p: &Vec3) -> Vec3 {
        let mut best = self.points[0];
        let mut best_d2 = f64::INFINITY;
        for (a, b) in self.segments() {
            let q = point_segment_closest(p, &a, &b);
            let d2 = (p - q).norm_squared();
            if d2 < best_d2 {
                best_d2 = d2;
                best = q;
            }
        }
        best
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        (p - self.closest_point(p)).norm()
    }

    /// Unit direction of the segment nearest to `p`, `None` if every
    /// segment is degenerate.
    pub fn nearest_tangent(&self, p: &Vec3) -> Option<Vec3> {
        let mut best = None;
        let mut best_d2 = f64::INFINITY;
        for (a, b) in self.segments() {
            let d2 = (p - point_segment_closest(p, &a, &b)).norm_squared();
            if d2 < best_d2 && (b - a).norm() > 0.0 {
                best_d2 = d2;
                best = Some((b - a).normalize());
            }
        }
        best
    }

    pub fn centroid(&self) -> Vec3 {
        self.points.iter().sum::<Vec3>() / self.points.len() as f64
    }

    /// Points along the polyline spaced at most `spacing` apart, endpoints
    /// of every segment included.
    pub fn resampled(&self, spacing: f64) -> Vec<Vec3> {
        assert!(spacing > 0.0);
        let mut out = Vec::new();
        for (a, b) in self.segments() {
            let n = ((b - a).norm() / spacing).ceil().max(1.0) as usize;
            for k in 0..n {
                out.push(a + (b - a) * (k as f64 / n as f64));
            }
        }
        if !self.closed {
            out.push(*self.points.last().unwrap());
        }
        out
    }
}

/// Closest point to `p` on segment `a`-`b`.
pub fn point_segment_closest(p: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Exact Euclidean distance from `p` to the union of the polyline's
/// segments.
pub fn point_to_polyline_distance(p: &Vec3, c: &Polyline3) -> f64 {
    c.distance(p)
}
