use super::{FieldConvention, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{Polyline3, Vec3};

/// Distance to a set of boundary curves minus a tube radius. The zero set
/// is a thin tube around the curves; all curves share one boundary type
/// (for example both armholes of a top).
#[derive(Debug, Clone)]
pub struct BoundaryCylinderField {
    curves: Vec<Polyline3>,
    radius: f64,
}

impl BoundaryCylinderField {
    pub const DEFAULT_RADIUS: f64 = 1e-3;

    pub fn new(curves: Vec<Polyline3>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "boundary radius must be positive, got {radius}"
            )));
        }
        if curves.is_empty() {
            return Err(Error::EmptyInput("boundary curves"));
        }
        Ok(Self { curves, radius })
    }

    pub fn curves(&self) -> &[Polyline3] {
        &self.curves
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(self.curves.clone(), radius)
    }

    /// Nearest point over all curves.
    pub fn closest_point(&self, p: &Vec3) -> Vec3 {
        let mut best = self.curves[0].points()[0];
        let mut best_d2 = f64::INFINITY;
        for c in &self.curves {
            let q = c.closest_point(p);
            let d2 = (p - q).norm_squared();
            if d2 < best_d2 {
                best_d2 = d2;
                best = q;
            }
        }
        best
    }

    /// Tangent of the nearest curve segment.
    pub fn nearest_tangent(&self, p: &Vec3) -> Option<Vec3> {
        self.curves
            .iter()
            .min_by(|a, b| a.distance(p).total_cmp(&b.distance(p)))
            .and_then(|c| c.nearest_tangent(p))
    }

    /// Unsigned distance to the nearest curve.
    pub fn curve_distance(&self, p: &Vec3) -> f64 {
        self.curves
            .iter()
            .map(|c| c.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Exact gradient `(p - closest) / |p - closest|`; zero on the curve.
    pub fn gradient(&self, p: &Vec3) -> Vec3 {
        let d = p - self.closest_point(p);
        let n = d.norm();
        if n > 0.0 {
            d / n
        } else {
            Vec3::zeros()
        }
    }
}

impl ScalarField for BoundaryCylinderField {
    fn eval(&self, p: &Vec3) -> f64 {
        self.curve_distance(p) - self.radius
    }

    fn convention(&self) -> FieldConvention {
        FieldConvention::SIGNED_DISTANCE
    }
}
