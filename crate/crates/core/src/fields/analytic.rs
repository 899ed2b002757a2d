use super::{FieldConvention, ScalarField};
use crate::geometry::Vec3;

/// Exact signed distance to a sphere.
#[derive(Debug, Clone, Copy)]
pub struct SphereSdf {
    pub center: Vec3,
    pub radius: f64,
}

impl SphereSdf {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Self { center, radius }
    }
}

impl ScalarField for SphereSdf {
    fn eval(&self, p: &Vec3) -> f64 {
        (p - self.center).norm() - self.radius
    }

    fn convention(&self) -> FieldConvention {
        FieldConvention::SIGNED_DISTANCE
    }
}

/// Sphere occupancy with a linear ramp of width `band` across the surface,
/// so the 0.5 level sits exactly on the sphere.
#[derive(Debug, Clone, Copy)]
pub struct SphereOccupancy {
    pub center: Vec3,
    pub radius: f64,
    pub band: f64,
}

impl SphereOccupancy {
    pub fn new(center: Vec3, radius: f64, band: f64) -> Self {
        assert!(band > 0.0);
        Self { center, radius, band }
    }
}

impl ScalarField for SphereOccupancy {
    fn eval(&self, p: &Vec3) -> f64 {
        let d = (p - self.center).norm() - self.radius;
        (0.5 - d / self.band).clamp(0.0, 1.0)
    }

    fn convention(&self) -> FieldConvention {
        FieldConvention::OCCUPANCY
    }
}

/// Hard 0/1 occupancy of an axis-aligned box (boundary counts as inside).
#[derive(Debug, Clone, Copy)]
pub struct BoxOccupancy {
    pub center: Vec3,
    pub half: Vec3,
}

impl BoxOccupancy {
    pub fn new(center: Vec3, half: Vec3) -> Self {
        Self { center, half }
    }
}

impl ScalarField for BoxOccupancy {
    fn eval(&self, p: &Vec3) -> f64 {
        let d = (p - self.center).abs();
        if d.x <= self.half.x && d.y <= self.half.y && d.z <= self.half.z {
            1.0
        } else {
            0.0
        }
    }

    fn convention(&self) -> FieldConvention {
        FieldConvention::OCCUPANCY
    }
}

/// A field defined by a closure.
pub struct FnField<F> {
    convention: FieldConvention,
    f: F,
}

impl<F: Fn(&Vec3) -> f64 + Send + Sync> FnField<F> {
    pub fn new(convention: FieldConvention, f: F) -> Self {
        Self { convention, f }
    }
}

impl<F: Fn(&Vec3) -> f64 + Send + Sync> ScalarField for FnField<F> {
    fn eval(&self, p: &Vec3) -> f64 {
        (self.f)(p)
    }

    fn convention(&self) -> FieldConvention {
        self.convention
    }
}
