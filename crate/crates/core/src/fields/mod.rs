//! Implicit fields: occupancy and signed-distance targets, boundary
//! cylinders, semantic label sets, body TSDF and iso-surface extraction.

mod analytic;
mod cylinder;
mod grid;
mod marching_cubes;
mod occupancy;
mod semantic;
mod tsdf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

pub use analytic::{BoxOccupancy, FnField, SphereOccupancy, SphereSdf};
pub use cylinder::BoundaryCylinderField;
pub use grid::{GridField, GridSpec};
pub use marching_cubes::{extract_boundary_isosurface, marching_cubes};
pub use occupancy::MeshOccupancyField;
pub use semantic::SemanticFieldSet;
pub use tsdf::{TsdfField, DEFAULT_TRUNCATION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// Near 1 inside, near 0 outside.
    Occupancy,
    /// Negative inside, positive outside.
    SignedDistance,
}

/// How a field's values relate to inside and outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConvention {
    pub kind: FieldKind,
    pub iso: f64,
}

impl FieldConvention {
    pub const OCCUPANCY: FieldConvention = FieldConvention {
        kind: FieldKind::Occupancy,
        iso: 0.5,
    };
    pub const SIGNED_DISTANCE: FieldConvention = FieldConvention {
        kind: FieldKind::SignedDistance,
        iso: 0.0,
    };

    pub fn with_iso(self, iso: f64) -> Self {
        assert!(iso.is_finite(), "iso level must be finite");
        Self { iso, ..self }
    }

    /// Whether `value` lies on the interior side of the iso level. Values
    /// equal to the iso level count as exterior.
    pub fn is_inside(&self, value: f64) -> bool {
        match self.kind {
            FieldKind::Occupancy => value > self.iso,
            FieldKind::SignedDistance => value < self.iso,
        }
    }

    /// `value - iso`, with the sign flipped for occupancy so the result is
    /// negative inside under either convention.
    pub fn signed_offset(&self, value: f64) -> f64 {
        match self.kind {
            FieldKind::Occupancy => self.iso - value,
            FieldKind::SignedDistance => value - self.iso,
        }
    }
}

/// A scalar function over scene space.
pub trait ScalarField: Send + Sync {
    fn eval(&self, p: &Vec3) -> f64;

    fn convention(&self) -> FieldConvention;

    /// Step used by [`field_gradient`] when the caller has no preference.
    fn default_gradient_step(&self) -> f64 {
        1e-4
    }

    /// Evaluates many points in parallel; output order matches input.
    fn eval_batch(&self, points: &[Vec3]) -> Vec<f64> {
        points.par_iter().map(|p| self.eval(p)).collect()
    }

    /// Values at the nodes of `spec` in x-fastest order. Fields with a
    /// cheaper exact bulk evaluation override this.
    fn sample_grid(&self, spec: &GridSpec) -> Vec<f64> {
        let [nx, ny, _] = spec.dims;
        let slabs: Vec<Vec<f64>> = (0..spec.dims[2])
            .into_par_iter()
            .map(|k| {
                let mut out = Vec::with_capacity(nx * ny);
                for j in 0..ny {
                    for i in 0..nx {
                        out.push(self.eval(&spec.node(i, j, k)));
                    }
                }
                out
            })
            .collect();
        slabs.concat()
    }
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn eval(&self, p: &Vec3) -> f64 {
        (**self).eval(p)
    }
    fn convention(&self) -> FieldConvention {
        (**self).convention()
    }
    fn default_gradient_step(&self) -> f64 {
        (**self).default_gradient_step()
    }
    fn sample_grid(&self, spec: &GridSpec) -> Vec<f64> {
        (**self).sample_grid(spec)
    }
}

impl<F: ScalarField + ?Sized> ScalarField for Box<F> {
    fn eval(&self, p: &Vec3) -> f64 {
        (**self).eval(p)
    }
    fn convention(&self) -> FieldConvention {
        (**self).convention()
    }
    fn default_gradient_step(&self) -> f64 {
        (**self).default_gradient_step()
    }
    fn sample_grid(&self, spec: &GridSpec) -> Vec<f64> {
        (**self).sample_grid(spec)
    }
}

impl<F: ScalarField + ?Sized> ScalarField for std::sync::Arc<F> {
    fn eval(&self, p: &Vec3) -> f64 {
        (**self).eval(p)
    }
    fn convention(&self) -> FieldConvention {
        (**self).convention()
    }
    fn default_gradient_step(&self) -> f64 {
        (**self).default_gradient_step()
    }
    fn sample_grid(&self, spec: &GridSpec) -> Vec<f64> {
        (**self).sample_grid(spec)
    }
}

/// Central-difference gradient with step `h`.
pub fn field_gradient(field: &dyn ScalarField, p: &Vec3, h: f64) -> Vec3 {
    assert!(h > 0.0, "gradient step must be positive");
    let mut g = Vec3::zeros();
    for k in 0..3 {
        let mut a = *p;
        let mut b = *p;
        a[k] += h;
        b[k] -= h;
        g[k] = (field.eval(&a) - field.eval(&b)) / (2.0 * h);
    }
    g
}

/// Samples `field` at the nodes of `spec`; the convention is kept.
pub fn bake_to_grid(field: &dyn ScalarField, spec: GridSpec) -> GridField {
    let values = field.sample_grid(&spec).into_iter().map(|v| v as f32).collect();
    let convention = field.convention();
    GridField::new(spec, values, convention, grid::default_outside(convention))
        .expect("sampled values match the grid size")
}
