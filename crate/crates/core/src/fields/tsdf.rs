use rayon::prelude::*;

use super::{FieldConvention, GridSpec, MeshOccupancyField, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{DistanceAccelerator, TriMesh, Vec3};

/// Default truncation in scene units.
pub const DEFAULT_TRUNCATION: f64 = 0.05;

/// Truncated signed distance to a closed mesh, negative inside.
pub struct TsdfField {
    occupancy: MeshOccupancyField,
    truncation: f64,
}

impl TsdfField {
    pub fn new(mesh: TriMesh, truncation: f64, name: &str) -> Result<Self> {
        if !(truncation > 0.0 && truncation.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "TSDF truncation must be positive, got {truncation}"
            )));
        }
        Ok(Self {
            occupancy: MeshOccupancyField::new(mesh, name)?,
            truncation,
        })
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn mesh(&self) -> &TriMesh {
        self.occupancy.mesh()
    }

    pub fn accelerator(&self) -> &DistanceAccelerator {
        self.occupancy.accelerator()
    }
}

impl ScalarField for TsdfField {
    fn eval(&self, p: &Vec3) -> f64 {
        let d = self.occupancy.accelerator().distance(p);
        let signed = if self.occupancy.contains(p) { -d } else { d };
        signed.clamp(-self.truncation, self.truncation)
    }

    fn convention(&self) -> FieldConvention {
        FieldConvention::SIGNED_DISTANCE
    }

    /// Scanline occupancy for the sign; distance queries only for nodes
    /// within the truncation band.
    fn sample_grid(&self, spec: &GridSpec) -> Vec<f64> {
        let inside = self.occupancy.sample_grid(spec);
        let t = self.truncation;
        let accel = self.occupancy.accelerator();
        let [nx, ny, _] = spec.dims;
        (0..spec.node_count())
            .into_par_iter()
            .map(|n| {
                let p = spec.node(n % nx, (n / nx) % ny, n / (nx * ny));
                let sign = if inside[n] > 0.5 { -1.0 } else { 1.0 };
                if accel.any_within(&p, t) {
                    (sign * accel.distance(&p)).clamp(-t, t)
                } else {
                    sign * t
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::icosphere;

    #[test]
    fn sphere_values() {
        let f = TsdfField::new(icosphere(1.0, 4), 0.05, "sphere").unwrap();
        assert_eq!(f.eval(&Vec3::zeros()), -0.05);
        assert_eq!(f.eval(&Vec3::new(0.0, 0.0, 5.0)), 0.05);
        assert!((f.eval(&Vec3::new(0.0, 0.0, 1.02)) - 0.02).abs() < 2e-3);
    }

    #[test]
    fn bulk_sampling_matches_pointwise() {
        let f = TsdfField::new(icosphere(1.0, 3), 0.05, "sphere").unwrap();
        let spec = GridSpec::new(Vec3::repeat(-1.2), 0.1, [25, 25, 25]).unwrap();
        let bulk = f.sample_grid(&spec);
        let mut n = 0;
        for k in 0..25 {
            for j in 0..25 {
                for i in 0..25 {
                    assert!((bulk[n] - f.eval(&spec.node(i, j, k))).abs() < 1e-12);
                    n += 1;
                }
            }
        }
    }

    #[test]
    fn odd_across_surface() {
        let f = TsdfField::new(icosphere(1.0, 4), 0.05, "sphere").unwrap();
        for k in 0..20 {
            let t = k as f64 * 0.31;
            let dir = Vec3::new(t.cos() * (0.5 * t).sin(), t.sin() * (0.5 * t).sin(), (0.5 * t).cos()).normalize();
            let d = 0.03;
            let out = f.eval(&(dir * (1.0 + d)));
            let inn = f.eval(&(dir * (1.0 - d)));
            assert!((out + inn).abs() < 3e-3, "{out} {inn}");
        }
    }
}
