use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FieldConvention, FieldKind, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};

const MAGIC: &[u8; 8] = b"REEFGRID";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 12 + 24 + 8 + 1 + 8 + 8;

/// Value returned beyond the grid for SDF grids.
const SDF_OUTSIDE: f64 = 1.0e6;

pub(crate) fn default_outside(convention: FieldConvention) -> f64 {
    match convention.kind {
        FieldKind::Occupancy => 0.0,
        FieldKind::SignedDistance => SDF_OUTSIDE,
    }
}

/// Node layout of a regular grid with isotropic spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec3,
    pub spacing: f64,
    /// Node counts per axis.
    pub dims: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: Vec3, spacing: f64, dims: [usize; 3]) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes per axis, got {dims:?}")));
        }
        Ok(Self { origin, spacing, dims })
    }

    /// Grid whose longest axis is split into `cells` cells, centered on the
    /// box and covering it.
    pub fn covering(bounds: &Aabb, cells: usize) -> Self {
        let ext = bounds.extent();
        let longest = ext.max();
        let spacing = longest / cells.max(1) as f64;
        let mut dims = [0usize; 3];
        let mut origin = Vec3::zeros();
        for k in 0..3 {
            let n = ((ext[k] / spacing - 1e-9).ceil() as usize).max(1);
            dims[k] = n + 1;
            origin[k] = bounds.center()[k] - 0.5 * n as f64 * spacing;
        }
        Self { origin, spacing, dims }
    }

    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn bounds(&self) -> Aabb {
        let n = self.dims;
        Aabb::new(self.origin, self.node(n[0] - 1, n[1] - 1, n[2] - 1))
    }
}

/// Dense grid of samples with trilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    values: Vec<f32>,
    convention: FieldConvention,
    outside_value: f64,
}

impl GridField {
    pub fn new(
        spec: GridSpec,
        values: Vec<f32>,
        convention: FieldConvention,
        outside_value: f64,
    ) -> Result<Self> {
        let spec = GridSpec::new(spec.origin, spec.spacing, spec.dims)?;
        if values.len() != spec.node_count() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                spec.node_count()
            )));
        }
        if !convention.iso.is_finite() {
            return Err(Error::InvalidGrid("iso level is not finite".into()));
        }
        Ok(Self {
            spec,
            values,
            convention,
            outside_value,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn outside_value(&self) -> f64 {
        self.outside_value
    }

    pub fn value_at(&self, i: usize, j: usize, k: usize) -> f64 {
        f64::from(self.values[self.spec.index(i, j, k)])
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(HEADER_LEN + 4 * self.values.len());
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        for d in self.spec.dims {
            b.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for k in 0..3 {
            b.extend_from_slice(&self.spec.origin[k].to_le_bytes());
        }
        b.extend_from_slice(&self.spec.spacing.to_le_bytes());
        b.push(match self.convention.kind {
            FieldKind::Occupancy => 0,
            FieldKind::SignedDistance => 1,
        });
        b.extend_from_slice(&self.convention.iso.to_le_bytes());
        b.extend_from_slice(&self.outside_value.to_le_bytes());
        for v in &self.values {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::InvalidGrid(m.to_string());
        if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
            return Err(bad("missing REEFGRID header"));
        }
        let mut at = 8;
        let mut take = |n: usize| {
            let s = &bytes[at..at + n];
            at += n;
            s
        };
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());
        let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().unwrap());
        let version = u32_at(take(4));
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let dims = [
            u32_at(take(4)) as usize,
            u32_at(take(4)) as usize,
            u32_at(take(4)) as usize,
        ];
        let origin = Vec3::new(f64_at(take(8)), f64_at(take(8)), f64_at(take(8)));
        let spacing = f64_at(take(8));
        let kind = match take(1)[0] {
            0 => FieldKind::Occupancy,
            1 => FieldKind::SignedDistance,
            k => return Err(bad(&format!("unknown convention byte {k}"))),
        };
        let iso = f64_at(take(8));
        let outside = f64_at(take(8));
        let count = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let expected = count
            .and_then(|c| c.checked_mul(4))
            .ok_or_else(|| bad("grid dimensions overflow"))?;
        if bytes.len() - HEADER_LEN != expected {
            return Err(bad(&format!(
                "expected {expected} bytes of values, found {}",
                bytes.len() - HEADER_LEN
            )));
        }
        let values = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let spec = GridSpec::new(origin, spacing, dims)?;
        GridField::new(spec, values, FieldConvention { kind, iso }, outside)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| Error::parse(path, e))
    }
}

/// Snaps coordinates within 1e-9 of a node so node queries are exact.
fn snap(u: f64) -> f64 {
    let r = u.round();
    if (u - r).abs() <= 1e-9 {
        r
    } else {
        u
    }
}

impl ScalarField for GridField {
    fn eval(&self, p: &Vec3) -> f64 {
        let s = &self.spec;
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for k in 0..3 {
            let u = snap((p[k] - s.origin[k]) / s.spacing);
            let hi = (s.dims[k] - 1) as f64;
            if !(u >= 0.0 && u <= hi) {
                return self.outside_value;
            }
            let i = (u.floor() as usize).min(s.dims[k] - 2);
            base[k] = i;
            frac[k] = u - i as f64;
        }
        let [i, j, k] = base;
        let [fx, fy, fz] = frac;
        let v = |di: usize, dj: usize, dk: usize| self.value_at(i + di, j + dj, k + dk);
        let lerp = |a: f64, b: f64, t: f64| if t == 0.0 { a } else if t == 1.0 { b } else { a + (b - a) * t };
        let c00 = lerp(v(0, 0, 0), v(1, 0, 0), fx);
        let c10 = lerp(v(0, 1, 0), v(1, 1, 0), fx);
        let c01 = lerp(v(0, 0, 1), v(1, 0, 1), fx);
        let c11 = lerp(v(0, 1, 1), v(1, 1, 1), fx);
        let c0 = lerp(c00, c10, fy);
        let c1 = lerp(c01, c11, fy);
        lerp(c0, c1, fz)
    }

    fn convention(&self) -> FieldConvention {
        self.convention
    }

    fn default_gradient_step(&self) -> f64 {
        0.5 * self.spec.spacing
    }

    fn sample_grid(&self, spec: &GridSpec) -> Vec<f64> {
        if spec == &self.spec {
            return self.values.iter().map(|&v| f64::from(v)).collect();
        }
        let [nx, ny, nz] = spec.dims;
        let mut out = Vec::with_capacity(spec.node_count());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    out.push(self.eval(&spec.node(i, j, k)));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{bake_to_grid, BoxOccupancy, SphereSdf};

    fn unit_box() -> Aabb {
        Aabb::new(Vec3::repeat(-1.0), Vec3::repeat(1.0))
    }

    #[test]
    fn exact_at_nodes() {
        let f = SphereSdf::new(Vec3::new(0.1, 0.0, -0.05), 0.6);
        let g = bake_to_grid(&f, GridSpec::covering(&unit_box(), 20));
        let s = *g.spec();
        for k in 0..s.dims[2] {
            for j in 0..s.dims[1] {
                for i in 0..s.dims[0] {
                    let p = s.node(i, j, k);
                    assert_eq!(g.eval(&p), f64::from(f.eval(&p) as f32));
                }
            }
        }
    }

    #[test]
    fn cell_centers_within_lipschitz_bound() {
        let f = SphereSdf::new(Vec3::zeros(), 0.6);
        let g = bake_to_grid(&f, GridSpec::covering(&unit_box(), 20));
        let s = *g.spec();
        for k in 0..s.dims[2] - 1 {
            for j in 0..s.dims[1] - 1 {
                for i in 0..s.dims[0] - 1 {
                    let p = s.node(i, j, k) + Vec3::repeat(0.5 * s.spacing);
                    assert!((g.eval(&p) - f.eval(&p)).abs() <= s.spacing);
                }
            }
        }
    }

    #[test]
    fn cube_occupancy_interior_is_one() {
        let f = BoxOccupancy::new(Vec3::zeros(), Vec3::repeat(0.5));
        let spec = GridSpec::new(Vec3::repeat(-1.0), 0.05, [41, 41, 41]).unwrap();
        let g = bake_to_grid(&f, spec);
        for k in 0..41 {
            for j in 0..41 {
                for i in 0..41 {
                    let p = spec.node(i, j, k);
                    if p.abs().max() < 0.5 - 1e-9 {
                        assert_eq!(g.value_at(i, j, k), 1.0);
                    }
                }
            }
        }
        assert_eq!(g.eval(&Vec3::repeat(3.0)), 0.0);
    }

    #[test]
    fn binary_round_trip() {
        let f = SphereSdf::new(Vec3::zeros(), 0.3);
        let g = bake_to_grid(&f, GridSpec::covering(&unit_box(), 8));
        let bytes = g.to_bytes();
        assert_eq!(&bytes[..8], b"REEFGRID");
        assert_eq!(bytes.len(), HEADER_LEN + 4 * g.values().len());
        assert_eq!(GridField::from_bytes(&bytes).unwrap(), g);
        assert!(GridField::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
