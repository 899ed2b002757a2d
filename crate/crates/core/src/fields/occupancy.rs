use rayon::prelude::*;

use super::{FieldConvention, GridSpec, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{DistanceAccelerator, TriMesh, Vec3};

/// Fixed, deliberately skewed ray directions for the parity vote.
#[allow(clippy::approx_constant)]
const RAY_DIRS: [[f64; 3]; 3] = [
    [0.5773, 0.6123, 0.5402],
    [-0.7071, 0.3162, 0.6325],
    [0.2673, -0.8018, 0.5345],
];

/// Points closer than this to the surface count as inside.
const SURFACE_EPS: f64 = 1e-9;

/// Exact 0/1 occupancy of a closed triangle mesh.
pub struct MeshOccupancyField {
    mesh: TriMesh,
    accel: DistanceAccelerator,
}

impl MeshOccupancyField {
    /// Fails unless every edge of `mesh` is shared by exactly two faces.
    pub fn new(mesh: TriMesh, name: &str) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::NotWatertight {
                name: name.to_string(),
                detail: "mesh has no faces".into(),
            });
        }
        let bad = mesh
            .edge_face_counts()
            .into_iter()
            .filter(|&(_, c)| c != 2)
            .min();
        if let Some((e, c)) = bad {
            return Err(Error::NotWatertight {
                name: name.to_string(),
                detail: format!("edge {}-{} is used by {c} faces", e[0], e[1]),
            });
        }
        let accel = DistanceAccelerator::new(&mesh);
        Ok(Self { mesh, accel })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn accelerator(&self) -> &DistanceAccelerator {
        &self.accel
    }

    /// Inside test by majority vote of ray parity over three directions.
    pub fn contains(&self, p: &Vec3) -> bool {
        if self.accel.any_within(p, SURFACE_EPS) {
            return true;
        }
        let votes = RAY_DIRS
            .iter()
            .filter(|d| self.accel.ray_crossings(p, &Vec3::from(**d).normalize()) % 2 == 1)
            .count();
        votes >= 2
    }
}

impl ScalarField for MeshOccupancyField {
    fn eval(&self, p: &Vec3) -> f64 {
        if self.contains(p) {
            1.0
        } else {
            0.0
        }
    }

    fn convention(&self) -> FieldConvention {
        FieldConvention::OCCUPANCY
    }

    /// Scanline parity along each grid axis with a consistent symbolic
    /// perturbation of the column, majority over the three axes.
    fn sample_grid(&self, spec: &GridSpec) -> Vec<f64> {
        let per_axis: Vec<Vec<bool>> = (0..3).map(|a| scanline_parity(&self.mesh, spec, a)).collect();
        (0..spec.node_count())
            .map(|n| {
                let votes = per_axis.iter().filter(|v| v[n]).count();
                if votes >= 2 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Inside flags at every node from crossings along lines parallel to
/// `axis`, counting only crossings strictly beyond the node.
fn scanline_parity(mesh: &TriMesh, spec: &GridSpec, axis: usize) -> Vec<bool> {
    let (ua, va) = ((axis + 1) % 3, (axis + 2) % 3);
    let (nu, nv, nw) = (spec.dims[ua], spec.dims[va], spec.dims[axis]);
    let h = spec.spacing;
    let verts = mesh.vertices();

    // Triangles binned by the column rows (v index) they may cover.
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (t, f) in mesh.faces().iter().enumerate() {
        let vs: Vec<f64> = f.iter().map(|&i| (verts[i][va] - spec.origin[va]) / h).collect();
        let lo = vs.iter().cloned().fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
        let hi = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil();
        if hi < 0.0 {
            continue;
        }
        let hi = (hi as usize).min(nv - 1);
        for row in rows.iter_mut().take(hi + 1).skip(lo) {
            row.push(t);
        }
    }

    let row_flags: Vec<Vec<(usize, Vec<bool>)>> = rows
        .par_iter()
        .enumerate()
        .map(|(jv, tris)| {
            let qv = spec.origin[va] + jv as f64 * h;
            let mut hits: Vec<Vec<f64>> = vec![Vec::new(); nu];
            for &t in tris {
                let f = mesh.faces()[t];
                let p: [[f64; 2]; 3] = std::array::from_fn(|k| [verts[f[k]][ua], verts[f[k]][va]]);
                let w: [f64; 3] = std::array::from_fn(|k| verts[f[k]][axis]);
                let area = orient(&p[0], &p[1], &p[2]);
                if area == 0.0 {
                    continue;
                }
                let umin = p.iter().map(|x| x[0]).fold(f64::INFINITY, f64::min);
                let umax = p.iter().map(|x| x[0]).fold(f64::NEG_INFINITY, f64::max);
                let i0 = ((umin - spec.origin[ua]) / h).floor().max(0.0) as usize;
                let i1 = ((umax - spec.origin[ua]) / h).ceil();
                if i1 < 0.0 {
                    continue;
                }
                let i1 = (i1 as usize).min(nu - 1);
                for (iu, col) in hits.iter_mut().enumerate().take(i1 + 1).skip(i0) {
                    let q = [spec.origin[ua] + iu as f64 * h, qv];
                    if let Some(bary) = inside_perturbed(&p, &f, &q, area) {
                        col.push(bary[0] * w[0] + bary[1] * w[1] + bary[2] * w[2]);
                    }
                }
            }
            hits.into_iter()
                .enumerate()
                .map(|(iu, mut ws)| {
                    ws.sort_unstable_by(f64::total_cmp);
                    let flags = (0..nw)
                        .map(|k| {
                            let wk = spec.origin[axis] + k as f64 * h;
                            let above = ws.len() - ws.partition_point(|&x| x <= wk);
                            above % 2 == 1
                        })
                        .collect();
                    (iu, flags)
                })
                .collect()
        })
        .collect();

    let mut out = vec![false; spec.node_count()];
    for (jv, cols) in row_flags.into_iter().enumerate() {
        for (iu, flags) in cols {
            for (k, inside) in flags.into_iter().enumerate() {
                let mut idx = [0usize; 3];
                idx[axis] = k;
                idx[ua] = iu;
                idx[va] = jv;
                out[spec.index(idx[0], idx[1], idx[2])] = inside;
            }
        }
    }
    out
}

fn orient(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Sign of the edge function of `q` against the edge from the lower to the
/// higher vertex index, with `q` perturbed by `(d, d^2)` for infinitesimal
/// `d` so that exact zeros resolve identically for every triangle sharing
/// the edge.
fn edge_sign(p: &[f64; 2], q: &[f64; 2], x: &[f64; 2]) -> f64 {
    let e = orient(p, q, x);
    if e != 0.0 {
        return e.signum();
    }
    let du = q[0] - p[0];
    let dv = q[1] - p[1];
    if dv != 0.0 {
        -dv.signum()
    } else {
        du.signum()
    }
}

/// Barycentric coordinates of `q` if it lies inside the projected triangle
/// under the symbolic perturbation.
fn inside_perturbed(p: &[[f64; 2]; 3], idx: &[usize; 3], q: &[f64; 2], area: f64) -> Option<[f64; 3]> {
    let s = area.signum();
    for k in 0..3 {
        let (a, b) = (k, (k + 1) % 3);
        let sign = if idx[a] < idx[b] {
            edge_sign(&p[a], &p[b], q)
        } else {
            -edge_sign(&p[b], &p[a], q)
        };
        if sign != s {
            return None;
        }
    }
    let l0 = orient(&p[1], &p[2], q) / area;
    let l1 = orient(&p[2], &p[0], q) / area;
    Some([l0, l1, 1.0 - l0 - l1])
}
