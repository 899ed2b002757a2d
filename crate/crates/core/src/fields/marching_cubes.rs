use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use super::{BoundaryCylinderField, ScalarField};
use crate::geometry::{is_degenerate, Aabb, TriMesh, Vec3};

/// Corner `c` of a cell sits at offset `(c & 1, (c >> 1) & 1, (c >> 2) & 1)`.
fn corner_offset(c: usize) -> [usize; 3] {
    [c & 1, (c >> 1) & 1, (c >> 2) & 1]
}

/// The twelve cell edges as `(low corner, high corner, axis)`.
fn cell_edges() -> &'static [(usize, usize, usize); 12] {
    static EDGES: OnceLock<[(usize, usize, usize); 12]> = OnceLock::new();
    EDGES.get_or_init(|| {
        let mut out = [(0, 0, 0); 12];
        let mut n = 0;
        for c in 0..8 {
            for a in 0..3 {
                if c & (1 << a) == 0 {
                    out[n] = (c, c | (1 << a), a);
                    n += 1;
                }
            }
        }
        out
    })
}

fn edge_between(c0: usize, c1: usize) -> usize {
    let (lo, hi) = (c0.min(c1), c0.max(c1));
    cell_edges()
        .iter()
        .position(|&(a, b, _)| a == lo && b == hi)
        .expect("corners share an edge")
}

/// Triangles (as cell edge ids) for each of the 256 inside/outside corner
/// configurations.
///
/// Built from the cell faces: on each face the iso-line segments are chosen
/// so that, on faces with two diagonal inside corners, each inside corner is
/// cut off separately. The rule only looks at the face's own corners, so
/// neighbouring cells agree and the surface is closed. Segments are directed
/// so that the chained loops wind counter-clockwise seen from outside.
fn case_table() -> &'static Vec<Vec<[u8; 3]>> {
    static TABLE: OnceLock<Vec<Vec<[u8; 3]>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..256).map(build_case).collect())
}

fn build_case(mask: usize) -> Vec<[u8; 3]> {
    let inside = |c: usize| mask & (1 << c) != 0;
    let pos = |c: usize| {
        let o = corner_offset(c);
        Vec3::new(o[0] as f64, o[1] as f64, o[2] as f64)
    };
    let edge_mid = |e: usize| {
        let (a, b, _) = cell_edges()[e];
        (pos(a) + pos(b)) * 0.5
    };

    let mut next: HashMap<usize, usize> = HashMap::new();
    for axis in 0..3 {
        for side in 0..2 {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            let corner = |bu: usize, bv: usize| (side << axis) | (bu << u) | (bv << v);
            let cycle = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
            let mut normal = Vec3::zeros();
            normal[axis] = if side == 1 { 1.0 } else { -1.0 };

            let crossing: Vec<usize> = (0..4)
                .filter(|&k| inside(cycle[k]) != inside(cycle[(k + 1) % 4]))
                .collect();
            // Each segment with the inside corners it separates off.
            let segments: Vec<(usize, usize, Vec<usize>)> = match crossing.len() {
                0 => Vec::new(),
                2 => {
                    let e0 = edge_between(cycle[crossing[0]], cycle[(crossing[0] + 1) % 4]);
                    let e1 = edge_between(cycle[crossing[1]], cycle[(crossing[1] + 1) % 4]);
                    let ins = cycle.iter().copied().filter(|&c| inside(c)).collect();
                    vec![(e0, e1, ins)]
                }
                4 => (0..4)
                    .filter(|&k| inside(cycle[k]))
                    .map(|k| {
                        let prev = cycle[(k + 3) % 4];
                        let next = cycle[(k + 1) % 4];
                        (
                            edge_between(prev, cycle[k]),
                            edge_between(cycle[k], next),
                            vec![cycle[k]],
                        )
                    })
                    .collect(),
                _ => unreachable!("a square has an even number of sign changes"),
            };
            for (e0, e1, ins) in segments {
                let (p, q) = (edge_mid(e0), edge_mid(e1));
                let mid = (p + q) * 0.5;
                let centroid = ins.iter().map(|&c| pos(c)).sum::<Vec3>() / ins.len() as f64;
                let side_dir = normal.cross(&(q - p));
                let (from, to) = if side_dir.dot(&(centroid - mid)) < 0.0 {
                    (e0, e1)
                } else {
                    (e1, e0)
                };
                let prev = next.insert(from, to);
                debug_assert!(prev.is_none(), "edge {from} starts two segments in case {mask}");
            }
        }
    }

    let mut tris = Vec::new();
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut used = [false; 12];
    for s in starts {
        if used[s] {
            continue;
        }
        let mut poly = vec![s];
        used[s] = true;
        let mut cur = next[&s];
        while cur != s {
            used[cur] = true;
            poly.push(cur);
            cur = next[&cur];
        }
        for k in 1..poly.len() - 1 {
            tris.push([poly[0] as u8, poly[k] as u8, poly[k + 1] as u8]);
        }
    }
    tris
}

/// Extracts the iso-surface of `field` (at its convention's iso level)
/// inside `region`, sampling `resolution` nodes per axis. Triangles face
/// the exterior side.
pub fn marching_cubes(field: &dyn ScalarField, region: &Aabb, resolution: [usize; 3]) -> TriMesh {
    assert!(
        resolution.iter().all(|&r| r >= 2),
        "marching cubes needs at least 2 nodes per axis"
    );
    let convention = field.convention();
    let [nx, ny, nz] = resolution;
    let step = Vec3::from_fn(|k, _| region.extent()[k] / (resolution[k] - 1) as f64);
    let node = |i: usize, j: usize, k: usize| {
        region.min + Vec3::new(i as f64 * step.x, j as f64 * step.y, k as f64 * step.z)
    };
    let index = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);

    let values: Vec<f64> = (0..nz)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut slab = Vec::with_capacity(nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    slab.push(field.eval(&node(i, j, k)));
                }
            }
            slab
        })
        .collect();
    let inside: Vec<bool> = values.iter().map(|&v| convention.is_inside(v)).collect();

    let table = case_table();
    let edges = cell_edges();
    let mut vertex_of_edge: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut dropped = 0usize;
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let corner_node = |c: usize| {
                    let o = corner_offset(c);
                    (i + o[0], j + o[1], k + o[2])
                };
                let mut mask = 0;
                for c in 0..8 {
                    let (a, b, d) = corner_node(c);
                    if inside[index(a, b, d)] {
                        mask |= 1 << c;
                    }
                }
                let case = &table[mask];
                if case.is_empty() {
                    continue;
                }
                let mut local = [usize::MAX; 12];
                for tri in case {
                    let mut ids = [0usize; 3];
                    for (slot, &e) in ids.iter_mut().zip(tri) {
                        let e = e as usize;
                        if local[e] == usize::MAX {
                            let (c0, c1, axis) = edges[e];
                            let n0 = corner_node(c0);
                            let n1 = corner_node(c1);
                            let key = index(n0.0, n0.1, n0.2) * 3 + axis;
                            local[e] = *vertex_of_edge.entry(key).or_insert_with(|| {
                                let v0 = values[index(n0.0, n0.1, n0.2)];
                                let v1 = values[index(n1.0, n1.1, n1.2)];
                                let t = ((convention.iso - v0) / (v1 - v0)).clamp(1e-3, 1.0 - 1e-3);
                                let p0 = node(n0.0, n0.1, n0.2);
                                let p1 = node(n1.0, n1.1, n1.2);
                                vertices.push(p0 + (p1 - p0) * t);
                                vertices.len() - 1
                            });
                        }
                        *slot = local[e];
                    }
                    if is_degenerate(&vertices[ids[0]], &vertices[ids[1]], &vertices[ids[2]]) {
                        dropped += 1;
                        continue;
                    }
                    faces.push(ids);
                }
            }
        }
    }
    if dropped > 0 {
        log::debug!("marching cubes dropped {dropped} degenerate triangles");
    }
    TriMesh::new(vertices, faces).expect("marching cubes output is a valid mesh")
}

/// Tube mesh around a boundary field's curves. When the field's radius is
/// below two cells the tube would not be resolved, so the radius is
/// inflated to two cells for extraction only.
pub fn extract_boundary_isosurface(
    field: &BoundaryCylinderField,
    region: &Aabb,
    resolution: [usize; 3],
) -> TriMesh {
    let cell = (0..3)
        .map(|k| region.extent()[k] / (resolution[k].max(2) - 1) as f64)
        .fold(0.0, f64::max);
    if field.radius() < 2.0 * cell {
        log::warn!(
            "boundary radius {} is below two cells ({}); extracting at the inflated radius",
            field.radius(),
            2.0 * cell
        );
        let inflated = field.with_radius(2.0 * cell).expect("positive radius");
        marching_cubes(&inflated, region, resolution)
    } else {
        marching_cubes(field, region, resolution)
    }
}
