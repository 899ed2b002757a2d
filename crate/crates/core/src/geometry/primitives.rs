//! Small closed and open meshes used by tests, benchmarks and the collar
//! builder.

use std::collections::HashMap;

use super::{TriMesh, Vec3};

/// Regular octahedron with unit vertex distance.
pub fn octahedron() -> TriMesh {
    let v = vec![
        Vec3::x(),
        -Vec3::x(),
        Vec3::y(),
        -Vec3::y(),
        Vec3::z(),
        -Vec3::z(),
    ];
    let f = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    TriMesh::new(v, f).expect("octahedron is valid")
}

/// Icosahedron subdivided `levels` times and projected onto a sphere.
pub fn icosphere(radius: f64, levels: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|v| v * radius).collect();
    TriMesh::new(verts, faces).expect("icosphere is valid")
}

/// Closed axis-aligned box centred at `center`, two triangles per side.
pub fn cuboid(center: Vec3, half: Vec3) -> TriMesh {
    let mut v = Vec::with_capacity(8);
    for i in 0..8 {
        let s = Vec3::new(
            if i & 1 == 0 { -1.0 } else { 1.0 },
            if i & 2 == 0 { -1.0 } else { 1.0 },
            if i & 4 == 0 { -1.0 } else { 1.0 },
        );
        v.push(center + half.component_mul(&s));
    }
    let f = vec![
        [0, 2, 3],
        [0, 3, 1], // -z
        [4, 5, 7],
        [4, 7, 6], // +z
        [0, 1, 5],
        [0, 5, 4], // -y
        [2, 6, 7],
        [2, 7, 3], // +y
        [0, 4, 6],
        [0, 6, 2], // -x
        [1, 3, 7],
        [1, 7, 5], // +x
    ];
    TriMesh::new(v, f).expect("cuboid is valid")
}

/// Regular `nx` x `ny` vertex grid in the `z = 0` plane spanning
/// `[0, sx] x [0, sy]`.
pub fn grid_sheet(nx: usize, ny: usize, sx: f64, sy: f64) -> TriMesh {
    assert!(nx >= 2 && ny >= 2);
    let mut v = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            v.push(Vec3::new(
                sx * i as f64 / (nx - 1) as f64,
                sy * j as f64 / (ny - 1) as f64,
                0.0,
            ));
        }
    }
    let mut f = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = j * nx + i;
            let b = a + 1;
            let c = a + nx + 1;
            let d = a + nx;
            f.push([a, b, c]);
            f.push([a, c, d]);
        }
    }
    TriMesh::new(v, f).expect("grid sheet is valid")
}

/// Open cylinder along `+y` with `around` vertices per ring and `rings`
/// rings; returns the mesh plus the bottom and top ring indices.
pub fn open_cylinder(
    radius: f64,
    y0: f64,
    y1: f64,
    around: usize,
    rings: usize,
) -> (TriMesh, Vec<usize>, Vec<usize>) {
    assert!(around >= 3 && rings >= 2);
    let mut v = Vec::with_capacity(around * rings);
    for r in 0..rings {
        let y = y0 + (y1 - y0) * r as f64 / (rings - 1) as f64;
        for i in 0..around {
            let th = std::f64::consts::TAU * i as f64 / around as f64;
            v.push(Vec3::new(radius * th.cos(), y, radius * th.sin()));
        }
    }
    let mut f = Vec::new();
    for r in 0..rings - 1 {
        for i in 0..around {
            let a = r * around + i;
            let b = r * around + (i + 1) % around;
            let c = b + around;
            let d = a + around;
            f.push([a, c, b]);
            f.push([a, d, c]);
        }
    }
    let bottom = (0..around).collect();
    let top = ((rings - 1) * around..rings * around).collect();
    (TriMesh::new(v, f).expect("cylinder is valid"), bottom, top)
}

/// Closed torus around the `y` axis.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> TriMesh {
    let mut v = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = std::f64::consts::TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let w = std::f64::consts::TAU * j as f64 / nv as f64;
            let r = major + minor * w.cos();
            v.push(Vec3::new(r * u.cos(), minor * w.sin(), r * u.sin()));
        }
    }
    let mut f = Vec::new();
    for i in 0..nu {
        for j in 0..nv {
            let a = i * nv + j;
            let b = ((i + 1) % nu) * nv + j;
            let c = ((i + 1) % nu) * nv + (j + 1) % nv;
            let d = i * nv + (j + 1) % nv;
            f.push([a, c, b]);
            f.push([a, d, c]);
        }
    }
    TriMesh::new(v, f).expect("torus is valid")
}
